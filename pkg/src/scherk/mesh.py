"""Triangle meshes of the surfaces.

Pipeline: triangulate a simply connected region of the ``z`` sphere
(``triangulate_domain``), integrate the Weierstrass form along a spanning
tree of the mesh edges (``integrate_surface``), extend by reflections and
half-turns (``reflect_extend``), repeat along the lattice
(``tile_periodic``) and write OBJ/PLY files.

Regions are described in a chart ``zeta`` related to ``z`` by a Moebius map,
so regions that contain ``z = infinity`` (a regular point for the doubly
periodic families) are bounded in the chart.
"""
import logging
import math
import struct
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .complex_contour import FactoredRational, principal_sqrt, _gk_batch
from .errors import ResolutionTooCoarse, ClosureDefect, WeldMismatch, BranchAmbiguity

log = logging.getLogger(__name__)

# --------------------------------------------------------------------------
# Charts and regions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    """``z = (a zeta + b) / (c zeta + d)``."""
    a: complex = 1
    b: complex = 0
    c: complex = 0
    d: complex = 1
    name: str = "identity"

    def to_z(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        num = self.a * zeta + self.b
        den = self.c * zeta + self.d
        with np.errstate(divide="ignore", invalid="ignore"):
            z = num / den
        return np.where(den == 0, complex(np.inf, 0), z)

    def dz(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return (self.a * self.d - self.b * self.c) / (self.c * zeta + self.d) ** 2

    def from_z(self, z):
        if z is None or (isinstance(z, complex) and math.isinf(abs(z))):
            return None if self.c == 0 else complex(self.a / self.c)
        den = -self.c * z + self.a
        if den == 0:
            return None
        return complex((self.d * z - self.b) / den)

    @property
    def infinity(self):
        """Chart coordinate of z = infinity (None when not in the chart)."""
        return None if self.c == 0 else complex(self.a / self.c)


IDENTITY = Chart()
# upper half plane -> unit disk, infinity -> 1
CAYLEY_UPPER = Chart(1j, 1j, -1, 1, "cayley_upper")
# right half plane -> unit disk (first quadrant -> upper half disk), infinity -> 1
CAYLEY_RIGHT = Chart(1, 1, -1, 1, "cayley_right")


@dataclass(frozen=True)
class Region:
    """Annular sector ``r_in <= |zeta| <= r_out, th0 <= arg zeta <= th1``;
    a full disk/annulus when ``th1 - th0 >= 2 pi``."""
    r_in: float
    r_out: float
    th0: float = -math.pi
    th1: float = math.pi

    @property
    def full(self):
        return self.th1 - self.th0 >= 2 * math.pi - 1e-12

    def contains(self, zeta, tol=0.0):
        zeta = np.asarray(zeta, dtype=complex)
        r = np.abs(zeta)
        ok = (r >= self.r_in - tol) & (r <= self.r_out + tol)
        if self.full:
            return ok
        th = np.angle(zeta)
        # angular test as a distance to the two rays
        u0, u1 = np.exp(1j * self.th0), np.exp(1j * self.th1)
        s0 = (zeta * np.conj(u0)).imag       # >= 0 left of ray 0
        s1 = (zeta * np.conj(u1)).imag       # <= 0 right of ray 1
        if self.th1 - self.th0 <= math.pi + 1e-12:
            ang = (s0 >= -tol) & (s1 <= tol)
        else:
            ang = (s0 >= -tol) | (s1 <= tol)
        ang = ang & ~((r > tol) & ~_angle_in(th, self.th0, self.th1, tol / np.maximum(r, 1e-300)))
        return ok & (ang | (r <= tol))

    def corners(self):
        if self.full:
            return []
        out = []
        for th in (self.th0, self.th1):
            for r in (self.r_in, self.r_out):
                out.append(r * complex(math.cos(th), math.sin(th)))
        return out

    def curves(self):
        """Boundary curves as (kind, data)."""
        cs = [("outer", self.r_out)]
        if self.r_in > 0:
            cs.append(("inner", self.r_in))
        if not self.full:
            cs.append(("ray0", self.th0))
            cs.append(("ray1", self.th1))
        return cs


def _angle_in(th, th0, th1, slack):
    t = np.mod(th - th0, 2 * math.pi)
    span = th1 - th0
    return (t <= span + slack) | (t >= 2 * math.pi - slack)


def _circle_circle(p, r, R):
    """Intersections of |zeta - p| = r with |zeta| = R."""
    d = abs(p)
    if d == 0 or d > r + R or d < abs(R - r):
        return []
    a = (R * R - r * r + d * d) / (2 * d)
    h2 = R * R - a * a
    h = math.sqrt(max(h2, 0.0))
    u = p / d
    base = a * u
    return [base + 1j * h * u, base - 1j * h * u]


def _circle_ray(p, r, th, r_lo, r_hi):
    u = complex(math.cos(th), math.sin(th))
    bq = (p * u.conjugate()).real
    disc = bq * bq - (abs(p) ** 2 - r * r)
    if disc < 0:
        return []
    out = []
    for t in (bq - math.sqrt(disc), bq + math.sqrt(disc)):
        if r_lo - 1e-14 <= t <= r_hi + 1e-14:
            out.append(t * u)
    return out


def _on_curve(zeta, kind, val, tol):
    if kind in ("outer", "inner"):
        return abs(abs(zeta) - val) <= tol
    u = complex(math.cos(val), math.sin(val))
    return abs((zeta * u.conjugate()).imag) <= tol and (zeta * u.conjugate()).real >= -tol


def _curve_param(zeta, kind):
    if kind in ("outer", "inner"):
        return math.atan2(zeta.imag, zeta.real)
    return abs(zeta)


# --------------------------------------------------------------------------
# Parameter meshes
# --------------------------------------------------------------------------

@dataclass
class ParamMesh:
    """Triangulated region of the z sphere, stored in chart coordinates.

    tags: boundary edge (i, j) with i < j -> label.  Labels are
    ``"end:<z>"`` for puncture indentations, ``"trunc"`` for the truncation
    arc around an end at infinity, and ``"<curve>:<k>"`` for the k-th piece of
    a region boundary curve between consecutive marked points.
    special: node index -> "branch" / "zero" (zeros and poles of g**2 or of
    eta that are mesh nodes).
    """
    nodes: np.ndarray
    triangles: np.ndarray
    tags: dict
    chart: Chart
    region: Region
    special: dict = field(default_factory=dict)
    punctures: list = field(default_factory=list)   # (chart point, radius)
    basepoint: int = 0
    curve_pieces: dict = field(default_factory=dict)

    @property
    def z(self):
        return self.chart.to_z(self.nodes)

    @property
    def edges(self):
        T = self.triangles
        E = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
        return np.unique(np.sort(E, axis=1), axis=0)

    def tag_nodes(self, label=None, prefix=None):
        out = set()
        for (i, j), lab in self.tags.items():
            if (label is not None and lab == label) or (prefix is not None and lab.startswith(prefix)):
                out.update((i, j))
        return np.array(sorted(out), dtype=np.int64)

    def labels(self):
        return sorted(set(self.tags.values()))


def _singular_points(data):
    """(punctures, special points) in z."""
    punct = [complex(p) for p in data.punctures]
    special = []
    for r, m in data.gSquared.factors:
        kind = "branch" if m % 2 else "zero"
        special.append((complex(r), kind))
    for r, m in data.eta.factors:
        special.append((complex(r), "zero" if m > 0 else "pole"))
    out = []
    for p, kind in special:
        if any(abs(p - q) < 1e-12 for q in punct):
            continue
        if any(abs(p - q) < 1e-12 for q, _ in out):
            continue
        out.append((p, kind))
    return punct, out


def default_end_radius(data):
    m = [abs(complex(v)) for v in data.markedPoints.values()]
    return 10.0 * max([1.0] + m)


def _family_region(data, region, end_radius):
    """(chart, region, names) for a family; ``names`` renames boundary curves
    that are end truncations rather than symmetry curves."""
    fam = data.family
    if fam == "catenoid":
        R = end_radius
        if region in ("half", None):
            return IDENTITY, Region(1.0 / R, R, 0.0, math.pi), {"outer": "trunc:inf", "inner": "trunc:0"}
        if region == "eighth":
            return IDENTITY, Region(1.0, R, 0.0, math.pi / 2), {"outer": "trunc:inf"}
        if region == "full":
            return IDENTITY, Region(1.0 / R, R), {"outer": "trunc:inf", "inner": "trunc:0"}
    elif fam == "scherk":
        if region in ("disk", None):
            return IDENTITY, Region(0.0, 1.0), {}
    else:
        if region in ("half", None):
            return CAYLEY_UPPER, Region(0.0, 1.0), {}
        if region == "eighth":
            return CAYLEY_RIGHT, Region(0.0, 1.0, 0.0, math.pi), {}
    raise ValueError(f"region {region!r} not available for family {fam!r}")


def triangulate_domain(data, resolution=16, end_radius=None, region=None,
                       end_indent=0.2, basepoint=None):
    """Graded triangulation of a simply connected parameter region.

    ``resolution`` is the number of angular steps per half turn; cells are
    roughly square (radial and angular steps equal), so doubling it about
    quadruples the triangle count.  Punctures in the region are cut out by
    discs of radius ``end_indent`` times their distance to the nearest other
    marked point; other zeros and poles of g**2 and eta become mesh nodes
    surrounded by graded rings.

    region: ``"half"`` (upper half plane; for the catenoid the half annulus
    ``1/R <= |z| <= R``), ``"eighth"`` (first quadrant; for the catenoid
    also ``|z| >= 1``), ``"disk"`` (Scherk: unit disk).
    """
    if end_radius is None:
        end_radius = default_end_radius(data)
    chart, reg, names = _family_region(data, region, end_radius)
    dth = math.pi / resolution
    scale = reg.r_out
    tol = 1e-12 * scale

    punct_z, special_z = _singular_points(data)
    centers = []       # (zeta, kind, label)
    for p in punct_z:
        zeta = chart.from_z(p)
        if zeta is not None and reg.contains(zeta, tol):
            centers.append((zeta, "end", f"end:{_fmt(p)}"))
    for p, kind in special_z:
        zeta = chart.from_z(p)
        if zeta is not None and reg.contains(zeta, tol):
            centers.append((zeta, kind, f"{kind}:{_fmt(p)}"))
    corners = reg.corners()

    def gap(i):
        c = centers[i][0]
        ds = [abs(c - q[0]) for j, q in enumerate(centers) if j != i]
        ds += [abs(c - q) for q in corners if abs(c - q) > tol]
        on_bd = any(_on_curve(c, k, v, 1e-9 * scale) for k, v in reg.curves())
        if not on_bd:
            r = abs(c)
            ds.append(reg.r_out - r)
            if reg.r_in > 0:
                ds.append(r - reg.r_in)
            if not reg.full:
                for th in (reg.th0, reg.th1):
                    u = complex(math.cos(th), math.sin(th))
                    ds.append(abs((c * u.conjugate()).imag))
        return min(ds) if ds else scale

    gaps = [gap(i) for i in range(len(centers))]
    for i, g in enumerate(gaps):
        if g < 1e-6 * scale:
            raise ResolutionTooCoarse(f"marked point {centers[i][2]} within {g:.2e} of another feature")
    infl = [0.45 * g for g in gaps]

    pts = []
    # background grid
    span = reg.th1 - reg.th0
    if reg.r_in > 0:
        n_r = max(1, math.ceil(math.log(reg.r_out / reg.r_in) / dth))
        radii = reg.r_in * (reg.r_out / reg.r_in) ** (np.arange(n_r + 1) / n_r)
        m = max(2, math.ceil(span / dth))
        for r in radii:
            pts.extend(_arc(r, reg, m))
    else:
        n_r = max(2, math.ceil(1.0 / dth))
        h = reg.r_out / n_r
        pts.append(0j)
        for k in range(1, n_r + 1):
            r = k * h
            m = max(2, math.ceil(span * r / h))
            pts.extend(_arc(r, reg, m))
    pts = [p for p in pts if all(abs(p - c[0]) > infl[i] * (1 + dth) for i, c in enumerate(centers))]

    # rings around marked points
    indents = []
    q = math.exp(dth)
    m_ring = max(8, math.ceil(2 * math.pi / dth))
    for i, (c, kind, label) in enumerate(centers):
        if kind == "end":
            rho = end_indent * gaps[i]
            indents.append((c, rho, label))
            radii = []
            r = rho
            while r < infl[i] * (1 + 1e-9):
                radii.append(r)
                r *= q
            radii.append(infl[i])
        else:
            pts.append(c)
            radii = [infl[i] * q ** (-k) for k in range(0, max(2, math.ceil(math.log(8.0) / dth)) + 1)]
        for r in radii:
            ring = c + r * np.exp(2j * math.pi * np.arange(m_ring) / m_ring)
            pts.extend(z for z in ring if reg.contains(z, -1e-9 * scale))
            for kindc, val in reg.curves():
                if kindc in ("outer", "inner"):
                    cand = _circle_circle(c, r, val)
                    cand = [z for z in cand if reg.contains(z, 1e-9 * scale)]
                else:
                    cand = _circle_ray(c, r, val, reg.r_in, reg.r_out)
                pts.extend(cand)
    for corner in corners:
        pts.append(corner)

    if basepoint is not None:
        bz = chart.from_z(complex(basepoint))
        if bz is None or not reg.contains(bz, tol):
            raise ValueError(f"basepoint {basepoint} is outside the region")
        pts.append(bz)

    P = _dedupe(np.array(pts, dtype=complex), 1e-10 * scale)
    # snap points on boundary curves exactly onto them
    P = np.array([_snap(z, reg, 1e-9 * scale) for z in P])
    for c, kind, _ in centers:
        if kind != "end":
            P[np.argmin(np.abs(P - c))] = c
    # Qhull drops points that are collinear on a hull edge, so straight
    # boundary pieces are bowed outward slightly for the connectivity pass.
    tri = Delaunay(np.column_stack(_bulge(P, reg, 1e-7 * scale)))
    T = tri.simplices.astype(np.int64)
    missing = np.setdiff1d(np.arange(len(P)), np.unique(T))
    if len(missing):
        raise ResolutionTooCoarse(f"{len(missing)} points lost by the triangulation")
    A = P[T]
    cen = A.mean(axis=1)
    area = 0.5 * ((A[:, 1] - A[:, 0]).conjugate() * (A[:, 2] - A[:, 0])).imag
    keep = reg.contains(cen, 0.0) & (np.abs(area) > 1e-14 * scale ** 2)
    for c, rho, _ in indents:
        keep &= np.abs(cen - c) >= rho
    T = T[keep]
    area = area[keep]
    T[area < 0] = T[area < 0][:, [0, 2, 1]]
    used = np.unique(T)
    remap = -np.ones(len(P), dtype=np.int64)
    remap[used] = np.arange(len(used))
    P = P[used]
    T = remap[T]

    for c, rho, label in indents:
        d = _point_triangle_distance(c, P[T])
        if d < 0.5 * rho:
            raise ResolutionTooCoarse(f"a triangle comes within {d:.3e} of puncture {label} "
                                      f"(indentation radius {rho:.3e})")

    special = {}
    for c, kind, label in centers:
        if kind == "end":
            continue
        j = int(np.argmin(np.abs(P - c)))
        if abs(P[j] - c) < 1e-10 * scale:
            special[j] = kind

    tags, pieces = _boundary_tags(P, T, reg, centers, indents, scale, names, chart)

    if basepoint is not None:
        base = int(np.argmin(np.abs(P - chart.from_z(complex(basepoint)))))
    else:
        base = _default_basepoint(P, special)
    return ParamMesh(P, T, tags, chart, reg, special,
                     [(c, rho) for c, rho, _ in indents], base, pieces)


def _fmt(z):
    z = complex(z) + 0.0
    z = complex(z.real + 0.0, 0.0 if abs(z.imag) <= 1e-12 * abs(z) else z.imag + 0.0)
    if z.imag == 0:
        return f"{z.real:.10g}"
    return f"{z.real:.10g}{z.imag:+.10g}j"


def _arc(r, reg, m):
    if reg.full:
        th = reg.th0 + 2 * math.pi * np.arange(m) / m
    else:
        th = reg.th0 + (reg.th1 - reg.th0) * np.arange(m + 1) / m
    return list(r * np.exp(1j * th))


def _bulge(P, reg, amount):
    Q = P.copy()
    if not reg.full:
        for th, side in ((reg.th0, -1j), (reg.th1, 1j)):
            u = complex(math.cos(th), math.sin(th))
            s = (P * u.conjugate())
            on = (np.abs(s.imag) <= 1e-9 * reg.r_out) & (s.real >= -1e-9 * reg.r_out)
            t = np.abs(P[on]) / reg.r_out
            Q[on] = Q[on] + amount * side * u * (1 - t * t)
    return Q.real, Q.imag


def _dedupe(P, tol):
    key = np.round(np.column_stack([P.real, P.imag]) / tol).astype(np.int64)
    _, idx = np.unique(key, axis=0, return_index=True)
    return P[np.sort(idx)]


def _snap(z, reg, tol):
    for kind, val in reg.curves():
        if _on_curve(z, kind, val, tol):
            if kind in ("outer", "inner"):
                return val * z / abs(z) if z != 0 else z
            u = complex(math.cos(val), math.sin(val))
            return (z * u.conjugate()).real * u
    return z


def _point_triangle_distance(p, tris):
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]

    def cross(u, v):
        return (u.conjugate() * v).imag

    s1 = cross(b - a, p - a)
    s2 = cross(c - b, p - b)
    s3 = cross(a - c, p - c)
    inside = ((s1 >= 0) & (s2 >= 0) & (s3 >= 0)) | ((s1 <= 0) & (s2 <= 0) & (s3 <= 0))
    if np.any(inside):
        return 0.0

    def seg(u, v):
        d = v - u
        t = np.clip(((p - u) * d.conjugate()).real / np.abs(d) ** 2, 0, 1)
        return np.abs(p - (u + t * d))

    return float(np.min(np.minimum(np.minimum(seg(a, b), seg(b, c)), seg(c, a))))


def _boundary_tags(P, T, reg, centers, indents, scale, names=None, chart=IDENTITY):
    E = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
    E = np.sort(E, axis=1)
    uniq, counts = np.unique(E, axis=0, return_counts=True)
    bnd = uniq[counts == 1]
    tol = 1e-8 * scale
    # breakpoints on each curve: marked points on it and corners
    breaks = {}
    for kind, val in reg.curves():
        bp = [c[0] for c in centers if _on_curve(c[0], kind, val, 1e-9 * scale)]
        bp = sorted(_curve_param(b, kind) for b in bp)
        breaks[(kind, val)] = bp
    tags, pieces = {}, {}
    for i, j in bnd:
        a, b = P[i], P[j]
        mid = 0.5 * (a + b)
        label = None
        for c, rho, lab in indents:
            if abs(abs(a - c) - rho) <= 1e-6 * rho and abs(abs(b - c) - rho) <= 1e-6 * rho:
                label = lab
                break
        if label is None:
            for kind, val in reg.curves():
                if _on_curve(a, kind, val, tol) and _on_curve(b, kind, val, tol):
                    t = _curve_param(_snap(mid, reg, 1e-6 * scale) if kind in ("outer", "inner") else mid, kind)
                    k = int(np.searchsorted(breaks[(kind, val)], t))
                    label = (names or {}).get(kind) or f"{kind}:{k}"
                    if label not in pieces:
                        bp = breaks[(kind, val)]
                        ends = [bp[k - 1] if k > 0 else None, bp[k] if k < len(bp) else None]
                        pieces[label] = {"curve": kind, "z": [_piece_z(chart, reg, kind, val, x) for x in ends]}
                    break
        if label is None:
            label = "other"
        tags[(int(i), int(j))] = label
    return tags, pieces


def _piece_z(chart, reg, kind, val, x):
    """z value of a breakpoint (curve parameter ``x``); None for the end of
    the curve."""
    if x is None:
        return None
    if kind in ("outer", "inner"):
        zeta = val * complex(math.cos(x), math.sin(x))
    else:
        zeta = x * complex(math.cos(val), math.sin(val))
    z = complex(chart.to_z(zeta))
    return _fmt(z) if math.isfinite(abs(z)) else "inf"


def _default_basepoint(P, special):
    order = np.lexsort((P.imag, P.real, np.abs(P - 0.5)))
    for j in order:
        if int(j) not in special:
            return int(j)
    return 0


# --------------------------------------------------------------------------
# Integration
# --------------------------------------------------------------------------

@dataclass
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    params: np.ndarray = None          # parameter point (z) per vertex
    words: list = None                 # symmetry word per vertex
    boundary: dict = field(default_factory=dict)   # label -> vertex indices
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.params is None:
            self.params = np.full(len(self.vertices), np.nan + 0j)
        if self.words is None:
            self.words = [""] * len(self.vertices)

    @property
    def scale(self):
        if len(self.vertices) == 0:
            return 1.0
        ext = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.linalg.norm(ext)) or 1.0

    def triangle_areas(self):
        V = self.vertices[self.triangles]
        return 0.5 * np.linalg.norm(np.cross(V[:, 1] - V[:, 0], V[:, 2] - V[:, 0]), axis=1)

    def edge_lengths(self):
        T = self.triangles
        E = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
        E = np.unique(np.sort(E, axis=1), axis=0)
        return E, np.linalg.norm(self.vertices[E[:, 0]] - self.vertices[E[:, 1]], axis=1)

    def validate(self):
        """List of invariant violations (empty when valid)."""
        bad = []
        a = self.triangle_areas()
        if len(a) and np.min(a) <= 1e-14 * self.scale ** 2:
            bad.append(f"{int(np.sum(a <= 1e-14 * self.scale ** 2))} degenerate triangles")
        T = self.triangles
        directed = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
        _, cnt = np.unique(directed, axis=0, return_counts=True)
        if np.any(cnt > 1):
            bad.append("inconsistent orientation")
        return bad

    def boundary_edges(self):
        T = self.triangles
        E = np.sort(np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]]), axis=1)
        uniq, cnt = np.unique(E, axis=0, return_counts=True)
        return uniq[cnt == 1]


def pullback(f, chart, extra=0):
    """``f(z(zeta)) * (c zeta + d)**(-extra)`` as a factored rational in the
    chart coordinate (up to the constant of the chart derivative when
    ``extra = 2``).  Each root ``r`` goes to ``chart.from_z(r)`` exactly, so
    mesh nodes placed there sit exactly on the singularity."""
    a, b, c, d = chart.a, chart.b, chart.c, chart.d
    scale = complex(f.scale)
    facs = []
    den = extra
    for r, m in f.factors:
        lead = a - r * c
        if lead == 0:
            scale *= (b - r * d) ** m
        else:
            scale *= lead ** m
            facs.append((chart.from_z(r), m))
        den += m
    if c != 0 and den:
        # (c zeta + d)**(-den) = c**(-den) (zeta + d/c)**(-den)
        scale *= c ** (-den)
        facs.append((complex(-d / c), -den))
    return FactoredRational(scale, tuple(facs))


class _WeierstrassInChart:
    """g**2 and the phi coefficients (per d zeta) in the chart coordinate."""

    def __init__(self, data, chart):
        self.data = data
        self.chart = chart
        self.g2c = pullback(data.gSquared, chart)
        jac = chart.a * chart.d - chart.b * chart.c
        self.etac = pullback(data.eta, chart, extra=2).scaled(jac)

    def g2(self, zeta):
        return np.asarray(self.g2c(zeta), dtype=complex)

    def phi(self, zeta, g):
        eta = self.etac(np.asarray(zeta, dtype=complex))
        inv = 1.0 / g
        return np.stack([(inv - g) * eta, 1j * (inv + g) * eta, 2.0 * eta], axis=-1)


def _edge_branch_ok(W, A, B, g2A, n=12, open_end=None):
    """Argument of g2(z)/g2(A) along the segments A->B, unwrapped; returns
    the final argument, the max |argument| excursion and the largest step.
    Segments flagged in ``open_end`` are sampled short of B (a zero or pole
    of g**2 sits there)."""
    t = np.linspace(0.0, 1.0, n + 1)[None, 1:]
    if open_end is not None:
        t = np.where(open_end[:, None], t * (1 - 0.5 / n), t)
    zs = A[:, None] + (B - A)[:, None] * t
    r = W.g2(zs) / g2A[:, None]
    ang = np.angle(r)
    steps = np.diff(np.concatenate([np.zeros((len(A), 1)), ang], axis=1), axis=1)
    steps = (steps + np.pi) % (2 * np.pi) - np.pi
    cum = np.cumsum(steps, axis=1)
    return cum[:, -1], np.max(np.abs(cum), axis=1), np.max(np.abs(steps), axis=1)


def _node_gauss_map(W, pm, g_ref=None):
    """g at the regular nodes by continuation over regular-regular edges."""
    P = pm.nodes
    n = len(P)
    special = pm.special
    g2 = np.full(n, np.nan + 0j)
    reg = np.array([i not in special for i in range(n)])
    g2[reg] = W.g2(P[reg])
    E = pm.edges
    E = E[reg[E[:, 0]] & reg[E[:, 1]]]
    adj = [[] for _ in range(n)]
    for a, b in E:
        adj[a].append(b)
        adj[b].append(a)
    start = pm.basepoint if reg[pm.basepoint] else int(np.flatnonzero(reg)[0])
    g = np.full(n, np.nan + 0j)
    if g_ref is not None:
        zr, val = g_ref
        start = int(np.argmin(np.abs(pm.z - zr)))
        g[start] = val if abs(val ** 2 - g2[start]) <= 1e-8 * max(1, abs(g2[start])) else \
            np.sign(((principal_sqrt(g2[start]) / val).real)) * principal_sqrt(g2[start])
    else:
        g[start] = principal_sqrt(g2[start])
    seen = np.zeros(n, bool)
    seen[start] = True
    dq = deque([start])
    while dq:
        a = dq.popleft()
        nb = [b for b in adj[a] if not seen[b]]
        if not nb:
            continue
        nb = np.array(sorted(nb))
        A = np.full(len(nb), P[a])
        fin, exc, step = _edge_branch_ok(W, A, P[nb], np.full(len(nb), g2[a]))
        if np.any(step > math.pi / 2) or np.any(exc > 0.9 * math.pi):
            raise BranchAmbiguity(f"g**2 winds too fast along an edge at node {a}; refine the mesh")
        g[nb] = g[a] * np.sqrt(np.abs(g2[nb] / g2[a])) * np.exp(0.5j * fin)
        seen[nb] = True
        dq.extend(nb.tolist())
    if not np.all(seen[reg]):
        raise ResolutionTooCoarse("regular nodes are not connected")
    return g, g2


def _adaptive_edges(values, m, special_end, tol, max_levels=30):
    """Adaptive GK15 over the parameter interval [0, 1] of ``m`` edges.

    ``values(seg, w, dw)`` returns integrand values (trailing component axis)
    at the edge points ``A + (B - A) w`` already multiplied by ``dw``; edges
    flagged in ``special_end`` use ``w = 1 - (1 - s)**2`` to absorb an
    inverse square root at B.
    """
    if m == 0:
        return None

    def fun(seg, t):
        sp_ = special_end[seg, None]
        w = np.where(sp_, 1 - (1 - t) ** 2, t)
        dw = np.where(sp_, 2 * (1 - t), 1.0)
        return values(seg, w, dw)

    seg = np.arange(m)
    lo, hi = np.zeros(m), np.ones(m)
    total = None
    for level in range(max_levels):
        val, err = _gk_batch(fun, seg, lo, hi)
        if total is None:
            total = np.zeros((m, val.shape[1]), dtype=val.dtype)
        width = hi - lo
        done = err <= tol * np.maximum(1.0, np.max(np.abs(val), axis=1)) * np.maximum(width, 1e-3)
        if level == max_levels - 1:
            done[:] = True
        np.add.at(total, seg[done], val[done])
        if np.all(done):
            break
        mid = 0.5 * (lo + hi)
        seg, lo, hi, mid = seg[~done], lo[~done], hi[~done], mid[~done]
        seg = np.concatenate([seg, seg])
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    return total


def _edge_integrals(W, A, B, gA, g2A, special_end, tol):
    """Integrals of phi along segments A -> B with g continued from A."""
    if len(A) == 0:
        return np.zeros((0, 3), dtype=complex)
    D = B - A

    def values(seg, w, dw):
        zs = A[seg, None] + D[seg, None] * w
        g = gA[seg, None] * principal_sqrt(W.g2(zs) / g2A[seg, None])
        return W.phi(zs, g) * (D[seg, None] * dw)[..., None]

    return _adaptive_edges(values, len(A), special_end, tol)


def metric_edge_lengths(data, pmesh, tol=1e-12, tangent=False):
    """Length of the image of every mesh edge in the induced metric
    ``ds = |phi| |d zeta| / sqrt(2)``, ordered like ``pmesh.edges``.  It does
    not depend on the sheet of g, and is the same for conjugate data.

    With ``tangent=True`` the speed is taken from the immersion itself,
    ``|Re(phi dzeta)|``, which equals the metric speed only because phi is
    isotropic; comparing data with its conjugate then tests ``|Re phi| =
    |Im phi|`` rather than an identity of the formula.
    """
    W = _WeierstrassInChart(data, pmesh.chart)
    P = pmesh.nodes
    E = pmesh.edges
    spec = np.array([i in pmesh.special for i in range(len(P))])
    flip = spec[E[:, 0]]
    A = P[np.where(flip, E[:, 1], E[:, 0])]
    D = P[np.where(flip, E[:, 0], E[:, 1])] - A

    def values(seg, w, dw):
        zs = A[seg, None] + D[seg, None] * w
        ph = W.phi(zs, principal_sqrt(W.g2(zs)))
        if tangent:
            speed = np.linalg.norm((ph * D[seg, None, None]).real, axis=-1)
            return (speed * dw)[..., None]
        speed = np.sqrt(0.5 * np.sum(np.abs(ph) ** 2, axis=-1))
        return (speed * np.abs(D[seg, None]) * dw)[..., None]

    out = _adaptive_edges(values, len(E), spec[np.where(flip, E[:, 0], E[:, 1])], tol)
    return np.zeros(0) if out is None else out[:, 0]


def integrate_surface(data, pmesh, basepoint=None, base_position=(0.0, 0.0, 0.0),
                      tree="bfs", tol=1e-12, closure_tol=1e-8, g_ref=None):
    """Vertex positions ``F(p) = F(p0) + Re int_{p0}^{p} phi``.

    The integral to every node is accumulated along a spanning tree
    (``tree`` = "bfs" or "dfs") rooted at the basepoint node; the remaining
    edges must close up to ``closure_tol * scale`` (the domain is simply
    connected), else :class:`ClosureDefect` lists the worst edges.
    ``g_ref = (z, g)`` pins the sheet of g; by default g is the principal
    square root of g**2 at the first regular node.
    """
    W = _WeierstrassInChart(data, pmesh.chart)
    P = pmesh.nodes
    n = len(P)
    g, g2 = _node_gauss_map(W, pmesh, g_ref)
    E = pmesh.edges
    spec = np.array([i in pmesh.special for i in range(n)])
    if np.any(spec[E[:, 0]] & spec[E[:, 1]]):
        raise ResolutionTooCoarse("an edge joins two special points")
    # orient every edge so that a special endpoint comes last
    flip = spec[E[:, 0]]
    A_idx = np.where(flip, E[:, 1], E[:, 0])
    B_idx = np.where(flip, E[:, 0], E[:, 1])
    fin, exc, step = _edge_branch_ok(W, P[A_idx], P[B_idx], g2[A_idx], open_end=spec[B_idx])
    bad = (step > math.pi / 2) | (exc > 0.9 * math.pi)
    if np.any(bad):
        raise BranchAmbiguity(f"{int(np.sum(bad))} edges too long for branch tracking; refine the mesh")
    I = _edge_integrals(W, P[A_idx], P[B_idx], g[A_idx], g2[A_idx], spec[B_idx], tol)
    # integral from E[:,0] to E[:,1]
    I = np.where(flip[:, None], -I, I)
    R = I.real

    if basepoint is None:
        root = pmesh.basepoint
    elif isinstance(basepoint, (int, np.integer)):
        root = int(basepoint)
    else:
        root = int(np.argmin(np.abs(pmesh.z - complex(basepoint))))
    adj = [[] for _ in range(n)]
    for k, (a, b) in enumerate(E):
        adj[a].append((b, k, 1.0))
        adj[b].append((a, k, -1.0))
    X = np.full((n, 3), np.nan)
    X[root] = base_position
    in_tree = np.zeros(len(E), bool)
    seen = np.zeros(n, bool)
    seen[root] = True
    container = deque([root])
    while container:
        a = container.popleft() if tree == "bfs" else container.pop()
        nbrs = adj[a] if tree == "bfs" else adj[a][::-1]
        for b, k, sgn in nbrs:
            if not seen[b]:
                seen[b] = True
                in_tree[k] = True
                X[b] = X[a] + sgn * R[k]
                container.append(b)
    if not np.all(seen):
        raise ResolutionTooCoarse("parameter mesh is not connected")
    scale = float(np.linalg.norm(np.nanmax(X, axis=0) - np.nanmin(X, axis=0))) or 1.0
    defect = np.linalg.norm(X[E[:, 1]] - X[E[:, 0]] - R, axis=1)
    worst = np.argsort(-defect)[:5]
    max_def = float(defect.max()) if len(defect) else 0.0
    if max_def > closure_tol * scale:
        raise ClosureDefect(f"edge closure defect {max_def:.3e} > {closure_tol * scale:.3e}",
                            [(tuple(map(int, E[k])), float(defect[k])) for k in worst])
    boundary = {}
    for (i, j), lab in pmesh.tags.items():
        boundary.setdefault(lab, set()).update((i, j))
    boundary = {k: np.array(sorted(v), dtype=np.int64) for k, v in sorted(boundary.items())}
    info = {"closure_defect": max_def, "scale": scale, "root": root, "tree": tree,
            "family": data.family}
    return TriMesh(X, pmesh.triangles.copy(), pmesh.z.copy(), [""] * n, boundary, info)


# --------------------------------------------------------------------------
# Symmetries
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Plane:
    """Mirror plane ``normal . x = offset``."""
    normal: tuple
    offset: float = 0.0
    labels: tuple = ()
    name: str = ""

    def affine(self):
        n = np.asarray(self.normal, float)
        n = n / np.linalg.norm(n)
        return np.eye(3) - 2 * np.outer(n, n), 2 * self.offset * n

    def distance(self, X):
        n = np.asarray(self.normal, float)
        n = n / np.linalg.norm(n)
        return np.abs(X @ n - self.offset)


@dataclass(frozen=True)
class Line:
    """Half-turn axis through ``point`` with direction ``direction``."""
    point: tuple
    direction: tuple
    labels: tuple = ()
    name: str = ""

    def affine(self):
        d = np.asarray(self.direction, float)
        d = d / np.linalg.norm(d)
        p = np.asarray(self.point, float)
        A = 2 * np.outer(d, d) - np.eye(3)
        return A, p - A @ p

    def distance(self, X):
        d = np.asarray(self.direction, float)
        d = d / np.linalg.norm(d)
        v = X - np.asarray(self.point, float)
        return np.linalg.norm(v - np.outer(v @ d, d), axis=1)


def weld(V, tol):
    """Merge vertices closer than ``tol``; returns (unique vertices, index map,
    max distance among merged pairs)."""
    n = len(V)
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    gap = 0.0
    if n:
        pairs = cKDTree(V).query_pairs(tol, output_type="ndarray")
        for i, j in pairs:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
            gap = max(gap, float(np.linalg.norm(V[i] - V[j])))
    roots = np.array([find(i) for i in range(n)], dtype=np.int64)
    uniq, first = np.unique(roots, return_index=True)
    order = np.argsort(first)
    new_index = np.empty(n, dtype=np.int64)
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[order] = np.arange(len(uniq))
    pos = np.searchsorted(uniq, roots)
    new_index[:] = rank[pos]
    return V[uniq[order]], new_index, gap


def _merge(meshes, weld_tol):
    V = np.concatenate([m.vertices for m in meshes]) if meshes else np.zeros((0, 3))
    offs = np.cumsum([0] + [len(m.vertices) for m in meshes])
    T = np.concatenate([m.triangles + o for m, o in zip(meshes, offs)]) if meshes else np.zeros((0, 3), int)
    params = np.concatenate([m.params for m in meshes]) if meshes else np.zeros(0, complex)
    words = [w for m in meshes for w in m.words]
    boundary = {}
    for m, o in zip(meshes, offs):
        for k, v in m.boundary.items():
            boundary[k] = np.asarray(v) + o
    gap = 0.0
    if weld_tol is not None:
        U, idx, gap = weld(V, weld_tol)
        keep_first = {}
        for i, j in enumerate(idx):
            keep_first.setdefault(int(j), i)
        src = np.array([keep_first[j] for j in range(len(U))], dtype=np.int64)
        T = idx[T]
        params = params[src]
        words = [words[i] for i in src]
        boundary = {k: np.unique(idx[v]) for k, v in boundary.items()}
        V = U
        # drop triangles collapsed by welding
        ok = (T[:, 0] != T[:, 1]) & (T[:, 1] != T[:, 2]) & (T[:, 0] != T[:, 2])
        T = T[ok]
    return TriMesh(V, T, params, words, boundary), gap


def reflect_extend(mesh, elements, depth=3, weld_tol=1e-7):
    """Orbit of ``mesh`` under the group generated by ``elements`` (mirror
    planes / half-turn lines), words up to length ``depth``, with coincident
    vertices welded (tolerance ``weld_tol * scale``).

    Boundary vertices carrying one of an element's ``labels`` must lie on the
    element; otherwise the copies would not meet and :class:`WeldMismatch`
    is raised with the gap.
    """
    scale = mesh.scale
    tol = weld_tol * scale
    names = [e.name or f"s{i}" for i, e in enumerate(elements)]
    for e, nm in zip(elements, names):
        idx = [mesh.boundary[l] for l in e.labels if l in mesh.boundary]
        if not idx:
            continue
        idx = np.unique(np.concatenate(idx))
        gap = 2 * float(np.max(e.distance(mesh.vertices[idx])))
        if gap > tol:
            raise WeldMismatch(f"boundary curve of {nm} misses the symmetry element by {gap / 2:.3e}"
                               f" (weld tolerance {tol:.3e})", gap)
    gens = [e.affine() for e in elements]
    words = [("", np.eye(3), np.zeros(3))]
    seen = {_affine_key(np.eye(3), np.zeros(3), scale)}
    frontier = list(words)
    for _ in range(depth):
        nxt = []
        for w, A, b in frontier:
            for nm, (G, c) in zip(names, gens):
                A2, b2 = G @ A, G @ b + c
                key = _affine_key(A2, b2, scale)
                if key in seen:
                    continue
                seen.add(key)
                nxt.append((nm + ("." + w if w else ""), A2, b2))
        words.extend(nxt)
        frontier = nxt
    copies = []
    for w, A, b in words:
        V = mesh.vertices @ A.T + b
        T = mesh.triangles if np.linalg.det(A) > 0 else mesh.triangles[:, [0, 2, 1]]
        wl = [w + ("|" + x if x else "") if w else x for x in mesh.words]
        bnd = {(k + "@" + w if w else k): v for k, v in mesh.boundary.items()}
        copies.append(TriMesh(V, T, mesh.params.copy(), wl, bnd))
    out, gap = _merge(copies, tol)
    out.info = dict(mesh.info)
    out.info.update({"copies": len(words), "weld_gap": gap, "words": [w for w, _, _ in words]})
    return out


def _affine_key(A, b, scale):
    return tuple(np.round(A.ravel(), 9)) + tuple(np.round(b / scale, 9))


def tile_periodic(mesh, t1, t2, counts=(1, 1)):
    """Copies ``mesh + i t1 + j t2`` for ``0 <= i < counts[0]``,
    ``0 <= j < counts[1]``; no welding across the lattice."""
    t1 = np.asarray(t1, float)
    t2 = np.asarray(t2, float)
    h = max(np.linalg.norm(t1), np.linalg.norm(t2))
    if abs(t1[2]) > 1e-9 * h or abs(t2[2]) > 1e-9 * h:
        raise ValueError("translation vectors must be horizontal")
    if abs(t1[0] * t2[1] - t1[1] * t2[0]) <= 1e-12 * h * h:
        raise ValueError("translation vectors must be linearly independent")
    copies = []
    for i in range(counts[0]):
        for j in range(counts[1]):
            sh = i * t1 + j * t2
            w = f"t{i},{j}" if (i or j) else ""
            words = [w + ("|" + x if x else "") if w else x for x in mesh.words]
            copies.append(TriMesh(mesh.vertices + sh, mesh.triangles, mesh.params.copy(), words,
                                  {(k + "@" + w if w else k): v for k, v in mesh.boundary.items()}))
    out, _ = _merge(copies, None)
    out.info = dict(mesh.info)
    out.info["tiles"] = list(counts)
    return out


def translation_vectors(data, quad_tol=1e-11):
    """Horizontal lattice generators (real periods of the end loops and the
    lattice cycle)."""
    from .periods import verify_closed
    rep = verify_closed(data, quad_tol=quad_tol)
    gens = [np.asarray(t, float) for t in rep.lattice]
    return gens


# --------------------------------------------------------------------------
# Geometric checks
# --------------------------------------------------------------------------

def fit_plane(X):
    """Least-squares plane through points: (unit normal, offset, max residual)."""
    c = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - c)
    n = vt[-1]
    off = float(n @ c)
    return n, off, float(np.max(np.abs(X @ n - off)))


def fit_line(X):
    """Least-squares line: (point, unit direction, max distance)."""
    c = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - c)
    d = vt[0]
    v = X - c
    return c, d, float(np.max(np.linalg.norm(v - np.outer(v @ d, d), axis=1)))


def boundary_curve_report(mesh, prefix_exclude=("end:", "trunc", "other")):
    """Planarity and collinearity residuals of every boundary curve."""
    out = {}
    for lab, idx in mesh.boundary.items():
        if lab.startswith(prefix_exclude) or len(idx) < 3:
            continue
        X = mesh.vertices[idx]
        n, off, pres = fit_plane(X)
        _, d, lres = fit_line(X)
        out[lab] = {"normal": n.tolist(), "offset": off, "plane_residual": pres,
                    "direction": d.tolist(), "line_residual": lres}
    return out


def symmetry_planes(mesh, tol=1e-6):
    """Mirror planes spanned by the planar boundary curves of ``mesh``
    (curves that are planar within ``tol * scale``), snapped to the nearest
    coordinate direction."""
    scale = mesh.scale
    planes = {}
    for lab, r in boundary_curve_report(mesh).items():
        if r["plane_residual"] > tol * scale:
            continue
        n = np.asarray(r["normal"])
        ax = int(np.argmax(np.abs(n)))
        if abs(abs(n[ax]) - 1) > 1e-6:
            continue
        normal = tuple(float(i == ax) for i in range(3))
        off = float(np.mean(mesh.vertices[mesh.boundary[lab], ax]))
        key = (ax, round(off / scale, 7))
        if key in planes:
            p = planes[key]
            planes[key] = Plane(normal, p.offset, p.labels + (lab,), p.name)
        else:
            planes[key] = Plane(normal, off, (lab,), f"x{ax + 1}={off:.6g}")
    return [planes[k] for k in sorted(planes)]


def inside_boundary_box(mesh, tol=1e-6):
    """Excess of the vertices over the bounding box of the boundary
    vertices (0 when inside)."""
    idx = np.unique(np.concatenate(list(mesh.boundary.values()))) if mesh.boundary else []
    if len(idx) == 0:
        return 0.0
    B = mesh.vertices[idx]
    lo, hi = B.min(axis=0), B.max(axis=0)
    ex = np.maximum(mesh.vertices - hi, lo - mesh.vertices)
    return float(max(0.0, ex.max()))


def _segments_hit_triangles(P0, P1, A, B, C, eps):
    """Row-wise: does segment P0-P1 cross the interior of triangle ABC
    (Moller-Trumbore, strict inequalities with slack ``eps``)."""
    d = P1 - P0
    e1, e2 = B - A, C - A
    h = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, h)
    ok = np.abs(det) > 1e-300
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = P0 - A
    u = np.einsum("ij,ij->i", s, h) * inv
    q = np.cross(s, e1)
    v = np.einsum("ij,ij->i", d, q) * inv
    t = np.einsum("ij,ij->i", e2, q) * inv
    return ok & (u > eps) & (v > eps) & (u + v < 1 - eps) & (t > eps) & (t < 1 - eps)


def intersection_spot_check(mesh, max_triangles=4000, seed=0, eps=1e-9):
    """Count crossings between non-adjacent triangles on a coarse proxy.

    At most ``max_triangles`` triangles (a deterministic random subset) are
    tested against all triangles whose bounding spheres overlap theirs.
    Triangles sharing a vertex are skipped.  This is a report, not a
    certificate of embeddedness: tangential contacts and crossings missed
    by the subsample go undetected.
    """
    V, T = mesh.vertices, mesh.triangles
    if len(T) == 0:
        return {"tested": 0, "candidate_pairs": 0, "crossings": 0, "examples": []}
    X = V[T]
    cen = X.mean(axis=1)
    rad = np.max(np.linalg.norm(X - cen[:, None], axis=2), axis=1)
    rng = np.random.default_rng(seed)
    sub = np.arange(len(T)) if len(T) <= max_triangles else \
        np.sort(rng.choice(len(T), max_triangles, replace=False))
    tree = cKDTree(cen)
    near = tree.query_ball_point(cen[sub], 2.0 * rad.max())
    I, J = [], []
    for i, js in zip(sub, near):
        for j in js:
            if j != i:
                I.append(i)
                J.append(j)
    I, J = np.array(I, dtype=np.int64), np.array(J, dtype=np.int64)
    if len(I):
        keep = np.linalg.norm(cen[I] - cen[J], axis=1) <= rad[I] + rad[J]
        shared = (T[I][:, :, None] == T[J][:, None, :]).any(axis=(1, 2))
        keep &= ~shared
        I, J = I[keep], J[keep]
    hit = np.zeros(len(I), dtype=bool)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        hit |= _segments_hit_triangles(X[I, a], X[I, b], X[J, 0], X[J, 1], X[J, 2], eps)
        hit |= _segments_hit_triangles(X[J, a], X[J, b], X[I, 0], X[I, 1], X[I, 2], eps)
    pairs = sorted({(int(min(i, j)), int(max(i, j))) for i, j in zip(I[hit], J[hit])})
    return {"tested": int(len(sub)), "candidate_pairs": int(len(I)),
            "crossings": len(pairs), "examples": [list(p) for p in pairs[:5]]}


def polyline_length(mesh, label):
    """Length of a boundary curve, walking its edges in order."""
    idx = set(mesh.boundary[label].tolist())
    E = [tuple(e) for e in mesh.boundary_edges() if e[0] in idx and e[1] in idx]
    return float(sum(np.linalg.norm(mesh.vertices[a] - mesh.vertices[b]) for a, b in E))


# --------------------------------------------------------------------------
# Export
# --------------------------------------------------------------------------

def _fmt9(x):
    s = f"{x + 0.0:.9g}"
    return "0" if s == "-0" else s


def obj_text(mesh):
    if len(mesh.vertices) == 0:
        return "# empty mesh\n"
    lines = [f"v {_fmt9(x)} {_fmt9(y)} {_fmt9(z)}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    return "\n".join(lines) + "\n"


def export_obj(mesh, path):
    """Write an ASCII OBJ file (9 significant digits, 1-based faces).
    Returns a small report dict; an empty mesh produces a header-only file
    and a warning."""
    text = obj_text(mesh)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    report = {"path": str(path), "vertices": len(mesh.vertices), "faces": len(mesh.triangles),
              "warnings": []}
    if len(mesh.vertices) == 0:
        report["warnings"].append("empty mesh")
        log.warning("exported an empty mesh to %s", path)
    return report


def parse_obj(path):
    V, T = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                V.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                T.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return TriMesh(np.array(V, float).reshape(-1, 3), np.array(T, np.int64).reshape(-1, 3))


def export_ply(mesh, path):
    """Binary little-endian PLY with float64 vertices."""
    V = np.ascontiguousarray(mesh.vertices, dtype="<f8")
    header = ("ply\nformat binary_little_endian 1.0\n"
              f"element vertex {len(V)}\nproperty double x\nproperty double y\nproperty double z\n"
              f"element face {len(mesh.triangles)}\nproperty list uchar int vertex_indices\n"
              "end_header\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(V.tobytes())
        for a, b, c in mesh.triangles:
            fh.write(struct.pack("<Biii", 3, int(a), int(b), int(c)))
    return {"path": str(path), "vertices": len(V), "faces": len(mesh.triangles)}


def family_base(data):
    """Default (basepoint, base_position) per family: the catenoid is placed
    with its neck circle centred on the vertical axis, Scherk's surface with
    z = 0 at the origin."""
    if data.family == "catenoid":
        return 1.0, (-1.0, 0.0, 0.0)
    if data.family == "scherk":
        return 0.0, (0.0, 0.0, 0.0)
    return None, (0.0, 0.0, 0.0)


def build_mesh(data, resolution=16, region=None, end_radius=None, tree="bfs", **kw):
    """triangulate_domain + integrate_surface with the family defaults."""
    bp, pos = family_base(data)
    pm = triangulate_domain(data, resolution, end_radius, region, basepoint=bp)
    kw.setdefault("base_position", pos)
    return integrate_surface(data, pm, tree=tree, **kw), pm


def fundamental_piece(mesh, depth=3, weld_tol=1e-7, tol=1e-6):
    """Reflect a piece bounded by planar geodesics in the mirror planes
    (one per coordinate direction, the one with the smallest offset)."""
    chosen = {}
    for pl in symmetry_planes(mesh, tol):
        ax = int(np.argmax(np.abs(pl.normal)))
        if ax not in chosen or abs(pl.offset) < abs(chosen[ax].offset) - 1e-12:
            chosen[ax] = pl
    gens = [chosen[k] for k in sorted(chosen)]
    out = reflect_extend(mesh, gens, depth, weld_tol)
    out.info["mirrors"] = [g.name for g in gens]
    return out


def oracle_residual(mesh, family):
    """Max deviation of the vertices from the closed-form surface."""
    X = mesh.vertices
    if family == "catenoid":
        return float(np.max(np.abs(X[:, 0] ** 2 + X[:, 1] ** 2 - np.cosh(X[:, 2]) ** 2)))
    if family == "scherk":
        return float(np.max(np.abs(np.exp(X[:, 2]) * np.cos(X[:, 0]) - np.cos(X[:, 1]))))
    raise ValueError(f"no closed form for {family!r}")
