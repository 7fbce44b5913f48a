"""Discrete Jenkins-Serrin graphs on a rectangle and checks of their
asymptotic geometry.

The domain is ``D = [0, delta] x [0, 1]``.  Three sides carry finite heights
(``x2 = 0``, ``x1 = delta``, ``x2 = 1``); the side ``x1 = 0`` is split into
``ell`` segments of length ``1/ell`` carrying alternately ``+n`` and ``-n``
(the truncation of ``+-infinity`` data).

The graph is the minimizer of the area functional over continuous piecewise
linear functions on a structured triangulation of the grid, found by damped
Newton iteration.  The area functional is convex, so the discrete problem has
a unique solution; it satisfies a discrete maximum and comparison principle
and reproduces affine data exactly.
"""
import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import dijkstra

from .errors import NoConvergence, BandEmpty

# --------------------------------------------------------------------------
# Problem
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class JSProblem:
    """Jenkins-Serrin boundary configuration.

    heights: values on (x2 = 0, x1 = delta, x2 = 1); each is a float or a
    sequence of node values along that side (in increasing x1 resp. x2).
    signs: sign of the truncated data on each of the ``ell`` segments of the
    side ``x1 = 0`` (default alternating, starting with +).
    boundary: optional callable ``(x1, x2) -> value`` overriding all data.
    """
    delta: float = 1.0
    ell: int = 2
    heights: tuple = (0.0, 0.0, 0.0)
    n: float = 4.0
    grid: tuple = (32, 32)
    signs: tuple = None
    boundary: object = field(default=None, compare=False)

    def __post_init__(self):
        nx, ny = self.grid
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.ell < 1:
            raise ValueError("ell must be a positive integer")
        if ny % self.ell:
            raise ValueError(f"ny={ny} must be a multiple of ell={self.ell} "
                             "so jump points lie on grid lines")
        if self.n <= 0:
            raise ValueError("truncation n must be positive")
        if self.signs is None:
            object.__setattr__(self, "signs",
                               tuple(1 if i % 2 == 0 else -1 for i in range(self.ell)))
        if len(self.signs) != self.ell:
            raise ValueError("one sign per segment")

    @property
    def shape(self):
        nx, ny = self.grid
        return nx + 1, ny + 1

    def coords(self):
        nx, ny = self.grid
        x = np.linspace(0.0, self.delta, nx + 1)
        y = np.linspace(0.0, 1.0, ny + 1)
        return x, y

    def jump_rows(self):
        """Row indices (along x2) of the jump points on the side x1 = 0,
        including the two corners."""
        ny = self.grid[1]
        step = ny // self.ell
        return [k * step for k in range(self.ell + 1)]

    def segment_value(self, i):
        return self.signs[i] * self.n

    def with_n(self, n):
        return JSProblem(self.delta, self.ell, self.heights, n, self.grid, self.signs, self.boundary)

    def with_grid(self, grid):
        return JSProblem(self.delta, self.ell, self.heights, self.n, tuple(grid), self.signs,
                         self.boundary)

    def boundary_values(self):
        """Array of shape (nx+1, ny+1) with boundary data; interior is NaN."""
        nx, ny = self.grid
        x, y = self.coords()
        U = np.full((nx + 1, ny + 1), np.nan)
        if self.boundary is not None:
            X, Y = np.meshgrid(x, y, indexing="ij")
            B = np.asarray(self.boundary(X, Y), float) * np.ones_like(X)
            U[0, :], U[-1, :], U[:, 0], U[:, -1] = B[0, :], B[-1, :], B[:, 0], B[:, -1]
            return U

        def side(h, m):
            h = np.asarray(h, float)
            if h.ndim == 0:
                return np.full(m, float(h))
            if h.shape != (m,):
                raise ValueError(f"side data needs {m} values, got {h.shape}")
            return h

        h1 = side(self.heights[0], nx + 1)   # x2 = 0
        h2 = side(self.heights[1], ny + 1)   # x1 = delta
        h3 = side(self.heights[2], nx + 1)   # x2 = 1
        U[:, 0] = h1
        U[:, -1] = h3
        U[-1, :] = h2
        U[-1, 0] = 0.5 * (h1[-1] + h2[0])
        U[-1, -1] = 0.5 * (h3[-1] + h2[-1])
        rows = self.jump_rows()
        for i in range(self.ell):
            U[0, rows[i] + 1:rows[i + 1]] = self.segment_value(i)
        for k, r in enumerate(rows):
            below = self.segment_value(k - 1) if k > 0 else h1[0]
            above = self.segment_value(k) if k < self.ell else h3[0]
            U[0, r] = 0.5 * (below + above)
        return U


# --------------------------------------------------------------------------
# Admissibility
# --------------------------------------------------------------------------

@dataclass
class AdmissibilityReport:
    admissible: bool
    polygons: int
    violations: list

    def to_dict(self):
        return {"admissible": self.admissible, "polygons": self.polygons,
                "violations": list(self.violations)}


def _polygon_area(P):
    x, y = np.asarray(P, float).T
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def check_admissible(problem=None, A=(), B=(), C=(), domain=None, eps=1e-12):
    """Check the Jenkins-Serrin conditions for a configuration.

    Pass a :class:`JSProblem`, or explicit segments ``A`` (data +infinity),
    ``B`` (-infinity), ``C`` (finite data) as pairs of points together with
    the convex ``domain`` (vertices in order).

    * No two A segments and no two B segments may share an endpoint.
    * Every nondegenerate polygon whose vertices are A/B endpoints (a convex
      polygon inscribed in the domain) must satisfy ``2 alpha < gamma`` and
      ``2 beta < gamma``, where alpha and beta are the total lengths of its
      A and B sides and gamma its perimeter.  If C is empty the polygon
      equal to the whole domain must instead have ``alpha == beta``.
    """
    if problem is not None:
        A, B, C, domain = _problem_segments(problem)
    A = [tuple(map(tuple, s)) for s in A]
    B = [tuple(map(tuple, s)) for s in B]
    C = [tuple(map(tuple, s)) for s in C]
    violations = []
    for name, segs in (("A", A), ("B", B)):
        for s, t in itertools.combinations(segs, 2):
            shared = set(s) & set(t)
            if shared:
                violations.append(f"two {name} segments share the endpoint {min(shared)}")
    kind = {}
    for lab, segs in (("A", A), ("B", B)):
        for s in segs:
            kind[frozenset(s)] = lab
    verts = sorted({p for s in A + B for p in s})
    dom = np.asarray(domain if domain is not None else verts, float)
    dom_area = _polygon_area(dom) if len(dom) >= 3 else 0.0
    cx, cy = dom.mean(axis=0) if len(dom) else (0.0, 0.0)
    verts.sort(key=lambda p: math.atan2(p[1] - cy, p[0] - cx))
    count = 0
    for r in range(3, len(verts) + 1):
        for sub in itertools.combinations(verts, r):
            area = _polygon_area(sub)
            if area <= eps:
                continue
            count += 1
            sides = [(sub[i], sub[(i + 1) % r]) for i in range(r)]
            gamma = sum(math.dist(*s) for s in sides)
            alpha = sum(math.dist(*s) for s in sides if kind.get(frozenset(s)) == "A")
            beta = sum(math.dist(*s) for s in sides if kind.get(frozenset(s)) == "B")
            if not C and abs(area - dom_area) <= eps * max(1.0, dom_area):
                if abs(alpha - beta) > eps * gamma:
                    violations.append(f"boundary polygon: alpha={alpha:.6g} != beta={beta:.6g}")
                continue
            if not 2 * alpha < gamma:
                violations.append(f"polygon {list(sub)}: 2*alpha={2 * alpha:.6g} >= gamma={gamma:.6g}")
            if not 2 * beta < gamma:
                violations.append(f"polygon {list(sub)}: 2*beta={2 * beta:.6g} >= gamma={gamma:.6g}")
    return AdmissibilityReport(not violations, count, violations)


def _problem_segments(problem):
    d, l = problem.delta, problem.ell
    A, B = [], []
    for i in range(l):
        s = ((0.0, i / l), (0.0, (i + 1) / l))
        (A if problem.signs[i] > 0 else B).append(s)
    C = [((0.0, 0.0), (d, 0.0)), ((d, 0.0), (d, 1.0)), ((d, 1.0), (0.0, 1.0))]
    domain = [(0.0, 0.0), (d, 0.0), (d, 1.0), (0.0, 1.0)]
    return A, B, C, domain


# --------------------------------------------------------------------------
# Triangulation and area functional
# --------------------------------------------------------------------------

def grid_triangles(nx, ny):
    """Triangles of the (nx+1) x (ny+1) grid, node index i*(ny+1)+j.

    Cells below the middle row are cut by the '/' diagonal and cells above by
    '\\', so the mesh is symmetric under x2 -> 1 - x2.
    """
    tris = []
    m = ny + 1
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = i * m + j, (i + 1) * m + j, (i + 1) * m + j + 1, i * m + j + 1
            if 2 * j + 1 < ny:      # '/' diagonal a-c
                tris.append((a, b, c))
                tris.append((a, c, d))
            else:                   # '\' diagonal b-d
                tris.append((a, b, d))
                tris.append((b, c, d))
    return np.array(tris, dtype=np.int64)


class _AreaFunctional:
    def __init__(self, xy, tris):
        self.tris = tris
        P = xy[tris]                                   # (T, 3, 2)
        e1 = P[:, 1] - P[:, 0]
        e2 = P[:, 2] - P[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        self.area = 0.5 * np.abs(det)
        # gradient operator: grad u = G @ (u0, u1, u2), from
        # [e1 e2]^T grad u = (u1 - u0, u2 - u0)
        D = np.array([[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
        Minv = np.empty((len(tris), 2, 2))
        Minv[:, 0, 0] = e2[:, 1] / det
        Minv[:, 0, 1] = -e1[:, 1] / det
        Minv[:, 1, 0] = -e2[:, 0] / det
        Minv[:, 1, 1] = e1[:, 0] / det
        self.G = np.einsum("tij,jk->tik", Minv, D)     # (T, 2, 3)
        rows = np.repeat(tris, 3, axis=1).ravel()
        cols = np.tile(tris, (1, 3)).ravel()
        self.hrows, self.hcols = rows, cols

    def grad_u(self, u):
        return np.einsum("tik,tk->ti", self.G, u[self.tris])

    def energy(self, u):
        p = self.grad_u(u)
        return math.fsum(self.area * np.sqrt(1.0 + np.sum(p * p, axis=1)))

    def gradient_hessian(self, u, nnodes):
        p = self.grad_u(u)
        W = np.sqrt(1.0 + np.sum(p * p, axis=1))
        q = p / W[:, None]
        gl = self.area[:, None] * np.einsum("tik,ti->tk", self.G, q)
        g = np.zeros(nnodes)
        np.add.at(g, self.tris.ravel(), gl.ravel())
        Hp = (np.eye(2)[None] - q[:, :, None] * q[:, None, :]) / W[:, None, None]
        Hl = self.area[:, None, None] * np.einsum("tik,tij,tjl->tkl", self.G, Hp, self.G)
        H = sp.csr_matrix((Hl.ravel(), (self.hrows, self.hcols)), shape=(nnodes, nnodes))
        return g, H


@dataclass
class JSolution:
    u: np.ndarray
    residual: float
    problem: JSProblem
    iterations: int = 0
    history: list = field(default_factory=list)

    @property
    def x(self):
        return self.problem.coords()[0]

    @property
    def y(self):
        return self.problem.coords()[1]

    def lifted(self):
        """(vertices (N, 3), triangles) of the graph surface."""
        x, y = self.problem.coords()
        X, Y = np.meshgrid(x, y, indexing="ij")
        V = np.column_stack([X.ravel(), Y.ravel(), self.u.ravel()])
        nx, ny = self.problem.grid
        return V, grid_triangles(nx, ny)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x1", "x2", "u"])
        x, y = self.problem.coords()
        for i, xi in enumerate(x):
            for j, yj in enumerate(y):
                w.writerow([f"{xi:.12g}", f"{yj:.12g}", f"{self.u[i, j]:.12g}"])
        return buf.getvalue()


def solve_graph(problem, tol=None, max_iter=200, u0=None):
    """Discrete minimal graph with the problem's boundary data.

    Damped Newton on the P1 area functional from the zero initial guess
    (boundary values imposed).  For data even or odd under x2 -> 1 - x2 every
    iterate is (anti)symmetrized, so the result has the same parity exactly.
    Converged when the max-norm of the interior
    gradient, scaled by the nodal area, is at most ``tol`` (default
    ``1e-10 * max(1, n)``).
    """
    nx, ny = problem.grid
    x, y = problem.coords()
    X, Y = np.meshgrid(x, y, indexing="ij")
    xy = np.column_stack([X.ravel(), Y.ravel()])
    tris = grid_triangles(nx, ny)
    F = _AreaFunctional(xy, tris)
    B = problem.boundary_values().ravel()
    fixed = ~np.isnan(B)
    free = np.flatnonzero(~fixed)
    u = np.zeros(len(B)) if u0 is None else np.array(u0, float).ravel().copy()
    u[fixed] = B[fixed]
    cell = (problem.delta / nx) * (1.0 / ny)
    tol = tol if tol is not None else 1e-10 * max(1.0, problem.n)
    # even/odd data on a mirror-symmetric mesh: keep the iterate exactly
    # even/odd (the solution is, by uniqueness)
    Bm = B.reshape(nx + 1, ny + 1)
    parity = 0
    if ny % 2 == 0 and u0 is None:
        if np.array_equal(Bm, Bm[:, ::-1], equal_nan=True):
            parity = 1
        elif np.array_equal(Bm, -Bm[:, ::-1], equal_nan=True):
            parity = -1
    history = []
    E = F.energy(u)
    for it in range(max_iter):
        g, H = F.gradient_hessian(u, len(u))
        res = float(np.max(np.abs(g[free]))) / cell if len(free) else 0.0
        history.append(res)
        if res <= tol:
            return JSolution(u.reshape(nx + 1, ny + 1), res, problem, it, history)
        Hff = H[free][:, free].tocsc()
        step = spla.spsolve(Hff, -g[free])
        t = 1.0
        slope = float(g[free] @ step)
        while True:
            trial = u.copy()
            trial[free] += t * step
            Et = F.energy(trial)
            if Et <= E + 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        if t < 1e-12 and Et > E:
            # energy can no longer decrease in floating point; accept the
            # full step if it reduces the gradient
            trial = u.copy()
            trial[free] += step
            Et = F.energy(trial)
        u, E = trial, Et
        if parity:
            U = u.reshape(nx + 1, ny + 1)
            u = (0.5 * (U + parity * U[:, ::-1])).ravel()
            E = F.energy(u)
    g, _ = F.gradient_hessian(u, len(u))
    res = float(np.max(np.abs(g[free]))) / cell if len(free) else 0.0
    history.append(res)
    if res <= tol:
        return JSolution(u.reshape(nx + 1, ny + 1), res, problem, max_iter, history)
    raise NoConvergence(f"residual {res:.3e} > {tol:.3e} after {max_iter} iterations", history)


# --------------------------------------------------------------------------
# Geometry of the lifted graph
# --------------------------------------------------------------------------

def angle_defects(V, T):
    """2 pi minus the sum of incident angles at every vertex."""
    P = V[T]
    total = np.zeros(len(V))
    for k in range(3):
        a = P[:, (k + 1) % 3] - P[:, k]
        b = P[:, (k + 2) % 3] - P[:, k]
        cosang = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        np.add.at(total, T[:, k], np.arccos(np.clip(cosang, -1.0, 1.0)))
    return 2 * np.pi - total


def boundary_mask(problem):
    nx, ny = problem.grid
    m = np.zeros((nx + 1, ny + 1), bool)
    m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
    return m.ravel()


def total_abs_curvature(sol):
    """Sum of |angle defect| over interior vertices of the lifted graph."""
    V, T = sol.lifted()
    K = angle_defects(V, T)
    interior = ~boundary_mask(sol.problem)
    return float(math.fsum(np.abs(K[interior])))


def curvature_refinement(problem, **kw):
    """Total absolute curvature on the grid and on the grid with half the
    spacing; returns (coarse, fine, relative change)."""
    c = total_abs_curvature(solve_graph(problem, **kw))
    nx, ny = problem.grid
    f = total_abs_curvature(solve_graph(problem.with_grid((2 * nx, 2 * ny)), **kw))
    return c, f, abs(f - c) / max(abs(f), 1e-300)


def triangle_normals(V, T):
    P = V[T]
    n = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
    n /= np.linalg.norm(n, axis=1)[:, None]
    # orient upward (graphs) / consistently
    return n


def vertex_normals(V, T):
    P = V[T]
    n = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])     # area weighted
    N = np.zeros_like(V)
    for k in range(3):
        np.add.at(N, T[:, k], n)
    norm = np.linalg.norm(N, axis=1)
    norm[norm == 0] = 1.0
    return N / norm[:, None]


def e1_deviation(N):
    """min(|N - e1|, |N + e1|) for unit normals N (rows)."""
    e1 = np.array([1.0, 0.0, 0.0])
    return np.minimum(np.linalg.norm(N - e1, axis=1), np.linalg.norm(N + e1, axis=1))


def _jump_neighbourhood(problem, radius=1):
    """Nodes within ``radius`` grid steps of a jump point or a corner of the
    alternating side; the discrete graph is not resolved there."""
    nx, ny = problem.grid
    m = np.zeros((nx + 1, ny + 1), bool)
    for r in problem.jump_rows():
        m[:radius + 1, max(0, r - radius):r + radius + 1] = True
    return m.ravel()


@dataclass
class NormalProfile:
    bands: np.ndarray        # (nbands, 2) height intervals
    deviation: np.ndarray    # max deviation per band (NaN if empty)
    strip_signs: list        # sign of <N, e1> next to each segment

    def top_half_nonincreasing(self, slack=0.0):
        d = self.deviation
        top = d[len(d) // 2:]
        top = top[~np.isnan(top)]
        return bool(np.all(np.diff(top) <= slack))

    def to_dict(self):
        return {"bands": self.bands.tolist(),
                "deviation": [None if np.isnan(v) else float(v) for v in self.deviation],
                "strip_signs": self.strip_signs}


def band_deviation(V, T, bands, exclude=None):
    """Max over triangles meeting each height band of the deviation of the
    triangle normal from +-e1.  ``exclude``: node mask; triangles touching
    an excluded node are skipped."""
    N = triangle_normals(V, T)
    dev = e1_deviation(N)
    z = V[T, 2]
    zlo, zhi = z.min(axis=1), z.max(axis=1)
    keep = np.ones(len(T), bool) if exclude is None else ~np.any(exclude[T], axis=1)
    out = np.full(len(bands), np.nan)
    for b, (lo, hi) in enumerate(bands):
        sel = keep & (zhi >= lo) & (zlo <= hi)
        if np.any(sel):
            out[b] = float(np.max(dev[sel]))
    return out


def normal_profile(sol, nbands=8):
    """Deviation of the normal from +-e1 per height band, and the sign of
    <N, e1> along the strips next to the alternating side.

    The bands split ``[0, n]``.  A triangle of the lifted graph counts for
    every band its height range meets; triangles in the one-ring of the jump
    points are skipped (the discrete graph does not resolve the corners
    there).
    """
    V, T = sol.lifted()
    p = sol.problem
    edges = np.linspace(0.0, p.n, nbands + 1)
    bands = np.column_stack([edges[:-1], edges[1:]])
    dev = band_deviation(V, T, bands, exclude=_jump_neighbourhood(p))
    return NormalProfile(bands, dev, strip_signs(sol))


def strip_signs(sol):
    """Sign of the mean <N, e1> (upward normal) over the first grid column
    next to each segment of the alternating side."""
    p = sol.problem
    nx, ny = p.grid
    dx = p.delta / nx
    ux = (sol.u[1, :] - sol.u[0, :]) / dx
    rows = p.jump_rows()
    out = []
    for i in range(p.ell):
        # upward normal is (-u_x, -u_y, 1) / W
        out.append(int(np.sign(np.mean(-ux[rows[i] + 1:rows[i + 1]]))))
    return out


def level_curve(V, T, h):
    """Level set ``z = h`` of a piecewise linear surface.

    Returns (points (P, 3), segments (S, 2), edge keys (P, 2)); every point
    lies on the mesh edge given by its (sorted) vertex pair.
    """
    z = V[:, 2]
    above = z[T] > h
    cnt = above.sum(axis=1)
    cut = (cnt == 1) | (cnt == 2)
    Tc, Ac = T[cut], above[cut]
    # odd vertex: the one alone on its side
    lone = np.where(cnt[cut] == 1, np.argmax(Ac, axis=1), np.argmin(Ac, axis=1))
    idx = np.arange(len(Tc))
    o = Tc[idx, lone]
    p = Tc[idx, (lone + 1) % 3]
    q = Tc[idx, (lone + 2) % 3]
    E = np.concatenate([np.sort(np.column_stack([o, p]), axis=1),
                        np.sort(np.column_stack([o, q]), axis=1)])
    keys, inv = np.unique(E, axis=0, return_inverse=True)
    inv = inv.ravel()
    a, b = keys[:, 0], keys[:, 1]
    t = (h - z[a]) / (z[b] - z[a])
    P = V[a] + t[:, None] * (V[b] - V[a])
    S = np.column_stack([inv[:len(Tc)], inv[len(Tc):]])
    return P, S, keys


def level_curve_distance(V, T, h, sources, targets):
    """Length of the shortest piece of the level curve ``z = h`` joining an
    edge of ``sources`` to an edge of ``targets`` (edges as vertex pairs).
    Returns inf when the level curve does not connect them."""
    P, S, keys = level_curve(V, T, h)
    if len(S) == 0:
        return math.inf
    src = {tuple(sorted(e)) for e in sources}
    tgt = {tuple(sorted(e)) for e in targets}
    G = sp.coo_matrix((np.linalg.norm(P[S[:, 0]] - P[S[:, 1]], axis=1), (S[:, 0], S[:, 1])),
                      shape=(len(P), len(P))).tocsr()
    si = [i for i, k in enumerate(map(tuple, keys.tolist())) if k in src]
    ti = [i for i, k in enumerate(map(tuple, keys.tolist())) if k in tgt]
    if not si or not ti:
        return math.inf
    D = dijkstra(G, directed=False, indices=si)
    return float(np.min(D[:, ti]))


def neck_distance(sol, band=None, segment=0, samples=9):
    """Distance, inside a high height band, between the two walls over the
    endpoints of a segment of the alternating side.

    The walls are the vertical lines over the jump points; in the lifted
    graph they are represented by the boundary edges of the alternating side
    next to the jump points.  The value is the shortest level curve
    ``u = h`` joining the two walls, minimised over ``samples`` heights in
    ``band`` (default ``[0.75 n, 0.95 n]``, mirrored for a - segment).  This
    bounds the intrinsic band distance from above; the x2-gap ``1/ell`` of
    the walls bounds it from below.
    """
    p = sol.problem
    sgn = p.signs[segment]
    if band is None:
        band = (0.75 * p.n, 0.95 * p.n) if sgn > 0 else (-0.95 * p.n, -0.75 * p.n)
    lo, hi = band
    u = sol.u
    if not (np.max(u) >= lo and np.min(u) <= hi):
        raise BandEmpty(f"graph does not reach the band [{lo}, {hi}]")
    rows = p.jump_rows()
    a, b = rows[segment], rows[segment + 1]
    src = [(a, a + 1)]
    tgt = [(b - 1, b)]
    V, T = sol.lifted()
    best = math.inf
    for h in np.linspace(lo, hi, samples):
        best = min(best, level_curve_distance(V, T, h, src, tgt))
    if not math.isfinite(best):
        raise BandEmpty(f"band [{lo}, {hi}] does not connect the walls of segment {segment}")
    return best


def truncation_ladder(problem, ns=(2, 4, 6, 8), **kw):
    """Solve for each truncation height; returns list of (n, JSolution)."""
    return [(n, solve_graph(problem.with_n(n), **kw)) for n in ns]


def ladder_report(problem, ns=(2, 4, 6, 8)):
    """Trend report over the truncation ladder: curvature bound, neck distance
    and normal profile for each n."""
    rows = []
    for n, sol in truncation_ladder(problem, ns):
        prof = normal_profile(sol)
        try:
            neck = neck_distance(sol)
        except BandEmpty:
            neck = None
        rows.append({
            "n": n,
            "residual": sol.residual,
            "total_abs_curvature": total_abs_curvature(sol),
            "curvature_bound": math.pi * (problem.ell + 1),
            "neck_distance": neck,
            "neck_target": 1.0 / problem.ell,
            "normal_deviation": prof.to_dict()["deviation"],
            "strip_signs": prof.strip_signs,
        })
    return {"problem": {"delta": problem.delta, "ell": problem.ell, "grid": list(problem.grid),
                        "heights": [h if np.ndim(h) == 0 else list(h) for h in problem.heights]},
            "ladder": rows}
