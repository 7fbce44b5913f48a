"""Complex rational functions in factored form, square-root continuation along
polyline paths, and adaptive Gauss-Kronrod contour integration.

Everything here is immutable; all functions are pure.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (BranchAmbiguity, ClearanceViolation, PoleHit,
                     ToleranceNotMet)

__all__ = [
    "FactoredRational", "ContourPath", "BranchState", "eval_rational",
    "make_path", "circle_path", "arc_points", "continue_sqrt",
    "integrate_contour", "principal_sqrt", "default_clearance",
]


# --------------------------------------------------------------------------
# Factored rational functions
# --------------------------------------------------------------------------

def _merge_factors(factors):
    merged = {}
    order = []
    for root, mult in factors:
        root = complex(root)
        mult = int(mult)
        if root not in merged:
            merged[root] = 0
            order.append(root)
        merged[root] += mult
    return tuple((r, merged[r]) for r in order if merged[r] != 0)


@dataclass(frozen=True)
class FactoredRational:
    """``scale * prod((z - root)**mult)`` kept in factored form.

    Factors with identical roots are merged on construction and factors whose
    multiplicities cancel are dropped.
    """
    scale: complex = 1.0
    factors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "scale", complex(self.scale))
        object.__setattr__(self, "factors", _merge_factors(self.factors))

    @classmethod
    def from_roots(cls, zeros=(), poles=(), scale=1.0):
        facs = [(r, 1) for r in zeros] + [(r, -1) for r in poles]
        return cls(scale, tuple(facs))

    # -- algebra ----------------------------------------------------------
    def __mul__(self, other):
        if isinstance(other, FactoredRational):
            return FactoredRational(self.scale * other.scale,
                                    self.factors + other.factors)
        return FactoredRational(self.scale * complex(other), self.factors)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, FactoredRational):
            return self * other.inverse()
        return FactoredRational(self.scale / complex(other), self.factors)

    def __pow__(self, n):
        n = int(n)
        if n == 0:
            return FactoredRational(1.0)
        return FactoredRational(self.scale ** n,
                                tuple((r, m * n) for r, m in self.factors))

    def inverse(self):
        return self ** -1

    def scaled(self, c):
        return FactoredRational(self.scale * c, self.factors)

    # -- structure --------------------------------------------------------
    @property
    def zeros(self):
        return tuple(r for r, m in self.factors if m > 0)

    @property
    def poles(self):
        return tuple(r for r, m in self.factors if m < 0)

    @property
    def degrees(self):
        """(numerator degree, denominator degree)."""
        num = sum(m for _, m in self.factors if m > 0)
        den = -sum(m for _, m in self.factors if m < 0)
        return num, den

    def order_at(self, point, tol=0.0):
        """Signed order of vanishing at ``point`` (negative for poles)."""
        point = complex(point)
        return sum(m for r, m in self.factors if abs(r - point) <= tol)

    def branch_points(self):
        """Roots of odd multiplicity: the branch points of ``sqrt(self)``."""
        return tuple(r for r, m in self.factors if m % 2)

    def value_at_infinity(self):
        num, den = self.degrees
        if num > den:
            return complex(np.inf)
        if num < den:
            return 0j
        return self.scale

    def residue(self, pole):
        """Residue at a simple pole, computed from the remaining factors."""
        pole = complex(pole)
        mult = self.order_at(pole)
        if mult != -1:
            raise ValueError(f"{pole!r} is not a simple pole (order {mult})")
        rest = FactoredRational(
            self.scale, tuple((r, m) for r, m in self.factors if r != pole))
        return complex(rest(pole))

    # -- evaluation -------------------------------------------------------
    def _arrays(self):
        cache = self.__dict__.get("_cache")
        if cache is None:
            roots = np.array([r for r, _ in self.factors], dtype=complex)
            mults = np.array([m for _, m in self.factors], dtype=int)
            pole = mults < 0
            cache = (roots, mults, roots[pole])
            object.__setattr__(self, "_cache", cache)
        return cache

    def __call__(self, z, pole_tol=None):
        z = np.asarray(z, dtype=complex)
        roots, mults, poles = self._arrays()
        if not len(roots):
            out = np.full(z.shape, self.scale, dtype=complex)
            return out if out.ndim else complex(out)
        d = z[..., None] - roots
        if len(poles):
            dp = np.abs(z[..., None] - poles)
            tol = pole_tol if pole_tol is not None else (
                1e3 * np.finfo(float).eps * np.maximum(1.0, np.abs(poles)))
            if np.any(dp <= tol):
                raise PoleHit("evaluation at a pole")
        out = self.scale * np.prod(d ** mults, axis=-1)
        return out if out.ndim else complex(out)


def eval_rational(f, z):
    """Evaluate ``f`` at ``z`` in factored form."""
    return f(z)


# --------------------------------------------------------------------------
# Paths
# --------------------------------------------------------------------------

def default_clearance(singularities):
    pts = [complex(s) for s in singularities]
    if len(pts) < 2:
        return 1e-3
    dmin = min(abs(a - b) for i, a in enumerate(pts) for b in pts[i + 1:])
    return 1e-3 * dmin if dmin > 0 else 1e-3


def _segment_distance(a, b, p):
    d = b - a
    L2 = (d * d.conjugate()).real
    if L2 == 0.0:
        return abs(p - a)
    t = ((p - a) * d.conjugate()).real / L2
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * d))


@dataclass(frozen=True)
class ContourPath:
    waypoints: tuple
    closed: bool = False
    clearance: float = 1e-3
    singularities: tuple = field(default=(), compare=False)

    @property
    def points(self):
        pts = list(self.waypoints)
        if self.closed:
            pts.append(pts[0])
        return pts

    def segments(self):
        pts = self.points
        return list(zip(pts[:-1], pts[1:]))

    @property
    def start(self):
        return self.waypoints[0]

    @property
    def end(self):
        return self.waypoints[0] if self.closed else self.waypoints[-1]

    def length(self):
        return sum(abs(b - a) for a, b in self.segments())

    def reversed(self):
        if self.closed:
            wp = (self.waypoints[0],) + tuple(reversed(self.waypoints[1:]))
        else:
            wp = tuple(reversed(self.waypoints))
        return ContourPath(wp, self.closed, self.clearance, self.singularities)

    def __add__(self, other):
        """Concatenate two open paths (end of self must equal start of other)."""
        if self.closed or other.closed:
            raise ValueError("only open paths can be concatenated")
        if abs(self.end - other.start) > 1e-14 * max(1.0, abs(self.end)):
            raise ValueError("paths do not join")
        return make_path(self.waypoints + other.waypoints[1:], False,
                         self.singularities + other.singularities,
                         min(self.clearance, other.clearance))


def make_path(waypoints, closed=False, singularities=(), clearance=None):
    """Validated polyline.  Raises ClearanceViolation naming the offender."""
    wp = [complex(w) for w in waypoints]
    if not wp:
        raise ValueError("waypoints must be nonempty")
    # drop exact repeats so consecutive waypoints are distinct
    cleaned = [wp[0]]
    for w in wp[1:]:
        if w != cleaned[-1]:
            cleaned.append(w)
    if closed and len(cleaned) > 1 and cleaned[-1] == cleaned[0]:
        cleaned.pop()
    sings = tuple(complex(s) for s in singularities)
    if clearance is None:
        clearance = default_clearance(sings)
    if clearance <= 0:
        raise ValueError("clearance must be positive")
    path = ContourPath(tuple(cleaned), bool(closed), float(clearance), sings)
    for i, (a, b) in enumerate(path.segments()):
        for s in sings:
            d = _segment_distance(a, b, s)
            if d < clearance:
                raise ClearanceViolation(s, i, d, clearance)
    return path


def arc_points(center, radius, theta0, theta1, n):
    th = np.linspace(theta0, theta1, n + 1)
    return [complex(center) + radius * complex(math.cos(t), math.sin(t)) for t in th]


def circle_path(center, radius, ccw=True, singularities=(), clearance=None,
                n=None, start_angle=0.0):
    """Closed regular polygon approximating a circle.

    The vertex count is raised until the polyline respects the clearance and
    the chords stay well inside the annulus free of singularities.
    """
    center = complex(center)
    sings = tuple(complex(s) for s in singularities)
    gap = min((abs(abs(s - center) - radius) for s in sings), default=radius)
    n = n or 64
    while True:
        sagitta = radius * (1 - math.cos(math.pi / n))
        if sagitta < 0.25 * gap or n > 1 << 16:
            break
        n *= 2
    sign = 1.0 if ccw else -1.0
    pts = arc_points(center, radius, start_angle, start_angle + sign * 2 * math.pi, n)[:-1]
    return make_path(pts, True, sings, clearance)


# --------------------------------------------------------------------------
# Square-root continuation
# --------------------------------------------------------------------------

def principal_sqrt(w):
    w = np.asarray(w, dtype=complex) + 0j   # maps -0.0 imag to +0.0
    out = np.sqrt(w)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class BranchState:
    """Sheet of ``sqrt(f)`` at ``anchor``: the value there is
    ``sheet * principal_sqrt(f(anchor))``."""
    anchor: complex
    sheet: int = 1

    def __post_init__(self):
        if self.sheet not in (1, -1):
            raise ValueError("sheet must be +1 or -1")
        object.__setattr__(self, "anchor", complex(self.anchor))

    def value(self, f):
        return self.sheet * principal_sqrt(f(self.anchor))

    @classmethod
    def from_value(cls, f, point, g):
        """Sheet whose value at ``point`` is closest to ``g``."""
        p = principal_sqrt(f(point))
        return cls(point, 1 if (np.conj(p) * g).real >= 0 else -1)


_MAX_ARG_STEP = math.pi / 2      # bound on the argument step of f (so pi/4 for sqrt f)
_MAX_SAMPLES = 1 << 18


def _track_segment(f, a, b, g_a):
    """Uniform knots on a -> b, refined by doubling until consecutive values
    of f differ in argument by less than _MAX_ARG_STEP; returns the continued
    square roots at the knots, starting from g_a."""
    m = 8
    while True:
        t = np.linspace(0.0, 1.0, m + 1)
        fv = f(a + t * (b - a))
        if np.any(fv == 0):
            raise BranchAmbiguity("path passes through a zero of the radicand")
        steps = np.abs(np.angle(fv[1:] / fv[:-1]))
        if np.max(steps) < _MAX_ARG_STEP:
            break
        m *= 2
        if m > _MAX_SAMPLES:
            raise BranchAmbiguity(
                f"cannot bound argument step on segment {a!r} -> {b!r}")
    r = principal_sqrt(fv)
    flips = np.where((np.conj(r[:-1]) * r[1:]).real >= 0, 1.0, -1.0)
    s0 = 1.0 if (np.conj(r[0]) * g_a).real >= 0 else -1.0
    signs = s0 * np.concatenate([[1.0], np.cumprod(flips)])
    return t, signs * r


class _SegmentBranch:
    """sqrt(f) along one segment, evaluated at arbitrary parameters."""

    def __init__(self, f, a, b, g_a):
        self.f, self.a, self.b = f, a, b
        self.knots, self.values = _track_segment(f, a, b, g_a)

    @property
    def end_value(self):
        return self.values[-1]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        m = len(self.knots) - 1
        ref = self.values[np.clip(np.rint(t * m).astype(int), 0, m)]
        r = principal_sqrt(self.f(self.a + t * (self.b - self.a)))
        return np.where((np.conj(ref) * r).real >= 0, r, -r)


def continue_sqrt(f, path, start):
    """Analytic continuation of sqrt(f) along ``path`` from ``start``.

    Returns (points, values, final BranchState).  Raises BranchAmbiguity when
    the argument step cannot be bounded (path too close to a branch point).
    """
    if abs(path.start - start.anchor) > 1e-12 * max(1.0, abs(start.anchor)):
        raise ValueError("path must start at the branch anchor")
    g = start.value(f)
    pts, vals = [path.start], [g]
    for a, b in path.segments():
        seg = _SegmentBranch(f, a, b, g)
        pts.extend(a + seg.knots[1:] * (b - a))
        vals.extend(seg.values[1:])
        g = seg.end_value
    end = path.end
    p = principal_sqrt(f(end))
    sheet = 1 if (np.conj(p) * g).real >= 0 else -1
    return np.array(pts), np.array(vals), BranchState(end, sheet)


# --------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature
# --------------------------------------------------------------------------

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
_XK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                0.207784955007898467600689403773245])
_WK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                0.204432940075298892414161999234649])
_WK0 = 0.209482141084727828012999174891714
# Gauss weights live on the odd-indexed Kronrod abscissae (1, 3, 5) and the centre.
_WG = np.array([0.0, 0.129484966168869693270611432679082, 0.0,
                0.279705391489276667901467771423780, 0.0,
                0.381830050505118944950369775488975, 0.0])
_WG0 = 0.417959183673469387755102040816327


def _gk_batch(fun, seg, lo, hi):
    """Apply the GK15 pair on parameter intervals [lo, hi] of segments ``seg``.

    ``fun(seg, t)`` maps parameters (shape (m, 15)) to integrand values times
    dz/dt with a trailing component axis.  Weighted sums are accumulated in a
    fixed order so each interval's result does not depend on the batch.
    """
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    tp = mid[:, None] + half[:, None] * _XK[None, :]
    tm = mid[:, None] - half[:, None] * _XK[None, :]
    t = np.concatenate([tp, tm, mid[:, None]], axis=1)
    vals = fun(seg, t)                               # (m, 15, c)
    k = _WK0 * vals[:, 14]
    g = _WG0 * vals[:, 14]
    for j in range(7):
        pair = vals[:, j] + vals[:, 7 + j]
        k = k + _WK[j] * pair
        if _WG[j]:
            g = g + _WG[j] * pair
    k = k * half[:, None]
    g = g * half[:, None]
    return k, np.max(np.abs(k - g), axis=1)


def _fsum_complex(values):
    values = np.asarray(values)
    return complex(math.fsum(values.real), math.fsum(values.imag))


def _as_components(v, shape):
    if v.shape == shape:
        return v[..., None]
    return v.reshape(shape + (-1,))


def integrate_contour(integrand, path, tol=1e-10, branch=None, max_levels=40):
    """Integrate ``integrand`` along ``path``.

    ``integrand(z)`` (or ``integrand(z, g)`` when ``branch=(radicand, start)``
    is given, with ``g`` the continued square root of the radicand) returns a
    complex scalar or a trailing vector of components.  Returns
    ``(value, error_estimate)``; the estimate is absolute and bounds the
    error of every component.

    Every segment is integrated in a canonical direction with a local error
    target proportional to its parameter length, so the result is
    deterministic and reversing the path negates it exactly.
    """
    segs = path.segments()
    L = path.length()
    if L == 0:
        raise ValueError("degenerate path")
    density = tol / L
    n = len(segs)
    starts = np.empty(n, complex)
    dzs = np.empty(n, complex)
    flips = np.zeros(n, bool)
    branches = [None] * n
    if branch is not None:
        radicand, start = branch
        if abs(path.start - start.anchor) > 1e-12 * max(1.0, abs(start.anchor)):
            raise ValueError("path must start at the branch anchor")
        g = start.value(radicand)
    for i, (a, b) in enumerate(segs):
        flip = (b.real, b.imag) < (a.real, a.imag)
        p, q = (b, a) if flip else (a, b)
        starts[i], dzs[i], flips[i] = p, q - p, flip
        if branch is not None:
            if flip:
                g = _SegmentBranch(radicand, a, b, g).end_value
                branches[i] = _SegmentBranch(radicand, p, q, g)
            else:
                branches[i] = _SegmentBranch(radicand, p, q, g)
                g = branches[i].end_value

    if branch is not None:
        probe = integrand(np.array([path.start]), np.array([start.value(radicand)]))
    else:
        probe = integrand(np.array([path.start]))
    scalar = np.asarray(probe).shape in ((1,), ())

    def fun(seg, t):
        z = starts[seg][:, None] + t * dzs[seg][:, None]
        if branch is None:
            v = np.asarray(integrand(z), dtype=complex)
        else:
            gv = np.empty(t.shape, complex)
            for i in np.unique(seg):
                rows = seg == i
                gv[rows] = branches[i](t[rows])
            v = np.asarray(integrand(z, gv), dtype=complex)
        return _as_components(v, t.shape) * dzs[seg][:, None, None]

    seg = np.arange(n)
    lo = np.zeros(n)
    hi = np.ones(n)
    lengths = np.abs(dzs)
    done_seg, done_val, done_err = [], [], []
    for level in range(max_levels):
        k, err = _gk_batch(fun, seg, lo, hi)
        ok = err <= density * (hi - lo) * lengths[seg]
        if level == max_levels - 1:
            ok[:] = True
        done_seg.append(seg[ok])
        done_val.append(k[ok])
        done_err.append(err[ok])
        if np.all(ok):
            break
        bad = ~ok
        m = 0.5 * (lo[bad] + hi[bad])
        seg = np.concatenate([seg[bad], seg[bad]])
        lo, hi = np.concatenate([lo[bad], m]), np.concatenate([m, hi[bad]])
    seg = np.concatenate(done_seg)
    vals = np.concatenate(done_val, axis=0)
    errs = np.concatenate(done_err)
    ncomp = vals.shape[1]
    parts = np.empty((n, ncomp), complex)
    for i in range(n):
        rows = vals[seg == i]
        sign = -1.0 if flips[i] else 1.0
        parts[i] = [sign * _fsum_complex(rows[:, c]) for c in range(ncomp)]
    value = np.array([_fsum_complex(parts[:, c]) for c in range(ncomp)])
    err = math.fsum(errs)
    out = complex(value[0]) if scalar else value
    if not err <= tol:
        raise ToleranceNotMet(out, err, tol)
    return out, err
