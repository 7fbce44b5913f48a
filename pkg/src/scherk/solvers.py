"""Root finding for the period problems.

* ``bracket_root``: bisection with secant steps for a single handle period.
* ``winding_number`` / ``localize_zero_2d``: degree of a planar map on a
  rectangle boundary and quadrisection down to a small certified rectangle.
* ``solve_family`` / ``sweep``: the pipelines for the concrete families.
"""
import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (SameSign, MaxIterations, ZeroOnBoundary, WindingLost,
                     ScherkError, InvalidOrdering, ConfigError, NoAdmissibleRoot)
from .families import (M3Params, OracleParams, build_weierstrass,
                       mk_params_k1, mk_params_k2, mk_params_general,
                       solve_e1_cubic, params_to_dict, OUT_OF_SCOPE)
from .periods import handle_period, verify_closed, DEFAULT_TOL


def worker_count():
    """Worker cap from SCHERK_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("SCHERK_THREADS", "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# 1D
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.f_lo * self.f_hi > 0 or math.isnan(self.f_lo * self.f_hi):
            raise SameSign(f"f has the same sign at {self.lo} and {self.hi}")

    @classmethod
    def from_function(cls, f, lo, hi):
        return cls(lo, hi, f(lo), f(hi))


def bracket_root(f, bracket, tol=1e-12, max_iter=200, secant=True):
    """Root of ``f`` in a sign-change bracket.

    Stops when ``|f(x)| <= tol`` or the bracket is narrower than ``tol``.
    Secant steps alternate with bisection steps, so the bracket at least
    halves every two iterations.
    """
    if not isinstance(bracket, Bracket):
        bracket = Bracket.from_function(f, *bracket)
    lo, hi, flo, fhi = bracket.lo, bracket.hi, bracket.f_lo, bracket.f_hi
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    for it in range(max_iter):
        x = 0.5 * (lo + hi)
        if secant and it % 2 == 0:
            xs = hi - fhi * (hi - lo) / (fhi - flo)
            if lo < xs < hi:
                x = xs
        fx = f(x)
        if fx == 0 or abs(fx) <= tol:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        if hi - lo <= tol:
            return lo if abs(flo) <= abs(fhi) else hi
    raise MaxIterations(f"no convergence in {max_iter} iterations (bracket [{lo}, {hi}])")


# --------------------------------------------------------------------------
# 2D degree
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Rect2D:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("rectangle must have positive area")

    @property
    def diameter(self):
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    @property
    def center(self):
        return 0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)

    def corners(self):
        return [(self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1)]

    def loop(self):
        c = self.corners()
        return c + [c[0]]

    def split(self, fx=0.5, fy=0.5):
        xm = self.x0 + fx * (self.x1 - self.x0)
        ym = self.y0 + fy * (self.y1 - self.y0)
        return [Rect2D(self.x0, xm, self.y0, ym), Rect2D(xm, self.x1, self.y0, ym),
                Rect2D(xm, self.x1, ym, self.y1), Rect2D(self.x0, xm, ym, self.y1)]


MAX_ANGLE_STEP = math.pi / 3     # stricter than the pi/2 needed for exactness


class _CachedMap:
    def __init__(self, F):
        self.F = F
        self.cache = {}
        self.samples = []

    def __call__(self, x, y):
        key = (float(x), float(y))
        v = self.cache.get(key)
        if v is None:
            v = np.asarray(self.F(key[0], key[1]), dtype=float).reshape(2)
            self.cache[key] = v
            self.samples.append((key, v))
        return v


def _edge_angle(F, p, q, fp, fq, zero_tol, depth, max_depth):
    ang = math.atan2(fp[0] * fq[1] - fp[1] * fq[0], fp[0] * fq[0] + fp[1] * fq[1])
    if abs(ang) < MAX_ANGLE_STEP:
        return ang
    if depth >= max_depth:
        raise ZeroOnBoundary(f"image turns too fast between {p} and {q}")
    m = (0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]))
    fm = F(*m)
    if np.hypot(*fm) <= 10 * zero_tol:
        raise ZeroOnBoundary(f"|F| = {np.hypot(*fm):.3e} at {m}")
    return (_edge_angle(F, p, m, fp, fm, zero_tol, depth + 1, max_depth)
            + _edge_angle(F, m, q, fm, fq, zero_tol, depth + 1, max_depth))


def winding_number(F, loop, zero_tol=1e-14, max_depth=30, initial=4):
    """Winding number of ``F`` (R^2 -> R^2) around the closed polyline ``loop``.

    ``loop`` is a list of (x, y) vertices (a :class:`Rect2D` is accepted).
    Each edge is sampled adaptively until consecutive image points subtend
    less than pi/3 at the origin.
    """
    if isinstance(loop, Rect2D):
        loop = loop.loop()
    Fc = F if isinstance(F, _CachedMap) else _CachedMap(F)
    pts = [tuple(map(float, p)) for p in loop]
    if pts[0] != pts[-1]:
        pts.append(pts[0])
    total = 0.0
    for p, q in zip(pts[:-1], pts[1:]):
        ts = np.linspace(0.0, 1.0, initial + 1)
        sub = [(p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])) for t in ts]
        sub[0], sub[-1] = p, q
        vals = [Fc(*s) for s in sub]
        for v, s in zip(vals, sub):
            if np.hypot(*v) <= 10 * zero_tol:
                raise ZeroOnBoundary(f"|F| = {np.hypot(*v):.3e} at {s}")
        for a, b, fa, fb in zip(sub[:-1], sub[1:], vals[:-1], vals[1:]):
            total += _edge_angle(Fc, a, b, fa, fb, zero_tol, 0, max_depth)
    w = total / (2 * math.pi)
    n = int(round(w))
    if abs(w - n) > 1e-6:
        raise ZeroOnBoundary(f"winding {w} is not an integer")
    return n


@dataclass
class Localization:
    point: tuple
    rect: Rect2D
    winding: int
    levels: int
    evaluations: int


def localize_zero_2d(F, rect, tol=1e-9, zero_tol=1e-14, max_levels=200, return_info=False):
    """Quadrisection: keep a sub-rectangle with nonzero boundary winding until
    its diameter is at most ``tol``; return its center."""
    Fc = _CachedMap(F)
    w = winding_number(Fc, rect, zero_tol)
    if w == 0:
        raise WindingLost("winding number on the initial rectangle is 0", Fc.samples[:50])
    level = 0
    while rect.diameter > tol:
        if level >= max_levels:
            break
        chosen = None
        for fx, fy in ((0.5, 0.5), (0.45, 0.55), (0.55, 0.45)):
            for child in rect.split(fx, fy):
                try:
                    wc = winding_number(Fc, child, zero_tol)
                except ZeroOnBoundary:
                    continue
                if wc != 0:
                    chosen, w = child, wc
                    break
            if chosen is not None:
                break
        if chosen is None:
            raise WindingLost(f"all children have winding 0 at level {level}",
                              Fc.samples[-50:])
        rect = chosen
        level += 1
    point = rect.center
    if return_info:
        return point, Localization(point, rect, w, level, len(Fc.cache))
    return point


# --------------------------------------------------------------------------
# Family pipelines
# --------------------------------------------------------------------------

@dataclass
class FamilySpec:
    """What to solve.

    family: ``m2plus``/``mkplus`` (fixed ``e1``, or ``v5`` when k = 1;
    ``box = {"v1": [lo, hi]}`` optional), ``m3mm``/``m3pp`` (fixed ``s1``,
    ``box = {"v1": [..], "v2": [..]}`` required), ``catenoid``, ``scherk``.
    ``e1_root`` selects among admissible cubic roots: ``"ordered"`` (the
    root with s1 < e1 < min(v1, v2)), or an index into the sorted list.
    """
    family: str
    k: int = 2
    fixed: dict = field(default_factory=dict)
    box: dict = field(default_factory=dict)
    tol: float = 1e-8
    quad_tol: float = DEFAULT_TOL
    root_tol: float = None
    e1_root: object = "ordered"
    polish: bool = False

    def __post_init__(self):
        if self.family in OUT_OF_SCOPE:
            raise ConfigError(OUT_OF_SCOPE[self.family])
        if self.family not in ("m2plus", "mkplus", "m3mm", "m3pp", "catenoid", "scherk"):
            raise ConfigError(f"unknown family {self.family!r}")
        if self.family == "m2plus":
            self.k = 2
        if self.tol <= 0 or self.quad_tol <= 0:
            raise ConfigError("tolerances must be positive")

    @property
    def variant(self):
        return "plus_plus" if self.family == "m3pp" else "minus_minus"


@dataclass
class SolvedParams:
    family: str
    params: object
    periods: list
    report: object
    certificate: dict = field(default_factory=dict)

    def to_dict(self):
        d = {
            "family": self.family,
            "params": params_to_dict(self.params),
            "periods": [float(p) for p in self.periods],
            "certificate": self.certificate,
        }
        if self.report is not None:
            d["closure"] = self.report.to_dict()
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def mk_params(spec, v1):
    """Complete M_k^+ parameters for the bracket variable v1."""
    if spec.k == 1:
        return mk_params_k1(float(spec.fixed["v5"]), v1)
    if spec.k == 2:
        return mk_params_k2(float(spec.fixed["e1"]), v1)
    return mk_params_general(spec.k, float(spec.fixed["e1"]), v1)


def _feasible(spec, v1):
    try:
        mk_params(spec, v1)
        return True
    except ScherkError:
        return False


def mk_window(spec, n_scan=400, rel=1e-9):
    """Interval of v1 on which the end constraints have admissible solutions.

    Scans a geometric grid above the largest fixed marked point, then refines
    both ends of the first feasible run by bisection on feasibility.
    """
    if "v1" in spec.box:
        lo, hi = map(float, spec.box["v1"])
        return lo, hi
    if spec.k >= 3:
        raise ConfigError("k >= 3 needs an explicit box.v1: the v1 window on which the "
                          "end constraints are solvable is narrow and is not searched")
    base = float(spec.fixed.get("e1", 1.0))
    grid = base * np.geomspace(1 + 1e-6, 200.0, n_scan)
    ok = [_feasible(spec, v) for v in grid]
    idx = [i for i, o in enumerate(ok) if o]
    if not idx:
        raise InvalidOrdering("no v1 admits the end constraints").tagged("window")
    i0 = idx[0]
    i1 = i0
    while i1 + 1 < len(grid) and ok[i1 + 1]:
        i1 += 1

    def refine(a, b, a_ok):
        for _ in range(80):
            m = 0.5 * (a + b)
            if _feasible(spec, m) == a_ok:
                a = m
            else:
                b = m
            if abs(b - a) <= rel * abs(a):
                break
        return a

    lo = refine(grid[i0], grid[i0 - 1], True) if i0 > 0 else grid[i0]
    hi = refine(grid[i1], grid[i1 + 1], True) if i1 + 1 < len(grid) else grid[i1]
    pad = 1e-6 * (hi - lo)
    return lo + pad, hi - pad


def mk_period(spec, v1):
    p = mk_params(spec, v1)
    return handle_period(p, 0, spec.quad_tol)


def m3_params(spec, v1, v2):
    s1 = float(spec.fixed["s1"])
    roots = solve_e1_cubic(v1, v2, s1, spec.variant)
    if spec.e1_root == "ordered":
        roots = [e for e in roots if s1 < e < min(v1, v2)]
        if not roots:
            raise NoAdmissibleRoot(f"no root with s1 < e1 < min(v1, v2) at ({v1}, {v2})")
        e1 = roots[0]
    else:
        e1 = roots[int(spec.e1_root)]
    return M3Params(spec.variant, v1, v2, s1, e1)


def m3_period_map(spec):
    def F(v1, v2):
        p = m3_params(spec, v1, v2)
        d = build_weierstrass(p)
        return (handle_period(p, 0, spec.quad_tol, d), handle_period(p, 1, spec.quad_tol, d))
    return F


def _tag(stage, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ScherkError as exc:
        if exc.stage is None:
            exc.tagged(stage)
        raise


def sweep(spec, n=50, interval=None, workers=None):
    """Handle period of M_k^+ on ``n`` points of the v1 window.

    Returns a list of rows ``(v1, period, max end-constraint residual)``.
    """
    from .families import end_constraint_residuals
    lo, hi = interval if interval is not None else _tag("window", mk_window, spec)
    xs = np.linspace(lo, hi, n)

    def row(x):
        p = mk_params(spec, x)
        per = handle_period(p, 0, spec.quad_tol)
        res = max(end_constraint_residuals(build_weierstrass(p)))
        return (float(x), float(per), float(res))

    workers = workers or worker_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(row, xs))
    else:
        rows = [row(x) for x in xs]
    return rows


def sign_changes(rows):
    return [i for i in range(len(rows) - 1) if rows[i][1] * rows[i + 1][1] < 0]


def sweep_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["param", "period", "residuals"])
    for x, p, r in rows:
        w.writerow([repr(x), repr(p), repr(r)])
    return buf.getvalue()


def solve_family(spec):
    """Run the pipeline for ``spec`` and return :class:`SolvedParams`."""
    if isinstance(spec, dict):
        spec = FamilySpec(**spec)
    fam = spec.family
    if fam in ("catenoid", "scherk"):
        p = OracleParams(fam)
        report = _tag("verify", verify_closed, build_weierstrass(p), None, spec.tol)
        return SolvedParams(fam, p, [], report, {"kind": "none"})
    if fam in ("m2plus", "mkplus"):
        return _solve_mk(spec)
    return _solve_m3(spec)


def _solve_mk(spec):
    lo, hi = _tag("window", mk_window, spec)
    n = 16
    xs = np.linspace(lo, hi, n)
    vals = [_tag("period", mk_period, spec, x) for x in xs]
    idx = [i for i in range(n - 1) if vals[i] * vals[i + 1] <= 0]
    if not idx:
        raise SameSign(f"handle period has no sign change on [{lo}, {hi}]").tagged("bracket")
    i = idx[0]
    br = Bracket(xs[i], xs[i + 1], vals[i], vals[i + 1])
    root_tol = spec.root_tol or 1e-13 * max(1.0, abs(hi))
    f = lambda x: _tag("period", mk_period, spec, x)
    v1 = _tag("bracket", bracket_root, f, br, root_tol)
    p = mk_params(spec, v1)
    per = handle_period(p, 0, spec.quad_tol)
    report = _tag("verify", verify_closed, build_weierstrass(p), None, spec.tol, spec.quad_tol)
    cert = {"kind": "bracket", "lo": br.lo, "hi": br.hi, "f_lo": br.f_lo, "f_hi": br.f_hi,
            "window": [lo, hi], "sign_changes": len(idx)}
    return SolvedParams(spec.family, p, [per], report, cert)


def _solve_m3(spec):
    if "v1" not in spec.box or "v2" not in spec.box:
        raise ConfigError("m3 families need box.v1 and box.v2").tagged("config")
    rect = Rect2D(*map(float, spec.box["v1"]), *map(float, spec.box["v2"]))
    F = m3_period_map(spec)
    # the cubic stage: the box must admit an end-constraint root everywhere on
    # its corners (checked first so an inadmissible s1 fails early and clearly)
    for c in rect.corners():
        _tag("cubic", m3_params, spec, *c)
    tol = spec.root_tol or 1e-10 * rect.diameter
    point, info = _tag("localize", localize_zero_2d, F, rect, tol, 1e-14, 200, True)
    if spec.polish:
        point = _newton_polish(F, point, info.rect)
    p = m3_params(spec, *point)
    d = build_weierstrass(p)
    periods = [handle_period(p, i, spec.quad_tol, d) for i in range(2)]
    report = _tag("verify", verify_closed, d, None, spec.tol, spec.quad_tol)
    r = info.rect
    cert = {"kind": "quadrisection", "rect": [r.x0, r.x1, r.y0, r.y1],
            "winding": info.winding, "levels": info.levels,
            "evaluations": info.evaluations, "box": [rect.x0, rect.x1, rect.y0, rect.y1]}
    return SolvedParams(spec.family, p, periods, report, cert)


def _newton_polish(F, point, rect, steps=3):
    x = np.array(point, float)
    h = 0.25 * min(rect.x1 - rect.x0, rect.y1 - rect.y0) or 1e-9
    for _ in range(steps):
        f0 = np.array(F(*x))
        J = np.column_stack([(np.array(F(x[0] + h, x[1])) - f0) / h,
                             (np.array(F(x[0], x[1] + h)) - f0) / h])
        try:
            x = x - np.linalg.solve(J, f0)
        except np.linalg.LinAlgError:
            break
    return tuple(x)


def sign_grid(F, rect, n=20):
    """Signs of both components of F on an n x n grid of cell centres;
    returns (grid of sign pairs, whether all four patterns occur)."""
    xs = rect.x0 + (np.arange(n) + 0.5) * (rect.x1 - rect.x0) / n
    ys = rect.y0 + (np.arange(n) + 0.5) * (rect.y1 - rect.y0) / n
    grid = np.empty((n, n, 2), int)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            grid[i, j] = np.sign(F(x, y))
    patterns = {tuple(v) for v in grid.reshape(-1, 2)}
    return grid, all(p in patterns for p in ((1, 1), (1, -1), (-1, 1), (-1, -1)))
