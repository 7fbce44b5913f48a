"""Periods of the Weierstrass forms: end residues, cycle periods, the
family-specific handle periods and a closure report.

A closed curve on the quotient sphere gives a closed curve on the surface when
``g`` returns to its starting sheet; its period is the complex 3-vector
``int (phi1, phi2, phi3)``.  The surface closes up when every real period is
either zero (handle cycles) or a translation of the period lattice (end
cycles and the cycles that wrap around a planar strip).

Integration paths are fixed combinatorially for each family: upper
half-plane semicircles between two real points, closed by the mirror-image
semicircle in the lower half-plane.  Every marked point is real, so these
paths keep a clearance proportional to the marked-point spacing and the
resulting periods are smooth in the parameters.
"""
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .complex_contour import (BranchState, make_path, integrate_contour,
                              continue_sqrt, arc_points)
from .errors import NotIsolated, PathDegenerate
from .families import MkPlusParams, M3Params, OracleParams, build_weierstrass

DEFAULT_TOL = 1e-11
ARC_SEGMENTS = 32
CIRCLE_SEGMENTS = 64


@dataclass(frozen=True)
class PeriodVector:
    value: np.ndarray
    monodromy: int = 1      # -1 if g changes sheet around the curve

    def __post_init__(self):
        object.__setattr__(self, "value", np.asarray(self.value, dtype=complex).reshape(3))

    @property
    def real(self):
        return self.value.real

    @property
    def imag(self):
        return self.value.imag

    def closure_residual(self):
        return float(np.max(np.abs(self.value.real)))

    def is_closed(self, tol):
        return self.closure_residual() <= tol

    def __add__(self, other):
        return PeriodVector(self.value + other.value, self.monodromy * other.monodromy)

    def __neg__(self):
        return PeriodVector(-self.value, self.monodromy)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        return PeriodVector(self.value * c, self.monodromy)

    __rmul__ = __mul__

    def __iter__(self):
        return iter(self.value)

    def __repr__(self):
        v = ", ".join(f"{c.real:.6g}{c.imag:+.6g}j" for c in self.value)
        return f"PeriodVector([{v}])"


# --------------------------------------------------------------------------
# Paths
# --------------------------------------------------------------------------

def semicircle(a, b, upper=True, n=ARC_SEGMENTS):
    """Polyline semicircle from real ``a`` to real ``b`` through the upper
    (or lower) half-plane, with exact endpoints."""
    a, b = float(np.real(a)), float(np.real(b))
    if a == b:
        raise PathDegenerate(f"semicircle endpoints coincide at {a!r}")
    c = 0.5 * (a + b)
    r = 0.5 * abs(b - a)
    # angle measured from the +x axis: start angle 0 if a is the right end
    th0, th1 = (0.0, math.pi) if a > b else (math.pi, 0.0)
    if not upper:
        th0, th1 = -th0, -th1
    pts = arc_points(c, r, th0, th1, n)
    pts[0], pts[-1] = complex(a), complex(b)
    return pts


def lens_loop(a, b, n=ARC_SEGMENTS):
    """Closed curve: upper semicircle a -> b then lower semicircle b -> a."""
    up = semicircle(a, b, True, n)
    down = semicircle(b, a, False, n)
    return up + down[1:-1]


def _nearest_other(data, point):
    others = [s for s in data.singularities if abs(s - point) > 0]
    if not others:
        return math.inf
    return min(abs(s - point) for s in others)


def _phi_integral(data, path, start, tol):
    start = _align_start(data, path.start, start)
    value, _ = integrate_contour(lambda z, g: data.phi(z, g), path, tol=tol,
                                 branch=(data.gSquared, start))
    monodromy = 1
    if path.closed:
        _, vals, final = continue_sqrt(data.gSquared, path, start)
        monodromy = 1 if (np.conj(vals[0]) * vals[-1]).real >= 0 else -1
    return PeriodVector(value, monodromy)


def _align_start(data, point, start):
    """BranchState anchored at ``point``: taken from ``start`` when anchored
    there, else the sheet nearest to ``start``'s value of g."""
    if start is None:
        return BranchState(point, 1)
    if abs(start.anchor - point) <= 1e-12 * max(1.0, abs(point)):
        return BranchState(point, start.sheet)
    g0 = start.value(data.gSquared)
    return BranchState.from_value(data.gSquared, point, g0)


# --------------------------------------------------------------------------
# Periods
# --------------------------------------------------------------------------

def end_residue(data, puncture, start=None, radius=None, tol=DEFAULT_TOL):
    """Period of a small counterclockwise circle around an end puncture.

    ``start`` fixes the sheet of g (anchored at the puncture or at the
    circle's start point ``puncture - radius``).  The radius defaults to a
    quarter of the distance to the nearest other singularity; the value is
    checked against the circle of half that radius.
    """
    puncture = complex(puncture)
    dmin = _nearest_other(data, puncture)
    if dmin == 0:
        raise NotIsolated(f"puncture {puncture!r} is not isolated")
    if radius is None:
        radius = 0.25 * dmin if math.isfinite(dmin) else 0.25
    if radius >= 0.5 * dmin:
        raise NotIsolated(f"radius {radius:.3g} reaches another singularity")
    vals = []
    for r in (radius, 0.5 * radius):
        pts = arc_points(puncture, r, math.pi, 3 * math.pi, CIRCLE_SEGMENTS)[:-1]
        path = make_path(pts, True, data.singularities)
        s = None if start is None else _align_start(data, path.start, start)
        vals.append(_phi_integral(data, path, s, tol))
    diff = np.max(np.abs(vals[0].value - vals[1].value))
    scale = max(1.0, float(np.max(np.abs(vals[0].value))))
    if diff > 1e3 * tol * scale:
        raise NotIsolated(
            f"residue at {puncture!r} depends on the radius (difference {diff:.3e})")
    return vals[0]


def cycle_period(data, cycle, start=None, tol=DEFAULT_TOL):
    """Period of a closed polyline; ``start`` selects the sheet of g at the
    first waypoint.  The result records whether g changes sheet."""
    if not cycle.closed:
        raise PathDegenerate("cycle must be a closed path")
    return _phi_integral(data, cycle, start, tol)


def path_period(data, path, start=None, tol=DEFAULT_TOL):
    """Integral of (phi1, phi2, phi3) along an open path."""
    return _phi_integral(data, path, start, tol)


# --------------------------------------------------------------------------
# Family-specific handle periods
# --------------------------------------------------------------------------

def _check_separated(points, tol=1e-9):
    pts = sorted(points)
    for a, b in zip(pts[:-1], pts[1:]):
        if b - a <= tol * max(1.0, abs(b)):
            raise PathDegenerate(f"marked points {a!r} and {b!r} collide")


def mk_handle_points(p: MkPlusParams):
    """Two real points whose x2 offset is the handle period of M_k^+: one on
    the segment (0, v4) and one on the segment carrying S_1 (the segment
    (1, v1) when k = 1)."""
    a = p.s[0] + 0.5 * (p.e[0] - p.s[0]) if p.k > 1 else 0.5 * (1.0 + p.v1)
    b = 0.5 * p.v4
    return a, b


def m3_points(p: M3Params):
    """Real marked points of M_3 in the positive half, sorted."""
    lo, hi = sorted((p.v1, p.v2))
    return lo, hi


def m3_handle_points(p: M3Params):
    """Points on the planar segments (e1, lo) and (hi, inf), lo < hi the two
    branch points beyond e1."""
    lo, hi = m3_points(p)
    return 0.5 * (p.e1 + lo), 2.0 * hi


def handle_period(params, which=0, tol=DEFAULT_TOL, data=None):
    """Real handle period; zero on a solution.

    ``M_k^+``: ``which=0`` is ``Re int phi2`` from the plane of the segment
    carrying ``S_1`` to the plane of ``(0, v4)`` along the upper semicircle,
    i.e. the offset between the two parallel planes.

    ``M_3``: ``which=0`` is the difference of the end translation lengths at
    ``z = 1`` and ``z = e1`` (``4 pi (|Res_1 eta| - |Res_e1 eta|)``);
    ``which=1`` is the offset between the parallel planes containing the
    images of ``(e1, lo)`` and ``(hi, inf)``.
    """
    if data is None:
        data = build_weierstrass(params)
    _check_separated([float(np.real(x)) for x in data.markedPoints.values()])
    if isinstance(params, MkPlusParams):
        if which != 0:
            raise IndexError("M_k^+ has a single handle period")
        a, b = mk_handle_points(params)
    elif isinstance(params, M3Params):
        if which == 0:
            r1 = abs(data.eta.residue(1.0))
            re = abs(data.eta.residue(params.e1))
            return 4 * math.pi * (r1 - re)
        if which != 1:
            raise IndexError("M_3 has two handle periods (0, 1)")
        a, b = m3_handle_points(params)
    else:
        raise ValueError("family has no handle periods")
    path = make_path(semicircle(a, b), False, data.singularities)
    pv = _phi_integral(data, path, BranchState(a, 1), tol)
    return float(pv.value[1].real)


def handle_periods(params, tol=DEFAULT_TOL):
    data = build_weierstrass(params)
    n = 2 if isinstance(params, M3Params) else 1
    return np.array([handle_period(params, i, tol, data) for i in range(n)])


# --------------------------------------------------------------------------
# Cycle systems and closure report
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Cycle:
    """A closed curve with its role in the closure test.

    kind: ``"end"`` (real period must be a lattice vector), ``"strip"``
    (wraps a planar strip; real period must be a lattice vector),
    ``"handle"`` (real period must vanish), ``"lattice"`` (defines a lattice
    generator, reported only).
    """
    label: str
    kind: str
    path: object
    start: BranchState = None
    puncture: complex = None


def family_cycles(data):
    """Cycles generating the relevant homology for each family."""
    p = data.params
    sing = data.singularities
    cyc = []

    def end(z, label):
        cyc.append(Cycle(label, "end", None, None, complex(z)))

    def loop(label, kind, a, b):
        path = make_path(lens_loop(a, b), True, sing)
        cyc.append(Cycle(label, kind, path, BranchState(path.start, 1)))

    if isinstance(p, MkPlusParams):
        for m, em in enumerate(p.ends, start=1):
            end(em, f"end_E{m}")
            end(-em, f"end_E{m}_mirror")
        a, b = mk_handle_points(p)
        loop("handle", "handle", a, b)
        loop("handle_mirror", "handle", -a, -b)
        loop("strip_V4V5", "strip", 0.5 * p.v4, 0.5 * (1.0 + p.v5))
        loop("lattice_x1", "lattice", 2.0 * p.v1, 0.5 * (p.v4 + p.v5))
    elif isinstance(p, M3Params):
        for z, label in ((1.0, "end_E2"), (p.e1, "end_E1"), (1 / p.e1, "end_E3")):
            end(z, label)
            end(-z, label + "_mirror")
        lo, hi = m3_points(p)
        a, b = m3_handle_points(p)
        loop("handle", "handle", a, b)
        loop("handle_mirror", "handle", -a, -b)
        loop("strip_V", "strip", a, 1.5 * hi)
        loop("lattice_x1", "lattice", 0.5 * (lo + hi), 0.5 * (1 / lo + 1 / hi))
    elif isinstance(p, OracleParams) and p.family == "catenoid":
        path = make_path(arc_points(0, 1.0, math.pi, 3 * math.pi, CIRCLE_SEGMENTS)[:-1], True, sing)
        cyc.append(Cycle("neck", "handle", path, BranchState(path.start, -1)))
    elif isinstance(p, OracleParams) and p.family == "scherk":
        for z, label in ((1, "end_E1"), (1j, "end_E2"), (-1, "end_E3"), (-1j, "end_E4")):
            end(z, label)
    return cyc


@dataclass
class ClosureReport:
    residuals: dict
    scale: float
    tol: float
    periods: dict = field(default_factory=dict)
    lattice: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures

    @property
    def max_residual(self):
        return max(self.residuals.values(), default=0.0)

    def to_dict(self):
        return {
            "passed": self.passed,
            "tol": self.tol,
            "scale": self.scale,
            "max_residual": self.max_residual,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "lattice": [[float(x) for x in t] for t in self.lattice],
            "failures": list(self.failures),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _lattice_distance(x, gens, depth=2):
    """Distance from x to the lattice spanned by ``gens`` (small combinations)."""
    if not gens:
        return float(np.max(np.abs(x)))
    best = math.inf
    rng = range(-depth, depth + 1)
    if len(gens) == 1:
        combos = ((a,) for a in rng)
    else:
        combos = ((a, b) for a in rng for b in rng)
    for c in combos:
        t = sum(ci * g for ci, g in zip(c, gens))
        best = min(best, float(np.max(np.abs(x - t))))
    return best


def compute_cycle(data, cycle, tol=DEFAULT_TOL):
    if cycle.kind == "end":
        return end_residue(data, cycle.puncture, None, tol=tol)
    return cycle_period(data, cycle.path, cycle.start, tol=tol)


def verify_closed(data, cycles=None, tol=1e-8, quad_tol=DEFAULT_TOL):
    """Closure residual of every cycle.

    End and strip cycles are measured against the lattice generated by the
    first end translation and the ``lattice`` cycles; handle cycles against
    zero.  ``tol`` is relative to the scale, the largest ``|Im|`` component
    among the end residues (1 when there are none).
    """
    if cycles is None:
        cycles = family_cycles(data)
    periods = {c.label: compute_cycle(data, c, quad_tol) for c in cycles}
    ends = [periods[c.label] for c in cycles if c.kind == "end"]
    scale = max((float(np.max(np.abs(p.imag))) for p in ends), default=1.0) or 1.0
    gens = []
    if ends:
        gens.append(ends[0].real)
    for c in cycles:
        if c.kind == "lattice":
            gens.append(periods[c.label].real)
    # For families whose ends point in two directions (classical Scherk), the
    # end translations themselves span the lattice.
    for p in ends[1:]:
        if len(gens) >= 2:
            break
        if _lattice_distance(p.real, gens) > 1e-6 * scale and \
                abs(float(np.dot(p.real, gens[0]))) <= 1e-6 * scale ** 2:
            gens.append(p.real)
    residuals, failures = {}, []
    for c in cycles:
        pv = periods[c.label]
        if c.kind == "lattice":
            continue
        if pv.monodromy != 1:
            failures.append(f"{c.label}: g changes sheet, not a closed cycle")
        if c.kind == "handle":
            res = pv.closure_residual()
        else:
            res = _lattice_distance(pv.real, gens)
        residuals[c.label] = res
        if res > tol * scale:
            failures.append(f"{c.label}: residual {res:.3e} > {tol * scale:.3e}")
    return ClosureReport(residuals, scale, tol, periods, gens, failures)
