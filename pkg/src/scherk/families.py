"""Weierstrass data of the doubly-periodic families and their algebraic
end constraints.

Conventions
-----------
The surface is ``F = Re int (phi1, phi2, phi3)`` with

    phi = ((1/g - g) eta, i (1/g + g) eta, 2 eta),

and ``z`` is the coordinate on the quotient sphere by the order-two rotation
about the vertical axis, so only ``g**2`` descends and ``g`` is obtained by
branch tracking.  Each family stores ``gSquared`` and the ``dz`` coefficient of
``eta`` as :class:`FactoredRational`.

For ``M_k^+`` the stored ``g**2`` is the negative of the bare factored product
``prod (z + a)/(z - a)``.  Multiplying ``g`` by ``i`` is a quarter turn of the
surface about the vertical axis; it is needed so that the end condition
``g**2 = 1`` at the punctures ``1, e_m`` is solvable under the ordering
``0 < v4 < v5 < 1 < ... < v1`` (the bare product is negative at ``z = 1``).
"""
import json
import math
from dataclasses import dataclass, field, asdict
from fractions import Fraction

import numpy as np

from .complex_contour import FactoredRational, BranchState, principal_sqrt
from .errors import (InvalidOrdering, NoRealRoots, OrderingViolated,
                     DegenerateDenominator, NoAdmissibleRoot, ConfigError)

WEIERSTRASS_FAMILIES = ("mkplus", "m2plus", "m3mm", "m3pp", "catenoid", "scherk")
OUT_OF_SCOPE = {
    "m1pm": "family has no Weierstrass data (out of scope)",
    "mkpm": "family has no Weierstrass data (out of scope)",
    "mkminus": "family has no Weierstrass data (out of scope)",
    "m1mm": "family does not exist (out of scope)",
    "m1pp": "family does not exist (out of scope)",
    "m1": "family has no Weierstrass data (out of scope)",
}
M3_VARIANTS = ("minus_minus", "plus_plus")


# --------------------------------------------------------------------------
# Parameters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MkPlusParams:
    """Parameters of ``M_k^+``: ``e_k = 1`` is implicit and not stored."""
    k: int
    v1: float
    v4: float
    v5: float
    s: tuple = ()
    e: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(float(x) for x in self.s))
        object.__setattr__(self, "e", tuple(float(x) for x in self.e))
        if self.k < 1:
            raise InvalidOrdering(f"k must be positive, got {self.k}")
        if len(self.s) != self.k - 1 or len(self.e) != self.k - 1:
            raise InvalidOrdering(
                f"k={self.k} needs {self.k - 1} values in s and e "
                f"(got {len(self.s)}, {len(self.e)})")
        chain = [("0", 0.0), ("v4", self.v4), ("v5", self.v5), ("e_k=1", 1.0)]
        for j in range(self.k - 1, 0, -1):
            chain.append((f"s{j}", self.s[j - 1]))
            chain.append((f"e{j}", self.e[j - 1]))
        chain.append(("v1", self.v1))
        for (na, a), (nb, b) in zip(chain[:-1], chain[1:]):
            if not a < b:
                raise InvalidOrdering(f"ordering requires {na} < {nb} ({a!r} >= {b!r})")

    @property
    def family(self):
        return "m2plus" if self.k == 2 else "mkplus"

    @property
    def ends(self):
        """All end parameters e_1, ..., e_k (e_k = 1)."""
        return self.e + (1.0,)

    def replace(self, **kw):
        d = dict(k=self.k, v1=self.v1, v4=self.v4, v5=self.v5, s=self.s, e=self.e)
        d.update(kw)
        return MkPlusParams(**d)


@dataclass(frozen=True)
class M3Params:
    variant: str
    v1: float
    v2: float
    s1: float
    e1: float

    def __post_init__(self):
        if self.variant not in M3_VARIANTS:
            raise InvalidOrdering(f"unknown variant {self.variant!r}")
        for name in ("v1", "v2", "s1", "e1"):
            x = getattr(self, name)
            if not (x > 0 and math.isfinite(x)):
                raise InvalidOrdering(f"{name} must be positive and finite, got {x!r}")
            if x == 1.0:
                raise InvalidOrdering(f"{name} must differ from 1")
        pts = self.marked_points
        names = list(pts)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                if abs(pts[a] - pts[b]) <= 1e-12 * max(1.0, abs(pts[a])):
                    raise InvalidOrdering(f"marked points {a} and {b} coincide")

    @property
    def family(self):
        return "m3mm" if self.variant == "minus_minus" else "m3pp"

    @property
    def marked_points(self):
        return {
            "V1": self.v1, "V2": self.v2, "S1": self.s1, "E1": self.e1,
            "V6": 1 / self.v1, "V5": 1 / self.v2, "S2": 1 / self.s1,
            "E3": 1 / self.e1, "E2": 1.0,
        }

    @property
    def delta(self):
        return self.v2 - 1 / self.v2

    @property
    def gamma(self):
        if self.variant == "minus_minus":
            return 1 / self.v1 - self.v1
        return self.v1 - 1 / self.v1

    @property
    def nu(self):
        return 1 / self.s1 - self.s1

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        return M3Params(**d)

    def is_ordered(self):
        """The ordering used by the solvers on the positive real axis:
        ``1 < s1 < e1 < v1 < v2`` (the mirrored points lie in (0, 1))."""
        return 1 < self.s1 < self.e1 < self.v1 < self.v2


@dataclass(frozen=True)
class OracleParams:
    family: str   # "catenoid" or "scherk"

    def __post_init__(self):
        if self.family not in ("catenoid", "scherk"):
            raise ConfigError(f"unknown oracle family {self.family!r}")


# --------------------------------------------------------------------------
# Weierstrass data
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class WeierstrassData:
    gSquared: FactoredRational
    eta: FactoredRational
    punctures: tuple
    markedPoints: dict = field(compare=False)
    family: str = ""
    params: object = field(default=None, compare=False)

    @property
    def branch_points(self):
        return self.gSquared.branch_points()

    @property
    def singularities(self):
        """Every finite zero/pole of g**2 and of eta (all need clearance)."""
        pts = []
        for r in self.gSquared.zeros + self.gSquared.poles + self.eta.zeros + self.eta.poles:
            if r not in pts:
                pts.append(r)
        return tuple(pts)

    def g(self, z, start):
        """Principal-branch-relative value of g at ``z`` on the sheet of ``start``
        (only meaningful near ``start``; use path continuation otherwise)."""
        return start.sheet * principal_sqrt(self.gSquared(z))

    def phi(self, z, g):
        """(phi1, phi2, phi3) coefficients of dz, stacked on the last axis."""
        z = np.asarray(z, dtype=complex)
        eta = self.eta(z)
        inv = 1.0 / g
        return np.stack([(inv - g) * eta, 1j * (inv + g) * eta, 2.0 * eta], axis=-1)

    def branch(self, point, sheet=1):
        return BranchState(point, sheet)


def _mkplus_data(p: MkPlusParams):
    k = p.k
    sgn = (-1) ** k
    facs = [(-p.v4, 1), (p.v4, -1), (-p.v5, 1), (p.v5, -1),
            (-sgn * p.v1, 1), (sgn * p.v1, -1)]
    nk, dk = [], []
    for j, s in enumerate(p.s, start=1):
        c = (-1) ** (k + j)
        nk.append((-c * s, 1))     # N_k factor z + c s_j
        dk.append((c * s, 1))      # D_k factor z - c s_j
    facs += [(r, 2) for r, _ in nk] + [(r, -2) for r, _ in dk]
    g2 = FactoredRational(-1.0, tuple(facs))
    efacs = []
    for em in p.ends:
        efacs += [(em, -1), (-em, -1)]
    eta = FactoredRational(1.0, tuple(nk + dk + efacs))
    marked = {"V4": p.v4, "V5": p.v5, "V1": p.v1, "V3": 0.0,
              f"E{k}": 1.0}
    for j, s in enumerate(p.s, start=1):
        marked[f"S{j}"] = s
    for m, em in enumerate(p.e, start=1):
        marked[f"E{m}"] = em
    punct = []
    for em in p.ends:
        punct += [complex(em), complex(-em)]
    return WeierstrassData(g2, eta, tuple(punct), marked, p.family, p)


def m3_gsquared(v1, v2, s1, variant="minus_minus"):
    """g**2 of M_3 as a factored product; no parameter validation, so it can be
    evaluated at degenerate parameter values too."""
    if variant == "minus_minus":
        v1facs = [(v1, 1), (-v1, -1), (-1 / v1, 1), (1 / v1, -1)]
    else:
        v1facs = [(v1, -1), (-v1, 1), (-1 / v1, -1), (1 / v1, 1)]
    facs = v1facs + [(-v2, 1), (v2, -1), (1 / v2, 1), (-1 / v2, -1),
                     (s1, 2), (-s1, -2), (-1 / s1, 2), (1 / s1, -2)]
    return FactoredRational(1.0, tuple(facs))


def _m3_data(p: M3Params):
    v1, v2, s1, e1 = p.v1, p.v2, p.s1, p.e1
    g2 = m3_gsquared(v1, v2, s1, p.variant)
    eta = FactoredRational(1.0, (
        (1.0, -1), (-1.0, -1), (s1, 1), (-s1, 1), (e1, -1), (-e1, -1),
        (1 / s1, 1), (-1 / s1, 1), (1 / e1, -1), (-1 / e1, -1)))
    punct = (1 + 0j, -1 + 0j, complex(e1), complex(-e1), complex(1 / e1), complex(-1 / e1))
    marked = dict(p.marked_points)
    marked.update({"V4": 0.0})
    return WeierstrassData(g2, eta, punct, marked, p.family, p)


def _oracle_data(p: OracleParams):
    g2 = FactoredRational(1.0, ((0.0, 2),))
    if p.family == "catenoid":
        eta = FactoredRational(0.5, ((0.0, -1),))
        return WeierstrassData(g2, eta, (0j,), {"P0": 0.0}, "catenoid", p)
    eta = FactoredRational(-2.0, ((0.0, 1), (1.0, -1), (-1.0, -1), (1j, -1), (-1j, -1)))
    punct = (1 + 0j, -1 + 0j, 1j, -1j)
    return WeierstrassData(g2, eta, punct, {"E+": 1.0, "E-": -1.0}, "scherk", p)


def build_weierstrass(params):
    """Weierstrass data for ``MkPlusParams``, ``M3Params`` or an oracle tag
    (``"catenoid"``: g = z, eta = dz/(2z); ``"scherk"``: g = z,
    eta = 2z dz/(1 - z**4))."""
    if isinstance(params, str):
        params = OracleParams(params)
    if isinstance(params, MkPlusParams):
        return _mkplus_data(params)
    if isinstance(params, M3Params):
        return _m3_data(params)
    if isinstance(params, OracleParams):
        return _oracle_data(params)
    raise TypeError(f"cannot build Weierstrass data from {type(params).__name__}")


def conjugate(data: WeierstrassData) -> WeierstrassData:
    """Conjugate surface: eta -> i eta, g unchanged."""
    return WeierstrassData(data.gSquared, data.eta.scaled(1j), data.punctures,
                           data.markedPoints, data.family, data.params)


def compatibility_defects(data: WeierstrassData):
    """Finite points where an even-order zero/pole of g**2 (order 2l) is not
    matched by a zero of eta of order l.  Empty for valid data."""
    bad = []
    for r, m in data.gSquared.factors:
        if m % 2 == 0 and data.eta.order_at(r) != abs(m) // 2:
            bad.append((r, m, data.eta.order_at(r)))
    return bad


# --------------------------------------------------------------------------
# End constraints
# --------------------------------------------------------------------------

def end_points(data):
    """Punctures at which the end condition g**2 = 1 is imposed."""
    if isinstance(data.params, MkPlusParams):
        return tuple(complex(e) for e in data.params.ends)
    if isinstance(data.params, M3Params):
        p = data.params
        return (1 + 0j, complex(p.e1), complex(1 / p.e1))
    if isinstance(data.params, OracleParams) and data.family == "scherk":
        return ()
    return ()


def end_constraint_residuals(data, params=None):
    """|g**2(point) - 1| at each end puncture."""
    if params is not None and data.params is None:
        data = WeierstrassData(data.gSquared, data.eta, data.punctures,
                               data.markedPoints, data.family, params)
    return [abs(data.gSquared(z) - 1.0) for z in end_points(data)]


def end_residue_magnitudes(data):
    """|Res eta| at each end point (positive-real representatives)."""
    return [abs(data.eta.residue(z)) for z in end_points(data)]


# -- k = 2 closed form ------------------------------------------------------

def solve_v4_v5(s1, e1, v1):
    """Roots v4 < v5 making g**2(1) = g**2(e1) = 1 for M_2^+.

    Writing p = v4 v5 and q = v4 + v5, the two end conditions are linear in
    (p, q) with coefficients built from

        A = (1 - s1)^2 (1 + v1),   At = (1 + s1)^2 (1 - v1),
        B = (e1 - s1)^2 (e1 + v1), Bt = (e1 + s1)^2 (e1 - v1).
    """
    if not 1 < s1 < e1 < v1:
        raise InvalidOrdering(f"need 1 < s1 < e1 < v1, got s1={s1}, e1={e1}, v1={v1}")
    A = (1 - s1) ** 2 * (1 + v1)
    At = (1 + s1) ** 2 * (1 - v1)
    B = (e1 - s1) ** 2 * (e1 + v1)
    Bt = (e1 + s1) ** 2 * (e1 - v1)
    # (A+At)(1+p) + (A-At) q = 0 ;  (B+Bt)(e1^2+p) + (B-Bt) e1 q = 0
    den = (A + At) * (B - Bt) * e1 - (A - At) * (B + Bt)
    scale = abs(A + At) * abs(B - Bt) * e1 + abs(A - At) * abs(B + Bt)
    if abs(den) <= 1e-13 * scale:
        raise DegenerateDenominator(f"linear system for (v4 v5, v4 + v5) is singular (den={den:.3e})")
    p = ((A - At) * (B + Bt) * e1 ** 2 - (A + At) * (B - Bt) * e1) / den
    q = (A + At) * (B + Bt) * (1 - e1 ** 2) / den
    disc = q * q - 4 * p
    if disc < 0:
        raise NoRealRoots(f"discriminant {disc:.3e} < 0")
    r = math.sqrt(disc)
    # stable quadratic roots
    big = 0.5 * (q + math.copysign(r, q))
    roots = sorted([big, p / big]) if big != 0 else [0.0, q]
    v4, v5 = roots
    if not 0 < v4 < v5 < 1:
        raise OrderingViolated(f"roots v4={v4:.6g}, v5={v5:.6g} violate 0 < v4 < v5 < 1")
    return v4, v5


def mk_params_k2(e1, v1, s1=None):
    """Complete M_2^+ parameters from (e1, v1).

    Equal end widths at z = 1 and z = e1 force s1 = sqrt(e1); the end
    conditions then fix v4, v5.
    """
    if s1 is None:
        s1 = math.sqrt(e1)
    v4, v5 = solve_v4_v5(s1, e1, v1)
    return MkPlusParams(2, v1, v4, v5, (s1,), (e1,))


def mk_params_k1(v5, v1):
    """Complete M_1^+ parameters from (v5, v1): v4 from g**2(1) = 1."""
    a = (1 + v5) * (v1 - 1)
    b = (1 - v5) * (1 + v1)
    v4 = (b - a) / (a + b)
    return MkPlusParams(1, v1, v4, v5)


def mk_params_general(k, e1, v1, guess=None, starts=24):
    """Solve the end conditions g**2(e_m) = 1 (m = 1..k) and equal end widths
    for (v4, v5, s_j, e_2..e_{k-1}) with e1, v1 fixed.

    The unknowns are coordinates of the ordered chain
    ``0 < v4 < v5 < 1 < s_{k-1} < e_{k-1} < ... < s_1 < e1``: logistic
    fractions for v5 and v4/v5, and softmax gaps for the points in (1, e1),
    so every iterate respects the ordering.  Several deterministic starting
    points are tried.
    """
    if k == 1:
        raise ValueError("k = 1 is parameterized by mk_params_k1")
    if k == 2:
        return mk_params_k2(e1, v1)
    from scipy.optimize import root
    from scipy.special import expit

    def unpack(y):
        v5 = float(expit(y[0]))
        v4 = v5 * float(expit(y[1]))
        w = np.exp(np.concatenate([y[2:], [0.0]]) - max(0.0, np.max(y[2:])))
        chain = 1 + (e1 - 1) * np.cumsum(w / w.sum())[:-1]   # ascending, 2k-3 points
        desc = chain[::-1]                    # s_1, e_2, s_2, ..., e_{k-1}, s_{k-1}
        s = tuple(desc[0::2])
        e = (e1,) + tuple(desc[1::2])
        return v4, v5, s, e

    def resid(y):
        v4, v5, s, e = unpack(y)
        ends = e + (1.0,)
        sgn = (-1) ** k
        out = []
        for em in ends:
            val = -((em + v4) * (em + v5) * (em + sgn * v1)) / (
                (em - v4) * (em - v5) * (em - sgn * v1))
            for j, sj in enumerate(s, start=1):
                c = (-1) ** (k + j)
                val *= ((em + c * sj) / (em - c * sj)) ** 2
            out.append(val - 1.0)
        res = []
        for em in ends:
            r = np.prod([em * em - sj * sj for sj in s])
            r /= 2 * em * np.prod([em * em - ej * ej for ej in ends if ej != em])
            res.append(abs(r))
        out += [math.log(res[i] / res[-1]) for i in range(k - 1)]
        return np.array(out)

    def safe(y):
        try:
            r = resid(y)
        except (ZeroDivisionError, OverflowError, ValueError):
            return np.full(2 * k - 1, 1e6)
        return np.where(np.isfinite(r), r, 1e6)

    n = 2 * k - 1
    rng = np.random.default_rng(0)
    guesses = [np.zeros(n)] if guess is None else [np.asarray(guess, float)]
    guesses += [rng.normal(scale=1.5, size=n) for _ in range(starts)]
    last = None
    for y0 in guesses:
        with np.errstate(all="ignore"):
            try:
                sol = root(safe, y0, method="hybr", tol=1e-14)
            except (ValueError, FloatingPointError) as exc:
                last = str(exc)
                continue
            ok = sol.success and np.max(np.abs(safe(sol.x))) <= 1e-10
        if ok:
            v4, v5, s, e = unpack(sol.x)
            try:
                return MkPlusParams(k, v1, v4, v5, s, e)
            except InvalidOrdering as exc:
                last = str(exc)
                continue
        last = sol.message
    raise NoRealRoots(f"constraint solve failed for k={k}, e1={e1}, v1={v1}: {last}")


# -- M3 end constraint --------------------------------------------------------

def e1_polynomial(v1, v2, s1, variant="minus_minus"):
    """Coefficients (highest first) of the cubic in x = e1**2 whose positive
    roots give g**2(e1) = 1.

    With S = delta + gamma, P = delta*gamma and a = S + 2 nu the cubic is

        (x - 1) * (a x^2 + b x + a),  b = S nu^2 + 2 nu P - 2 S - 4 nu,

    so the leading coefficient is S + 2 nu and the constant term -(S + 2 nu).
    The root x = 1 puts E1 on the end at z = 1 and is never admissible.
    """
    p = M3Params.__new__(M3Params)
    object.__setattr__(p, "variant", variant)
    object.__setattr__(p, "v1", v1)
    object.__setattr__(p, "v2", v2)
    object.__setattr__(p, "s1", s1)
    S = p.delta + p.gamma
    P = p.delta * p.gamma
    nu = p.nu
    a = S + 2 * nu
    b = S * nu * nu + 2 * nu * P - 2 * S - 4 * nu
    return np.array([a, b - a, a - b, -a]), (a, b)


def poly_residual(coeffs, x):
    """Exact value of the polynomial at float x (rounded once at the end)."""
    acc = Fraction(0)
    fx = Fraction(float(x))
    for c in coeffs:
        acc = acc * fx + Fraction(float(c))
    return float(acc)


def _polish(coeffs, x, iters=4):
    d = np.polyder(coeffs)
    for _ in range(iters):
        fx = poly_residual(coeffs, x)
        dfx = np.polyval(d, x)
        if dfx == 0 or fx == 0:
            break
        step = fx / dfx
        if abs(step) <= 1e-17 * abs(x):
            break
        x = x - step
    return x


def solve_e1_cubic(v1, v2, s1, variant="minus_minus", ordered=False):
    """All admissible e1 = sqrt(x) for positive real roots x of the cubic.

    Admissible means the resulting M3Params are valid (all marked points
    distinct, off 0, 1, infinity); with ``ordered=True`` also ``s1 < e1 < v1``.
    A vanishing leading coefficient reduces the degree.
    """
    # validate the fixed points with a placeholder e1 beyond every point and
    # reciprocal, so that it cannot coincide with any of them
    probe = [x for x in (v1, v2, s1) if isinstance(x, (int, float)) and x > 0]
    M3Params(variant, v1, v2, s1, 2.0 * max([2.0] + probe + [1 / x for x in probe]))
    coeffs, (a, b) = e1_polynomial(v1, v2, s1, variant)
    scale = max(abs(c) for c in coeffs)
    roots = []
    if abs(a) <= 1e-14 * scale:
        # degree drops: (x - 1) * b x ; x = 0 is not admissible
        roots = []
    else:
        disc = b * b - 4 * a * a
        if disc >= 0:
            r = math.sqrt(disc)
            big = -0.5 * (b + math.copysign(r, b))
            if big != 0:
                roots = [big / a, a / big]
    out = []
    for x in roots:
        if not x > 0:
            continue
        x = _polish(coeffs, x)
        e1 = math.sqrt(x)
        try:
            p = M3Params(variant, v1, v2, s1, e1)
        except InvalidOrdering:
            continue
        if ordered and not p.s1 < e1 < p.v1:
            continue
        out.append(e1)
    out.sort()
    if not out:
        raise NoAdmissibleRoot(
            f"no admissible e1 for v1={v1}, v2={v2}, s1={s1} ({variant})")
    return out


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------

PARAM_FIELDS = ("family", "k", "v1", "v2", "v4", "v5", "s", "e", "variant")


def params_to_dict(params):
    if isinstance(params, MkPlusParams):
        return {"family": params.family, "k": params.k, "v1": params.v1,
                "v4": params.v4, "v5": params.v5, "s": list(params.s), "e": list(params.e)}
    if isinstance(params, M3Params):
        return {"family": params.family, "variant": params.variant, "v1": params.v1,
                "v2": params.v2, "s": [params.s1], "e": [params.e1]}
    if isinstance(params, OracleParams):
        return {"family": params.family}
    raise TypeError(type(params).__name__)


def params_from_dict(d):
    unknown = set(d) - set(PARAM_FIELDS)
    if unknown:
        raise ConfigError(f"unknown parameter fields: {sorted(unknown)}")
    fam = d.get("family")
    if fam in OUT_OF_SCOPE:
        raise ConfigError(OUT_OF_SCOPE[fam])
    if fam in ("catenoid", "scherk"):
        return OracleParams(fam)
    if fam in ("mkplus", "m2plus"):
        k = int(d.get("k", 2))
        if fam == "m2plus" and k != 2:
            raise ConfigError("m2plus requires k = 2")
        return MkPlusParams(k, float(d["v1"]), float(d["v4"]), float(d["v5"]),
                            tuple(d.get("s", ())), tuple(d.get("e", ())))
    if fam in ("m3mm", "m3pp"):
        variant = d.get("variant", "minus_minus" if fam == "m3mm" else "plus_plus")
        if (fam == "m3mm") != (variant == "minus_minus"):
            raise ConfigError(f"variant {variant!r} does not match family {fam!r}")
        s, e = d["s"], d["e"]
        return M3Params(variant, float(d["v1"]), float(d["v2"]), float(s[0]), float(e[0]))
    raise ConfigError(f"unknown family {fam!r}")


def dumps_params(params):
    return json.dumps(params_to_dict(params), indent=2, sort_keys=True)


def loads_params(text):
    return params_from_dict(json.loads(text))
