import math

import numpy as np
import pytest
import sympy

from scherk.complex_contour import FactoredRational
from scherk.errors import (InvalidOrdering, NoRealRoots, OrderingViolated, NoAdmissibleRoot,
                           ConfigError)
from scherk.families import (MkPlusParams, M3Params, build_weierstrass, conjugate,
                             compatibility_defects, end_constraint_residuals, solve_v4_v5,
                             mk_params_k2, mk_params_general, solve_e1_cubic, e1_polynomial,
                             poly_residual, m3_gsquared, params_to_dict, params_from_dict,
                             dumps_params, loads_params)

M2 = dict(e1=2.0, v1=2.372182693580526)


def random_m3(rng, n, variant="minus_minus", min_gap=0.02):
    """Valid M_3 parameter sets with e1 from the end constraint; marked
    points separated by a relative gap (near-coincident points make
    g**2(e1) arbitrarily ill-conditioned)."""
    out = []
    while len(out) < n:
        v1, v2, s1 = rng.uniform(1.1, 20), rng.uniform(1.1, 5), rng.uniform(1.05, 3)
        try:
            es = solve_e1_cubic(v1, v2, s1, variant)
        except (NoAdmissibleRoot, InvalidOrdering):
            continue
        for e in es:
            p = M3Params(variant, v1, v2, s1, e)
            pts = sorted(p.marked_points.values())
            if min(b / a - 1 for a, b in zip(pts, pts[1:])) >= min_gap:
                out.append(p)
    return out[:n]


# -- construction -----------------------------------------------------------

def test_mk2_degrees_and_value_at_infinity():
    d = build_weierstrass(mk_params_k2(**M2))
    num, den = d.gSquared.degrees
    assert num == den == 5
    # monic factored form times an overall sign: |g^2(infinity)| = 1
    assert abs(abs(d.gSquared.value_at_infinity()) - 1) < 1e-15


def test_mk_gsquared_matches_expanded_formula():
    p = mk_params_k2(**M2)
    d = build_weierstrass(p)
    z = sympy.symbols("z")
    v1, v4, v5, s1 = (sympy.nsimplify(x) for x in (p.v1, p.v4, p.v5, p.s[0]))
    expr = -((z + v4) * (z + v5) * (z + v1) * (z - s1) ** 2) / (
        (z - v4) * (z - v5) * (z - v1) * (z + s1) ** 2)
    for w in (0.37 + 0.2j, -3.1 + 1j, 5.0):
        assert abs(d.gSquared(w) - complex(expr.subs(z, w))) < 1e-12


def test_m3_gsquared_one_at_zero():
    rng = np.random.default_rng(3)
    for p in random_m3(rng, 20):
        assert abs(build_weierstrass(p).gSquared(0.0) - 1) <= 1e-12


def test_catenoid_data():
    d = build_weierstrass("catenoid")
    assert d.gSquared.factors == ((0j, 2),) or [tuple(f) for f in d.gSquared.factors] == [(0, 2)]
    assert abs(d.eta(2.0) - 0.25) < 1e-15          # 1/(2z)
    assert d.punctures == (0j,)


def test_scherk_data():
    d = build_weierstrass("scherk")
    z = 0.3 + 0.1j
    assert abs(d.eta(z) - 2 * z / (1 - z ** 4)) < 1e-14
    assert abs(d.gSquared(z) - z * z) < 1e-15


def test_mk_ordering_violation():
    with pytest.raises(InvalidOrdering, match="v5 < e_k=1"):
        MkPlusParams(2, 3.0, 0.2, 1.2, (1.5,), (2.0,))


def test_m3_coincident_points_rejected():
    with pytest.raises(InvalidOrdering):
        M3Params("minus_minus", 3.0, 0.5, 2.0, 1.7)     # 1/v2 = s1


def test_compatibility_invariant():
    rng = np.random.default_rng(4)
    for p in random_m3(rng, 10) + [mk_params_k2(**M2), mk_params_general(3, 3.0, 3.26)]:
        assert compatibility_defects(build_weierstrass(p)) == []


def test_mk_sign_symmetry():
    d = build_weierstrass(mk_params_k2(**M2))
    rng = np.random.default_rng(5)
    for z in rng.normal(size=20) + 1j * rng.normal(size=20):
        assert abs(d.gSquared(-z) * d.gSquared(z) - 1) < 1e-12


@pytest.mark.parametrize("variant", ["minus_minus", "plus_plus"])
def test_m3_inversion_and_sign_symmetry(variant):
    rng = np.random.default_rng(6)
    d = build_weierstrass(random_m3(rng, 1, variant)[0])
    for z in rng.normal(size=20) + 1j * rng.normal(size=20):
        assert abs(d.gSquared(1 / z) * d.gSquared(z) - 1) < 1e-12
        assert abs(d.gSquared(-z) * d.gSquared(z) - 1) < 1e-12


# -- conjugation ----------------------------------------------------------------

def test_conjugate_twice():
    d = build_weierstrass(mk_params_k2(**M2))
    dd = conjugate(conjugate(d))
    assert dd.eta.scale == -d.eta.scale
    assert dd.gSquared == d.gSquared


def test_conjugate_keeps_factors():
    d = build_weierstrass("scherk")
    c = conjugate(d)
    assert c.eta.factors == d.eta.factors
    assert c.eta.scale == 1j * d.eta.scale


# -- end constraints ----------------------------------------------------------

def test_m3_end_residual_at_one_vanishes():
    rng = np.random.default_rng(7)
    for p in random_m3(rng, 20):
        assert end_constraint_residuals(build_weierstrass(p))[0] <= 1e-12


def test_m3_end_residual_at_solved_root():
    rng = np.random.default_rng(8)
    for p in random_m3(rng, 20):
        assert max(end_constraint_residuals(build_weierstrass(p))) <= 1e-10


def test_m3_perturbed_root_has_positive_residual():
    p = random_m3(np.random.default_rng(9), 1)[0]
    q = p.replace(e1=p.e1 + 0.1)
    assert end_constraint_residuals(build_weierstrass(q))[1] > 1e-6


def test_solve_v4_v5_closes_constraints():
    v4, v5 = solve_v4_v5(math.sqrt(2), 2.0, 2.372182693580526)
    assert (v4, v5) == pytest.approx((0.2156879554468471, 0.7983476458381027), abs=1e-13)
    p = MkPlusParams(2, 2.372182693580526, v4, v5, (math.sqrt(2),), (2.0,))
    d = build_weierstrass(p)
    assert abs(d.gSquared(1.0) - 1) <= 1e-10
    assert abs(d.gSquared(2.0) - 1) <= 1e-10


def test_solve_v4_v5_precondition():
    with pytest.raises(InvalidOrdering):
        solve_v4_v5(2.0, 1.5, 3.0)


def test_solve_v4_v5_no_real_roots():
    # located by a coarse scan of the (s1, e1, v1) box
    with pytest.raises(NoRealRoots):
        solve_v4_v5(1.05, 1.1, 1.8636363636363638)


def test_solve_v4_v5_ordering_violated():
    with pytest.raises(OrderingViolated):
        solve_v4_v5(1.05, 1.4545454545454546, 1.5045454545454546)


def test_general_k_constraints():
    p = mk_params_general(3, 3.0, 3.26)
    assert max(end_constraint_residuals(build_weierstrass(p))) <= 1e-10


def test_e1_cubic_roots_and_residuals():
    rng = np.random.default_rng(10)
    count = 0
    while count < 30:
        v1, v2, s1 = rng.uniform(1.1, 20), rng.uniform(1.1, 5), rng.uniform(1.05, 3)
        try:
            es = solve_e1_cubic(v1, v2, s1)
        except NoAdmissibleRoot:
            continue
        coeffs, _ = e1_polynomial(v1, v2, s1)
        for e in es:
            assert abs(poly_residual(coeffs, e * e)) <= 1e-12 * max(abs(coeffs))
            count += 1


def test_e1_cubic_matches_symbolic_constraint():
    # independent oracle: g^2(e) = 1 cleared of denominators, in sympy
    v1, v2, s1 = 12.913148424, 2.258864306, 1.5
    z = sympy.symbols("z")
    g2 = m3_gsquared(v1, v2, s1)
    num, den = sympy.Integer(1), sympy.Integer(1)
    for r, m in g2.factors:
        r = sympy.nsimplify(r.real, rational=True)
        if m > 0:
            num *= (z - r) ** m
        else:
            den *= (z - r) ** (-m)
    roots = [complex(x) for x in sympy.Poly(sympy.expand(num - den), z).nroots(n=30)]
    pos = sorted(x.real for x in roots if abs(x.imag) < 1e-12 and x.real > 0 and abs(x.real - 1) > 1e-9)
    got = solve_e1_cubic(v1, v2, s1)
    for e in got:
        assert min(abs(e - x) for x in pos) < 1e-9
    assert got[-1] == pytest.approx(2.0548909855348554, rel=1e-12)


def test_e1_cubic_degree_drop():
    # delta + gamma + 2 nu = 0: the cubic degenerates to (x - 1) b x
    v1, s1 = 3.0, 1.5
    c = -((1 / v1 - v1) + 2 * (1 / s1 - s1))
    v2 = 0.5 * (c + math.sqrt(c * c + 4))
    coeffs, (a, _) = e1_polynomial(v1, v2, s1)
    assert abs(a) < 1e-14
    with pytest.raises(NoAdmissibleRoot):
        solve_e1_cubic(v1, v2, s1)


def test_e1_cubic_positive_root_when_signs_opposite():
    # constant term -(a) and leading a have opposite signs, so the cubic has
    # a positive root; an admissible one is returned
    v1, v2, s1 = 12.913148424, 2.258864306, 1.5
    coeffs, _ = e1_polynomial(v1, v2, s1)
    assert coeffs[0] * coeffs[-1] < 0
    assert solve_e1_cubic(v1, v2, s1)


# -- serialization ------------------------------------------------------------------

def test_params_round_trip():
    rng = np.random.default_rng(11)
    for p in [mk_params_k2(**M2)] + random_m3(rng, 2) + random_m3(rng, 2, "plus_plus"):
        assert params_from_dict(params_to_dict(p)) == p
        assert loads_params(dumps_params(p)) == p


def test_params_unknown_field_rejected():
    with pytest.raises(ConfigError, match="unknown"):
        params_from_dict({"family": "m2plus", "v1": 2.0, "colour": 1})


def test_out_of_scope_family():
    with pytest.raises(ConfigError, match=r"family has no Weierstrass data \(out of scope\)"):
        params_from_dict({"family": "m1pm"})


def test_factored_rational_type_used():
    d = build_weierstrass(mk_params_k2(**M2))
    assert isinstance(d.gSquared, FactoredRational) and isinstance(d.eta, FactoredRational)


def test_general_k_large_e1():
    p = mk_params_general(3, 10.0, 12.5)
    assert p.k == 3 and len(p.s) == 2 and len(p.e) == 2
    assert max(end_constraint_residuals(build_weierstrass(p))) <= 1e-10


def test_e1_cubic_fixed_points_equal_to_small_integers():
    # v2 = 3 and s1 = 2: a placeholder e1 of 2 or 3 would collide
    es = solve_e1_cubic(6.0, 3.0, 2.0)
    assert es
    for e in es:
        assert max(end_constraint_residuals(build_weierstrass(M3Params("minus_minus", 6.0, 3.0, 2.0, e)))) <= 1e-10
