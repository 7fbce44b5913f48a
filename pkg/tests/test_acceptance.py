"""Acceptance criteria 1-8, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed past the
capture) or directly with ``python3 tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

import scherk
from scherk import mesh as M
from scherk.errors import ConfigError, NoAdmissibleRoot, InvalidOrdering
from scherk.families import (M3Params, MkPlusParams, OUT_OF_SCOPE, build_weierstrass, conjugate,
                             e1_polynomial, end_constraint_residuals, poly_residual,
                             solve_e1_cubic, solve_v4_v5)
from scherk.periods import handle_periods
from scherk.plateau import (JSProblem, solve_graph, total_abs_curvature, neck_distance,
                            normal_profile)
from scherk.solvers import (Bracket, FamilySpec, Rect2D, bracket_root, localize_zero_2d,
                            m3_period_map, mk_period, sign_changes, sign_grid, solve_family,
                            sweep, winding_number)

M3_BOX = {"v1": [11.0, 15.0], "v2": [2.1, 2.45]}


def _random_m3(rng, n, variant, min_gap=0.02):
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


# -- criteria ------------------------------------------------------------------------

def criterion_1():
    rng = np.random.default_rng(1)
    worst = 0.0
    count = 0
    for variant in ("minus_minus", "plus_plus"):
        for p in _random_m3(rng, 100, variant):
            g2 = build_weierstrass(p).gSquared
            worst = max(worst, abs(g2(1.0) - 1), abs(g2(0.0) - 1))
            count += 1
    return worst <= 1e-12, f"{count} sets, max |g2(1)-1|, |g2(0)-1| = {worst:.1e}", 1.0


def criterion_2():
    s, e1, v1 = math.sqrt(2), 2.0, 2.372182693580526
    v4, v5 = solve_v4_v5(s, e1, v1)
    g2 = build_weierstrass(MkPlusParams(2, v1, v4, v5, (s,), (e1,))).gSquared
    k2 = max(abs(g2(1.0) - 1), abs(g2(e1) - 1))
    rng = np.random.default_rng(2)
    cubic = 0.0
    ends = 0.0
    n = 0
    while n < 50:
        v1_, v2, s1 = rng.uniform(1.1, 20), rng.uniform(1.1, 5), rng.uniform(1.05, 3)
        try:
            es = solve_e1_cubic(v1_, v2, s1)
        except (NoAdmissibleRoot, InvalidOrdering):
            continue
        coeffs, _ = e1_polynomial(v1_, v2, s1)
        for e in es:
            cubic = max(cubic, abs(poly_residual(coeffs, e * e)) / max(abs(coeffs)))
            p = M3Params("minus_minus", v1_, v2, s1, e)
            pts = sorted(p.marked_points.values())
            if min(b / a - 1 for a, b in zip(pts, pts[1:])) >= 0.02:
                ends = max(ends, max(end_constraint_residuals(build_weierstrass(p))))
                n += 1
    ok = k2 <= 1e-10 and cubic <= 1e-12 and ends <= 1e-10
    return ok, f"k=2 ends {k2:.1e}; cubic {cubic:.1e}; M3 ends {ends:.1e} ({n} sets)", 1.0


def criterion_3():
    parts = []
    ok = True
    for spec in (FamilySpec("m2plus", fixed={"e1": 2.0}),
                 FamilySpec("m3mm", fixed={"s1": 1.5}, box=M3_BOX)):
        t0 = time.perf_counter()
        rep = solve_family(spec).report
        dt = time.perf_counter() - t0
        ok &= rep.passed and rep.max_residual <= 1e-8 * rep.scale and dt < 300.0
        parts.append(f"{spec.family} {rep.max_residual / rep.scale:.1e} in {dt:.1f}s")
    return ok, "relative period residuals: " + ", ".join(parts), 600.0


def criterion_4():
    spec = FamilySpec("m2plus", fixed={"e1": 2.0})
    rows = sweep(spec, 50)
    ch = sign_changes(rows)
    if len(ch) != 1:
        return False, f"{len(ch)} sign changes", 300.0
    i = ch[0]
    br = Bracket(rows[i][0], rows[i + 1][0], rows[i][1], rows[i + 1][1])
    root = bracket_root(lambda x: mk_period(spec, x), br, 1e-13)
    gap = abs(root - solve_family(spec).params.v1)
    return gap <= 1e-6, f"1 sign change; |root - solved v1| = {gap:.1e}", 300.0


def criterion_5():
    shift = lambda x, y: (x - 0.3, y - 0.7)
    square = lambda x, y: (x * x - y * y, 2 * x * y)
    w = (winding_number(shift, Rect2D(0, 1, 0, 1)), winding_number(shift, Rect2D(0.5, 1, 0, 1)),
         winding_number(square, Rect2D(-1, 1, -1, 1)))
    planted = 0.0
    for a in (0.3 + 0.7j, 0.123 - 0.456j):
        def F(x, y, a=a):
            v = (complex(x, y) - a) * (1.5 + 0.5j)
            return v.real, v.imag
        x, y = localize_zero_2d(F, Rect2D(-1, 1, -1, 1), 1e-10)
        planted = max(planted, abs(complex(x, y) - a))
    spec = FamilySpec("m3mm", fixed={"s1": 1.5}, box=M3_BOX)
    sol = solve_family(spec)
    hp = float(np.max(np.abs(handle_periods(sol.params))))
    scale = sol.report.scale
    _, enclosed = sign_grid(m3_period_map(spec), Rect2D(*M3_BOX["v1"], *M3_BOX["v2"]), 20)
    ok = w == (1, 0, 2) and planted <= 1e-9 and hp <= 1e-6 * scale and bool(enclosed)
    return ok, (f"windings {w}; planted zeros {planted:.1e}; M3 handle periods "
                f"{hp / scale:.1e}*scale; sign grid {'encloses' if enclosed else 'misses'}"), 600.0


def criterion_6():
    cat = build_weierstrass("catenoid")
    cm, pm = M.build_mesh(cat, 16)
    c_res = M.oracle_residual(cm, "catenoid")
    sm, _ = M.build_mesh(build_weierstrass("scherk"), 16)
    s_res = M.oracle_residual(sm, "scherk")
    iso = 0.0
    for data in (cat, build_weierstrass(solve_family(FamilySpec("m2plus", fixed={"e1": 2.0})).params)):
        m, p = M.build_mesh(data, 12)
        a = M.metric_edge_lengths(data, p, tangent=True)
        b = M.metric_edge_lengths(conjugate(data), p, tangent=True)
        iso = max(iso, float(np.max(np.abs(a - b) / a)))
    base = cm.vertices[pm.basepoint]
    dd = M.integrate_surface(conjugate(conjugate(cat)), pm, basepoint=pm.basepoint, base_position=base)
    neg = float(np.max(np.abs((dd.vertices - base) + (cm.vertices - base))))
    ok = c_res <= 1e-6 and s_res <= 1e-5 and iso <= 1e-6 and neg <= 1e-10
    return ok, (f"catenoid {c_res:.1e}; Scherk {s_res:.1e}; isometry {iso:.1e}; "
                f"double conjugation {neg:.1e}"), 600.0


def criterion_7():
    rng = np.random.default_rng(12)
    worst = math.inf
    for _ in range(20):
        h2 = [rng.uniform(-1, 1, 13), rng.uniform(-1, 1, 13), rng.uniform(-1, 1, 13)]
        h1 = [h + rng.uniform(0, 1, h.shape) for h in h2]
        for h in (h1, h2):
            h[0][0] = h[2][0] = 0.0
        d = solve_graph(JSProblem(ell=2, n=3, heights=tuple(h1), grid=(12, 12))).u \
            - solve_graph(JSProblem(ell=2, n=3, heights=tuple(h2), grid=(12, 12))).u
        worst = min(worst, float(np.min(d[1:-1, 1:-1])))
    curv = {}
    for ell in (1, 2, 3):
        curv[ell] = total_abs_curvature(solve_graph(JSProblem(ell=ell, n=6, grid=(48, 48))))
    curv_ok = all(c <= math.pi * (ell + 1) for ell, c in curv.items())
    necks = {}
    for ell in (1, 2):
        ladder = [neck_distance(solve_graph(JSProblem(ell=ell, n=n, grid=(128, 128)))) for n in (2, 8)]
        necks[ell] = ladder[-1]
    neck_ok = all(abs(v - 1 / ell) <= 0.05 / ell for ell, v in necks.items())
    prof = normal_profile(solve_graph(JSProblem(ell=2, n=6, grid=(48, 48))))
    prof_ok = prof.top_half_nonincreasing() and prof.strip_signs == [1, -1]
    ok = worst >= 0 and curv_ok and neck_ok and prof_ok
    detail = (f"comparison min {worst:.1e}; curvature/bound "
              + ", ".join(f"l={e}: {c / (math.pi * (e + 1)):.2f}" for e, c in curv.items())
              + "; neck " + ", ".join(f"l={e}: {v:.4f}" for e, v in necks.items())
              + f"; profile {'ok' if prof_ok else 'bad'}")
    return ok, detail, 600.0


def criterion_8():
    text = scherk.SCOPE_STATEMENT
    rejected = []
    for fam in OUT_OF_SCOPE:
        try:
            FamilySpec(fam)
        except ConfigError:
            rejected.append(fam)
    ok = "not reproduced" in text and set(rejected) == set(OUT_OF_SCOPE)
    return ok, f"scope statement present; {len(rejected)} out-of-scope families rejected", 1.0


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
            criterion_5, criterion_6, criterion_7, criterion_8]


def evaluate(i):
    t0 = time.perf_counter()
    ok, detail, budget = CRITERIA[i - 1]()
    dt = time.perf_counter() - t0
    ok = bool(ok) and dt < budget
    line = f"criterion {i}: {'PASS' if ok else 'FAIL'}  ({dt:.1f}s, budget {budget:g}s)  {detail}"
    return ok, line


@pytest.mark.parametrize("i", range(1, 9))
def test_criterion(i, capsys):
    ok, line = evaluate(i)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(i) for i in range(1, 9)]
    for _, line in results:
        print(line)
    raise SystemExit(0 if all(ok for ok, _ in results) else 1)
