import math

import numpy as np
import pytest

from scherk.errors import BandEmpty, NoConvergence
from scherk.plateau import (JSProblem, check_admissible, solve_graph, total_abs_curvature,
                            curvature_refinement, normal_profile, band_deviation,
                            level_curve_distance, neck_distance, grid_triangles, strip_signs,
                            ladder_report)


@pytest.fixture(scope="module")
def ell2_n6():
    return solve_graph(JSProblem(ell=2, n=6, grid=(48, 48)))


def vertical_strip(width=0.7, height=2.0, ny=5, nz=8):
    """Flat strip in the plane x1 = 0: unit normal e1 everywhere."""
    y = np.linspace(0, width, ny + 1)
    z = np.linspace(0, height, nz + 1)
    Y, Z = np.meshgrid(y, z, indexing="ij")
    V = np.column_stack([np.zeros(Y.size), Y.ravel(), Z.ravel()])
    T = grid_triangles(ny, nz)
    m = nz + 1
    walls = ([(k, k + 1) for k in range(nz)], [(ny * m + k, ny * m + k + 1) for k in range(nz)])
    return V, T, walls


# -- admissibility -------------------------------------------------------------

def test_standard_configuration_admissible():
    rep = check_admissible(JSProblem(ell=2))
    assert rep.admissible and rep.polygons == 0 and rep.violations == []


def test_adjacent_a_segments_rejected():
    rep = check_admissible(JSProblem(ell=2, signs=(1, 1)))
    assert not rep.admissible
    assert any("share the endpoint" in v for v in rep.violations)


def test_boundary_case_strict_inequality():
    # A on two opposite sides of the unit square: 2 alpha = gamma
    A = [((0, 0), (1, 0)), ((1, 1), (0, 1))]
    C = [((1, 0), (1, 1)), ((0, 1), (0, 0))]
    rep = check_admissible(A=A, C=C, domain=[(0, 0), (1, 0), (1, 1), (0, 1)])
    assert not rep.admissible
    assert any("2*alpha" in v for v in rep.violations)


def test_scherk_square_admissible():
    A = [((0, 0), (1, 0)), ((1, 1), (0, 1))]
    B = [((1, 0), (1, 1)), ((0, 1), (0, 0))]
    assert check_admissible(A=A, B=B, domain=[(0, 0), (1, 0), (1, 1), (0, 1)]).admissible


def test_problem_invariants():
    with pytest.raises(ValueError):
        JSProblem(ell=3, grid=(16, 16))        # jumps off the grid
    with pytest.raises(ValueError):
        JSProblem(n=0)


# -- solver -----------------------------------------------------------------------

def test_zero_data():
    sol = solve_graph(JSProblem(ell=1, n=1, boundary=lambda x, y: 0 * x, grid=(12, 12)))
    assert np.max(np.abs(sol.u)) == 0


def test_affine_data_reproduced():
    f = lambda x, y: 0.7 * x - 1.3 * y + 0.2
    p = JSProblem(delta=1.5, ell=1, n=1, boundary=f, grid=(20, 16))
    sol = solve_graph(p)
    x, y = p.coords()
    X, Y = np.meshgrid(x, y, indexing="ij")
    assert np.max(np.abs(sol.u - f(X, Y))) <= 1e-10


def test_maximum_principle(ell2_n6):
    assert np.max(np.abs(ell2_n6.u)) <= 6 + 1e-12
    assert ell2_n6.residual <= 1e-10 * 6


def test_boundary_matches_data(ell2_n6):
    B = ell2_n6.problem.boundary_values()
    m = ~np.isnan(B)
    assert np.array_equal(ell2_n6.u[m], B[m])


def test_no_convergence_reports_history():
    with pytest.raises(NoConvergence) as exc:
        solve_graph(JSProblem(ell=2, n=6, grid=(16, 16)), max_iter=1)
    assert len(exc.value.history) >= 1


def test_symmetric_data_bit_symmetric():
    sol = solve_graph(JSProblem(ell=3, n=4, grid=(24, 24)))
    assert np.array_equal(sol.u, sol.u[:, ::-1])


def test_odd_data_bit_antisymmetric(ell2_n6):
    assert np.array_equal(ell2_n6.u, -ell2_n6.u[:, ::-1])


def test_comparison_principle():
    rng = np.random.default_rng(12)
    nx = ny = 12
    worst = math.inf
    for _ in range(20):
        h2 = [rng.uniform(-1, 1, nx + 1), rng.uniform(-1, 1, ny + 1), rng.uniform(-1, 1, nx + 1)]
        h1 = [h + rng.uniform(0, 1, h.shape) for h in h2]
        # ends of the sides are shared corners: keep them consistent
        for h in (h1, h2):
            h[0][0] = h[2][0] = 0.0
        p1 = JSProblem(ell=2, n=3, heights=tuple(h1), grid=(nx, ny))
        p2 = JSProblem(ell=2, n=3, heights=tuple(h2), grid=(nx, ny))
        d = solve_graph(p1).u - solve_graph(p2).u
        worst = min(worst, float(np.min(d[1:-1, 1:-1])))
    assert worst >= 0


def test_monotone_in_truncation():
    p = JSProblem(ell=1, signs=(1,), grid=(16, 16))
    prev = None
    for n in (2, 3, 4, 5):
        u = solve_graph(p.with_n(n)).u
        if prev is not None:
            assert np.all(u[1, 1:-1] >= prev[1, 1:-1])
        prev = u


def test_csv_export(ell2_n6):
    lines = ell2_n6.to_csv().splitlines()
    assert lines[0] == "x1,x2,u"
    assert len(lines) == 1 + 49 * 49


# -- curvature -----------------------------------------------------------------------

def test_flat_solution_zero_curvature():
    sol = solve_graph(JSProblem(ell=1, n=1, boundary=lambda x, y: 0.3 * x + 0.1 * y, grid=(10, 10)))
    assert total_abs_curvature(sol) <= 1e-12


def test_curvature_bound(ell2_n6):
    assert total_abs_curvature(ell2_n6) <= 3 * math.pi


def test_curvature_grid_doubling():
    coarse, fine, rel = curvature_refinement(JSProblem(ell=2, n=6, grid=(32, 32)))
    assert rel < 0.05
    assert fine <= 3 * math.pi


# -- normals -------------------------------------------------------------------------

def test_flat_vertical_strip_deviation_zero():
    V, T, _ = vertical_strip()
    dev = band_deviation(V, T, np.array([[0.0, 1.0], [1.0, 2.0]]))
    assert np.all(dev == 0)


def test_profile_nonincreasing_top_half(ell2_n6):
    prof = normal_profile(ell2_n6)
    assert prof.top_half_nonincreasing()


def test_profile_improves_with_truncation():
    devs = []
    for n in (2, 4, 6, 8):
        prof = normal_profile(solve_graph(JSProblem(ell=2, n=n, grid=(48, 48))))
        devs.append(np.nanmax(prof.deviation[4:]))
    assert all(b <= a for a, b in zip(devs, devs[1:]))


def test_strip_signs_alternate(ell2_n6):
    assert strip_signs(ell2_n6) == [1, -1]
    assert normal_profile(ell2_n6).strip_signs == [1, -1]


def test_strip_signs_three_segments():
    assert strip_signs(solve_graph(JSProblem(ell=3, n=4, grid=(24, 24)))) == [1, -1, 1]


# -- neck distance -----------------------------------------------------------------------

def test_flat_strip_level_curve_width():
    V, T, (src, tgt) = vertical_strip(width=0.7)
    assert level_curve_distance(V, T, 0.9, src, tgt) == pytest.approx(0.7, abs=1e-14)


@pytest.mark.parametrize("ell", [1, 2])
def test_neck_distance_fine_grid(ell):
    sol = solve_graph(JSProblem(ell=ell, n=8, grid=(128, 128)))
    assert abs(neck_distance(sol) - 1 / ell) <= 0.05 / ell


def test_neck_band_empty(ell2_n6):
    with pytest.raises(BandEmpty):
        neck_distance(ell2_n6, band=(7.0, 9.0))


def test_ladder_report_trend():
    rep = ladder_report(JSProblem(ell=2, grid=(32, 32)), ns=(2, 4))
    rows = rep["ladder"]
    assert [r["n"] for r in rows] == [2, 4]
    assert all(r["total_abs_curvature"] <= r["curvature_bound"] for r in rows)
    assert all(r["strip_signs"] == [1, -1] for r in rows)
