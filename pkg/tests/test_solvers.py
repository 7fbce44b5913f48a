import math

import numpy as np
import pytest

from scherk.errors import SameSign, ZeroOnBoundary, WindingLost, NoAdmissibleRoot, ConfigError
from scherk.families import build_weierstrass, end_constraint_residuals
from scherk.periods import handle_periods
from scherk.solvers import (Bracket, bracket_root, Rect2D, winding_number, localize_zero_2d,
                            FamilySpec, solve_family, sweep, sign_changes, sweep_csv,
                            m3_period_map, sign_grid, mk_window)
from conftest import M3_BOX


# -- 1D -----------------------------------------------------------------------

def test_bracket_sqrt2():
    f = lambda x: x * x - 2
    assert bracket_root(f, Bracket.from_function(f, 1, 2), 1e-12) == pytest.approx(math.sqrt(2), abs=1e-9)


def test_bracket_same_sign():
    with pytest.raises(SameSign):
        Bracket.from_function(lambda x: x * x + 1, 0, 1)


def test_bracket_root_at_endpoint():
    f = lambda x: x
    assert bracket_root(f, Bracket.from_function(f, 0, 2)) == 0


def test_bracket_lo_must_be_below_hi():
    with pytest.raises(ValueError):
        Bracket(2, 1, -1, 1)


def test_secant_independent():
    f = lambda x: math.cos(x) - x
    br = Bracket.from_function(f, 0, 1)
    a = bracket_root(f, br, 1e-13)
    b = bracket_root(f, br, 1e-13, secant=False)
    assert abs(a - b) <= 1e-12


# -- winding numbers ------------------------------------------------------------

SHIFT = lambda x, y: (x - 0.3, y - 0.7)
SQUARE = lambda x, y: (x * x - y * y, 2 * x * y)


def test_winding_contains():
    assert winding_number(SHIFT, Rect2D(0, 1, 0, 1)) == 1


def test_winding_excludes():
    assert winding_number(SHIFT, Rect2D(0.5, 1, 0, 1)) == 0


def test_winding_squaring():
    assert winding_number(SQUARE, Rect2D(-1, 1, -1, 1)) == 2


def test_winding_orientation_and_reparameterization():
    square = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    dense = [(x, -1) for x in np.linspace(-1, 1, 7)[:-1]] + [(1, y) for y in np.linspace(-1, 1, 5)[:-1]] \
        + [(x, 1) for x in np.linspace(1, -1, 3)[:-1]] + [(-1, y) for y in np.linspace(1, -1, 9)[:-1]]
    rotated = square[2:] + square[:2]
    assert winding_number(SQUARE, square) == winding_number(SQUARE, dense) == \
        winding_number(SQUARE, rotated) == 2
    assert winding_number(SQUARE, square[::-1]) == -2


def test_winding_zero_on_boundary():
    with pytest.raises(ZeroOnBoundary):
        winding_number(SHIFT, Rect2D(0.3, 1, 0, 1))


def test_children_windings_sum_to_parent():
    F = lambda x, y: ((x - 0.2) * (x + 0.6) - (y - 0.1) * (y + 0.3),
                      (x - 0.2) * (y + 0.3) + (y - 0.1) * (x + 0.6))    # (z - a)(z - b)
    rect = Rect2D(-1, 1, -1, 1)
    kids = rect.split()          # cut lines x = 0, y = 0 miss both zeros
    assert sum(winding_number(F, k) for k in kids) == winding_number(F, rect) == 2


# -- localization ---------------------------------------------------------------

def test_localize_planted_zero():
    x, y = localize_zero_2d(SHIFT, Rect2D(0, 1, 0, 1), 1e-10)
    assert abs(x - 0.3) <= 1e-9 and abs(y - 0.7) <= 1e-9


def test_localize_planted_analytic_zero():
    a = complex(0.123, -0.456)

    def F(x, y):
        w = (complex(x, y) - a) * complex(1.5, 0.5)
        return w.real, w.imag

    x, y = localize_zero_2d(F, Rect2D(-1, 1, -1, 1), 1e-10)
    assert abs(complex(x, y) - a) <= 1e-9


def test_localize_rejects_zero_winding():
    with pytest.raises(WindingLost):
        localize_zero_2d(SHIFT, Rect2D(0.5, 1, 0, 1))


# -- family pipelines ---------------------------------------------------------------

def test_catenoid_trivial():
    sol = solve_family(FamilySpec("catenoid"))
    assert sol.report.passed and sol.periods == []


def test_m2_solution(m2_solved):
    p = m2_solved.params
    assert p.v1 == pytest.approx(2.372182693580526, abs=1e-9)
    assert (p.v4, p.v5) == pytest.approx((0.2156879554468471, 0.7983476458381027), abs=1e-9)
    assert m2_solved.report.passed
    assert m2_solved.report.max_residual <= 1e-8 * m2_solved.report.scale
    assert max(end_constraint_residuals(build_weierstrass(p))) <= 1e-10


def test_m3_solution_enclosed(m3_solved):
    p = m3_solved.params
    scale = m3_solved.report.scale
    assert np.max(np.abs(handle_periods(p))) <= 1e-6 * scale
    assert m3_solved.report.passed
    cert = m3_solved.certificate
    assert cert["kind"] == "quadrisection" and cert["winding"] != 0
    assert p.v1 == pytest.approx(12.913148424, abs=1e-6)
    assert p.v2 == pytest.approx(2.258864306, abs=1e-6)
    assert p.e1 == pytest.approx(2.0548909855348554, abs=1e-6)


def test_m3_sign_grid_confirms_enclosure():
    spec = FamilySpec("m3mm", fixed={"s1": 1.5}, box=M3_BOX)
    rect = Rect2D(*M3_BOX["v1"], *M3_BOX["v2"])
    _, all_patterns = sign_grid(m3_period_map(spec), rect, 20)
    assert all_patterns


def test_m3_inadmissible_s1():
    with pytest.raises(NoAdmissibleRoot) as exc:
        solve_family(FamilySpec("m3mm", fixed={"s1": 5.0}, box=M3_BOX))
    assert exc.value.stage == "cubic"


def test_m3_needs_box():
    with pytest.raises(ConfigError):
        solve_family(FamilySpec("m3mm", fixed={"s1": 1.5}))


def test_general_k_needs_box():
    with pytest.raises(ConfigError):
        mk_window(FamilySpec("mkplus", k=3, fixed={"e1": 3.0}))


def test_solve_deterministic(m2_solved):
    again = solve_family(FamilySpec("m2plus", fixed={"e1": 2.0}))
    assert again.to_json() == m2_solved.to_json()


def test_sweep_single_sign_change(m2_solved):
    spec = FamilySpec("m2plus", fixed={"e1": 2.0})
    rows = sweep(spec, 50)
    ch = sign_changes(rows)
    assert len(ch) == 1
    i = ch[0]
    br = Bracket(rows[i][0], rows[i + 1][0], rows[i][1], rows[i + 1][1])
    from scherk.solvers import mk_period
    root = bracket_root(lambda x: mk_period(spec, x), br, 1e-13)
    assert abs(root - m2_solved.params.v1) <= 1e-6


def test_sweep_threads_agree(monkeypatch):
    spec = FamilySpec("m2plus", fixed={"e1": 2.0})
    one = sweep(spec, 8, workers=1)
    monkeypatch.setenv("SCHERK_THREADS", "3")
    assert sweep(spec, 8) == one


def test_sweep_csv_columns():
    text = sweep_csv([(1.0, -0.5, 1e-16), (2.0, 0.5, 0.0)])
    assert text.splitlines()[0] == "param,period,residuals"
    assert len(text.splitlines()) == 3
