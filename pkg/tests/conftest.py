import pytest

from scherk.families import build_weierstrass
from scherk.solvers import FamilySpec, solve_family
from scherk import mesh as M

# Reference M_3^{--} window: s1 fixed, (v1, v2) box containing one zero of
# the two handle periods.
M3_BOX = {"v1": [11.0, 15.0], "v2": [2.1, 2.45]}


@pytest.fixture(scope="session")
def m2_solved():
    return solve_family(FamilySpec("m2plus", fixed={"e1": 2.0}))


@pytest.fixture(scope="session")
def m3_solved():
    return solve_family(FamilySpec("m3mm", fixed={"s1": 1.5}, box=M3_BOX))


@pytest.fixture(scope="session")
def catenoid():
    return build_weierstrass("catenoid")


@pytest.fixture(scope="session")
def scherk_data():
    return build_weierstrass("scherk")


@pytest.fixture(scope="session")
def catenoid_mesh(catenoid):
    return M.build_mesh(catenoid, 16)


@pytest.fixture(scope="session")
def m2_eighth(m2_solved):
    data = build_weierstrass(m2_solved.params)
    return data, M.build_mesh(data, 16, "eighth")
