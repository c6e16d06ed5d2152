from fractions import Fraction

import numpy as np
import pytest

from gclab.errors import ResampleOutOfDomain, TableMismatch
from gclab.lie import (Poly, VectorField, X_gen, Y_gen, a_gen, commutator, finite_generators,
                       infinitesimal_invariance, verify_tables)


def test_poly_algebra():
    z, Q = Poly.var("z"), Poly.var("Q")
    p = (z + 1) ** 3
    assert p.diff("z") == 3 * (z + 1) ** 2
    assert (p - p).is_zero()
    assert (z * Q).depends_on() == {"z", "Q"}
    assert p.evaluate({"z": 2.0}) == 27
    assert Poly.const(Fraction(1, 3)) * 3 == Poly.const(1)


def test_bracket_oracle():
    # sympy: [X(z^3), X(z^2)] has z-coefficient -z^4, U-coefficient 4 U z^3, Q-coefficient 8 Q z^3
    z, U, Q = Poly.var("z"), Poly.var("U"), Poly.var("Q")
    br = commutator(X_gen(z ** 3), X_gen(z ** 2))
    assert br["z"] == -1 * z ** 4
    assert br["U"] == 4 * U * z ** 3
    assert br["Q"] == 8 * Q * z ** 3
    assert br == X_gen(-1 * z ** 4)


def test_generators_reject_wrong_variables():
    with pytest.raises(ValueError):
        X_gen(Poly.var("zb"))
    with pytest.raises(ValueError):
        Y_gen(Poly.var("z"))


def test_tables():
    rep = verify_tables(jmax=4)
    assert rep.ok and rep.checked == 106
    g = finite_generators()
    assert commutator(g["e1"], g["e2"]) == g["e2"]
    assert commutator(g["e0"], g["f2"]).is_zero()
    assert commutator(g["a"], g["e2"]).is_zero()


def test_table_mismatch_is_raised(monkeypatch):
    import gclab.lie as lie
    monkeypatch.setitem(lie._FINITE_TABLE, ("e0", "e1"), {"e0": 2})
    with pytest.raises(TableMismatch):
        verify_tables(jmax=1)
    assert not verify_tables(jmax=1, raise_on_mismatch=False).ok


@pytest.fixture(scope="module")
def generic(lifts):
    make, grid, _ = lifts("generic")
    return make(grid)


@pytest.mark.parametrize("name", ["e1", "e2", "f1", "f2", "a"])
def test_symmetries_give_second_order(generic, name):
    rep = infinitesimal_invariance(generic, finite_generators()[name])
    assert not rep.exact and rep.slope > 1.8


@pytest.mark.parametrize("name", ["e0", "f0"])
def test_translations_are_exact(generic, name):
    rep = infinitesimal_invariance(generic, finite_generators()[name])
    assert rep.exact and rep.slope == float("inf")


def test_non_symmetry_is_first_order(generic):
    bad = VectorField({"U": Poly.var("U")})
    rep = infinitesimal_invariance(generic, bad)
    assert abs(rep.slope - 1) < 0.2


def test_scaling_breaks_with_c(lifts):
    make, grid, _ = lifts("bonnet")
    rep = infinitesimal_invariance(make(grid), a_gen())
    assert rep.slope < 1.5


def test_flow_off_the_trajectory(lifts):
    make, grid, _ = lifts("generic")
    f = make(grid)
    with pytest.raises(ResampleOutOfDomain):
        infinitesimal_invariance(f, finite_generators()["e1"], eps=(2.0, 1.0, 0.5))
