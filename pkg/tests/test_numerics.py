import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gclab.errors import (ExtrapolationBeyondTrajectory, GridTooSmall, InsufficientData, PathError,
                          PoleDetected)
from gclab.numerics import (Grid2D, IntegratorConfig, PathSpec, convergence_order, d_z, d_zb, d_zzb,
                            detour_path, integrate_ode, read_grid_csv, read_trajectory_csv,
                            wirtinger_derivatives, write_grid_csv, write_trajectory_csv)


def test_path_kinds_lengths_and_points():
    seg = PathSpec.segment(0.5, 0.5 + 2j)
    assert seg.length == pytest.approx(2.0)
    assert seg.point(1.0) == pytest.approx(0.5 + 1j)
    poly = PathSpec.polyline([0, 1, 1 + 1j])
    assert poly.length == pytest.approx(2.0)
    np.testing.assert_allclose(poly.breaks(), [0, 1, 2])
    assert poly.point(1.5) == pytest.approx(1 + 0.5j)
    arc = PathSpec.arc(0, 1.0, 0.0, np.pi / 2)
    assert arc.length == pytest.approx(np.pi / 2)
    assert arc.point(arc.length) == pytest.approx(1j)
    assert abs(arc.tangent(0.0)) == pytest.approx(1.0)
    s = np.linspace(0, poly.length, 9)
    np.testing.assert_allclose(poly.param_of(poly.point(s)), s, atol=1e-12)


def test_detour_keeps_clear_of_forbidden_points():
    p = detour_path(2, 0.5, forbidden=(0, 1))
    assert p.kind == "polyline"
    assert p.distance_to(1) > 0.1
    assert p.start == 2 and p.end == 0.5
    with pytest.raises(PathError):
        PathSpec.segment(2, 0.5, forbidden=(1,)).check_clearance()


@pytest.mark.parametrize("path", [PathSpec.segment(0, 1 + 2j), PathSpec.polyline([0, 1, 1 + 1j, 2j]),
                                  PathSpec.arc(0, 1.0, 0.0, 2.0)])
def test_exponential_along_paths(path):
    tr = integrate_ode(lambda z, y: y, [1.0], path, IntegratorConfig(rtol=1e-12, atol=1e-14))
    s = np.linspace(0, path.length, 37)
    z = path.point(s)
    z0 = path.point(0.0)
    np.testing.assert_allclose(tr.eval(s)[:, 0], np.exp(z - z0), rtol=1e-10)
    # dense output between steps and off-path continuation
    w = z[5:-5] + 0.05j
    np.testing.assert_allclose(tr.eval_near(w)[:, 0], np.exp(w - z0), rtol=1e-9)
    np.testing.assert_allclose(tr.deriv(s)[:, 0], tr.eval(s)[:, 0], rtol=1e-12)


def test_pole_detection():
    # y' = y^2, y(0) = 1 has its movable pole at z = 1
    with pytest.raises(PoleDetected) as e:
        integrate_ode(lambda z, y: y**2, [1.0], PathSpec.segment(0, 2), IntegratorConfig(pole_threshold=1e6))
    assert e.value.param == pytest.approx(1.0, abs=1e-3)


def test_no_extrapolation():
    tr = integrate_ode(lambda z, y: -y, [1.0], PathSpec.segment(0, 1))
    with pytest.raises(ExtrapolationBeyondTrajectory):
        tr.eval([1.5])


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=0)
    with pytest.raises(ValueError):
        IntegratorConfig(pole_threshold=0.5)


def test_wirtinger_of_polynomial():
    g = Grid2D((0.1, 1.0), (-0.5, 0.5), 31, 27)
    Z = g.z
    Zb = np.conj(Z)
    # order 2 is exact on quadratics, order 4 on quartics
    cases = {2: (Z * Zb + Z**2 + 3 * Zb, Zb + 2 * Z, Z + 3, 1 + 0 * Z),
             4: (Z**2 * Zb**2 + Z**3, 2 * Z * Zb**2 + 3 * Z**2, 2 * Z**2 * Zb, 4 * Z * Zb)}
    for order, (f, fz, fzb, fzzb) in cases.items():
        w = 1 if order == 2 else 2
        inner = (slice(w, -w), slice(w, -w))
        np.testing.assert_allclose(d_z(f, g, order)[inner], fz[inner], atol=1e-10)
        np.testing.assert_allclose(d_zb(f, g, order)[inner], fzb[inner], atol=1e-10)
        np.testing.assert_allclose(d_zzb(f, g, order)[inner], fzzb[inner], atol=1e-10)
    g.fields["f"] = f
    wd = wirtinger_derivatives(g, "f", 4)
    assert set(wd.fields) == {"dz", "dzb", "dzdzb"}


def test_grid_guards():
    with pytest.raises(GridTooSmall):
        Grid2D((0, 1), (0, 1), 4, 9)
    g = Grid2D((0, 1), (0, 1), 5, 5)
    with pytest.raises(GridTooSmall):
        wirtinger_derivatives(g.like({"f": np.zeros((5, 5))}), "f", 4)
    r = g.refined()
    assert (r.nx, r.hx) == (9, pytest.approx(g.hx / 2))


def test_convergence_order():
    hs = [0.1, 0.05, 0.025]
    assert convergence_order([(h, 3 * h**2) for h in hs]) == pytest.approx(2.0)
    with pytest.raises(InsufficientData):
        convergence_order([(0.1, 1), (0.05, 0.25)])
    with pytest.raises(InsufficientData):
        convergence_order([(0.1, 1), (0.03, 0.2), (0.01, 0.1)])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.complex_numbers(allow_nan=False, allow_infinity=False, max_magnitude=1e300),
                min_size=2, max_size=8))
def test_trajectory_csv_round_trip_is_exact(tmp_path_factory, vals):
    p = tmp_path_factory.mktemp("csv") / "t.csv"
    states = np.array(vals, dtype=complex).reshape(-1, 1)
    params = np.linspace(0, 1, len(vals))
    write_trajectory_csv(p, params, states, {"drift": np.abs(states[:, 0])})
    s2, y2, extra = read_trajectory_csv(p)
    assert np.array_equal(y2, states) and np.array_equal(s2, params)
    assert np.array_equal(extra["drift"], np.abs(states[:, 0]))


def test_grid_csv_round_trip(tmp_path, rng):
    g = Grid2D((0.1, 0.7), (0.2, 0.9), 7, 6)
    g.fields["u"] = rng.normal(size=(7, 6)) + 1j * rng.normal(size=(7, 6))
    write_grid_csv(tmp_path / "g.csv", g)
    h = read_grid_csv(tmp_path / "g.csv")
    assert (h.nx, h.ny) == (7, 6)
    assert np.array_equal(h.fields["u"], g.fields["u"])
