import numpy as np
import pytest

from gclab.errors import BoundaryPoint, ConditionViolated, DegenerateJacobian, FieldVanishes, GridTooSmall
from gclab.gauss_codazzi import (FieldGrid, bonnet_predicate, conformal_transform, curvatures, frame_from_values,
                                 frame_matrices, gc_residuals, involute_fields, involution, isothermic_predicate,
                                 refinement_study, verdict, zero_curvature_residual)
from gclab.numerics import Grid2D

GRID = Grid2D((0.3, 0.9), (0.2, 0.8), 21, 21)


def sphere_sampler(z, zb):
    # unit sphere by stereographic projection
    z, zb = np.asarray(z, dtype=complex), np.asarray(zb, dtype=complex)
    one = np.ones_like(z)
    return {"u": np.log(4.0) - 2 * np.log(1 + z * zb), "H": one, "Q": 0 * one, "R": 0 * one}


def cylinder_sampler(z, zb):
    one = np.ones(np.shape(z), dtype=complex)
    return {"u": 0 * one, "H": one, "Q": 0.5 * one, "R": 0.5 * one}


def wavy(grid):
    """Smooth fields that do not solve anything."""
    Z = grid.z
    Zb = np.conj(Z)
    return FieldGrid(grid, 0.3 * Z * Zb + 0.1 * Z**2, 1 + 0.2 * Zb, 0.4 + Z * Zb, 0.3 + 0.1 * Z**2, c=0.2)


@pytest.mark.parametrize("sampler", [sphere_sampler, cylinder_sampler])
def test_known_surfaces_solve_gc(sampler):
    reps, slopes = refinement_study(lambda g: FieldGrid.from_sampler(g, sampler), GRID, gc_residuals, 3)
    last = reps[-1]
    assert last.total < 1e-4
    for k, s in slopes.items():
        assert last.max[k] < 1e-11 or abs(s - 2) < 0.2


def test_sphere_curvatures():
    f = FieldGrid.from_sampler(GRID, sphere_sampler)
    Ka, Kg, (k1, k2) = curvatures(f, order=4)
    inner = (slice(2, -2), slice(2, -2))
    np.testing.assert_allclose(Ka, 1, atol=1e-14)
    np.testing.assert_allclose(Kg[inner], 1, atol=1e-6)
    np.testing.assert_allclose(k1, 1, atol=1e-7)
    np.testing.assert_allclose(k2, 1, atol=1e-7)


def test_cylinder_principal_curvatures():
    f = FieldGrid.from_sampler(GRID, cylinder_sampler)
    Ka, Kg, (k1, k2) = curvatures(f)
    np.testing.assert_allclose(Ka, 0, atol=1e-14)
    np.testing.assert_allclose(sorted([k1[3, 3], k2[3, 3]], key=abs), [0, 2], atol=1e-14)


def test_zero_curvature_is_gauss_codazzi():
    # on any fields: ZC11 = gauss/2, ZC12 = -e^{-u/2} cod1, ZC21 = -e^{-u/2} cod2 (up to FD error)
    f = wavy(Grid2D((0.3, 0.9), (0.2, 0.8), 81, 81))
    gc = gc_residuals(f, 4).residuals
    zc = zero_curvature_residual(f, 4).residuals
    e = np.exp(-f.u / 2)
    i = (slice(4, -4), slice(4, -4))
    np.testing.assert_allclose(zc["11"][i], gc["gauss"][i] / 2, atol=1e-7)
    np.testing.assert_allclose(zc["22"][i], -zc["11"][i], atol=1e-7)
    np.testing.assert_allclose(zc["12"][i], -e[i] * gc["codazzi1"][i], atol=1e-7)
    np.testing.assert_allclose(zc["21"][i], -e[i] * gc["codazzi2"][i], atol=1e-7)
    assert np.nanmax(np.abs(gc["gauss"])) > 0.1


def test_frames_traceless_and_boundary():
    Um, Vm = frame_from_values(0.3, 0.1 + 0.2j, -0.4j, 1.2, 0.3, 0.5, 0.1)
    assert np.trace(Um) == 0 and np.trace(Vm) == 0
    f = wavy(GRID)
    fm = frame_matrices(f, (5, 5))
    assert fm.U.shape == (2, 2)
    with pytest.raises(BoundaryPoint):
        frame_matrices(f, (0, 5))


def test_grid_too_small():
    g = Grid2D((0.3, 0.9), (0.2, 0.8), 6, 6)
    with pytest.raises(GridTooSmall):
        gc_residuals(FieldGrid.from_sampler(g, sphere_sampler), order=4)


def test_conformal_keeps_solutions_and_composes():
    f = FieldGrid.from_sampler(GRID.refined(), sphere_sampler)
    G, dG = (lambda w: w**2), (lambda w: 2 * w)
    target = Grid2D((0.5, 0.8), (0.2, 0.4), 41, 41)
    t = conformal_transform(f, G, G, dG, dG, target)
    assert gc_residuals(t).total < 1e-3
    # pullback twice by z^2 equals one pullback by z^4 (G o G)
    t2 = conformal_transform(t, G, G, dG, dG, Grid2D((0.75, 0.85), (0.1, 0.2), 9, 9))
    G4, dG4 = (lambda w: w**4), (lambda w: 4 * w**3)
    t4 = conformal_transform(f, G4, G4, dG4, dG4, t2.grid)
    for n in ("u", "Q", "R"):
        np.testing.assert_allclose(getattr(t2, n), getattr(t4, n), rtol=1e-12, atol=1e-12)
    with pytest.raises(DegenerateJacobian):
        conformal_transform(f, G, G, lambda w: 0 * w, dG)


def test_involution_is_an_involution(rng):
    u, H, Q = rng.normal(size=3) + 1j * rng.normal(size=3)
    c = 0.3
    R = Q - c
    once = involution(u, H, Q, R, c)
    twice = involution(*once)
    np.testing.assert_allclose(twice, (u, H, Q, R, c), rtol=1e-15)
    with pytest.raises(ConditionViolated):
        involution(u, H, Q, Q + 1, c)


def test_predicates_on_known_surfaces():
    cyl = FieldGrid.from_sampler(GRID, cylinder_sampler)
    assert bonnet_predicate(cyl).total < 1e-12
    assert isothermic_predicate(cyl).total < 1e-12
    with pytest.raises(FieldVanishes):
        bonnet_predicate(FieldGrid.from_sampler(GRID, sphere_sampler))
    with pytest.raises(ConditionViolated):
        involute_fields(wavy(GRID))


def test_verdicts():
    f = lambda g: wavy(g)
    reps, _ = refinement_study(f, GRID, isothermic_predicate, 3)
    assert verdict(reps, "isothermic") == "fail"
    reps, _ = refinement_study(lambda g: FieldGrid.from_sampler(g, sphere_sampler), GRID, gc_residuals, 3)
    assert verdict(reps, "gauss") == "pass"


def test_conformal_composition_order():
    f = FieldGrid.from_sampler(GRID, sphere_sampler)
    sq, dsq = (lambda w: w**2), (lambda w: 2 * w)
    sh, dsh = (lambda w: w + 0.1), (lambda w: 1 + 0 * w)
    tg = Grid2D((0.4, 0.5), (0.3, 0.4), 5, 5)
    two = conformal_transform(conformal_transform(f, sq, sq, dsq, dsq), sh, sh, dsh, dsh, tg)
    comp = lambda w: (w + 0.1)**2
    dcomp = lambda w: 2 * (w + 0.1)
    one = conformal_transform(f, comp, comp, dcomp, dcomp, tg)
    for n in ("u", "Q", "R"):
        np.testing.assert_allclose(getattr(two, n), getattr(one, n), rtol=1e-13, atol=1e-13)
