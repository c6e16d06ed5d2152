"""PDE layer: Gauss-Codazzi residuals, curvatures, the 2x2 frame and its
zero-curvature residual, the conformal and involutive invariances, and the
Bonnet / isothermic tests. Fields are (u, H, Q, R) with R standing for Q-bar,
all complex and independent.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (BoundaryPoint, ConditionViolated, DegenerateJacobian, FieldVanishes,
                     GridTooSmall, InsufficientData)
from .numerics import Grid2D, convergence_order, d_z, d_zb, d_zzb, norms

NAMES = ("u", "H", "Q", "R")


@dataclass
class FieldGrid:
    """Fields on a Grid2D. sampler(z, zb) -> dict(u, H, Q, R), if given, evaluates
    the same fields at arbitrary (independent) complex z, zb."""
    grid: Grid2D
    u: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    c: complex = 0.0
    sampler: object = None
    label: str = ""

    def __post_init__(self):
        for n in NAMES:
            a = np.asarray(getattr(self, n), dtype=complex)
            if a.shape != (self.grid.nx, self.grid.ny):
                a = np.broadcast_to(a, (self.grid.nx, self.grid.ny)).copy()
            if not np.all(np.isfinite(a)):
                raise ValueError(f"field {n} is not finite on the grid")
            setattr(self, n, a)

    @classmethod
    def from_sampler(cls, grid, sampler, c=0.0, label=""):
        Z = grid.z
        vals = sampler(Z, np.conj(Z))
        return cls(grid, vals["u"], vals["H"], vals["Q"], vals["R"], c, sampler, label)

    def as_grid(self):
        return self.grid.like({n: getattr(self, n) for n in NAMES})

    @property
    def U(self):
        return np.exp(self.u)


def unwrap2d(a):
    """Remove 2*pi*i jumps of a log-type field sampled on a grid (axis 0 then axis 1)."""
    im = np.unwrap(a.imag, axis=0)
    im = im - im[:, :1] + np.unwrap(im[:, 0])[:, None]
    im = np.unwrap(im, axis=1)
    return a.real + 1j * im


@dataclass
class ResidualReport:
    residuals: dict
    max: dict = field(default_factory=dict)
    l2: dict = field(default_factory=dict)
    h: float = None
    slopes: dict = field(default_factory=dict)

    @classmethod
    def build(cls, residuals, h=None):
        rep = cls(residuals, h=h)
        for k, r in residuals.items():
            rep.max[k], rep.l2[k] = norms(r)
        return rep

    @property
    def total(self):
        return max(self.max.values())

    def to_dict(self):
        return {"h": self.h, "max": self.max, "l2": self.l2, "slopes": self.slopes}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------- residuals

def _need(f, order):
    w = 5 if order == 2 else 7
    if f.grid.nx < w or f.grid.ny < w:
        raise GridTooSmall(f"need at least {w} points per axis")


def gc_residuals(f, order=2):
    """Gauss and the two Codazzi residuals by Wirtinger FD."""
    _need(f, order)
    g = f.grid
    U = np.exp(f.u)
    gauss = d_zzb(f.u, g, order) + 0.5 * (f.H**2 - f.c**2) * U - 2 * f.Q * f.R / U
    cod1 = d_zb(f.Q, g, order) - 0.5 * d_z(f.H, g, order) * U
    cod2 = d_z(f.R, g, order) - 0.5 * d_zb(f.H, g, order) * U
    return ResidualReport.build({"gauss": gauss, "codazzi1": cod1, "codazzi2": cod2}, g.h)


def curvatures(f, order=2):
    """(K_alg, K_geom, (k1, k2)); |Q|^2 is realised as Q R."""
    _need(f, order)
    U = np.exp(f.u)
    Ka = f.H**2 - f.c**2 - 4 * f.Q * f.R / U**2
    Kg = -2 / U * d_zzb(f.u, f.grid, order)
    s = np.sqrt(f.H**2 - Ka)
    return Ka, Kg, (f.H + s, f.H - s)


@dataclass
class FrameMatrices:
    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        tU = np.trace(self.U, axis1=-2, axis2=-1)
        tV = np.trace(self.V, axis1=-2, axis2=-1)
        if np.any(np.abs(tU) > 1e-12 * (1 + np.abs(self.U).max())) or np.any(np.abs(tV) > 1e-12 * (1 + np.abs(self.V).max())):
            raise ValueError("frame matrices must be traceless")


def frame_from_values(u, uz, uzb, H, Q, R, c=0.0):
    """The 2x2 frame pair at given values; broadcasts, trailing axes (2, 2)."""
    e = np.exp(np.asarray(u, dtype=complex) / 2)
    sh = np.broadcast(u, uz, uzb, H, Q, R).shape
    Um = np.zeros(sh + (2, 2), dtype=complex)
    Vm = np.zeros(sh + (2, 2), dtype=complex)
    Um[..., 0, 0] = uz / 4
    Um[..., 0, 1] = -Q / e
    Um[..., 1, 0] = (H + c) * e / 2
    Um[..., 1, 1] = -uz / 4
    Vm[..., 0, 0] = -uzb / 4
    Vm[..., 0, 1] = -(H - c) * e / 2
    Vm[..., 1, 0] = R / e
    Vm[..., 1, 1] = uzb / 4
    return Um, Vm


def frame_fields(f, order=2):
    uz = d_z(f.u, f.grid, order)
    uzb = d_zb(f.u, f.grid, order)
    return frame_from_values(f.u, uz, uzb, f.H, f.Q, f.R, f.c)


def frame_matrices(f, point, order=2):
    """FrameMatrices at grid index point=(ix, iy); u_z, u_zb by FD."""
    ix, iy = point
    w = 1 if order == 2 else 2
    if not (w <= ix < f.grid.nx - w and w <= iy < f.grid.ny - w):
        raise BoundaryPoint(f"{point} is on the boundary ring")
    Um, Vm = frame_fields(f, order)
    return FrameMatrices(Um[ix, iy], Vm[ix, iy])


def zero_curvature_residual(f, order=2):
    """U_zb - V_z + UV - VU, entries by nested FD."""
    _need(f, order)
    g = f.grid
    Um, Vm = frame_fields(f, order)
    res = {}
    comm = Um @ Vm - Vm @ Um
    for i in range(2):
        for j in range(2):
            res[f"{i + 1}{j + 1}"] = d_zb(Um[..., i, j], g, order) - d_z(Vm[..., i, j], g, order) + comm[..., i, j]
    return ResidualReport.build(res, g.h)


# ---------------------------------------------------------------- invariances

def _interp_sampler(f):
    """Cubic interpolation of the grid fields at real points (w, conj w)."""
    from scipy.interpolate import RectBivariateSpline
    g = f.grid
    sp = {}
    for n in NAMES:
        a = getattr(f, n)
        sp[n] = (RectBivariateSpline(g.x, g.y, a.real, kx=3, ky=3), RectBivariateSpline(g.x, g.y, a.imag, kx=3, ky=3))

    def sample(z, zb):
        z = np.asarray(z, dtype=complex)
        if np.max(np.abs(np.asarray(zb) - np.conj(z))) > 1e-12 * (1 + np.abs(z).max()):
            raise ValueError("grid interpolation needs zb = conj(z)")
        x, y = z.real, z.imag
        if x.min() < g.xr[0] - 1e-12 or x.max() > g.xr[1] + 1e-12 or y.min() < g.yr[0] - 1e-12 or y.max() > g.yr[1] + 1e-12:
            raise ValueError("resampling outside the source grid")
        return {n: sp[n][0].ev(x, y) + 1j * sp[n][1].ev(x, y) for n in NAMES}
    return sample


def conformal_transform(f, G1, G2, dG1, dG2, target=None):
    """Pull fields back through z -> G1(z), zb -> G2(zb).

    The new fields at (z, zb) are e^u G1'(z) G2'(zb), H, Q G1'(z)^2 and R G2'(zb)^2 with
    the old fields evaluated at (G1(z), G2(zb)). Uses f.sampler when available,
    cubic interpolation of the grid otherwise. Applying G then Gt gives the pullback
    by G o Gt.
    """
    target = target or f.grid
    src = f.sampler or _interp_sampler(f)

    def sampler(z, zb):
        a, b = dG1(z), dG2(zb)
        if np.any(np.abs(a) < 1e-14) or np.any(np.abs(b) < 1e-14):
            raise DegenerateJacobian("G1' or G2' vanishes")
        v = src(G1(z), G2(zb))
        return {"u": v["u"] + np.log(a) + np.log(b), "H": v["H"], "Q": v["Q"] * a**2, "R": v["R"] * b**2}

    Z = target.z
    vals = sampler(Z, np.conj(Z))
    vals["u"] = unwrap2d(vals["u"])
    return FieldGrid(target, vals["u"], vals["H"], vals["Q"], vals["R"], f.c,
                     sampler if f.sampler is not None else None, f.label + "+conformal")


def involution(u, H, Q, R, c, tol=1e-10):
    """(u, H, Q, R, c) -> (-u, 2Q - c, (H + c)/2, (H - c)/2, c); needs Q - R = c."""
    Qa, Ra = np.asarray(Q), np.asarray(R)
    scale = 1 + np.abs(Qa) + np.abs(Ra)
    if np.any(np.abs(Qa - Ra - c) > tol * scale):
        raise ConditionViolated("Q - R != c")
    return -u, 2 * Q - c, (H + c) / 2, (H - c) / 2, c


def involute_fields(f, tol=1e-10):
    u, H, Q, R, c = involution(f.u, f.H, f.Q, f.R, f.c, tol)
    samp = None
    if f.sampler is not None:
        def samp(z, zb, _s=f.sampler, _c=f.c):
            v = _s(z, zb)
            return {"u": -v["u"], "H": 2 * v["Q"] - _c, "Q": (v["H"] + _c) / 2, "R": (v["H"] - _c) / 2}
    return FieldGrid(f.grid, u, H, Q, R, c, samp, f.label + "+involution")


# ---------------------------------------------------------------- surface predicates

def _logders(A, g, order):
    Az, Azb, Azzb = d_z(A, g, order), d_zb(A, g, order), d_zzb(A, g, order)
    return Az / A, Azb / A, Azzb / A - Az * Azb / A**2


def bonnet_predicate(f, order=2):
    """The two Bonnet conditions written with log-derivatives."""
    g = f.grid
    for n in ("Q", "R"):
        if np.min(np.abs(getattr(f, n))) < 1e-12:
            raise FieldVanishes(f"{n} vanishes on the domain")
    Qz, Qzb, Qzzb = _logders(f.Q, g, order)
    Rz, Rzb, Rzzb = _logders(f.R, g, order)
    return ResidualReport.build({"bonnet1": Qzzb - Qzb * Rz, "bonnet2": Rzzb - Rz * Qzb}, g.h)


def isothermic_predicate(f, order=2):
    g = f.grid
    for n in ("Q", "R"):
        if np.min(np.abs(getattr(f, n))) < 1e-12:
            raise FieldVanishes(f"{n} vanishes on the domain")
    _, _, Qzzb = _logders(f.Q, g, order)
    _, _, Rzzb = _logders(f.R, g, order)
    return ResidualReport.build({"isothermic": Qzzb - Rzzb}, g.h)


# ---------------------------------------------------------------- refinement studies

def refinement_study(make, grid, check, levels=3, order=2):
    """Run check(make(grid_k), order) on grids refined by 2 each level.

    Returns (reports, slopes) with slopes per residual name.
    """
    reps = []
    g = grid
    for _ in range(levels):
        reps.append(check(make(g), order))
        g = g.refined()
    slopes = {}
    for k in reps[0].max:
        try:
            slopes[k] = convergence_order([(r.h, r.max[k]) for r in reps])
        except InsufficientData:
            slopes[k] = float("nan")
    for r in reps:
        r.slopes = slopes
    return reps, slopes


def verdict(reps, key, floor=1e-11, pass_order=1.5, fail_level=1e-3):
    """'pass' if the residual decays at order >= pass_order (or sits at round-off),
    'fail' if it stabilises above fail_level, otherwise 'inconclusive'."""
    vals = [r.max[key] for r in reps]
    if vals[-1] < floor:
        return "pass"
    slope = reps[0].slopes.get(key, float("nan"))
    if np.isfinite(slope) and slope >= pass_order:
        return "pass"
    if vals[-1] > fail_level and vals[-1] > 0.5 * vals[-2]:
        return "fail"
    return "inconclusive"
