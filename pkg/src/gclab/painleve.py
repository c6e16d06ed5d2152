"""Painleve VI: the equation, Malmquist's Hamiltonian, conjugate variables, the
second-order second-degree master equations for Y = X(X-1)H, the inverse
map back to V, the Riccati family and the cube solution.

Parameters are kept as given (int, Fraction, float or complex), so rational
inputs stay exact where only ring operations are involved.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (BranchCollision, DegenerateDenominator, FormMismatch, SingularPoint,
                     SingularRSystem)
from .numerics import IntegratorConfig, PathSpec, integrate_ode

_TINY = 1e-300


@dataclass(frozen=True)
class PviParams:
    ti: complex = 0     # theta_infinity
    t0: complex = 0
    t1: complex = 0
    tx: complex = 1

    @property
    def TX(self):
        return self.tx - 1

    @property
    def squares(self):
        return (self.ti**2, self.t0**2, self.t1**2, self.tx**2)

    def as_list(self):
        return [self.ti, self.t0, self.t1, self.tx]


@dataclass(frozen=True)
class PviState:
    X: complex
    V: complex
    Vp: complex


def _check_state(X, V):
    for val, what in ((X, "X=0"), (X - 1, "X=1"), (V, "V=0"), (V - 1, "V=1"), (V - X, "V=X")):
        if np.any(np.abs(val) < 1e-14):
            raise SingularPoint(f"singular point {what}")


# ---------------------------------------------------------------- the equation

def pvi_rhs(p, s):
    """V'' from the PVI equation at the state s."""
    X, V, Vp = s.X, s.V, s.Vp
    _check_state(X, V)
    ti2, t02, t12, tx2 = p.squares
    return (0.5 * (1 / V + 1 / (V - 1) + 1 / (V - X)) * Vp**2
            - (1 / X + 1 / (X - 1) + 1 / (V - X)) * Vp
            + V * (V - 1) * (V - X) / (2 * X**2 * (X - 1)**2)
            * (ti2 - t02 * X / V**2 + t12 * (X - 1) / (V - 1)**2 + (1 - tx2) * X * (X - 1) / (V - X)**2))


def pvi_rhs_vec(p, X, V, Vp, use_numba=None):
    """Vectorised V'' (numba kernel unless disabled); no singularity checks."""
    return _kernels.pvi_rhs_array(*p.squares, X, V, Vp, use_numba=use_numba)


def pvi_system(p):
    """rhs(X, y) for y = (V, V')."""
    ti2, t02, t12, tx2 = (complex(t) for t in p.squares)

    def rhs(X, y):
        V, Vp = y[0], y[1]
        Vpp = _kernels._np_pvi(ti2, t02, t12, tx2, X, V, Vp)
        return np.array([Vp, Vpp])
    return rhs


def with_forbidden(path, pts=(0, 1)):
    have = set(path.forbidden)
    extra = tuple(complex(f) for f in pts if complex(f) not in have)
    if not extra:
        return path
    return PathSpec(path.kind, path.points, path.forbidden + extra, path.clearance)


def pvi_integrate(p, ic, path, cfg=None, t_eval=None):
    """Integrate PVI from ic (a PviState at path start) along path in the X plane."""
    path = with_forbidden(path)
    if abs(complex(ic.X) - complex(path.start)) > 1e-12 * max(1, abs(ic.X)):
        raise ValueError("initial X must be the path start")
    _check_state(ic.X, ic.V)
    meta = {"equation": "pvi", "theta": [complex(t) for t in p.as_list()]}
    return integrate_ode(pvi_system(p), [ic.V, ic.Vp], path, cfg or IntegratorConfig(), t_eval, meta)


def fd_d1(fun, s, delta, u=1.0):
    """5-point central d/dz of fun(s) along a straight piece with unit tangent u."""
    s = np.asarray(s, dtype=float)
    f = [fun(s + k * delta) for k in (-2, -1, 1, 2)]
    return (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * delta * u)


def fd_d2(fun, s, delta, u=1.0):
    s = np.asarray(s, dtype=float)
    f = [fun(s + k * delta) for k in (-2, -1, 0, 1, 2)]
    return (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * delta**2 * u**2)


def _interior_params(traj, n, delta):
    lo, hi = traj.params[0] + 3 * delta, traj.params[-1] - 3 * delta
    b = traj.path.breaks()
    s = np.linspace(lo, hi, n)
    # keep stencils on one straight piece
    ok = np.ones(len(s), dtype=bool)
    for c in b[1:-1]:
        ok &= np.abs(s - c) > 3 * delta
    return s[ok]


def pvi_fd_residual(p, traj, n=200, delta=None):
    """Relative PVI residual along a trajectory, V'' recomputed by 5-point FD of the dense V'.

    Returns (params, relative residuals).
    """
    delta = delta or 2e-3 * traj.path.length
    s = _interior_params(traj, n, delta)
    u = traj.path.tangent(s) if traj.path.kind != "arc" else None
    if u is None:
        raise ValueError("FD residual needs a straight path")
    Vpp = fd_d1(lambda t: traj.eval(t)[:, 1], s, delta, u)
    y = traj.eval(s)
    X = traj.path.point(s)
    rhs = pvi_rhs_vec(p, X, y[:, 0], y[:, 1], use_numba=False)
    return s, np.abs(Vpp - rhs) / np.maximum(1.0, np.abs(rhs))


# ---------------------------------------------------------------- Hamiltonians

def hamiltonian_malmquist(p, s):
    """(Hu, Y) with Y = X(X-1) Hu."""
    X, V, Vp = s.X, s.V, s.Vp
    _check_state(X, V)
    ti2, t02, t12, _ = p.squares
    TX2 = p.TX**2
    Hu = (X * (X - 1) * Vp**2 / (4 * V * (V - 1) * (V - X))
          + (-ti2 * (V - 0.5) - t02 * (X / V - 0.5) + t12 * ((X - 1) / (V - 1) - 0.5)
             - TX2 * (X * (X - 1) / (V - X) + X - 0.5)) / (4 * X * (X - 1)))
    return Hu, X * (X - 1) * Hu


def conjugate_vars(p, s):
    """(q, p) with q = V and 2p as displayed."""
    X, V, Vp = s.X, s.V, s.Vp
    _check_state(X, V)
    twop = X * (X - 1) * Vp / (V * (V - 1) * (V - X)) + p.t0 / V + p.t1 / (V - 1) + p.TX / (V - X)
    return V, twop / 2


def _B(p):
    return (p.ti**2 - (p.t0 + p.t1 + p.TX)**2) / 4


def shift_N(p, X):
    """N(X): the X-only difference 8X(X-1)(H_displayed - Hu)."""
    TX = p.TX
    return (2 * X * (p.ti**2 - TX**2 - 2 * (p.t0 + p.t1) * TX)
            + p.t0**2 - p.t1**2 - p.ti**2 + TX**2 + 4 * p.t0 * TX)


def shift_dN(p):
    TX = p.TX
    return 2 * (p.ti**2 - TX**2 - 2 * (p.t0 + p.t1) * TX)


def _M(p, q, pc, X):
    """X(X-1) times the displayed polynomial Hamiltonian."""
    return (q * (q - 1) * (q - X) * pc**2
            - pc * (p.t0 * (q - 1) * (q - X) + p.t1 * q * (q - X) + p.TX * q * (q - 1))
            - _B(p) * (q - X))


def hqp_displayed(p, q, pc, X):
    return _M(p, q, pc, X) / (X * (X - 1))


def hqp(p, q, pc, X):
    """Polynomial Hamiltonian normalised to coincide with Malmquist's Hu."""
    return (_M(p, q, pc, X) - shift_N(p, X) / 8) / (X * (X - 1))


def hamilton_eqs(p, q, pc, X):
    """(dq/dX, dp/dX) from the polynomial Hamiltonian (the X-only shift drops out)."""
    dMp = 2 * q * (q - 1) * (q - X) * pc - (p.t0 * (q - 1) * (q - X) + p.t1 * q * (q - X) + p.TX * q * (q - 1))
    dMq = ((3 * q**2 - 2 * (1 + X) * q + X) * pc**2
           - pc * (p.t0 * (2 * q - 1 - X) + p.t1 * (2 * q - X) + p.TX * (2 * q - 1)) - _B(p))
    w = X * (X - 1)
    return dMp / w, -dMq / w


def y_derivs(p, s):
    """(Y, Y', Y'') along the PVI flow, from the Hamiltonian structure."""
    X = s.X
    q, pc = conjugate_vars(p, s)
    Y = _M(p, q, pc, X) - shift_N(p, X) / 8
    Y1 = -q * (q - 1) * pc**2 + pc * (p.t0 * (q - 1) + p.t1 * q) + _B(p) - shift_dN(p) / 8
    dq, dp = hamilton_eqs(p, q, pc, X)
    Y2 = ((-(2 * q - 1) * pc**2 + pc * (p.t0 + p.t1)) * dq
          + (-2 * q * (q - 1) * pc + p.t0 * (q - 1) + p.t1 * q) * dp)
    return Y, Y1, Y2


def y_derivs_fd(p, traj, s, delta):
    """(X, Y, Y', Y'') with Y', Y'' from 5-point stencils on the dense output."""
    u = traj.path.tangent(s)

    def Yof(t):
        y = traj.eval(t)
        X = traj.path.point(t)
        return hamiltonian_malmquist(p, PviState(X, y[:, 0], y[:, 1]))[1]
    X = traj.path.point(s)
    return X, Yof(s), fd_d1(Yof, s, delta, u), fd_d2(Yof, s, delta, u)


# ---------------------------------------------------------------- SD master equations

@dataclass(frozen=True)
class SdCoeffs:
    form: str
    values: dict

    _KEYS = {"okamoto": ("n1", "n2", "n3", "n4"), "sd1a": ("A0", "A2", "A3", "A4"),
             "pv_sd": ("A1", "A2", "A3", "A4")}

    def __post_init__(self):
        keys = self._KEYS.get(self.form)
        if keys is None:
            raise FormMismatch(f"unknown form {self.form!r}")
        if set(self.values) != set(keys):
            raise FormMismatch(f"form {self.form} needs exactly {keys}")

    def __getitem__(self, k):
        return self.values[k]


def sd1a_from_n(n1, n2, n3, n4):
    prod = n1 * n2 * n3 * n4
    A0 = n1**2 + n2**2 + n3**2 + n4**2
    A2 = 4 * prod
    A3 = -(n1 + n2 + n3 + n4) * (n1 + n2 - n3 - n4) * (n1 - n2 + n3 - n4) * (n1 - n2 - n3 + n4) / 4
    # (n1 n2 n3 n4)^2 sum n_j^-2, written without divisions
    sq = [n1**2, n2**2, n3**2, n4**2]
    A4 = sum(sq[(j + 1) % 4] * sq[(j + 2) % 4] * sq[(j + 3) % 4] for j in range(4))
    return {"A0": A0, "A2": A2, "A3": A3, "A4": A4}


def theta_to_sd_coeffs(p):
    """Coefficients of both master forms; 'sd1a_n' repeats SD-Ia through the n's."""
    ti, t0, t1, TX = p.ti, p.t0, p.t1, p.TX
    n = {"n1": (ti - TX) / 2, "n2": (ti + TX) / 2, "n3": (t1 - t0) / 2, "n4": (t1 + t0) / 2}
    ti2, t02, t12, TX2 = ti**2, t0**2, t1**2, TX**2
    A = {"A0": (ti2 + t02 + t12 + TX2) / 2,
         "A2": -(ti2 - TX2) * (t02 - t12) / 4,
         "A3": (ti2 - t12) * (t02 - TX2) / 4,
         "A4": ((ti2 + TX2) * (t02 - t12)**2 + (ti2 - TX2)**2 * (t02 + t12)) / 32}
    return {"okamoto": SdCoeffs("okamoto", n), "sd1a": SdCoeffs("sd1a", A),
            "sd1a_n": SdCoeffs("sd1a", sd1a_from_n(*n.values()))}


def theta_from_sd1a(A0, A3):
    """A set of exponents giving SD-Ia coefficients (A0, 0, A3, 0).

    theta_inf = 0 and Theta_X = 0, theta_0^2, theta_1^2 = A0 +- sqrt(A0^2 + 4 A3).
    """
    r = np.sqrt(complex(A0**2 + 4 * A3))
    return PviParams(0, np.sqrt(complex(A0 + r)), np.sqrt(complex(A0 - r)), 1)


def _sd_terms(coeffs, X, Y, Y1, Y2):
    f = coeffs.form
    c = coeffs.values
    if f == "okamoto":
        n1, n2, n3, n4 = c["n1"], c["n2"], c["n3"], c["n4"]
        return [-Y1 * (X * (X - 1) * Y2)**2,
                -(Y1**2 - 2 * Y1 * (X * Y1 - Y) + n1 * n2 * n3 * n4)**2,
                (Y1 + n1**2) * (Y1 + n2**2) * (Y1 + n3**2) * (Y1 + n4**2)]
    if f == "sd1a":
        Z = X * Y1 - Y
        return [-(X * (X - 1) * Y2)**2, -4 * Y1 * Z**2, 4 * Y1**2 * Z, c["A0"] * Y1**2, c["A2"] * Z,
                (c["A3"] + c["A0"]**2 / 4) * Y1, c["A4"] + 0 * Y]
    if f == "pv_sd":
        Z = X * Y1 - Y
        return [-(X * Y2)**2, -4 * Y1**2 * Z, c["A1"] * Z**2, c["A2"] * Z, c["A3"] * Y1, c["A4"] + 0 * Y]
    raise FormMismatch(f)


def sd_residual(coeffs, X, Y, Y1, Y2, relative=False):
    """Left side of the selected master equation; relative=True divides by the sum of |terms|."""
    terms = _sd_terms(coeffs, X, Y, Y1, Y2)
    r = sum(terms)
    if not relative:
        return r
    return np.abs(r) / np.maximum(sum(np.abs(t) for t in terms), _TINY)


def inverse_okamoto(p, X, Y, Y1, Y2, reading="difference", y2_coef="half"):
    """V from (X, Y, Y', Y'').

    reading='difference' takes the second displayed r-line as r+ - r-;
    reading='sum' takes both lines literally (singular system).
    y2_coef='half' uses Theta_X/2 in front of Y''; 'printed' uses Theta_X.
    """
    ti, TX = p.ti, p.TX
    Dp = Y1 + (ti + TX)**2 / 4
    Dm = Y1 + (ti - TX)**2 / 4
    scale = 1 + abs(Y1)
    if np.any(np.abs(Dp) < 1e-13 * scale) or np.any(np.abs(Dm) < 1e-13 * scale):
        raise DegenerateDenominator("Y' + (theta_inf +- Theta_X)^2/4 vanishes")
    S = -Y - (ti**2 + 3 * TX**2) * (2 * X - 1) / 8 + (p.t1**2 - p.t0**2) / 8
    if reading == "sum":
        raise SingularRSystem("both r-lines give r+ + r-: the 2x2 system is singular")
    if reading != "difference":
        raise ValueError(reading)
    if TX == 0:
        Dd = 0 * S
    else:
        if ti == 0:
            raise SingularRSystem("theta_inf = 0 with Theta_X != 0")
        Dd = (-Y - (3 * ti**2 + TX**2) * (2 * X - 1) / 8 - (p.t1**2 - p.t0**2) / 8) * TX / ti
    rp, rm = (S + Dd) / 2, (S - Dd) / 2
    k = TX / 2 if y2_coef == "half" else TX
    return X + k * X * (X - 1) * Y2 / (Dp * Dm) + rp / Dp + rm / Dm


# ---------------------------------------------------------------- Riccati family

def riccati_params(g, K):
    """Signed exponents of the one-parameter family: (1+g)/2, sqrt(K)/2, -sqrt(K)/2, (1-g)/2."""
    rK = np.sqrt(complex(K))
    return PviParams((1 + g) / 2, rK / 2, -rK / 2, (1 - g) / 2)


def riccati_rhs(p, X, V):
    """V' from the first-order relation with signed exponents p."""
    _check_state(X, V)
    return -V * (V - 1) * (V - X) / (X * (X - 1)) * (p.t0 / V + p.t1 / (V - 1) + (p.tx - 1) / (V - X))


def riccati_system(p):
    def rhs(X, y):
        V = y[0]
        return np.array([-V * (V - 1) * (V - X) / (X * (X - 1)) * (p.t0 / V + p.t1 / (V - 1) + (p.tx - 1) / (V - X))])
    return rhs


def riccati_integrate(p, X0, V0, path, cfg=None):
    path = with_forbidden(path)
    return integrate_ode(riccati_system(p), [V0], path, cfg or IntegratorConfig(),
                         meta={"equation": "riccati"})


# ---------------------------------------------------------------- cube solution

def cube_poly(X, V):
    return -X**2 + 3 * X * V - 3 * X * V**2 + 2 * X * V**3 - V**3


def cube_roots(X):
    return np.roots([2 * X - 1, -3 * X, 3 * X, -X**2])


def cube_params(tx=4 / 3):
    return PviParams(1 / 3, 2 / 3, 2 / 3, tx)


def cube_derivs(X, V):
    """(V', V'') on the cube curve by implicit differentiation."""
    PX = -2 * X + 3 * V - 3 * V**2 + 2 * V**3
    PV = 3 * X - 6 * X * V + 6 * X * V**2 - 3 * V**2
    PXX = -2.0
    PXV = 3 - 6 * V + 6 * V**2
    PVV = -6 * X + 12 * X * V - 6 * V
    V1 = -PX / PV
    V2 = -(PXX + 2 * PXV * V1 + PVV * V1**2) / PV
    return V1, V2


def _newton(X, V, it=30):
    for _ in range(it):
        PV = 3 * X - 6 * X * V + 6 * X * V**2 - 3 * V**2
        dV = cube_poly(X, V) / PV
        V = V - dV
        if abs(dV) < 1e-15 * max(1.0, abs(V)):
            break
    return V


def cube_solution(Xs, anchor, substeps=8, sep_tol=1e-6):
    """Track one root of the cube polynomial along the ordered points Xs.

    anchor is (X0, V0) with X0 == Xs[0] (V0 is polished to the nearest root).
    Each move is split into substeps with a tangent predictor and Newton corrector;
    BranchCollision is raised when the tracked root comes within sep_tol of another.
    """
    Xs = np.atleast_1d(np.asarray(Xs, dtype=complex))
    X0, V0 = complex(anchor[0]), complex(anchor[1])
    if abs(X0 - Xs[0]) > 1e-12 * max(1, abs(X0)):
        raise ValueError("anchor must sit at the first point")
    r = cube_roots(X0)
    V = complex(r[np.argmin(np.abs(r - V0))])
    out = [V]
    for Xa, Xb in zip(Xs[:-1], Xs[1:]):
        for k in range(1, substeps + 1):
            Xp = Xa + (Xb - Xa) * (k - 1) / substeps
            Xn = Xa + (Xb - Xa) * k / substeps
            V1, _ = cube_derivs(Xp, V)
            V = _newton(Xn, V + V1 * (Xn - Xp))
        rts = cube_roots(Xb)
        d = np.sort(np.abs(rts - V))
        if len(d) > 1 and d[1] < sep_tol * max(1.0, abs(V)):
            raise BranchCollision(f"root collision near X={Xb}")
        if d[0] > 1e-8 * max(1.0, abs(V)):
            raise BranchCollision(f"lost the branch near X={Xb}")
        out.append(V)
    return np.array(out)
