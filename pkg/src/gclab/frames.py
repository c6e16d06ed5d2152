"""2x2 linear representations attached to the reductions: the ODE moving frame
in (xi, t), the codimension-two PVI pair and its codimension-zero extension.
All matrices are traceless; square roots are continued from a reference value.
"""
from dataclasses import dataclass

import numpy as np

from .errors import BranchCollision, SingularState
from .painleve import PviParams, _interior_params, fd_d1, pvi_rhs_vec

S3 = np.array([[1, 0], [0, -1]], dtype=complex)


def track_sqrt(w, ref=None, what="sqrt"):
    """sqrt(w) on the branch closest to ref (principal if ref is None)."""
    s = np.sqrt(np.asarray(w, dtype=complex))
    if ref is None:
        return s
    ref = np.asarray(ref, dtype=complex)
    d_plus, d_minus = np.abs(s - ref), np.abs(s + ref)
    scale = np.maximum(np.abs(s), 1e-300)
    if np.any((np.abs(d_plus - d_minus) < 1e-8 * scale) & (np.abs(s) > 1e-12)):
        raise BranchCollision(f"{what}: cannot decide the branch, step too large")
    return np.where(d_plus <= d_minus, s, -s)


def _mat(a, b, c, d):
    a, b, c, d = np.broadcast_arrays(*(np.asarray(x, dtype=complex) for x in (a, b, c, d)))
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)


def commutator(A, B):
    return A @ B - B @ A


def _nonzero(x, what):
    if np.any(np.abs(x) < 1e-14):
        raise SingularState(f"{what} vanishes")


# ---------------------------------------------------------------- reduced moving frame

@dataclass
class ReducedFrame:
    Ur: np.ndarray
    Vr: np.ndarray
    t: complex = None
    P: np.ndarray = None
    sqrt_v: complex = None
    K_hat: complex = None


def reduced_frame(p, xi, y, sqrt_v=None, maps=None, reading="corrected"):
    """Frame of the a1, a2 reduction at (xi, y), y = (v~, v~', h~, q~, r~).

    maps = (g1, dg1, g2, dg2) values at the point gives t and P.
    reading="printed" keeps the unhalved (h~ -+ c e) entries of Vr.
    """
    v, v1, h, q, r = (np.asarray(a, dtype=complex) for a in y[:5])
    _nonzero(v, "v~")
    s = track_sqrt(v, sqrt_v, "sqrt(v~)")
    a_s, a_d, c = p.a1 + p.a2, p.a1 - p.a2, p.c
    e = np.exp(a_d * np.asarray(xi) / 2)
    half = 0.5 if reading == "corrected" else 1.0
    Ur = 0.5 * _mat(a_s / 2 + 0 * v, ((h - c * e) / 2 - q / v) * s, ((h + c * e) / 2 - r / v) * s, -a_s / 2 + 0 * v)
    dd = a_d / 2 + v1 / (2 * v)
    Vr = 0.5 * _mat(dd, (-(h - c * e) * half - q / v) * s, ((h + c * e) * half + r / v) * s, -dd)
    K_hat = 8 * np.trace(Vr @ Vr, axis1=-2, axis2=-1)
    t = P = None
    if maps is not None:
        g1, dg1, g2, dg2 = maps
        t = np.log(g1) + np.log(g2)
        w = (dg1 / g1) ** 0.25 * (dg2 / g2) ** -0.25
        P = np.diag([w, 1 / w]).astype(complex)
    return ReducedFrame(Ur, Vr, t, P, s, K_hat)


def reduced_frame_compat(p, traj, hprime, n=50, delta=None, reading="corrected"):
    """max |-dVr/dxi + [Ur, Vr]| along a reduced trajectory (xi real), FD in xi."""
    delta = delta or 2e-3 * traj.path.length
    ss = _interior_params(traj, n, delta)
    out = []
    for s0 in ss:
        xi0 = traj.path.point(s0)
        y0 = traj.eval(np.array([s0]))[0]
        f0 = reduced_frame(p, xi0, y0, reading=reading)

        def Vr_at(t):
            ys = traj.eval(np.atleast_1d(t))
            xs = traj.path.point(np.atleast_1d(t))
            return np.array([reduced_frame(p, xs[i], ys[i], f0.sqrt_v, reading=reading).Vr for i in range(len(xs))])

        u = traj.path.tangent(np.array([s0]))
        dV = fd_d1(Vr_at, np.array([s0]), delta, u[:, None, None])[0]
        out.append(np.max(np.abs(-dV + commutator(f0.Ur, f0.Vr))))
    return np.array(out)


# ---------------------------------------------------------------- codimension two

@dataclass
class PviRep:
    kind: str
    Ur: np.ndarray
    Vr: np.ndarray
    rho: complex = None
    extra: dict = None


def codim2_theta(g, K):
    rK = np.sqrt(complex(K))
    return PviParams((1 + g) / 2, rK / 2, rK / 2, (1 - g) / 2)


def r_pm(g, K, X, V, Vp):
    """(R+, R-) with theta0 = theta1 = sqrt(K)/2, thetaX = (1-g)/2."""
    rK = np.sqrt(complex(K))
    base = X * (X - 1) * Vp + V * (V - 1) * (V - X) * (((1 - g) / 2 - 1) / (V - X))
    lin = V * (V - 1) * (V - X) * (rK / 2 / V - rK / 2 / (V - 1))
    return base + lin, base - lin


def _check_pvi_point(X, V):
    for val, what in ((X, "X"), (X - 1, "X-1"), (V, "V"), (V - 1, "V-1"), (V - X, "V-X")):
        _nonzero(val, what)


def codim2_rep(g, K, X, V, Vp, rho_ref=None):
    """Traceless pair (Ur, Vr) in X; rho = sqrt(R+ R-)/sqrt(V(V-1)) continued from rho_ref."""
    _check_pvi_point(X, V)
    Rp, Rm = r_pm(g, K, X, V, Vp)
    rho = track_sqrt(Rp * Rm / (V * (V - 1)), rho_ref, "sqrt(R+R-/(V(V-1)))")
    Ur = ((1 + g) / 2 * S3 + rho / (V - X) * _mat(0, V - 2 * X + 1, V - 2 * X, 0)) / (4 * X * (X - 1))
    Vr = ((X * (X - 1) * Vp - V * (V - 1) * (1 + g) / 2) / (2 * (V - X)) * S3
          + rho / (2 * (V - X)) * _mat(0, -(V - 1), V, 0))
    return PviRep("codim2", Ur, Vr, rho, {"R+": Rp, "R-": Rm})


def codim2_compat(g, K, traj, n=50, delta=None, perturb=0.0):
    """max |(Vr)_X - [Ur, Vr]| along a PVI trajectory with the constrained exponents.

    perturb adds a constant to V' (sensitivity check: the residual must then be O(1)).
    """
    delta = delta or 2e-3 * traj.path.length
    ss = _interior_params(traj, n, delta)
    out = []
    for s0 in ss:
        X0 = complex(traj.path.point(np.array([s0]))[0])
        V0, Vp0 = traj.eval(np.array([s0]))[0][:2]
        r0 = codim2_rep(g, K, X0, V0, Vp0 + perturb)

        def Vr_at(t):
            ys = traj.eval(np.atleast_1d(t))
            xs = traj.path.point(np.atleast_1d(t))
            return np.array([codim2_rep(g, K, xs[i], ys[i, 0], ys[i, 1] + perturb, r0.rho).Vr
                             for i in range(len(xs))])

        u = traj.path.tangent(np.array([s0]))
        dV = fd_d1(Vr_at, np.array([s0]), delta, u[:, None, None])[0]
        out.append(np.max(np.abs(dV - commutator(r0.Ur, r0.Vr))))
    return np.array(out)


# ---------------------------------------------------------------- codimension zero

@dataclass
class Codim0Data:
    """Free data of the extended pair: F(V, X) with partials, k, and R with its
    total X-derivative along the trajectory (values at the point)."""
    F: complex
    F_V: complex
    F_X: complex
    k: complex
    R: complex
    dR: complex


def codim0_rep(theta, d, X, V, Vp, sqrt_R=None, sqrt_vv=None,
               vr_third="lower", ur_reading="corrected"):
    """Extended pair for arbitrary exponents theta.

    vr_third: "lower" puts the third Vr term below the diagonal with denominator
    (V - X); "upper" is the displayed variant. ur_reading="printed" drops the
    1/(X(X-1)) on the F term of a11 and the V factor on the F term of a21.
    """
    _check_pvi_point(X, V)
    _nonzero(d.R, "R")
    ti2, t02, t12, tx2 = theta.squares
    F, k, R = d.F, d.k, d.R
    W = X * (X - 1) * Vp + F
    xx = X * (X - 1)
    fix = ur_reading == "corrected"
    Fa = F / xx if fix else F
    a11 = (-(1 / V + 1 / (V - 1) + 1 / (V - X)) * Vp + d.dR / R + 2 / (V - X)
           + (-2 / (V - 1) + 1 / (V - X)) * Fa)
    lin = V * (2 * d.F_V - (2 / (V - 1) + 1 / (V - X)) * F) if fix else \
        2 * V * d.F_V - (2 / (V - 1) + 1 / (V - X)) * F
    a21 = ((V - 2 * X) / (V - X) * (xx * Vp)**2 + 2 * xx * Vp * lin
           + 4 * xx * V * (d.F_X + F / (V - X)) + 2 * xx * V**2 * (V - 1) / (V - X)
           + V * (-2 / (V - 1) + 1 / (V - X)) * (F**2 + k * (V - X)**2)
           + 2 * V**2 * (V - 1) * (V - X) * (ti2 - t02 * X / V**2 + t12 * (X - 1) / (V - 1)**2
                                           - tx2 * xx / (V - X)**2))
    sR = track_sqrt(R, sqrt_R, "sqrt(R)")
    sq = track_sqrt(V * (V - 1), sqrt_vv, "sqrt(V(V-1))")
    Ur = _mat(a11 / 4, (V - 2 * X + 1) * sR / (4 * xx * sq * (V - X)), a21 / (4 * xx * sR * sq), -a11 / 4)
    third = V * (W**2 + k * (V - X)**2) / (2 * sR * sq)
    if vr_third == "lower":
        Vr = _mat(W / (2 * (V - X)), -(V - 1) * sR / (2 * sq * (V - X)), third / (V - X), -W / (2 * (V - X)))
    elif vr_third == "upper":
        Vr = _mat(W / (2 * (V - X)), -(V - 1) * sR / (2 * sq * (V - X)) + third / (V - 1), 0, -W / (2 * (V - X)))
    else:
        raise ValueError("vr_third must be 'lower' or 'upper'")
    return PviRep("codim0", Ur, Vr, None, {"sqrt_R": sR, "sqrt_vv": sq, "data": d})


def codim0_reduction_data(g, K, X, V, Vp):
    """(R, F, k) that reduce the extended pair to codim2: R = R+R-, F = -(1+g)V(V-1)/2, k = -K/4."""
    theta = codim2_theta(g, K)
    Vpp = pvi_rhs_vec(theta, np.asarray(X, dtype=complex), np.asarray(V, dtype=complex),
                      np.asarray(Vp, dtype=complex), use_numba=False)
    F = -(1 + g) / 2 * V * (V - 1)
    k = -K / 4
    A = X * (X - 1) * Vp + F
    dA = (2 * X - 1) * Vp + X * (X - 1) * Vpp - (1 + g) / 2 * (2 * V - 1) * Vp
    R = A**2 + k * (V - X)**2
    dR = 2 * A * dA + 2 * k * (V - X) * (Vp - 1)
    return theta, Codim0Data(F, -(1 + g) / 2 * (2 * V - 1), 0.0, k, R, dR)


def codim0_reduction_check(g, K, X, V, Vp, vr_third="lower", ur_reading="corrected"):
    """Entrywise max |codim0 - codim2| at the reduction values, branches aligned."""
    r2 = codim2_rep(g, K, X, V, Vp)
    theta, d = codim0_reduction_data(g, K, X, V, Vp)
    sq = np.sqrt(complex(V * (V - 1)))
    # choose sqrt(R) so that sqrt(R)/sqrt(V(V-1)) equals the codim2 rho
    r0 = codim0_rep(theta, d, X, V, Vp, sqrt_R=r2.rho * sq, sqrt_vv=sq,
                    vr_third=vr_third, ur_reading=ur_reading)
    return max(np.max(np.abs(r0.Ur - r2.Ur)), np.max(np.abs(r0.Vr - r2.Vr)))


def codim0_compat(theta, data_fn, traj, n=30, delta=None, **kw):
    """max |(Vr)_X - [Ur, Vr]| along a PVI trajectory, data_fn(X, V, Vp) -> Codim0Data."""
    delta = delta or 2e-3 * traj.path.length
    ss = _interior_params(traj, n, delta)
    out = []
    for s0 in ss:
        X0 = complex(traj.path.point(np.array([s0]))[0])
        V0, Vp0 = traj.eval(np.array([s0]))[0][:2]
        r0 = codim0_rep(theta, data_fn(X0, V0, Vp0), X0, V0, Vp0, **kw)

        def Vr_at(t):
            ys = traj.eval(np.atleast_1d(t))
            xs = traj.path.point(np.atleast_1d(t))
            return np.array([codim0_rep(theta, data_fn(xs[i], ys[i, 0], ys[i, 1]), xs[i], ys[i, 0], ys[i, 1],
                                        sqrt_R=r0.extra["sqrt_R"], sqrt_vv=r0.extra["sqrt_vv"], **kw).Vr
                             for i in range(len(xs))])

        u = traj.path.tangent(np.array([s0]))
        dV = fd_d1(Vr_at, np.array([s0]), delta, u[:, None, None])[0]
        out.append(np.max(np.abs(dV - commutator(r0.Ur, r0.Vr))))
    return np.array(out)
