"""Reductions of the Gauss-Codazzi system to ODEs.

Three chains: the Bonnet one (functions of Re w, closed by PVI/PV), the BEK
one (1/H harmonic), and the Lie reduction with reduced variable z/zb, in its
generic (g^2 != 1) and g = +-1 isothermic branches. Every chain comes with its
first integral, its PVI link, and a lift back to a FieldGrid.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import (BranchPreconditionFailed, ConstraintViolated, DomainSingular,
                     ExtrapolationBeyondTrajectory, PoleDetected, ProductMismatch,
                     QuadraturePathSingular, SingularPoint, SingularState)
from .gauss_codazzi import FieldGrid, unwrap2d
from .numerics import IntegratorConfig, PathSpec, integrate_ode
from .painleve import (PviParams, PviState, SdCoeffs, _kernels, theta_from_sd1a, y_derivs)

_EPS = 1e-14


def _stack(*cols):
    return np.array(np.broadcast_arrays(*cols))


def _nonzero(a, what, tol=_EPS):
    if np.any(np.abs(a) < tol):
        raise SingularState(f"{what} vanishes")


# ---------------------------------------------------------------- sinh / coth kernels

def sinh_kernel(cz, xi):
    """4 cz / sinh(4 cz xi), with the 1/xi limit handled by a series below |4 cz xi| = 1e-4."""
    xi = np.asarray(xi, dtype=complex)
    a = 4 * cz * xi
    small = np.abs(a) < 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        full = 4 * cz / np.sinh(np.where(small, 1.0, a))
        ser = (1 - a**2 / 6 + 7 * a**4 / 360) / xi
    return np.where(small, ser, full)


def coth_kernel(cz, xi):
    """4 cz coth(4 cz xi), same convention."""
    xi = np.asarray(xi, dtype=complex)
    a = 4 * cz * xi
    small = np.abs(a) < 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        full = 4 * cz / np.tanh(np.where(small, 1.0, a))
        ser = (1 + a**2 / 3 - a**4 / 45) / xi
    return np.where(small, ser, full)


# ---------------------------------------------------------------- Lie reduction, eta form

@dataclass(frozen=True)
class ReducedParamsG:
    g: complex
    c: complex = 0.0

    def __post_init__(self):
        if abs((1 + self.g) * self.c) >= 1e-12:
            raise ConstraintViolated("(1+g) c must vanish")


@dataclass
class ReducedStateG:
    eta: complex
    v: complex
    vp: complex
    h: complex
    q: complex
    r: complex

    def as_array(self):
        return np.array([self.v, self.vp, self.h, self.q, self.r], dtype=complex)


def isothermic_hq_prime(g, eta, v, h, q):
    """(h', q') from the two Codazzi lines with r = q."""
    det = 2 * eta**2 * v * (1 - eta**2)
    _nonzero(det, "eta^2 v (1 - eta^2)")
    hp = (2 * eta * (1 + g) * v * h - 4 * eta**2 * (1 - g) * q) / det
    qp = (2 * eta * v * (1 - g) * q - eta**2 * v**2 * (1 + g) * h) / det
    return hp, qp


def reduced_rhs_g(p, eta, y, hprime=None):
    """d(v, v', h, q, r)/d eta.

    hprime=None imposes q = r and solves both Codazzi lines for (h', q');
    otherwise h' = hprime(eta, y) is a free input and q', r' follow.
    """
    v, v1, h, q, r = y
    _nonzero(eta, "eta")
    _nonzero(v, "v")
    g, c = p.g, p.c
    if hprime is None:
        if np.any(np.abs(q - r) > 1e-9 * (1 + np.abs(q))):
            raise ConstraintViolated("isothermic mode needs q = r")
        hp, qp = isothermic_hq_prime(g, eta, v, h, q)
        rp = qp
    else:
        hp = hprime(eta, y)
        qp = ((1 + g) * v * h - eta * v * hp) / (2 * eta**2)
        rp = (2 * (1 - g) * r - eta**2 * v * hp) / (2 * eta)
    v2 = v / eta * (-v1 / v + eta * v1**2 / v**2 + (h**2 - c**2) * v / (2 * eta**2) - 2 * q * r / (eta**2 * v))
    return _stack(v1, v2, hp, qp, rp)


def system_g(p, hprime=None):
    return lambda eta, y: reduced_rhs_g(p, eta, y, hprime)


def first_integral_g(p, eta, y):
    v, v1, h, q, r = y[:5]
    _nonzero(eta, "eta")
    _nonzero(v, "v")
    g, c = p.g, p.c
    return ((eta * v1 / v + g)**2 - (h**2 - c**2) * v / eta - 2 * (h + c) * q
            - 2 * (h - c) * r / eta**2 - 4 * q * r / (eta * v))


def gauss_residual_g(p, eta, y, v2):
    """Left side of the reduced Gauss line, given v''."""
    v, v1, h, q, r = y[:5]
    return (v1 / v + eta * v2 / v - eta * v1**2 / v**2 - (h**2 - p.c**2) * v / (2 * eta**2)
            + 2 * q * r / (eta**2 * v))


def codazzi_residuals_g(p, eta, y, hp, qp, rp):
    v, v1, h, q, r = y[:5]
    g = p.g
    return (-eta * v * hp - 2 * eta**2 * qp + (1 + g) * v * h,
            -eta**2 * v * hp - 2 * eta * rp + 2 * (1 - g) * r)


def integrate_g(p, eta0, y0, path, cfg=None, hprime=None):
    return integrate_ode(system_g(p, hprime), y0, path, cfg or IntegratorConfig(),
                         meta={"family": "g", "g": p.g, "c": p.c})


# ---------------------------------------------------------------- Lie reduction, xi form

@dataclass(frozen=True)
class A1A2Params:
    a1: complex
    a2: complex
    c: complex = 0.0

    def __post_init__(self):
        if abs((self.a1 + self.a2) * self.c) >= 1e-12:
            raise ConstraintViolated("a_s c must vanish")

    @property
    def a_s(self):
        return self.a1 + self.a2

    @property
    def a_d(self):
        return self.a1 - self.a2


def reduced_rhs_a1a2(p, xi, y, hprime):
    """d(v~, v~', h~, q~, r~)/d xi with h~' = hprime(xi, y) a free input."""
    v, v1, h, q, r = y
    _nonzero(v, "v~")
    a1, a2, c = p.a1, p.a2, p.c
    hp = hprime(xi, y)
    e = np.exp(p.a_d * xi)
    v2 = v * (v1**2 / v**2 + 0.5 * (h**2 - c**2 * e) * v - 2 * q * r / v)
    qp = (-v * hp + a1 * v * h + 2 * a2 * q) / 2
    rp = (-v * hp - a2 * v * h - 2 * a1 * r) / 2
    return _stack(v1, v2, hp, qp, rp)


def first_integral_a1a2(p, xi, y):
    v, v1, h, q, r = y[:5]
    _nonzero(v, "v~")
    c, ad = p.c, p.a_d
    e = np.exp(ad * xi)
    return ((v1 / v + ad)**2 - (h**2 - c**2 * e) * v - 2 * h * (q + r)
            - 2 * c * np.exp(ad * xi / 2) * (q - r) - 4 * q * r / v)


def xi_to_eta(a2, xi, yt):
    """(eta, y) from (xi, y~) under eta = e^xi and the tilde scalings."""
    v_, v1_, h_, q_, r_ = yt
    eta = np.exp(xi)
    k = 2 * a2 - 1
    v = np.exp(-k * xi) * v_
    v1 = (np.exp(-k * xi) * v1_ - k * v) / eta
    return eta, _stack(v, v1, np.exp(a2 * xi) * h_, np.exp(-a2 * xi) * q_, np.exp(-(a2 - 2) * xi) * r_)


def eta_to_xi(a2, eta, y, xi=None):
    """Inverse of xi_to_eta; xi defaults to the principal log of eta."""
    v, v1, h, q, r = y
    xi = np.log(eta) if xi is None else xi
    k = 2 * a2 - 1
    v_ = np.exp(k * xi) * v
    v1_ = np.exp(k * xi) * (k * v + eta * v1)
    return xi, _stack(v_, v1_, np.exp(-a2 * xi) * h, np.exp(a2 * xi) * q, np.exp((a2 - 2) * xi) * r)


# ---------------------------------------------------------------- homographic triple and W-ODE

def homographic_triple(g, eta, y, reading="corrected", hq_prime=None):
    """(T1, T2, T3), equal on solutions of the isothermic system.

    h', q' come from the Codazzi lines unless hq_prime=(h', q') is given.
    reading='printed' uses h'/h in T2 and q'/q in T3 with (1-g) in the last denominator.
    """
    v, v1, h, q = y[0], y[1], y[2], y[3]
    if abs(g * g - 1) < 1e-12:
        raise SingularState("the triple needs g^2 != 1")
    _nonzero(q, "q")
    _nonzero(h, "h")
    hp, qp = hq_prime if hq_prime is not None else isothermic_hq_prime(g, eta, v, h, q)
    w = (1 - eta**2) * eta
    T1 = 1 + eta * h * v / (2 * q)
    if reading == "corrected":
        T2 = (2 - w * qp / q) / (1 + g)
        d = w * hp / h - (1 + g)
    elif reading == "printed":
        T2 = (2 - w * hp / h) / (1 + g)
        d = w * qp / q - (1 - g)
    else:
        raise ValueError(reading)
    _nonzero(d, "T3 denominator")
    return T1, T2, 1 - (1 - g) * eta**2 / d


def w_and_derivative(g, eta, y):
    """(W, dW/deta) with W = eta h v/(2q), using the isothermic closure for h', q'."""
    v, v1, h, q = y[0], y[1], y[2], y[3]
    hp, qp = isothermic_hq_prime(g, eta, v, h, q)
    W = eta * h * v / (2 * q)
    return W, W * (1 / eta + hp / h + v1 / v - qp / q)


def w_from_pvi(X, V, Vp, V2, eta):
    """(W, W', W'') in eta from a PVI state, W = (V - X)/X, X = 1/(1 - eta^2)."""
    Xe, Xee = dX_deta(eta, X), d2X_deta2(eta, X)
    W = V / X - 1
    WX = Vp / X - V / X**2
    WXX = V2 / X - 2 * Vp / X**2 + 2 * V / X**3
    return W, WX * Xe, WXX * Xe**2 + WX * Xee


def w_ode_rhs(g, K, eta, W, W1, reading="corrected"):
    for a, what in ((W, "W"), (W + 1, "W+1"), (W + eta**2, "W+eta^2"), (eta, "eta"), (1 - eta**2, "1-eta^2")):
        _nonzero(a, what)
    e2 = eta**2
    kX = 1.0 if reading == "corrected" else 0.25
    bracket = (((1 + g) / 2)**2 - kX * ((1 - g) / 2)**2 * e2 / W**2 + K / 4 * (e2 - 1) / (W + 1)**2
               + (1 - K / 4) * e2 * (e2 - 1) / (W + e2)**2)
    return (0.5 * (1 / W + 1 / (W + 1) + 1 / (W + e2)) * W1**2
            - (1 / eta - 2 * eta / (1 - e2) - 2 * eta / (W + e2)) * W1
            + 2 * W * (W + 1) * (W + e2) / (e2 * (1 - e2)**2) * bracket)


def w_ode_residual(g, K, eta, W, W1, W2, reading="corrected"):
    """W'' minus the right side of the second-order ODE for W = eta h v/(2q)."""
    return W2 - w_ode_rhs(g, K, eta, W, W1, reading)


# ---------------------------------------------------------------- eta <-> X helpers

def X_of_eta(eta):
    return 1 / (1 - np.asarray(eta, dtype=complex)**2)


def dX_deta(eta, X):
    return 2 * eta * X**2


def d2X_deta2(eta, X):
    return 2 * X**2 + 8 * eta**2 * X**3


def X_of_arg(argz):
    """X at eta = z/zb for arg z = argz (Re X = 1/2)."""
    return 0.5 + 0.5j / np.tan(2 * np.asarray(argz, dtype=float))


def x_path_for_sector(arg_lo, arg_hi, margin=0.05):
    """Segment in the X plane covering the sector arg_lo <= arg z <= arg_hi."""
    if not (0 < arg_lo - margin and arg_hi + margin < np.pi / 2):
        raise DomainSingular("sector must stay inside 0 < arg z < pi/2")
    return PathSpec.segment(X_of_arg(arg_lo - margin), X_of_arg(arg_hi + margin), forbidden=(0, 1))


def generic_theta(g, K):
    """Exponents of the generic reduction (signs as used by the Riccati family)."""
    rK = np.sqrt(complex(K))
    return PviParams((1 + g) / 2, rK / 2, rK / 2, (1 - g) / 2)


def hq_closed_form(g, K, X, V, Vp):
    bracket = (X * (X - 1) * Vp - (1 + g) / 2 * V * (V - 1))**2 - K / 4 * (V - X)**2
    return 2 * (X - 1) / (V * (V - 1) * (V - X)) * bracket


# ---------------------------------------------------------------- reduced solutions

class ReducedSolution:
    """A solution of the eta-system; state(eta) returns rows (v, v', h, q, r)."""
    family = "g"

    def __init__(self, params, K, meta=None):
        self.params = params
        self.K = K
        self.meta = dict(meta or {})

    @property
    def g(self):
        return self.params.g

    def state(self, eta, near=True):
        raise NotImplementedError

    def first_integral(self, eta):
        eta = np.atleast_1d(np.asarray(eta, dtype=complex))
        return first_integral_g(self.params, eta, self.state(eta))


def _traj_at(traj, X, near):
    X = np.atleast_1d(np.asarray(X, dtype=complex))
    if near:
        s = traj.path.param_of(X)
        if np.max(np.abs(traj.path.point(s) - X)) > 0.25:
            raise ExtrapolationBeyondTrajectory("point too far from the integration path")
        lo, hi = traj.params[0], traj.params[-1]
        if np.any(s < lo - 1e-9) or np.any(s > hi + 1e-9):
            raise ExtrapolationBeyondTrajectory("point beyond the ends of the trajectory")
        return traj.eval_near(X).T
    return traj.at_point(X).T


class GenericSolution(ReducedSolution):
    """Generic g^2 != 1 solution built from a PVI trajectory by quadrature of h and q."""
    family = "generic"

    def __init__(self, g, K, traj, h0, q0, meta=None):
        super().__init__(ReducedParamsG(g, 0.0), K, meta)
        self.traj = traj
        self.h0, self.q0 = h0, q0

    def state(self, eta, near=True):
        eta = np.atleast_1d(np.asarray(eta, dtype=complex))
        X = X_of_eta(eta)
        V, Vp, lh, lq = _traj_at(self.traj, X, near)
        g = self.g
        h, q = np.exp(lh), np.exp(lq)
        W = (V - X) / X
        v = 2 * q * W / (eta * h)
        dlh = (1 + g) / (2 * (X - 1)) - (1 - g) / (2 * (V - X))
        dlq = 1 / (X - 1) - (1 + g) * V / (2 * X * (X - 1))
        dW = Vp / X - V / X**2
        Xe = dX_deta(eta, X)
        v1 = v * ((dlq + dW / W - dlh) * Xe - 1 / eta)
        return _stack(v, v1, h, q, q)

    def pvi_state(self, X):
        return self.traj.at_point(X).T[:2]


def generic_solution_from_pvi(g, K, path, V0, Vp0, h0=1.0, cfg=None, check_points=64, tol=1e-6):
    """Integrate PVI with the generic exponent table, plus log h and log q by quadrature.

    path is in the X plane starting at the initial point; h(X0) = h0 and q(X0) is set
    by the closed-form product hq at X0. The product is re-checked at check_points
    samples; ProductMismatch is raised beyond tol (relative).
    """
    if abs(g * g - 1) < 1e-12:
        raise BranchPreconditionFailed("generic branch needs g^2 != 1")
    p = generic_theta(g, K)
    ti2, t02, t12, tx2 = p.squares

    def rhs(X, y):
        V, Vp = y[0], y[1]
        if np.any(np.abs(V - X) < 1e-12) or np.any(np.abs(V) < 1e-12) or np.any(np.abs(V - 1) < 1e-12):
            raise QuadraturePathSingular("V meets 0, 1 or X on the quadrature path")
        V2 = _kernels.pvi_rhs_array(ti2, t02, t12, tx2, X, V, Vp).reshape(np.shape(V))
        return _stack(Vp, V2, (1 + g) / (2 * (X - 1)) - (1 - g) / (2 * (V - X)),
                      1 / (X - 1) - (1 + g) * V / (2 * X * (X - 1)))

    X0 = path.point(0.0)
    hq0 = hq_closed_form(g, K, X0, V0, Vp0)
    if abs(hq0) < 1e-14:
        raise QuadraturePathSingular("hq vanishes at the initial point")
    y0 = [V0, Vp0, np.log(complex(h0)), np.log(hq0 / complex(h0))]
    try:
        traj = integrate_ode(rhs, y0, path, cfg or IntegratorConfig(rtol=1e-11, atol=1e-13),
                             meta={"family": "generic", "g": g, "K": K})
    except (PoleDetected, SingularPoint) as e:
        raise QuadraturePathSingular(str(e)) from e
    sol = GenericSolution(g, K, traj, complex(h0), hq0 / complex(h0), meta={"theta": p.as_list()})
    s, Y = traj.sample(check_points)
    X = path.point(s)
    V, Vp, lh, lq = Y.T
    closed = hq_closed_form(g, K, X, V, Vp)
    rel = np.abs(np.exp(lh + lq) - closed) / np.abs(closed)
    sol.hq_rel = rel
    if np.max(rel) > tol:
        raise ProductMismatch(f"hq quadrature vs closed form: {np.max(rel):.3e}")
    return sol


def riccati_seed(g, K, X0, V0):
    """(V0, V0') on the one-parameter Riccati family of the generic exponents."""
    rK = np.sqrt(complex(K))
    t0, t1, txm1 = rK / 2, -rK / 2, (1 - g) / 2 - 1
    Vp0 = -V0 * (V0 - 1) * (V0 - X0) / (X0 * (X0 - 1)) * (t0 / V0 + t1 / (V0 - 1) + txm1 / (V0 - X0))
    return V0, Vp0


# g = +-1 branches -----------------------------------------------------------

class HamiltonianBranch(ReducedSolution):
    """g = +1 (q Hamiltonian) or g = -1 (h Hamiltonian) branch from a PVI trajectory."""

    def __init__(self, g, c, K, const, traj, theta, meta=None):
        super().__init__(ReducedParamsG(g, c), K, meta)
        self.family = "g+1" if g == 1 else "g-1"
        self.const = const
        self.traj = traj
        self.theta = theta

    def state(self, eta, near=True):
        eta = np.atleast_1d(np.asarray(eta, dtype=complex))
        X = X_of_eta(eta)
        V, Vp = _traj_at(self.traj, X, near)
        Y, Y1, Y2 = y_derivs(self.theta, PviState(X, V, Vp))
        Xe, Xee = dX_deta(eta, X), d2X_deta2(eta, X)
        e2 = eta**2
        k = -8 / self.const
        f, f1, f2 = k * Y, k * Y1 * Xe, k * (Y2 * Xe**2 + Y1 * Xee)
        if self.g == 1:
            ch = self.const
            q, q1, q2 = f, f1, f2
            h = ch * e2 / (e2 - 1)
            h1 = -2 * ch * eta / (e2 - 1)**2
            v = (e2 - 1) * q1 / h
            v1 = (2 * eta * q1 + (e2 - 1) * q2) / h - v * h1 / h
            return _stack(v, v1, h, q, q)
        cq = self.const
        h, h1, h2 = f, f1, f2
        _nonzero(h1, "h'")
        q = cq * e2 / (e2 - 1)
        num = 4 * cq * e2
        den = (1 - e2)**2 * h1
        dden = -4 * eta * (1 - e2) * h1 + (1 - e2)**2 * h2
        v = num / den
        v1 = 8 * cq * eta / den - num * dden / den**2
        return _stack(v, v1, h, q, q)


class ElementaryBranch(ReducedSolution):
    """Closed-form g = +-1 branches (h = 0 for g = 1, q = 0 for g = -1)."""

    def __init__(self, g, c, K, const, xi0=0.0, v0=1.0):
        super().__init__(ReducedParamsG(g, c), K)
        self.family = "g+1-elem" if g == 1 else "g-1-elem"
        self.const, self.xi0, self.v0 = const, xi0, v0

    def _s(self, xi):
        """s(xi) and ds/dxi with s = eta v (g = 1) or eta / v (g = -1)."""
        K, t = self.K, xi - self.xi0
        A = self.const**2 if self.g == 1 else self.const**2 - self.params.c**2
        m = 4 if self.g == 1 else 1
        if abs(A) < 1e-300:
            rK = np.sqrt(complex(K))
            return self.v0 * np.exp(rK * t), rK * self.v0 * np.exp(rK * t)
        if abs(K) == 0:
            return m / 4 * A * t**2, m / 2 * A * t
        rK = np.sqrt(complex(K))
        sh = np.sinh(rK * t / 2)
        return m * A / K * sh**2, m * A / K * sh * np.cosh(rK * t / 2) * rK

    def state(self, eta, near=True):
        eta = np.atleast_1d(np.asarray(eta, dtype=complex))
        xi = np.log(eta)
        s, s1 = self._s(xi)
        if self.g == 1:
            v = s / eta
            v1 = (s1 - s) / eta**2
            h = 0 * eta
            q = self.const + 0 * eta
        else:
            v = eta / s
            v1 = (1 / s - s1 / s**2)
            h = self.const + 0 * eta
            q = 0 * eta
        return _stack(v, v1, h, q, q)


def branch_theta(branch, K, const, c=0.0):
    """SD-Ia data (A0, A3) and exponents for the Hamiltonian branches."""
    if branch == "g+1":
        A0, A3 = K / 4, -K**2 / 64
    else:
        A0, A3 = (K + 2 * const * c) / 4, -K * (K + 4 * const * c) / 64
    return {"A0": A0, "A2": 0, "A3": A3, "A4": 0}, theta_from_sd1a(A0, A3)


def g_branch_solutions(branch, params, path=None, cfg=None):
    """Reduced solution of one g = +-1 branch.

    branch: 'g+1-elem', 'g+1', 'g-1-elem', 'g-1'. params keys:
    K, c (g = -1 only), c_h (g+1), c_q (g+1-elem, g-1), h0 (g-1-elem), xi0, v0,
    and for the Hamiltonian branches V0, Vp0 (initial PVI data at the path start).
    """
    K = params.get("K", 0.0)
    c = params.get("c", 0.0)
    if branch in ("g+1", "g+1-elem") and abs(c) > 1e-12:
        raise BranchPreconditionFailed("g = +1 needs c = 0")
    if branch == "g+1-elem":
        return ElementaryBranch(1, 0.0, K, params.get("c_q", 1.0), params.get("xi0", 0.0), params.get("v0", 1.0))
    if branch == "g-1-elem":
        return ElementaryBranch(-1, c, K, params.get("h0", 1.0), params.get("xi0", 0.0), params.get("v0", 1.0))
    if branch not in ("g+1", "g-1"):
        raise ValueError(f"unknown branch {branch!r}")
    key = "c_h" if branch == "g+1" else "c_q"
    const = params.get(key, 0)
    if abs(const) < 1e-14:
        raise BranchPreconditionFailed(f"{key} must be nonzero")
    coeffs, theta = branch_theta(branch, K, const, c)
    if path is None:
        path = x_path_for_sector(0.3, 1.1)
    t02, t12 = theta.squares[1:3]

    def rhs(X, y):
        return _stack(y[1], _kernels.pvi_rhs_array(0, t02, t12, 1, X, y[0], y[1]).reshape(np.shape(y[0])))
    traj = integrate_ode(rhs, [params["V0"], params["Vp0"]], path, cfg or IntegratorConfig(rtol=1e-11, atol=1e-13),
                         meta={"family": branch})
    sol = HamiltonianBranch(1 if branch == "g+1" else -1, c, K, const, traj, theta,
                            meta={"sd1a": coeffs})
    sol.sd_coeffs = SdCoeffs("sd1a", coeffs)
    return sol


# ---------------------------------------------------------------- Bonnet chain

@dataclass(frozen=True)
class BonnetParams:
    c_z: complex
    c_q: complex
    c_h: complex = 1.0
    C: complex = 0.0
    K: complex = None

    @classmethod
    def from_c(cls, c_z, c_q, c_h, c, K=None):
        """C from the lift constant c: C = (c / c_h)^2."""
        return cls(c_z, c_q, c_h, (c / c_h)**2, K)


class BonnetChain:
    """Evaluators of the Bonnet reduction in xi = Re w, state (v, v', h)."""

    def __init__(self, p):
        self.p = p

    def S(self, xi):
        return sinh_kernel(self.p.c_z, xi)

    def cth(self, xi):
        return coth_kernel(self.p.c_z, xi)

    def rhs(self, xi, y):
        v, v1, h = y
        _nonzero(v, "v")
        cq, C = self.p.c_q, self.p.C
        S2 = self.S(xi)**2
        v2 = v * (v1**2 / v**2 - 8 * cq * ((h**2 - C) * v - S2 / v))
        return _stack(v1, v2, S2 / v)

    def first_integral(self, xi, y):
        v, v1, h = y[:3]
        cq, C = self.p.c_q, self.p.C
        return (v1 / v)**2 + 16 * cq * ((h**2 - C) * v + self.S(xi)**2 / v + 2 * self.cth(xi) * h)

    def v_from_h(self, xi, h1):
        _nonzero(h1, "h'")
        return self.S(xi)**2 / h1

    def ode3_residual(self, xi, h, h1, h2, h3):
        _nonzero(h1, "h'")
        cq, C = self.p.c_q, self.p.C
        return h3 / h1 - h2**2 / h1**2 + 8 * cq * h1 - self.S(xi)**2 * (8 * cq * (h**2 - C) / h1 + 2)

    def ode2_value(self, xi, h, h1, h2):
        _nonzero(h1, "h'")
        cq, C = self.p.c_q, self.p.C
        t = 2 * self.cth(xi)
        return (h2 / h1 + t)**2 + 16 * cq * (self.S(xi)**2 * (h**2 - C) / h1 + h1 + t * h)

    def ode2_residual(self, xi, h, h1, h2, K=None):
        return self.ode2_value(xi, h, h1, h2) - (self.p.K if K is None else K)

    def ode2_value_cz0(self, xi, h, h1, h2):
        """The c_z = 0 form written with explicit 1/xi."""
        _nonzero(h1, "h'")
        cq, C = self.p.c_q, self.p.C
        return (h2 / h1 + 2 / xi)**2 + 16 * cq * ((h**2 - C) / (xi**2 * h1) + h1 + 2 * h / xi)

    def h_derivs_of_v(self, xi, y):
        """(h, h', h'', h''') along a trajectory state, from the system itself."""
        v, v1, h = y[:3]
        d = self.rhs(xi, y)
        v2 = d[1]
        S = self.S(xi)
        cth = self.cth(xi)
        S2 = S**2
        dS2 = -2 * S2 * cth               # d/dxi (4cz/sinh)^2
        ddS2 = -2 * dS2 * cth + 2 * S2 * S2
        h1 = S2 / v
        h2 = dS2 / v - S2 * v1 / v**2
        h3 = ddS2 / v - 2 * dS2 * v1 / v**2 - S2 * (v2 / v**2 - 2 * v1**2 / v**3)
        return h, h1, h2, h3

    # PVI / PV links
    def pvi_coeffs(self, K=None):
        K = self.p.K if K is None else K
        cz, cq, C = self.p.c_z, self.p.c_q, self.p.C
        A0 = K / (8 * cz)**2
        A3 = cq**2 * C / cz**2 - K**2 / (4 * (8 * cz)**4)
        return {"A0": A0, "A2": 0, "A3": A3, "A4": 0}

    def pvi_theta(self, K=None):
        c = self.pvi_coeffs(K)
        return theta_from_sd1a(c["A0"], c["A3"])

    def h_from_Y(self, X, Y, Y1, Y2):
        """(xi, h, h', h'') from Y(X) and its X-derivatives, X = 1/(1 - e^{8 cz xi})."""
        cz, cq = self.p.c_z, self.p.c_q
        E = 1 - 1 / X
        xi = np.log(E) / (8 * cz)
        Xx = 8 * cz * E * X**2
        Xxx = 8 * cz * Xx * (1 + 2 * E * X)
        k = 2 * cz / cq
        return xi, k * Y, k * Y1 * Xx, k * (Y2 * Xx**2 + Y1 * Xxx)

    def pv_coeffs(self, K=None):
        K = self.p.K if K is None else K
        return {"A1": K, "A2": 64 * self.p.c_q**2 * self.p.C, "A3": 0, "A4": 0}

    def Y_from_h(self, xi, h, h1, h2):
        """(X, Y, Y', Y'') with X = xi and Y = 4 c_q xi h."""
        k = 4 * self.p.c_q
        return xi, k * xi * h, k * (h + xi * h1), k * (2 * h1 + xi * h2)


def bonnet_chain(p):
    return BonnetChain(p)


# ---------------------------------------------------------------- BEK chain

@dataclass(frozen=True)
class BekParams:
    c_z: complex
    c_q: complex
    c_h: complex = 1.0
    c_u: complex = 1.0
    theta: complex = 0.0
    K: complex = None
    c: complex = 0.0

    def __post_init__(self):
        if abs(self.c) > 1e-12:
            raise ConstraintViolated("the BEK reduction needs c = 0")


class BekChain:
    """Evaluators of the BEK reduction in x, state (v, v', q, r)."""

    def __init__(self, p):
        self.p = p

    def S(self, x):
        return sinh_kernel(self.p.c_z, x)

    def cth(self, x):
        return coth_kernel(self.p.c_z, x)

    def rhs(self, x, y):
        v, v1, q, r = y
        _nonzero(v, "v")
        cq, cu, th = self.p.c_q, self.p.c_u, self.p.theta
        S2 = self.S(x)**2
        v2 = v * (v1**2 / v**2 - 8 * cu * v + S2 * (8 * cq**2 * (q + 1j * th) * (r - 1j * th) / (cu * v) + 2))
        qp = cu * v / cq
        return _stack(v1, v2, qp, qp)

    def first_integral(self, x, y):
        v, v1, q, r = y[:4]
        cq, cu, th = self.p.c_q, self.p.c_u, self.p.theta
        return ((v1 / v + 2 * self.cth(x))**2 + 16 * self.S(x)**2 * cq**2 / (cu * v) * (q + 1j * th) * (r - 1j * th)
                + 16 * cu * v + 16 * cq * self.cth(x) * (q + r))

    def ode3_residual(self, x, q, q1, q2, q3):
        _nonzero(q1, "q'")
        cq, th = self.p.c_q, self.p.theta
        return q3 / q1 - q2**2 / q1**2 + 8 * cq * q1 - self.S(x)**2 * (8 * cq * (q**2 + th**2) / q1 + 2)

    def ode2_value(self, x, q, q1, q2):
        _nonzero(q1, "q'")
        cq, th = self.p.c_q, self.p.theta
        t = 2 * self.cth(x)
        return (q2 / q1 + t)**2 + 16 * cq * (self.S(x)**2 * (q**2 + th**2) / q1 + q1 + t * q)

    def ode2_residual(self, x, q, q1, q2, K=None):
        return self.ode2_value(x, q, q1, q2) - (self.p.K if K is None else K)

    def q_derivs_of_v(self, x, y):
        v, v1, q, r = y[:4]
        v2 = self.rhs(x, y)[1]
        k = self.p.c_u / self.p.c_q
        return q, k * v, k * v1, k * v2

    def exchanged_bonnet(self):
        """The Bonnet chain obtained by h -> q, C -> -theta^2."""
        p = self.p
        return BonnetChain(BonnetParams(p.c_z, p.c_q, p.c_h, -p.theta**2, p.K))

    def exchange_check(self, x, f, f1, f2):
        """ODE2 of this chain minus the Bonnet ODE2 with C = -theta^2 (zero identically)."""
        return self.ode2_value(x, f, f1, f2) - self.exchanged_bonnet().ode2_value(x, f, f1, f2)


def bek_chain(p):
    return BekChain(p)


class ChainSolution:
    """Trajectory of a Bonnet or BEK system in the real variable (complex path allowed)."""

    def __init__(self, family, chain, traj):
        self.family = family
        self.chain = chain
        self.traj = traj
        y0 = traj.states[0]
        self.K = complex(chain.first_integral(traj.path.point(0.0), y0))

    def state(self, x, near=True):
        return _traj_at(self.traj, x, near)


def integrate_chain(chain, x0, x1, y0, cfg=None):
    family = "bonnet" if isinstance(chain, BonnetChain) else "bek"
    path = PathSpec.segment(x0, x1)
    traj = integrate_ode(chain.rhs, y0, path, cfg or IntegratorConfig(rtol=1e-11, atol=1e-13),
                         meta={"family": family})
    return ChainSolution(family, chain, traj)


# ---------------------------------------------------------------- lifts

@dataclass
class LiftSpec:
    family: str
    c: complex = 0.0
    extra: dict = field(default_factory=dict)


def _check_sector(Z):
    a = np.angle(Z)
    if np.any(np.abs(Z) < 1e-8) or np.any(a <= 1e-3) or np.any(a >= np.pi / 2 - 1e-3):
        raise DomainSingular("grid must lie in the open sector 0 < arg z < pi/2 (eta = z/zb away from +-1)")


def lie_sampler(sol, c=0.0):
    g = sol.g

    def sampler(z, zb):
        z = np.asarray(z, dtype=complex)
        zb = np.asarray(zb, dtype=complex)
        eta = (z / zb).ravel()
        v, v1, h, q, r = sol.state(eta, near=True)
        sh = z.shape
        lz = np.log(z)
        return {"u": 2 * g * lz + np.log(v).reshape(sh), "H": np.exp((-1 - g) * lz) * h.reshape(sh),
                "Q": np.exp((g - 1) * lz) * q.reshape(sh), "R": np.exp((g - 1) * lz) * r.reshape(sh)}
    return sampler


def bonnet_sampler(sol):
    p = sol.chain.p
    cz, cq, ch = p.c_z, p.c_q, p.c_h
    if abs(cz) < 1e-14:
        raise DomainSingular("the Bonnet lift needs c_z != 0")

    def sampler(z, zb):
        z = np.asarray(z, dtype=complex)
        zb = np.asarray(zb, dtype=complex)
        x = (z + zb) / 2
        v, v1, h = sol.state(x.ravel(), near=True)
        v, h = v.reshape(z.shape), h.reshape(z.shape)
        a, b, s4 = np.sinh(2 * cz * z), np.sinh(2 * cz * zb), np.sinh(4 * cz * x)
        k = 2 * cq / ch * 4 * cz
        return {"u": np.log(4 * cq / ch**2 * v), "H": ch * h, "Q": k * b / (a * s4), "R": k * a / (b * s4)}
    return sampler


def bek_sampler(sol):
    p = sol.chain.p
    cz, cq, ch, cu, th = p.c_z, p.c_q, p.c_h, p.c_u, p.theta

    def sampler(z, zb):
        z = np.asarray(z, dtype=complex)
        zb = np.asarray(zb, dtype=complex)
        x = (z + zb) / 2
        v, v1, q, r = sol.state(x.ravel(), near=True)
        v, q, r = v.reshape(z.shape), q.reshape(z.shape), r.reshape(z.shape)
        Hinv = 2 * cz / ch * (1 / np.tanh(2 * cz * z) + 1 / np.tanh(2 * cz * zb))
        H = 1 / Hinv
        return {"u": np.log(4 * cu * v / H**2), "H": H,
                "Q": 4 * cq / ch * (2 * cz / np.sinh(2 * cz * z))**2 * (q + 1j * th),
                "R": 4 * cq / ch * (2 * cz / np.sinh(2 * cz * zb))**2 * (r - 1j * th)}
    return sampler


def lift_to_fields(sol, grid, c=None):
    """FieldGrid of a reduced solution on grid (z = x + i y, zb = conj z).

    Lie families use e^u = z^{2g} v(eta), H = z^{-1-g} h, Q = z^{g-1} q, R = z^{g-1} r,
    eta = z/zb. Bonnet and BEK use their explicit w-dependence with xi = Re z.
    """
    Z = grid.z
    if isinstance(sol, ChainSolution):
        if np.any(np.abs(Z.real) < 1e-8):
            raise DomainSingular("Re z = 0 hits the sinh(4 c_z x) zero")
        if sol.family == "bonnet":
            samp = bonnet_sampler(sol)
            cc = 0.0 if c is None else c
        else:
            samp = bek_sampler(sol)
            cc = 0.0
    else:
        _check_sector(Z)
        samp = lie_sampler(sol)
        cc = sol.params.c if c is None else c
    vals = samp(Z, np.conj(Z))
    for n, a in vals.items():
        if not np.all(np.isfinite(a)):
            raise DomainSingular(f"field {n} is singular on the grid")
    return FieldGrid(grid, unwrap2d(vals["u"]), vals["H"], vals["Q"], vals["R"], cc, samp, sol.family)
