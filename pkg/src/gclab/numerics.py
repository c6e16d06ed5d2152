"""Numerical backbone: paths in the complex plane, an adaptive DOPRI5(4) integrator
for complex states, uniform (x, y) grids with Wirtinger stencils, convergence slopes
and CSV I/O.

State convention: a state is a complex array of shape (n,) or, for vectorised
evaluation at many points at once, (n, m). Right-hand sides are called as
rhs(z, y) and must broadcast over the trailing axis.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (ExtrapolationBeyondTrajectory, GridTooSmall, InsufficientData,
                     MaxStepsExceeded, PathError, PoleDetected, StepUnderflow)

FMT = "%.17g"


# ---------------------------------------------------------------- paths

@dataclass(frozen=True)
class PathSpec:
    """A piecewise smooth path z(s), s in [0, length], s being arclength.

    kind is 'segment', 'polyline' or 'arc'. For arcs, points holds
    (center, radius, start angle, end angle) packed as complex numbers.
    """
    kind: str
    points: tuple
    forbidden: tuple = ()
    clearance: float = None

    @classmethod
    def segment(cls, start, end, forbidden=(), clearance=None):
        return cls("segment", (complex(start), complex(end)), tuple(complex(f) for f in forbidden), clearance)

    @classmethod
    def polyline(cls, pts, forbidden=(), clearance=None):
        return cls("polyline", tuple(complex(p) for p in pts), tuple(complex(f) for f in forbidden), clearance)

    @classmethod
    def arc(cls, center, radius, phi0, phi1, forbidden=(), clearance=None):
        return cls("arc", (complex(center), complex(radius), complex(phi0), complex(phi1)),
                   tuple(complex(f) for f in forbidden), clearance)

    def __post_init__(self):
        if self.kind not in ("segment", "polyline", "arc"):
            raise PathError(f"unknown path kind {self.kind!r}")
        if self.kind == "arc":
            if self.points[1].real <= 0 or self.points[2] == self.points[3]:
                raise PathError("degenerate arc")
        else:
            if len(self.points) < 2:
                raise PathError("a path needs at least two points")
            for a, b in zip(self.points[:-1], self.points[1:]):
                if a == b:
                    raise PathError("consecutive waypoints coincide")
        self.check_clearance()

    # geometry ---------------------------------------------------------
    @property
    def start(self):
        return self.point(0.0)

    @property
    def end(self):
        return self.point(self.length)

    def _seglens(self):
        p = np.asarray(self.points)
        return np.abs(np.diff(p))

    @property
    def length(self):
        if self.kind == "arc":
            r = self.points[1].real
            return r * abs(self.points[3].real - self.points[2].real)
        return float(self._seglens().sum())

    def breaks(self):
        """Parameter values of the corners (including both ends)."""
        if self.kind == "arc":
            return np.array([0.0, self.length])
        return np.concatenate([[0.0], np.cumsum(self._seglens())])

    def point(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "arc":
            c, r, a0, a1 = (self.points[0], self.points[1].real, self.points[2].real, self.points[3].real)
            sgn = 1.0 if a1 > a0 else -1.0
            return c + r * np.exp(1j * (a0 + sgn * s / r))
        b = self.breaks()
        p = np.asarray(self.points)
        k = np.clip(np.searchsorted(b, s, side="right") - 1, 0, len(p) - 2)
        t = (s - b[k]) / (b[k + 1] - b[k])
        return p[k] + t * (p[k + 1] - p[k])

    def tangent(self, s):
        """dz/ds (unit modulus)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "arc":
            c, r, a0, a1 = (self.points[0], self.points[1].real, self.points[2].real, self.points[3].real)
            sgn = 1.0 if a1 > a0 else -1.0
            return 1j * sgn * np.exp(1j * (a0 + sgn * s / r))
        b = self.breaks()
        p = np.asarray(self.points)
        k = np.clip(np.searchsorted(b, s, side="right") - 1, 0, len(p) - 2)
        d = p[k + 1] - p[k]
        return d / np.abs(d)

    def param_of(self, z):
        """Parameter of the path point closest to z (vectorised)."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "arc":
            c, r, a0, a1 = (self.points[0], self.points[1].real, self.points[2].real, self.points[3].real)
            sgn = 1.0 if a1 > a0 else -1.0
            ang = np.angle((z - c) * np.exp(-1j * a0)) * sgn
            return np.clip(ang * r, 0.0, self.length)
        b = self.breaks()
        p = np.asarray(self.points)
        best = np.full(z.shape, np.inf)
        out = np.zeros(z.shape)
        for k in range(len(p) - 1):
            d = p[k + 1] - p[k]
            t = np.clip(((z - p[k]) * np.conj(d)).real / abs(d) ** 2, 0, 1)
            dist = np.abs(p[k] + t * d - z)
            upd = dist < best
            best = np.where(upd, dist, best)
            out = np.where(upd, b[k] + t * abs(d), out)
        return out

    def distance_to(self, w):
        s = self.param_of(w)
        return float(np.abs(self.point(s) - w))

    def check_clearance(self):
        rad = self.clearance if self.clearance is not None else 1e-3 * self.length
        for f in self.forbidden:
            if self.distance_to(f) < rad:
                raise PathError(f"path passes within {rad:.3g} of forbidden point {f}")

    def reversed(self):
        if self.kind == "arc":
            c, r, a0, a1 = self.points
            return PathSpec("arc", (c, r, a1, a0), self.forbidden, self.clearance)
        return PathSpec(self.kind, tuple(reversed(self.points)), self.forbidden, self.clearance)


def detour_path(start, end, forbidden=(), radius=None):
    """Straight segment from start to end, bent around forbidden points that lie too close.

    Each offending point f gets a waypoint at f + radius*n, n the left unit normal.
    """
    start, end = complex(start), complex(end)
    d = end - start
    if d == 0:
        raise PathError("start and end coincide")
    L = abs(d)
    radius = radius if radius is not None else 0.25 * min([L] + [abs(a - b) for a in forbidden for b in forbidden if a != b])
    n = 1j * d / L
    hits = []
    for f in forbidden:
        t = ((complex(f) - start) * np.conj(d)).real / L**2
        if 0 < t < 1 and abs(start + t * d - f) < radius:
            hits.append((t, complex(f)))
    if not hits:
        return PathSpec.segment(start, end, forbidden)
    pts = [start] + [f + radius * n for _, f in sorted(hits)] + [end]
    return PathSpec.polyline(pts, forbidden)


# ---------------------------------------------------------------- integrator

@dataclass
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = np.inf
    pole_threshold: float = 1e8
    max_steps: int = 200000
    first_step: float = None

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if not self.pole_threshold > 1:
            raise ValueError("pole_threshold must exceed 1")

    def as_dict(self):
        return dict(rtol=self.rtol, atol=self.atol, max_step=None if math.isinf(self.max_step) else self.max_step,
                    pole_threshold=self.pole_threshold, max_steps=self.max_steps)


# Dormand-Prince 5(4), with Hairer's continuous extension
C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
D = np.array([-12715105075 / 11282082432, 0, 87487479700 / 32700410799, -10690763975 / 1880347072,
              701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423])


def _dopri_step(f, s, y, h, k1):
    k = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * kk for a, kk in zip(A[i], k) if a != 0)
        k.append(f(s + C[i] * h, yi))
    y1 = y + h * sum(a * kk for a, kk in zip(A[6], k) if a != 0)
    err = h * sum(e * kk for e, kk in zip(E, k) if e != 0)
    return y1, err, k


class Trajectory:
    """Dense solution of an ODE along a path.

    params/states hold the accepted step points; eval(s) interpolates with the
    4th-order continuous extension; eval_near(z) reaches points off the path.
    """

    def __init__(self, path, rhs, meta=None):
        self.path = path
        self.rhs = rhs
        self.meta = dict(meta or {})
        self._s = []
        self._y = []
        self._dense = []    # per step: (s0, h, rcont (5, n))

    def _append(self, s, y):
        self._s.append(s)
        self._y.append(y)

    @property
    def params(self):
        return np.asarray(self._s)

    @property
    def states(self):
        return np.asarray(self._y)

    @property
    def points(self):
        return self.path.point(self.params)

    def __len__(self):
        return len(self._s)

    def eval(self, s):
        """States at parameters s (array); returns shape (len(s), n)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        s0 = np.array([d[0] for d in self._dense])
        lo, hi = self._s[0], self._s[-1]
        tol = 1e-12 * max(1.0, abs(hi))
        if np.any(s < lo - tol) or np.any(s > hi + tol):
            raise ExtrapolationBeyondTrajectory(f"requested parameter outside [{lo}, {hi}]")
        k = np.clip(np.searchsorted(s0, s, side="right") - 1, 0, len(s0) - 1)
        a = s0[k]
        h = np.array([d[1] for d in self._dense])[k]
        r = self._rcont()[k]            # (m, 5, n)
        th = ((s - a) / h)[:, None]
        t1 = 1 - th
        return r[:, 0] + th * (r[:, 1] + t1 * (r[:, 2] + th * (r[:, 3] + t1 * r[:, 4])))

    def _rcont(self):
        if getattr(self, "_rc", None) is None or len(self._rc) != len(self._dense):
            self._rc = np.array([d[2] for d in self._dense])
        return self._rc

    def at_point(self, z):
        """State at a point z lying on the path."""
        return self.eval(self.path.param_of(np.atleast_1d(z)))

    def deriv(self, s):
        """dy/dz at parameters s, from the stored rhs."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        y = self.eval(s)
        z = self.path.point(s)
        return np.asarray(self.rhs(z, y.T)).T

    def eval_near(self, z, hmax=2e-3):
        """States at arbitrary complex points z, reached by RK4 along straight spokes from the path.

        Vectorised over z; the spoke step is at most hmax, so the error is O(hmax^4).
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        s = self.path.param_of(z)
        y = self.eval(s).T.copy()      # (n, m)
        z0 = self.path.point(s)
        dist = np.abs(z - z0)
        nsub = max(1, int(np.ceil(dist.max() / hmax))) if dist.size else 1
        dz = (z - z0) / nsub
        zz = z0.copy()
        f = self.rhs
        for _ in range(nsub):
            k1 = f(zz, y)
            k2 = f(zz + dz / 2, y + dz / 2 * k1)
            k3 = f(zz + dz / 2, y + dz / 2 * k2)
            k4 = f(zz + dz, y + dz * k3)
            y = y + dz / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            zz = zz + dz
        return y.T

    def sample(self, n):
        s = np.linspace(self._s[0], self._s[-1], n)
        return s, self.eval(s)


def _initial_step(f, s, y, k1, order, rtol, atol, hmax):
    sc = atol + rtol * np.abs(y)
    d0 = np.max(np.abs(y) / sc)
    d1 = np.max(np.abs(k1) / sc)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, hmax)
    y1 = y + h0 * k1
    k2 = f(s + h0, y1)
    d2 = np.max(np.abs(k2 - k1) / sc) / h0
    m = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if m <= 1e-15 else (0.01 / m) ** (1.0 / (order + 1))
    return min(100 * h0, h1, hmax)


def integrate_ode(rhs, ic, path, cfg=None, t_eval=None, meta=None):
    """Integrate dy/dz = rhs(z, y) along path, as dy/ds = rhs(z(s), y) z'(s).

    Returns a Trajectory. t_eval (path parameters) fills traj.t_eval / traj.y_eval.
    """
    cfg = cfg or IntegratorConfig()
    y = np.asarray(ic, dtype=complex).copy()
    if not np.all(np.isfinite(rhs(path.point(0.0), y))):
        raise ValueError("rhs is not finite at the initial condition")
    traj = Trajectory(path, rhs, meta)
    traj._append(0.0, y.copy())
    b = path.breaks()
    beta, safe = 0.04, 0.9
    expo1 = 0.2 - beta * 0.75
    facc1, facc2 = 1 / 0.2, 1 / 10.0
    nsteps = 0
    for p0, p1 in zip(b[:-1], b[1:]):
        # on each smooth piece the tangent is evaluated inside the piece
        def f(s, yy, _mid=0.5 * (p0 + p1)):
            ss = min(max(s, p0), p1)
            if path.kind == "arc":
                return rhs(path.point(ss), yy) * path.tangent(ss)
            return rhs(path.point(ss), yy) * path.tangent(_mid)
        s = p0
        hmax = min(cfg.max_step, p1 - p0)
        k1 = f(s, y)
        h = cfg.first_step or _initial_step(f, s, y, k1, 5, cfg.rtol, cfg.atol, hmax)
        facold = 1e-4
        while s < p1:
            if nsteps >= cfg.max_steps:
                raise MaxStepsExceeded(f"more than {cfg.max_steps} steps")
            last = s + h >= p1 - 1e-14 * max(1.0, abs(p1))
            if last:
                h = p1 - s
            if h < 10 * np.finfo(float).eps * max(1.0, abs(s)):
                raise StepUnderflow(f"step size underflow at parameter {s:.12g}")
            y1, err, k = _dopri_step(f, s, y, h, k1)
            nsteps += 1
            sc = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y1))
            en = float(np.max(np.abs(err) / sc)) if np.all(np.isfinite(y1)) else np.inf
            if not np.isfinite(en):
                if np.all(np.isfinite(y)) and np.max(np.abs(y)) > 1e-3 * cfg.pole_threshold:
                    raise PoleDetected(s, y)
                h *= 0.2
                continue
            fac11 = en ** expo1
            if en <= 1.0:
                fac = fac11 / facold ** beta
                fac = max(facc2, min(facc1, fac / safe))
                hnew = h / fac
                ydiff = y1 - y
                bspl = h * k[0] - ydiff
                r = np.array([y, ydiff, bspl, ydiff - h * k[6] - bspl,
                              h * sum(d * kk for d, kk in zip(D, k) if d != 0)])
                traj._dense.append((s, h, r))
                s = p1 if last else s + h
                y = y1
                k1 = k[6]
                facold = max(en, 1e-4)
                traj._append(s, y.copy())
                if np.max(np.abs(y)) > cfg.pole_threshold:
                    raise PoleDetected(s, y)
                h = min(hnew, hmax)
            else:
                h = h / min(facc1, fac11 / safe)
        # the tangent may jump at a corner: next piece recomputes k1
    traj.nsteps = nsteps
    if t_eval is not None:
        traj.t_eval = np.asarray(t_eval, dtype=float)
        traj.y_eval = traj.eval(traj.t_eval)
    return traj


# ---------------------------------------------------------------- grids

@dataclass
class Grid2D:
    """Uniform (x, y) grid; arrays are indexed [ix, iy]."""
    xr: tuple
    yr: tuple
    nx: int
    ny: int
    fields: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.nx < 5 or self.ny < 5:
            raise GridTooSmall(f"grid {self.nx}x{self.ny} is smaller than 5x5")

    @property
    def x(self):
        return np.linspace(self.xr[0], self.xr[1], self.nx)

    @property
    def y(self):
        return np.linspace(self.yr[0], self.yr[1], self.ny)

    @property
    def hx(self):
        return (self.xr[1] - self.xr[0]) / (self.nx - 1)

    @property
    def hy(self):
        return (self.yr[1] - self.yr[0]) / (self.ny - 1)

    @property
    def h(self):
        return max(self.hx, self.hy)

    @property
    def z(self):
        Xm, Ym = np.meshgrid(self.x, self.y, indexing="ij")
        return Xm + 1j * Ym

    def like(self, fields=None):
        return Grid2D(self.xr, self.yr, self.nx, self.ny, dict(fields or {}))

    def refined(self, factor=2):
        return Grid2D(self.xr, self.yr, factor * (self.nx - 1) + 1, factor * (self.ny - 1) + 1)

    def interior(self, width=1):
        m = np.zeros((self.nx, self.ny), dtype=bool)
        m[width:-width, width:-width] = True
        return m


def _check(grid, order):
    need = 5 if order == 2 else 7
    if grid.nx < need or grid.ny < need:
        raise GridTooSmall(f"order-{order} stencils need at least {need} points per axis")


def d_x(f, grid, order=2):
    return _kernels.dx(f, grid.hx, order)


def d_y(f, grid, order=2):
    return _kernels.dy(f, grid.hy, order)


def d_z(f, grid, order=2):
    return 0.5 * (d_x(f, grid, order) - 1j * d_y(f, grid, order))


def d_zb(f, grid, order=2):
    return 0.5 * (d_x(f, grid, order) + 1j * d_y(f, grid, order))


def d_zzb(f, grid, order=2):
    return 0.25 * _kernels.laplacian(f, grid.hx, grid.hy, order)


def wirtinger_derivatives(grid, field_id, order=2):
    """Return a Grid2D with fields dz, dzb, dzdzb of grid.fields[field_id].

    Central differences of the given order; the boundary ring (1 point for
    order 2, 2 for order 4) is NaN.
    """
    _check(grid, order)
    f = np.asarray(grid.fields[field_id], dtype=complex)
    return grid.like({"dz": d_z(f, grid, order), "dzb": d_zb(f, grid, order), "dzdzb": d_zzb(f, grid, order)})


def norms(r, mask=None):
    """(max, rms) of a residual array over its finite (or masked) entries."""
    r = np.asarray(r)
    ok = np.isfinite(r) if mask is None else (mask & np.isfinite(r))
    v = np.abs(r[ok])
    if v.size == 0:
        return np.nan, np.nan
    return float(v.max()), float(np.sqrt(np.mean(v**2)))


def convergence_order(pairs, tol=1e-6):
    """Least-squares slope of log(norm) against log(h).

    pairs is a list of (h, norm) with at least three entries, each h half the previous.
    """
    pairs = sorted(((float(h), float(n)) for h, n in pairs), reverse=True)
    if len(pairs) < 3:
        raise InsufficientData("need at least three grid spacings")
    hs = np.array([p[0] for p in pairs])
    ns = np.array([p[1] for p in pairs])
    ratios = hs[:-1] / hs[1:]
    if np.any(np.abs(ratios - 2) > tol * 2):
        raise InsufficientData("grid spacings must halve")
    if np.any(ns <= 0) or not np.all(np.isfinite(ns)):
        raise InsufficientData("norms must be positive and finite")
    return float(np.polyfit(np.log(hs), np.log(ns), 1)[0])


# ---------------------------------------------------------------- CSV

def fmt(x):
    return FMT % x


def write_trajectory_csv(path, params, states, extra=None):
    """param,re_0,im_0,... ; extra is an optional dict name -> real column."""
    states = np.asarray(states)
    n = states.shape[1]
    head = ["param"] + [f"{p}_{i}" for i in range(n) for p in ("re", "im")]
    extra = extra or {}
    head += list(extra)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(head)
        for j, s in enumerate(params):
            row = [fmt(s)]
            for v in states[j]:
                row += [fmt(v.real), fmt(v.imag)]
            row += [fmt(extra[k][j]) for k in extra]
            w.writerow(row)


def read_trajectory_csv(path):
    """Returns (params, states, extra columns dict)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    head, data = rows[0], np.array(rows[1:], dtype=float)
    if head[0] != "param":
        raise ValueError("not a trajectory CSV")
    ncomp = sum(1 for h in head if h.startswith("re_"))
    states = data[:, 1:1 + 2 * ncomp:2] + 1j * data[:, 2:2 + 2 * ncomp:2]
    extra = {h: data[:, i] for i, h in enumerate(head) if i >= 1 + 2 * ncomp}
    return data[:, 0], states, extra


def write_grid_csv(path, grid, names=None, meta=None):
    names = list(names or grid.fields)
    Z = grid.z
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"] + [f"{p}_{n}" for n in names for p in ("re", "im")])
        flat = {n: np.asarray(grid.fields[n]).ravel() for n in names}
        for j, zz in enumerate(Z.ravel()):
            row = [fmt(zz.real), fmt(zz.imag)]
            for n in names:
                v = flat[n][j]
                row += [fmt(v.real), fmt(v.imag)]
            w.writerow(row)


def read_grid_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    head, data = rows[0], np.array(rows[1:], dtype=float)
    xs, ys = np.unique(data[:, 0]), np.unique(data[:, 1])
    nx, ny = len(xs), len(ys)
    if nx * ny != len(data):
        raise ValueError("grid CSV is not a full tensor grid")
    order = np.lexsort((data[:, 1], data[:, 0]))
    data = data[order]
    g = Grid2D((xs[0], xs[-1]), (ys[0], ys[-1]), nx, ny)
    for i in range(2, len(head), 2):
        name = head[i][3:]
        g.fields[name] = (data[:, i] + 1j * data[:, i + 1]).reshape(nx, ny)
    return g
