"""Hot array kernels: finite-difference stencils and the vectorised PVI right side.

Each kernel has a numba version and a pure numpy twin. Set GCLAB_NO_NUMBA=1
to force the numpy path (useful for debugging and for the equality tests).
"""
import os

import numpy as np

try:
    import numba
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("GCLAB_NO_NUMBA", "0") not in ("1", "true", "yes")

_OPTS = dict(cache=False, nogil=True, fastmath=False)


def _threads():
    n = os.environ.get("GCLAB_THREADS")
    if not n:
        return None
    try:
        return max(1, int(n))
    except ValueError:
        return None


if USE_NUMBA and _threads() is not None:
    try:
        numba.set_num_threads(min(_threads(), numba.config.NUMBA_NUM_THREADS))
    except Exception:  # pragma: no cover
        pass


# ---------------------------------------------------------------- numpy twins

def _np_dx(f, h, order):
    out = np.full(f.shape, np.nan + 1j * np.nan, dtype=np.complex128)
    if order == 2:
        out[1:-1, :] = (f[2:, :] - f[:-2, :]) / (2 * h)
    else:
        out[2:-2, :] = (-f[4:, :] + 8 * f[3:-1, :] - 8 * f[1:-3, :] + f[:-4, :]) / (12 * h)
    return out


def _np_dy(f, h, order):
    out = np.full(f.shape, np.nan + 1j * np.nan, dtype=np.complex128)
    if order == 2:
        out[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2 * h)
    else:
        out[:, 2:-2] = (-f[:, 4:] + 8 * f[:, 3:-1] - 8 * f[:, 1:-3] + f[:, :-4]) / (12 * h)
    return out


def _np_lap(f, hx, hy, order):
    out = np.full(f.shape, np.nan + 1j * np.nan, dtype=np.complex128)
    if order == 2:
        c = f[1:-1, 1:-1]
        out[1:-1, 1:-1] = ((f[2:, 1:-1] - 2 * c + f[:-2, 1:-1]) / hx**2
                           + (f[1:-1, 2:] - 2 * c + f[1:-1, :-2]) / hy**2)
    else:
        c = f[2:-2, 2:-2]
        out[2:-2, 2:-2] = ((-f[4:, 2:-2] + 16 * f[3:-1, 2:-2] - 30 * c + 16 * f[1:-3, 2:-2] - f[:-4, 2:-2]) / (12 * hx**2)
                           + (-f[2:-2, 4:] + 16 * f[2:-2, 3:-1] - 30 * c + 16 * f[2:-2, 1:-3] - f[2:-2, :-4]) / (12 * hy**2))
    return out


def _np_pvi(ti2, t02, t12, tx2, X, V, Vp):
    X = np.asarray(X, dtype=np.complex128)
    V = np.asarray(V, dtype=np.complex128)
    Vp = np.asarray(Vp, dtype=np.complex128)
    VX = V - X
    return (0.5 * (1 / V + 1 / (V - 1) + 1 / VX) * Vp**2
            - (1 / X + 1 / (X - 1) + 1 / VX) * Vp
            + V * (V - 1) * VX / (2 * X**2 * (X - 1)**2)
            * (ti2 - t02 * X / V**2 + t12 * (X - 1) / (V - 1)**2 + (1 - tx2) * X * (X - 1) / VX**2))


# ---------------------------------------------------------------- numba versions

if USE_NUMBA:
    @njit(**_OPTS)
    def _nb_dx(f, h, order):
        nx, ny = f.shape
        out = np.empty((nx, ny), dtype=np.complex128)
        bad = complex(np.nan, np.nan)
        w = 1 if order == 2 else 2
        for i in range(nx):
            for j in range(ny):
                if i < w or i >= nx - w:
                    out[i, j] = bad
                elif order == 2:
                    out[i, j] = (f[i + 1, j] - f[i - 1, j]) / (2 * h)
                else:
                    out[i, j] = (-f[i + 2, j] + 8 * f[i + 1, j] - 8 * f[i - 1, j] + f[i - 2, j]) / (12 * h)
        return out

    @njit(**_OPTS)
    def _nb_dy(f, h, order):
        nx, ny = f.shape
        out = np.empty((nx, ny), dtype=np.complex128)
        bad = complex(np.nan, np.nan)
        w = 1 if order == 2 else 2
        for i in range(nx):
            for j in range(ny):
                if j < w or j >= ny - w:
                    out[i, j] = bad
                elif order == 2:
                    out[i, j] = (f[i, j + 1] - f[i, j - 1]) / (2 * h)
                else:
                    out[i, j] = (-f[i, j + 2] + 8 * f[i, j + 1] - 8 * f[i, j - 1] + f[i, j - 2]) / (12 * h)
        return out

    @njit(**_OPTS)
    def _nb_lap(f, hx, hy, order):
        nx, ny = f.shape
        out = np.empty((nx, ny), dtype=np.complex128)
        bad = complex(np.nan, np.nan)
        w = 1 if order == 2 else 2
        for i in range(nx):
            for j in range(ny):
                if i < w or i >= nx - w or j < w or j >= ny - w:
                    out[i, j] = bad
                elif order == 2:
                    c = f[i, j]
                    out[i, j] = ((f[i + 1, j] - 2 * c + f[i - 1, j]) / hx**2
                                 + (f[i, j + 1] - 2 * c + f[i, j - 1]) / hy**2)
                else:
                    c = f[i, j]
                    out[i, j] = ((-f[i + 2, j] + 16 * f[i + 1, j] - 30 * c + 16 * f[i - 1, j] - f[i - 2, j]) / (12 * hx**2)
                                 + (-f[i, j + 2] + 16 * f[i, j + 1] - 30 * c + 16 * f[i, j - 1] - f[i, j - 2]) / (12 * hy**2))
        return out

    @njit(**_OPTS)
    def _nb_pvi(ti2, t02, t12, tx2, X, V, Vp):
        n = X.size
        out = np.empty(n, dtype=np.complex128)
        for k in range(n):
            x = X[k]
            v = V[k]
            vp = Vp[k]
            vx = v - x
            out[k] = (0.5 * (1 / v + 1 / (v - 1) + 1 / vx) * vp * vp
                      - (1 / x + 1 / (x - 1) + 1 / vx) * vp
                      + v * (v - 1) * vx / (2 * x * x * (x - 1) * (x - 1))
                      * (ti2 - t02 * x / (v * v) + t12 * (x - 1) / ((v - 1) * (v - 1))
                         + (1 - tx2) * x * (x - 1) / (vx * vx)))
        return out


# ---------------------------------------------------------------- dispatch

def dx(f, h, order=2, use_numba=None):
    f = np.ascontiguousarray(f, dtype=np.complex128)
    if (USE_NUMBA if use_numba is None else use_numba and HAVE_NUMBA):
        return _nb_dx(f, float(h), int(order))
    return _np_dx(f, h, order)


def dy(f, h, order=2, use_numba=None):
    f = np.ascontiguousarray(f, dtype=np.complex128)
    if (USE_NUMBA if use_numba is None else use_numba and HAVE_NUMBA):
        return _nb_dy(f, float(h), int(order))
    return _np_dy(f, h, order)


def laplacian(f, hx, hy, order=2, use_numba=None):
    f = np.ascontiguousarray(f, dtype=np.complex128)
    if (USE_NUMBA if use_numba is None else use_numba and HAVE_NUMBA):
        return _nb_lap(f, float(hx), float(hy), int(order))
    return _np_lap(f, hx, hy, order)


def pvi_rhs_array(ti2, t02, t12, tx2, X, V, Vp, use_numba=None):
    """V'' for arrays of states; theta's enter squared."""
    X = np.atleast_1d(np.asarray(X, dtype=np.complex128))
    V = np.atleast_1d(np.asarray(V, dtype=np.complex128))
    Vp = np.atleast_1d(np.asarray(Vp, dtype=np.complex128))
    X, V, Vp = np.broadcast_arrays(X, V, Vp)
    shape = X.shape
    if (USE_NUMBA if use_numba is None else use_numba and HAVE_NUMBA):
        out = _nb_pvi(complex(ti2), complex(t02), complex(t12), complex(tx2),
                      np.ascontiguousarray(X).ravel(), np.ascontiguousarray(V).ravel(),
                      np.ascontiguousarray(Vp).ravel())
        return out.reshape(shape)
    return _np_pvi(ti2, t02, t12, tx2, X, V, Vp)
