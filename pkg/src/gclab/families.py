"""Named reduced-solution families with default parameters and lift domains.

Shared by the CLI and the test-suite so that a family name plus a small JSON
dict reproduces a surface.
"""
import numpy as np

from .numerics import Grid2D, IntegratorConfig
from .errors import BranchPreconditionFailed
from .painleve import PviState, cube_derivs, cube_roots, pvi_rhs, _newton
from .reductions import (BekParams, BonnetParams, bek_chain, bonnet_chain, g_branch_solutions,
                         generic_solution_from_pvi, generic_theta, integrate_chain, lift_to_fields, x_path_for_sector)

FAMILIES = ("bonnet", "bek", "generic", "g+1", "g-1", "g+1-elem", "g-1-elem")

# Lie families live in the open sector 0 < arg z < pi/2; chains on Re z > 0.
_LIE_GRID = ((0.6, 0.9), (0.45, 0.8))
_CHAIN_GRID = ((0.6, 1.1), (0.3, 0.8))

DEFAULTS = {
    "bonnet": dict(c_z=0.3, c_q=0.7, c_h=1.1, c=0.5, x0=0.3, x1=1.4, y0=["0.8+0.1j", 0.2, "0.5-0.2j"]),
    "bek": dict(c_z=0.3, c_q=0.7, c_h=1.1, c_u=0.9, theta=0.4, x0=0.3, x1=1.4,
                y0=["0.8+0.1j", 0.2, "0.5-0.2j", "0.5-0.2j"]),
    "generic": dict(g=0.3, K=0.7, V0="0.4+0.2j", Vp0="0.3-0.1j", h0=1.0, arg_lo=0.3, arg_hi=1.1),
    "g+1": dict(K=0.7, c_h=1.1, V0="0.4+0.2j", Vp0="0.3-0.1j", arg_lo=0.3, arg_hi=1.1),
    "g-1": dict(K=0.7, c=0.0, c_q=0.9, V0="0.4+0.2j", Vp0="0.3-0.1j", arg_lo=0.3, arg_hi=1.1),
    "g+1-elem": dict(K=0.7, c_q=0.9, xi0=0.1, v0=1.0),
    "g-1-elem": dict(K=0.7, c=0.0, h0=0.8, xi0=0.1, v0=1.0),
}
# the algebraic seed: the cube curve solves the generic-case PVI at these values
CUBE_SEED = dict(g=-5 / 3, K=16 / 9, root=0, arg_lo=0.3, arg_hi=0.7)


def cplx(x):
    """Complex from a number, a string like '0.3-1j', or a [re, im] pair."""
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError(f"bad complex {x!r}")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, str):
        return complex(x.replace(" ", "").replace("i", "j"))
    return complex(x)


def merged(family, params=None, seed=None):
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    p = dict(DEFAULTS[family])
    if seed == "cube":
        if family != "generic":
            raise ValueError("the cube seed belongs to the generic family")
        p.update(CUBE_SEED)
        p.pop("V0", None)
        p.pop("Vp0", None)
    elif seed is not None:
        raise ValueError(f"unknown seed {seed!r}")
    p.update(params or {})
    return p


def cube_ic(X0, root=0):
    r = cube_roots(X0)
    V = _newton(X0, complex(sorted(r, key=lambda w: (w.real, w.imag))[root]))
    return V, cube_derivs(X0, V)[0]


def build_solution(family, params=None, seed=None, cfg=None):
    """Reduced solution object for a family; returns (solution, resolved params)."""
    p = merged(family, params, seed)
    cfg = cfg or IntegratorConfig(rtol=1e-11, atol=1e-13)
    if family == "bonnet":
        bp = BonnetParams.from_c(float(p["c_z"]), float(p["c_q"]), float(p["c_h"]), float(p["c"]))
        sol = integrate_chain(bonnet_chain(bp), float(p["x0"]), float(p["x1"]), [cplx(a) for a in p["y0"]], cfg)
    elif family == "bek":
        kp = BekParams(float(p["c_z"]), float(p["c_q"]), float(p["c_h"]), float(p["c_u"]), float(p["theta"]))
        sol = integrate_chain(bek_chain(kp), float(p["x0"]), float(p["x1"]), [cplx(a) for a in p["y0"]], cfg)
    elif family == "generic":
        path = x_path_for_sector(float(p["arg_lo"]), float(p["arg_hi"]))
        if "V0" in p:
            V0, Vp0 = cplx(p["V0"]), cplx(p["Vp0"])
        else:
            X0 = path.point(0.0)
            V0, Vp0 = cube_ic(X0, int(p.get("root", 0)))
            _, V2 = cube_derivs(X0, V0)
            res = abs(V2 - pvi_rhs(generic_theta(float(p["g"]), float(p["K"])), PviState(X0, V0, Vp0)))
            if res > 1e-8 * max(1.0, abs(V2)):
                raise BranchPreconditionFailed(f"the cube curve does not solve PVI at g={p['g']}, K={p['K']} "
                                               f"(residual {res:.2e}); it does at g=-5/3, K=16/9")
            p["V0"], p["Vp0"] = str(V0), str(Vp0)
        sol = generic_solution_from_pvi(float(p["g"]), float(p["K"]), path, V0, Vp0, h0=cplx(p.get("h0", 1.0)), cfg=cfg)
    else:
        q = {k: (cplx(v) if k in ("V0", "Vp0") else float(v)) for k, v in p.items() if k not in ("arg_lo", "arg_hi")}
        path = x_path_for_sector(float(p["arg_lo"]), float(p["arg_hi"])) if "arg_lo" in p else None
        sol = g_branch_solutions(family, q, path=path, cfg=cfg)
    return sol, p


def default_grid(family, n=31, sector=None):
    (xr, yr) = _CHAIN_GRID if family in ("bonnet", "bek") else _LIE_GRID
    if sector is not None:
        # a box inside arg z in sector, |z| in (0.6, 1)
        lo, hi = sector
        r0, r1 = 0.6, 1.0
        xr = (r0 * np.cos(hi) + 0.02, r1 * np.cos(hi) * 0.98 + 0.02)
        xr = (min(xr), max(xr))
        yr = (xr[1] * np.tan(lo) + 0.01, xr[0] * np.tan(hi) - 0.01)
    return Grid2D(tuple(float(a) for a in xr), tuple(float(a) for a in yr), n, n)


def lift_family(family, params=None, seed=None, grid=None, n=31):
    """(FieldGrid, solution, params) for a family on its default (or a given) grid."""
    sol, p = build_solution(family, params, seed)
    if grid is None:
        sector = (float(p["arg_lo"]), float(p["arg_hi"])) if seed == "cube" else None
        grid = default_grid(family, n, sector)
    c = float(p["c"]) if family in ("bonnet", "g-1", "g-1-elem") else None
    return lift_to_fields(sol, grid, c=c), sol, p
