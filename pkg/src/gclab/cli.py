"""gclab command line.

  gclab pvi integrate|verify
  gclab reduce solve
  gclab surface build|verify|classify
  gclab lie table
  gclab frame check

Exit codes: 0 every asserted tolerance met, 1 some check failed (or a numerical
error), 2 usage error. Each run ends by writing one JSON manifest (atomic rename).
"""
import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import GclabError

FMT17 = "%.17g"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _cplx(s):
    from .families import cplx
    try:
        return cplx(s)
    except (ValueError, TypeError) as e:
        raise UsageError(f"bad complex number {s!r}") from e


def _clist(text, n=None, what="list"):
    parts = [p for p in text.split(",") if p.strip()]
    if n is not None and len(parts) != n:
        raise UsageError(f"{what} needs {n} comma-separated values, got {len(parts)}")
    return [_cplx(p.strip()) for p in parts]


def _json_arg(text):
    if text is None:
        return {}
    try:
        if os.path.exists(text):
            with open(text, encoding="utf-8") as fh:
                return json.load(fh)
        v = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"--params is not valid JSON: {e}") from e
    if not isinstance(v, dict):
        raise UsageError("--params must be a JSON object")
    return v


def _num(x):
    """JSON-safe value with 17 significant digits (complex -> [re, im])."""
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    if isinstance(x, np.ndarray):
        return _num(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_num(float(x.real)), _num(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not np.isfinite(x):
            return str(x)
        return float(FMT17 % x)
    return x


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_atomic(path, text):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class Run:
    """Collects parameters, files and criteria; writes the manifest last."""

    def __init__(self, args, argv):
        self.command = f"{args.group} {args.action}"
        self.argv = list(argv)
        self.params = {}
        self.inputs, self.outputs = [], []
        self.criteria = []
        self.t0 = time.time()

    def check(self, name, value, tol, le=True):
        ok = bool(np.isfinite(value) and (value <= tol if le else value >= tol))
        self.criteria.append({"name": name, "value": _num(value), "tol": _num(tol),
                              "op": "<=" if le else ">=", "pass": ok})
        return ok

    def record(self, name, ok, detail=None):
        self.criteria.append({"name": name, "value": _num(detail), "tol": None, "op": "==", "pass": bool(ok)})
        return ok

    @property
    def ok(self):
        return all(c["pass"] for c in self.criteria)

    def manifest(self, status, error=None):
        body = {
            "tool": "gclab", "version": __version__, "command": self.command, "argv": self.argv,
            "parameters": _num(self.params),
            "inputs": {p: sha256_file(p) for p in self.inputs if os.path.exists(p)},
            "outputs": {p: sha256_file(p) for p in self.outputs if os.path.exists(p)},
            "criteria": self.criteria, "status": status, "exit_code": {"pass": 0, "fail": 1}.get(status, 2),
            "threads": os.environ.get("GCLAB_THREADS"),
            "numba": os.environ.get("GCLAB_NO_NUMBA", "0") not in ("1", "true", "yes"),
            "elapsed_s": round(time.time() - self.t0, 3),
        }
        if error:
            body["error"] = error
        canon = json.dumps(body, sort_keys=True, separators=(",", ":"))
        body["content_sha256"] = hashlib.sha256(canon.encode("utf-8")).hexdigest()
        return body


def manifest_hash_ok(body):
    b = dict(body)
    h = b.pop("content_sha256", None)
    return h == hashlib.sha256(json.dumps(b, sort_keys=True, separators=(",", ":")).encode("utf-8")).hexdigest()


def _manifest_path(args, default_stem):
    if getattr(args, "manifest", None):
        return args.manifest
    out = getattr(args, "out", None)
    return (out if out else default_stem) + ".manifest.json"


def _read_manifest(path):
    mp = path + ".manifest.json"
    if not os.path.exists(mp):
        raise UsageError(f"{path} has no manifest {mp}; rebuild it with gclab")
    with open(mp, encoding="utf-8") as fh:
        body = json.load(fh)
    if not manifest_hash_ok(body):
        raise UsageError(f"{mp}: content hash mismatch")
    outs = body.get("outputs", {})
    digest = next((d for k, d in outs.items() if os.path.basename(k) == os.path.basename(path)), None)
    if digest is not None and digest != sha256_file(path):
        raise UsageError(f"{path} does not match the digest in its manifest")
    return body


def _emit(obj, out=None):
    text = json.dumps(_num(obj), indent=2, sort_keys=True)
    if out:
        write_atomic(out, text + "\n")
    else:
        print(text)


def _cfg(args):
    from .numerics import IntegratorConfig
    return IntegratorConfig(rtol=args.rtol, atol=args.atol)


# ---------------------------------------------------------------- pvi

def _parse_path(text, start):
    """'a:b[:c...]' waypoints (complex); each leg is bent around 0 and 1."""
    from .numerics import PathSpec, detour_path
    pts = [_cplx(p) for p in text.split(":")]
    if len(pts) < 2:
        raise UsageError("--path needs at least two waypoints a:b")
    if abs(pts[0] - start) > 1e-12 * max(1, abs(start)):
        raise UsageError("--path must start at the X of --ic")
    legs = []
    for a, b in zip(pts[:-1], pts[1:]):
        if a == b:
            raise UsageError("--path has repeated waypoints")
        p = detour_path(a, b, forbidden=(0, 1))
        legs.extend(p.points if not legs else p.points[1:])
    return PathSpec.polyline(legs, forbidden=(0, 1)) if len(legs) > 2 else PathSpec.segment(legs[0], legs[1], (0, 1))


def cmd_pvi_integrate(args, run):
    from .numerics import write_trajectory_csv
    from .painleve import PviParams, PviState, pvi_integrate
    th = _clist(args.theta, 4, "--theta")
    X0, V0, Vp0 = _clist(args.ic, 3, "--ic")
    path = _parse_path(args.path, X0)
    p = PviParams(*th)
    run.params = {"theta": th, "ic": [X0, V0, Vp0], "path": [complex(z) for z in path.points],
                  "path_kind": path.kind, "rtol": args.rtol, "atol": args.atol, "n": args.n}
    traj = pvi_integrate(p, PviState(X0, V0, Vp0), path, _cfg(args))
    s, Y = traj.sample(args.n)
    X = path.point(s)
    write_trajectory_csv(args.out, s, Y, {"X_re": X.real, "X_im": X.imag})
    run.outputs.append(args.out)
    run.record("integrated", True, {"steps": len(traj), "end": complex(X[-1])})
    print(f"wrote {args.out}: {len(s)} rows, {len(traj)} accepted steps")


def cmd_pvi_verify(args, run):
    from .numerics import PathSpec, read_trajectory_csv, IntegratorConfig
    from .painleve import PviParams, PviState, pvi_integrate, pvi_fd_residual
    body = _read_manifest(args.csv)
    run.inputs.append(args.csv)
    P = body["parameters"]
    th = [complex(*t) for t in P["theta"]]
    X0, V0, Vp0 = (complex(*t) for t in P["ic"])
    pts = [complex(*t) for t in P["path"]]
    path = PathSpec.polyline(pts, (0, 1)) if len(pts) > 2 else PathSpec.segment(pts[0], pts[1], (0, 1))
    s, Y, extra = read_trajectory_csv(args.csv)
    p = PviParams(*th)
    traj = pvi_integrate(p, PviState(X0, V0, Vp0), path, IntegratorConfig(rtol=P["rtol"], atol=P["atol"]))
    dev = float(np.max(np.abs(traj.eval(s) - Y)) / max(1.0, np.max(np.abs(Y))))
    # the FD oracle differentiates the dense output, so re-run tighter than the file
    rt = min(P["rtol"], 1e-13)
    tight = pvi_integrate(p, PviState(X0, V0, Vp0), path, IntegratorConfig(rtol=rt, atol=rt * 1e-2))
    _, rel = pvi_fd_residual(p, tight, delta=5e-4 * path.length)
    run.params = {"csv": args.csv, "tol": args.tol}
    ok1 = run.check("pvi_fd_residual_rel", float(np.max(rel)), args.tol)
    ok2 = run.check("reproduction_rel", dev, args.repro_tol)
    rep = {"pvi_fd_residual_rel": float(np.max(rel)), "reproduction_rel": dev, "pass": ok1 and ok2}
    _emit(rep, args.report)


# ---------------------------------------------------------------- reduce

def cmd_reduce_solve(args, run):
    from .families import build_solution
    from .numerics import write_trajectory_csv
    params = _json_arg(args.params)
    sol, p = build_solution(args.family, params, args.seed)
    run.params = {"family": args.family, "seed": args.seed, "params": p, "n": args.n}
    if args.family in ("bonnet", "bek"):
        x = np.linspace(float(p["x0"]), float(p["x1"]), args.n)
        Y = sol.state(x, near=False).T
        K = sol.chain.first_integral(x, Y.T)
        K0 = sol.K
        param = x
    else:
        lo, hi = (float(p.get("arg_lo", 0.3)), float(p.get("arg_hi", 1.1)))
        arg = np.linspace(lo + 0.05, hi - 0.05, args.n)
        eta = np.exp(2j * arg)
        Y = np.asarray(sol.state(eta)).T
        K = sol.first_integral(eta)
        K0 = sol.K
        param = arg
    drift = np.abs(K - K0) / max(1.0, abs(K0))
    write_trajectory_csv(args.out, param, Y, {"K_drift": drift})
    run.outputs.append(args.out)
    run.check("first_integral_drift", float(drift.max()), args.tol)
    print(f"wrote {args.out}: K = {K0:.17g}, max relative drift {drift.max():.3e}")


# ---------------------------------------------------------------- surface

def _grid_arg(text, family, seed, p):
    from .families import default_grid
    from .numerics import Grid2D
    if text is None:
        sector = (float(p["arg_lo"]), float(p["arg_hi"])) if seed == "cube" else None
        return default_grid(family, 31, sector)
    v = text.split(",")
    if len(v) != 5:
        raise UsageError("--grid is x0,x1,y0,y1,n")
    try:
        return Grid2D((float(v[0]), float(v[1])), (float(v[2]), float(v[3])), int(v[4]), int(v[4]))
    except (ValueError, GclabError) as e:
        raise UsageError(f"bad --grid: {e}") from e


def _surface_source(args):
    """(family, seed, params, grid) from a fields CSV manifest or from options."""
    from .families import merged
    if getattr(args, "fields", None):
        body = _read_manifest(args.fields)
        P = body["parameters"]
        from .numerics import Grid2D
        g = P["grid"]
        return P["family"], P.get("seed"), P["params"], Grid2D(tuple(g["xr"]), tuple(g["yr"]), g["nx"], g["ny"])
    if not args.family:
        raise UsageError("give a fields CSV or --family")
    params = _json_arg(args.params)
    p = merged(args.family, params, args.seed)
    return args.family, args.seed, params, _grid_arg(args.grid, args.family, args.seed, p)


def _maker(family, seed, params):
    from .families import build_solution, lift_family
    sol, p = build_solution(family, params, seed)
    from .reductions import lift_to_fields
    c = float(p["c"]) if family in ("bonnet", "g-1", "g-1-elem") else None
    return lambda g: lift_to_fields(sol, g, c=c)


def cmd_surface_build(args, run):
    from .families import build_solution
    from .numerics import write_grid_csv
    from .reductions import lift_to_fields
    params = _json_arg(args.params)
    sol, p = build_solution(args.family, params, args.seed)
    grid = _grid_arg(args.grid, args.family, args.seed, p)
    c = float(p["c"]) if args.family in ("bonnet", "g-1", "g-1-elem") else None
    f = lift_to_fields(sol, grid, c=c)
    g = f.as_grid()
    write_grid_csv(args.out, g, ["u", "H", "Q", "R"])
    run.outputs.append(args.out)
    run.params = {"family": args.family, "seed": args.seed, "params": params, "resolved": p, "c": f.c,
                  "grid": {"xr": list(grid.xr), "yr": list(grid.yr), "nx": grid.nx, "ny": grid.ny}}
    run.record("built", True, {"nx": grid.nx, "ny": grid.ny})
    print(f"wrote {args.out}: {args.family} on {grid.nx}x{grid.ny}")


def cmd_surface_verify(args, run):
    from .gauss_codazzi import gc_residuals, refinement_study, zero_curvature_residual
    family, seed, params, grid = _surface_source(args)
    if args.fields:
        run.inputs.append(args.fields)
    make = _maker(family, seed, params)
    run.params = {"family": family, "seed": seed, "params": params, "levels": args.levels,
                  "grid": {"xr": list(grid.xr), "yr": list(grid.yr), "n": grid.nx}}
    out = {}
    for name, fn in (("gc", gc_residuals), ("zero_curvature", zero_curvature_residual)):
        reps, slopes = refinement_study(make, grid, fn, args.levels)
        out[name] = {"max": [r.max for r in reps], "h": [r.h for r in reps], "slopes": slopes}
        for k, s in slopes.items():
            last = reps[-1].max[k]
            if last < 1e-11:          # exact at round-off: nothing to converge
                run.check(f"{name}.{k}.roundoff", last, 1e-11)
            else:
                run.check(f"{name}.{k}.slope_dev", abs(s - 2.0), args.slope_tol)
    out["criteria"] = run.criteria
    _emit(out, args.report)


def surface_label(bon, iso):
    if bon == "pass":
        return "Bonnet surface (isothermic)" if iso == "pass" else "Bonnet surface"
    if iso == "pass":
        return "isothermic, not Bonnet"
    return "neither Bonnet nor isothermic" if bon == "fail" and iso == "fail" else "unclassified"


def cmd_surface_classify(args, run):
    from .errors import FieldVanishes
    from .gauss_codazzi import bonnet_predicate, isothermic_predicate, refinement_study, verdict
    family, seed, params, grid = _surface_source(args)
    if args.fields:
        run.inputs.append(args.fields)
    make = _maker(family, seed, params)
    run.params = {"family": family, "seed": seed, "params": params}
    res = {}
    for name, fn in (("bonnet", bonnet_predicate), ("isothermic", isothermic_predicate)):
        try:
            reps, _ = refinement_study(make, grid, fn, args.levels)
            vs = [verdict(reps, k) for k in reps[0].max]
            v = "pass" if all(x == "pass" for x in vs) else ("fail" if "fail" in vs else "inconclusive")
            res[name] = {"verdict": v, "max": [r.max for r in reps]}
        except FieldVanishes as e:
            res[name] = {"verdict": "undefined", "reason": str(e)}
        run.record(f"{name}.decided", res[name]["verdict"] in ("pass", "fail"), res[name]["verdict"])
    label = surface_label(res["bonnet"]["verdict"], res["isothermic"]["verdict"])
    print(f"bonnet: {res['bonnet']['verdict']}, isothermic: {res['isothermic']['verdict']}")
    print(f"family {family}: {label}")
    res["label"] = label
    if args.report:
        _emit(res, args.report)


# ---------------------------------------------------------------- lie, frame

def cmd_lie_table(args, run):
    from .lie import verify_tables
    rep = verify_tables(args.jmax, raise_on_mismatch=False)
    for line in rep.lines():
        print(line)
    print(f"{rep.checked} brackets checked (infinite algebra up to degree {args.jmax}); "
          f"{len(rep.mismatches)} mismatches")
    run.params = {"jmax": args.jmax}
    run.record("tables", rep.ok, rep.mismatches)


def cmd_frame_check(args, run):
    from . import frames
    from .numerics import IntegratorConfig, PathSpec, integrate_ode
    from .painleve import PviState, pvi_integrate, pvi_rhs, PviParams
    from .reductions import A1A2Params, first_integral_a1a2, reduced_rhs_a1a2
    P = _json_arg(args.params)
    cfg = IntegratorConfig(rtol=1e-12, atol=1e-14)
    run.params = {"family": args.family, "params": P}
    rep = {"family": args.family}
    try:
        if args.family == "reduced":
            p = A1A2Params(_cplx(P.get("a1", 0.8)), _cplx(P.get("a2", 0.5)), _cplx(P.get("c", 0.0)))
            y0 = np.array([_cplx(a) for a in P.get("y0", ["0.8+0.1j", 0.2, "0.5-0.2j", 0.3, "0.6+0.1j"])])
            lam = _cplx(P.get("hprime_coef", 0.3))
            hp = lambda xi, y: lam * y[2]
            tr = integrate_ode(lambda xi, y: reduced_rhs_a1a2(p, xi, y, hp), y0,
                               PathSpec.segment(float(P.get("xi0", 0.1)), float(P.get("xi1", 0.9))), cfg)
            s, Y = tr.sample(50)
            xi = tr.path.point(s)
            kh = np.array([frames.reduced_frame(p, xi[i], Y[i]).K_hat for i in range(len(s))])
            K = first_integral_a1a2(p, xi, Y.T)
            rep["K_hat_rel"] = float(np.max(np.abs(kh - K) / np.maximum(1, np.abs(K))))
            rep["compat"] = float(frames.reduced_frame_compat(p, tr, hp).max())
            run.check("K_hat_rel", rep["K_hat_rel"], 1e-10)
            run.check("compat", rep["compat"], 1e-6)
        else:
            X0, V0, Vp0 = (_cplx(a) for a in P.get("ic", ["2.1+0.3j", "0.4+0.3j", 0.2]))
            X1 = _cplx(P.get("X1", "3+1j"))
            path = PathSpec.segment(X0, X1, (0, 1))
            if args.family == "codim2":
                g, K = float(P.get("g", 0.3)), float(P.get("K", 0.7))
                tr = pvi_integrate(frames.codim2_theta(g, K), PviState(X0, V0, Vp0), path, cfg)
                rep["compat"] = float(frames.codim2_compat(g, K, tr).max())
                rep["compat_perturbed"] = float(frames.codim2_compat(g, K, tr, perturb=0.1).max())
                run.check("compat", rep["compat"], 1e-6)
                run.check("perturbed_detected", rep["compat_perturbed"], 1e-3, le=False)
            elif args.family == "codim0":
                rng = np.random.default_rng(int(P.get("seed", 0)))
                m = 0.0
                for _ in range(int(P.get("points", 200))):
                    X, V, Vp = rng.normal(size=3) + 1j * rng.normal(size=3)
                    m = max(m, frames.codim0_reduction_check(rng.normal(), rng.uniform(0.1, 3), X, V, Vp,
                                                             P.get("vr_third", "lower"),
                                                             P.get("ur_reading", "corrected")))
                rep["reduction_max"] = m
                run.check("reduction", m, 1e-9)
                th = PviParams(*(_cplx(a) for a in P.get("theta", [0.45, 0.33, 0.29, 0.6])))

                def data(X, V, Vp):
                    Vpp = pvi_rhs(th, PviState(X, V, Vp))
                    return frames.Codim0Data(V**2 - X, 2 * V, -1, 1 / 3, 1 + Vp**2, 2 * Vp * Vpp)
                tr = pvi_integrate(th, PviState(X0, V0, Vp0), path, cfg)
                rep["generic_theta_compat"] = float(frames.codim0_compat(
                    th, data, tr, vr_third=P.get("vr_third", "lower"), ur_reading=P.get("ur_reading", "corrected")).max())
            else:
                raise UsageError(f"unknown frame family {args.family!r}")
    except (TypeError, ValueError) as e:
        raise UsageError(f"bad --params: {e}") from e
    rep["criteria"] = run.criteria
    _emit(rep, args.out)
    if args.out:
        run.outputs.append(args.out)


# ---------------------------------------------------------------- parser

def build_parser():
    ap = argparse.ArgumentParser(prog="gclab", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"gclab {__version__}")
    sub = ap.add_subparsers(dest="group", required=True)

    def common(p, out_required=False):
        p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
        p.add_argument("--rtol", type=float, default=1e-11)
        p.add_argument("--atol", type=float, default=1e-13)

    pvi = sub.add_parser("pvi").add_subparsers(dest="action", required=True)
    p = pvi.add_parser("integrate", help="integrate PVI along a complex path")
    p.add_argument("--theta", required=True, help="theta_inf,theta_0,theta_1,theta_X")
    p.add_argument("--ic", required=True, help="X0,V0,V'0 (complex allowed)")
    p.add_argument("--path", required=True, help="waypoints a:b[:c] starting at X0")
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(fn=cmd_pvi_integrate)
    p = pvi.add_parser("verify", help="re-check a trajectory CSV")
    p.add_argument("csv")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--repro-tol", type=float, default=1e-9)
    p.add_argument("--report")
    common(p)
    p.set_defaults(fn=cmd_pvi_verify)

    red = sub.add_parser("reduce").add_subparsers(dest="action", required=True)
    p = red.add_parser("solve", help="solve a reduced system, CSV with first-integral drift")
    p.add_argument("--family", required=True, choices=_families())
    p.add_argument("--params", help="JSON object or file overriding the family defaults")
    p.add_argument("--seed", choices=["cube"])
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(fn=cmd_reduce_solve)

    srf = sub.add_parser("surface").add_subparsers(dest="action", required=True)
    p = srf.add_parser("build", help="lift a reduced solution to (u, H, Q, R) on a grid")
    p.add_argument("--family", required=True, choices=_families())
    p.add_argument("--params")
    p.add_argument("--seed", choices=["cube"])
    p.add_argument("--grid", help="x0,x1,y0,y1,n")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(fn=cmd_surface_build)
    for name, fn, helptext in (("verify", cmd_surface_verify, "Gauss-Codazzi and zero-curvature convergence"),
                               ("classify", cmd_surface_classify, "Bonnet / isothermic predicates")):
        p = srf.add_parser(name, help=helptext)
        p.add_argument("fields", nargs="?", help="fields CSV written by surface build")
        p.add_argument("--family", choices=_families())
        p.add_argument("--params")
        p.add_argument("--seed", choices=["cube"])
        p.add_argument("--grid")
        p.add_argument("--levels", type=int, default=3)
        p.add_argument("--slope-tol", type=float, default=0.2)
        p.add_argument("--report")
        common(p)
        p.set_defaults(fn=fn)

    lie = sub.add_parser("lie").add_subparsers(dest="action", required=True)
    p = lie.add_parser("table", help="commutator tables in exact arithmetic")
    p.add_argument("--jmax", type=int, default=4)
    common(p)
    p.set_defaults(fn=cmd_lie_table)

    fr = sub.add_parser("frame").add_subparsers(dest="action", required=True)
    p = fr.add_parser("check", help="linear-representation residual report")
    p.add_argument("--family", required=True, choices=["reduced", "codim2", "codim0"])
    p.add_argument("--params")
    p.add_argument("--out")
    common(p)
    p.set_defaults(fn=cmd_frame_check)
    return ap


def _families():
    from .families import FAMILIES
    return list(FAMILIES)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    run = Run(args, argv)
    stem = f"gclab-{args.group}-{args.action}"
    if args.group == "pvi" and args.action == "verify":
        stem = args.csv + ".verify"
    elif getattr(args, "fields", None):
        stem = args.fields + f".{args.action}"
    mpath = _manifest_path(args, stem)
    status, err, code = "fail", None, 1
    try:
        args.fn(args, run)
        status, code = ("pass", 0) if run.ok else ("fail", 1)
    except UsageError as e:
        print(f"gclab: error: {e}", file=sys.stderr)
        status, err, code = "usage", str(e), 2
    except (GclabError, FloatingPointError, ZeroDivisionError) as e:
        print(f"gclab: {type(e).__name__}: {e}", file=sys.stderr)
        status, err, code = "fail", f"{type(e).__name__}: {e}", 1
    except ValueError as e:
        print(f"gclab: error: {e}", file=sys.stderr)
        status, err, code = "usage", str(e), 2
    write_atomic(mpath, json.dumps(run.manifest(status, err), indent=2, sort_keys=True) + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
