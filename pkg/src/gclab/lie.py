"""Exact vector-field algebra for the point symmetries of the Gauss-Codazzi
system, plus a numerical infinitesimal-invariance test on solution grids.

Polynomials live in Q[z, zb, U, H, Q, R] (U = e^u, R plays Q-bar) and are
stored as {exponent tuple: Fraction}.
"""
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .errors import ExtrapolationBeyondTrajectory, ResampleOutOfDomain, TableMismatch

VARS = ("z", "zb", "U", "H", "Q", "R")
_IDX = {n: i for i, n in enumerate(VARS)}
_ZERO = (0,) * len(VARS)


class Poly:
    __slots__ = ("terms",)

    def __init__(self, terms=None):
        t = {}
        for m, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                t[tuple(m)] = t.get(tuple(m), 0) + c
        self.terms = {m: c for m, c in sorted(t.items()) if c}

    @classmethod
    def const(cls, c):
        return cls({_ZERO: c})

    @classmethod
    def var(cls, name, power=1):
        m = [0] * len(VARS)
        m[_IDX[name]] = power
        return cls({tuple(m): 1})

    def is_zero(self):
        return not self.terms

    def __add__(self, o):
        o = _as_poly(o)
        t = dict(self.terms)
        for m, c in o.terms.items():
            t[m] = t.get(m, 0) + c
        return Poly(t)

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, o):
        return self + (-_as_poly(o))

    def __rsub__(self, o):
        return _as_poly(o) - self

    def __mul__(self, o):
        o = _as_poly(o)
        t = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in o.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                t[m] = t.get(m, 0) + c1 * c2
        return Poly(t)

    __rmul__ = __mul__

    def __pow__(self, n):
        out = Poly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, o):
        return self.terms == _as_poly(o).terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def diff(self, name):
        i = _IDX[name]
        t = {}
        for m, c in self.terms.items():
            if m[i]:
                mm = list(m)
                mm[i] -= 1
                t[tuple(mm)] = c * m[i]
        return Poly(t)

    def depends_on(self):
        return {VARS[i] for m in self.terms for i, e in enumerate(m) if e}

    def evaluate(self, env):
        """Numerical value; env maps variable names to numbers or arrays."""
        out = 0
        for m, c in self.terms.items():
            term = float(c) if c.denominator != 1 or abs(c) < 2**53 else c
            for i, e in enumerate(m):
                if e:
                    term = term * env[VARS[i]] ** e
            out = out + term
        return out

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.terms.items():
            mon = "*".join(VARS[i] + (f"^{e}" if e > 1 else "") for i, e in enumerate(m) if e)
            if not mon:
                parts.append(str(c))
            elif c == 1:
                parts.append(mon)
            elif c == -1:
                parts.append("-" + mon)
            else:
                parts.append(f"{c}*{mon}")
        return " + ".join(parts).replace("+ -", "- ")


def _as_poly(o):
    return o if isinstance(o, Poly) else Poly.const(o)


class VectorField:
    """sum_i coeffs[i] d/d(var_i), coefficients polynomial."""

    def __init__(self, coeffs=None, name=None):
        self.coeffs = {k: _as_poly(v) for k, v in (coeffs or {}).items() if not _as_poly(v).is_zero()}
        for k in self.coeffs:
            if k not in _IDX:
                raise KeyError(k)
        self.name = name

    def __call__(self, p):
        """Action on a polynomial."""
        out = Poly()
        for k, c in self.coeffs.items():
            out = out + c * p.diff(k)
        return out

    def __getitem__(self, k):
        return self.coeffs.get(k, Poly())

    def __add__(self, o):
        return VectorField({k: self[k] + o[k] for k in set(self.coeffs) | set(o.coeffs)})

    def __sub__(self, o):
        return VectorField({k: self[k] - o[k] for k in set(self.coeffs) | set(o.coeffs)})

    def scale(self, c):
        return VectorField({k: v * c for k, v in self.coeffs.items()})

    def __eq__(self, o):
        return (self - o).is_zero()

    def is_zero(self):
        return not self.coeffs

    def __repr__(self):
        if self.is_zero():
            return "0"
        return " + ".join(f"({self.coeffs[k]}) d_{k}" for k in VARS if k in self.coeffs)


def commutator(X1, X2):
    keys = set(X1.coeffs) | set(X2.coeffs)
    return VectorField({k: X1(X2[k]) - X2(X1[k]) for k in keys})


# ---------------------------------------------------------------- generators

def z_poly(coeffs, var="z"):
    """Polynomial sum_j coeffs[j] var^j."""
    out = Poly()
    for j, c in enumerate(coeffs):
        out = out + Poly.var(var, j) * c if j else out + Poly.const(c)
    return out


def X_gen(F):
    """X(F) = F d_z + F'(-2Q d_Q - U d_U), F a polynomial in z."""
    if F.depends_on() - {"z"}:
        raise ValueError("F must depend on z only")
    dF = F.diff("z")
    return VectorField({"z": F, "Q": -2 * Poly.var("Q") * dF, "U": -1 * Poly.var("U") * dF})


def Y_gen(G):
    """Y(G) = G d_zb + G'(-2R d_R - U d_U), G a polynomial in zb."""
    if G.depends_on() - {"zb"}:
        raise ValueError("G must depend on zb only")
    dG = G.diff("zb")
    return VectorField({"zb": G, "R": -2 * Poly.var("R") * dG, "U": -1 * Poly.var("U") * dG})


def a_gen():
    """Scaling generator, a symmetry only when c = 0."""
    return VectorField({"H": -1 * Poly.var("H"), "Q": Poly.var("Q"), "R": Poly.var("R"), "U": 2 * Poly.var("U")},
                       name="a")


def finite_generators():
    gens = {}
    for j in range(3):
        gens[f"e{j}"] = X_gen(Poly.var("z", j))
        gens[f"f{j}"] = Y_gen(Poly.var("zb", j))
    gens["a"] = a_gen()
    for k, v in gens.items():
        v.name = k
    return gens


# expected nonzero brackets of the seven-dimensional algebra
_FINITE_TABLE = {("e0", "e1"): {"e0": 1}, ("e0", "e2"): {"e1": 2}, ("e1", "e2"): {"e2": 1},
                 ("f0", "f1"): {"f0": 1}, ("f0", "f2"): {"f1": 2}, ("f1", "f2"): {"f2": 1}}


@dataclass
class TableReport:
    checked: int
    mismatches: list
    table: dict

    @property
    def ok(self):
        return not self.mismatches

    def lines(self):
        out = []
        for (a, b), v in self.table.items():
            out.append(f"[{a}, {b}] = {v}")
        return out


def _combo(gens, spec):
    out = VectorField()
    for k, c in spec.items():
        out = out + gens[k].scale(c)
    return out


def verify_tables(jmax=4, raise_on_mismatch=True):
    """Check the finite table and monomial instances of the infinite one (degrees <= jmax)."""
    gens = finite_generators()
    names = list(gens)
    mism, table, n = [], {}, 0
    for a, b in combinations(names, 2):
        got = commutator(gens[a], gens[b])
        want = _combo(gens, _FINITE_TABLE.get((a, b), {}))
        n += 1
        table[(a, b)] = " + ".join(f"{c}*{k}" if c != 1 else k for k, c in _FINITE_TABLE.get((a, b), {}).items()) or "0"
        if not got == want:
            mism.append((a, b))
    a = a_gen()
    for i in range(jmax + 1):
        Fi, Gi = Poly.var("z", i), Poly.var("zb", i)
        for j in range(jmax + 1):
            Fj, Gj = Poly.var("z", j), Poly.var("zb", j)
            checks = [
                (f"X(z^{i}),X(z^{j})", commutator(X_gen(Fi), X_gen(Fj)), X_gen(Fi * Fj.diff("z") - Fi.diff("z") * Fj)),
                (f"Y(zb^{i}),Y(zb^{j})", commutator(Y_gen(Gi), Y_gen(Gj)), Y_gen(Gi * Gj.diff("zb") - Gi.diff("zb") * Gj)),
                (f"X(z^{i}),Y(zb^{j})", commutator(X_gen(Fi), Y_gen(Gj)), VectorField()),
            ]
            for label, got, want in checks:
                n += 1
                if not got == want:
                    mism.append(label)
        for label, got in ((f"X(z^{i}),a", commutator(X_gen(Fi), a)), (f"Y(zb^{i}),a", commutator(Y_gen(Gi), a))):
            n += 1
            if not got.is_zero():
                mism.append(label)
    rep = TableReport(n, mism, table)
    if mism and raise_on_mismatch:
        raise TableMismatch(mism)
    return rep


# ---------------------------------------------------------------- infinitesimal invariance

@dataclass
class InvarianceReport:
    eps: list
    r: list
    slope: float
    exact: bool

    def to_dict(self):
        return {"eps": self.eps, "r": self.r, "slope": self.slope, "exact": self.exact}


def _invert_coord(coef, target, eps, var, it=50):
    """Solve w + eps coef(w) = target for w (coef a polynomial in var only)."""
    if coef.is_zero() or eps == 0:
        return target
    d = coef.diff(var)
    w = np.array(target, dtype=complex)
    for _ in range(it):
        f = w + eps * coef.evaluate({var: w}) - target
        step = f / (1 + eps * d.evaluate({var: w}))
        w = w - step
        if np.max(np.abs(step)) < 1e-15 * (1 + np.max(np.abs(w))):
            break
    return w


def flowed_fields(f, gen, eps, grid=None):
    """FieldGrid of the first-order flow exp(eps gen) applied to the solution graph,
    sampled on grid (default f.grid)."""
    from .gauss_codazzi import FieldGrid, unwrap2d
    if f.sampler is None:
        raise ResampleOutOfDomain("the invariance test needs fields with a sampler")
    if gen["z"].depends_on() - {"z"} or gen["zb"].depends_on() - {"zb"}:
        raise ValueError("coordinate coefficients must be holomorphic/antiholomorphic")
    grid = f.grid if grid is None else grid
    Zt = grid.z
    z = _invert_coord(gen["z"], Zt, eps, "z")
    zb = _invert_coord(gen["zb"], np.conj(Zt), eps, "zb")
    try:
        vals = f.sampler(z, zb)
    except (ExtrapolationBeyondTrajectory, ValueError) as e:
        raise ResampleOutOfDomain(str(e)) from e
    env = {"z": z, "zb": zb, "U": np.exp(vals["u"]), "H": vals["H"], "Q": vals["Q"], "R": vals["R"]}
    new = {k: env[k] + eps * gen[k].evaluate(env) for k in ("U", "H", "Q", "R")}
    for k, a in new.items():
        if not np.all(np.isfinite(a)):
            raise ResampleOutOfDomain(f"flowed field {k} is not finite")
    return FieldGrid(grid, unwrap2d(np.log(new["U"])), new["H"], new["Q"], new["R"], f.c)


def _flowed_residuals(f, gen, eps, order, richardson):
    from .gauss_codazzi import gc_residuals
    res = gc_residuals(flowed_fields(f, gen, eps), order).residuals
    if not richardson:
        return res
    fine = gc_residuals(flowed_fields(f, gen, eps, f.grid.refined(2)), order).residuals
    w = 2.0 ** order
    return {k: (w * fine[k][::2, ::2] - res[k]) / (w - 1) for k in res}


def infinitesimal_invariance(f, gen, eps=(1e-2, 5e-3, 2.5e-3), order=4, floor=1e-6, richardson=True):
    """Slope of r(eps) = max |GC residual(flowed) - GC residual(unflowed)| in log-log.

    A symmetry cancels the O(eps) term, leaving O(eps^2) from truncating the flow.
    The truncation error of the stencils also drifts linearly in eps; richardson=True
    removes its leading part with one grid doubling. When every r(eps) sits below
    floor the first-order flow is exact (translations): exact=True, slope=inf.
    """
    base = _flowed_residuals(f, gen, 0.0, order, richardson)
    rs = []
    for e in eps:
        res = _flowed_residuals(f, gen, e, order, richardson)
        rs.append(float(max(np.nanmax(np.abs(res[k] - base[k])) for k in base)))
    if max(rs) < floor:
        return InvarianceReport(list(eps), rs, float("inf"), True)
    slope = float(np.polyfit(np.log(eps), np.log(np.maximum(rs, 1e-300)), 1)[0])
    return InvarianceReport(list(eps), rs, slope, False)
