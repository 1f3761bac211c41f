"""Third prolongation, symmetry defect, commutators and span membership."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .equation import EquationForm, EquationSpec
from .errors import AmbiguousSpan
from .symkernel import (
    EPS, T, U, X, Const, Expr, FDeriv, Sym, ZeroStatus, as_expr, differentiate,
    is_zero, jet, lambdify, normalize, parse, to_str, total_derivative,
)
from .symkernel.numeric import SAMPLE_SEED
from .symkernel.calculus import subs
from .symkernel.core import from_poly, to_poly

__all__ = [
    "VectorField", "ProlongedField", "prolong3", "symmetry_defect",
    "is_symmetry", "commutator", "span_membership", "PROLONGED_JETS",
]

UT, UX, UXX, UXXX = jet(1, 0), jet(0, 1), jet(0, 2), jet(0, 3)
UTX, UTXX = jet(1, 1), jet(1, 2)
PROLONGED_JETS = (UT, UX, UXX, UXXX, UTX, UTXX)

# order cap used only while forming D_x^2 of the solved u_t
_ONSHELL_ORDER = 6


def _coerce(v, params=()):
    if isinstance(v, str):
        return parse(v, params)
    return normalize(as_expr(v))


@dataclass(frozen=True)
class VectorField:
    """Gamma = tau d_t + xi d_x + eta d_u."""

    tau: Expr
    xi: Expr
    eta: Expr

    def __post_init__(self):
        for name in ("tau", "xi", "eta"):
            e = _coerce(getattr(self, name))
            for s in e.free_symbols:
                if type(s) is Sym and s.kind == "jet" and s.order >= 1:
                    raise ValueError(f"{name} depends on the jet variable {s.name}")
            object.__setattr__(self, name, e)

    @classmethod
    def parse(cls, tau="0", xi="0", eta="0", params=()):
        return cls(_coerce(tau, params), _coerce(xi, params), _coerce(eta, params))

    @property
    def components(self):
        return (self.tau, self.xi, self.eta)

    def __add__(self, other):
        return VectorField(self.tau + other.tau, self.xi + other.xi, self.eta + other.eta)

    def __sub__(self, other):
        return VectorField(self.tau - other.tau, self.xi - other.xi, self.eta - other.eta)

    def scale(self, c):
        c = as_expr(c)
        return VectorField(c * self.tau, c * self.xi, c * self.eta)

    __rmul__ = scale

    def __neg__(self):
        return self.scale(-1)

    def apply(self, e) -> Expr:
        """Gamma acting on a function of (t, x, u)."""
        e = _coerce(e)
        return normalize(self.tau * differentiate(e, T) + self.xi * differentiate(e, X)
                         + self.eta * differentiate(e, U))

    def subs(self, bindings):
        if not bindings:
            return self
        return VectorField(subs(self.tau, bindings), subs(self.xi, bindings),
                           subs(self.eta, bindings))

    def is_zero(self) -> bool:
        return all(c is Const(0) for c in self.components)

    def __str__(self):
        parts = []
        for c, d in zip(self.components, ("d_t", "d_x", "d_u")):
            if c is Const(0):
                continue
            s = to_str(c)
            parts.append(d if s == "1" else f"({s})*{d}")
        return " + ".join(parts) if parts else "0"

    def to_json(self):
        return {"tau": to_str(self.tau), "xi": to_str(self.xi), "eta": to_str(self.eta)}


@dataclass(frozen=True)
class ProlongedField:
    base: VectorField
    coeffs: dict

    def __getitem__(self, jet_sym):
        return self.coeffs[jet_sym]


def prolong3(vf: VectorField, max_order: int = 4) -> ProlongedField:
    """Coefficients of the third prolongation for u_t, u_x, u_xx, u_xxx, u_tx, u_txx."""
    D = total_derivative
    tau, xi, eta = vf.components

    def step(prev, jet_J, direction):
        nt, nx = jet_J.index
        j_t = jet(nt + 1, nx)
        j_x = jet(nt, nx + 1)
        return normalize(D(prev, direction, max_order)
                         - D(tau, direction, max_order) * j_t
                         - D(xi, direction, max_order) * j_x)

    c = {}
    c[UT] = step(eta, U, "t")
    c[UX] = step(eta, U, "x")
    c[UXX] = step(c[UX], UX, "x")
    c[UXXX] = step(c[UXX], UXX, "x")
    c[UTX] = step(c[UT], UT, "x")
    c[UTXX] = step(c[UTX], UTX, "x")
    return ProlongedField(vf, c)


def _fderiv_orders(*exprs):
    out = set()
    for e in exprs:
        for s in e.free_symbols:
            if type(s) is FDeriv:
                out.add(s.order)
    return out


def _bind_f(vf: VectorField, spec: EquationSpec) -> VectorField:
    orders = _fderiv_orders(*vf.components)
    if not orders:
        return vf
    return vf.subs(spec.f.bindings(orders))


def symmetry_defect(vf: VectorField, eq, *, symbolic_eps: bool = False) -> Expr:
    """Gamma^(3) applied to the equation, reduced modulo the equation.

    ``eq`` is an EquationForm or an EquationSpec.  When f is concrete, f
    atoms inside the generator are replaced by their closed forms first.
    """
    if isinstance(eq, EquationSpec):
        eq = EquationForm(eq, symbolic_eps=symbolic_eps)
    vf = _bind_f(vf, eq.spec)
    if eq.eps is not EPS and any(EPS in c.free_symbols for c in vf.components):
        vf = vf.subs({EPS: eq.eps})
    pr = prolong3(vf)
    lhs = eq.lhs
    total = (vf.tau * differentiate(lhs, T) + vf.xi * differentiate(lhs, X)
             + vf.eta * differentiate(lhs, U))
    for J in (UT, UX, UXX, UXXX):
        dl = differentiate(lhs, J)
        if dl is not Const(0):
            total = total + pr[J] * dl
    total = normalize(total)
    syms = total.free_symbols
    bindings = {UT: eq.ut}
    if UTX in syms or UTXX in syms:
        utx = total_derivative(eq.ut, "x", _ONSHELL_ORDER)
        bindings[UTX] = utx
        if UTXX in syms:
            bindings[UTXX] = total_derivative(utx, "x", _ONSHELL_ORDER)
    return subs(total, bindings)


def is_symmetry(vf: VectorField, eq, **kw) -> ZeroStatus:
    """Zero status of the defect; SymbolicZero or NumericZero means symmetry."""
    return is_zero(symmetry_defect(vf, eq, **kw))


def commutator(a: VectorField, b: VectorField) -> VectorField:
    return VectorField(*(normalize(a.apply(bi) - b.apply(ai))
                         for ai, bi in zip(a.components, b.components)))


# ---------------------------------------------------------------------------
# span membership

def _is_param_atom(b, e):
    for s in b.free_symbols | e.free_symbols:
        if not (type(s) is Sym and s.kind == "param"):
            return False
    return True


def _split_by_variables(e: Expr) -> dict:
    """Group the terms of e by their non-parameter part.

    Returns {variable monomial: parameter-only coefficient expression}.
    """
    groups = {}
    for mono, c in to_poly(e).items():
        var = tuple(be for be in mono if not _is_param_atom(*be))
        par = tuple(be for be in mono if _is_param_atom(*be))
        groups.setdefault(var, {})[par] = c
    return {v: from_poly(P) for v, P in groups.items()}


def _nonzero(e) -> bool:
    return is_zero(e) is ZeroStatus.NonZero


def _rank_solve(rows, rhs, ncols):
    """Gaussian elimination over parameter expressions.

    Returns (rank, solution or None if inconsistent).
    """
    A = [list(r) for r in rows]
    b = list(rhs)
    pivots = []
    r = 0
    for col in range(ncols):
        piv = None
        for i in range(r, len(A)):
            if _nonzero(A[i][col]):
                piv = i
                break
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        b[r], b[piv] = b[piv], b[r]
        p = A[r][col]
        for i in range(len(A)):
            if i == r or A[i][col] is Const(0):
                continue
            fac = normalize(A[i][col] / p)
            A[i] = [normalize(x - fac * y) for x, y in zip(A[i], A[r])]
            b[i] = normalize(b[i] - fac * b[r])
        pivots.append((r, col))
        r += 1
        if r == len(A):
            break
    for i in range(r, len(A)):
        if _nonzero(b[i]):
            return r, None
    sol = [Const(0)] * ncols
    for i, col in pivots:
        sol[col] = normalize(b[i] / A[i][col])
    return r, sol


def span_membership(v: VectorField, basis) -> list | None:
    """Constant coefficients c with v = sum c_i basis_i, or None.

    Coefficients may depend on parameters.  Raises AmbiguousSpan when the
    basis is linearly dependent over the parameter field.
    """
    basis = list(basis)
    if not basis:
        raise ValueError("basis must be nonempty")
    keys = []
    cols = []
    for bv in basis:
        col = {}
        for ci, comp in enumerate(bv.components):
            for mono, coef in _split_by_variables(comp).items():
                col[(ci, mono)] = coef
                if (ci, mono) not in keys:
                    keys.append((ci, mono))
        cols.append(col)
    target = {}
    for ci, comp in enumerate(v.components):
        for mono, coef in _split_by_variables(comp).items():
            target[(ci, mono)] = coef
    rows = [[col.get(key, Const(0)) for col in cols] for key in keys]
    rank, _ = _rank_solve(rows, [Const(0)] * len(keys), len(basis))
    if rank < len(basis):
        raise AmbiguousSpan(f"basis of {len(basis)} fields has rank {rank}")
    if any(key not in keys and _nonzero(target[key]) for key in target):
        return _numeric_span(v, basis)
    rhs = [target.get(key, Const(0)) for key in keys]
    _, sol = _rank_solve(rows, rhs, len(basis))
    return sol if sol is not None else _numeric_span(v, basis)


def _numeric_span(v: VectorField, basis):
    """Second tier for bases whose monomials are tied by identities the
    normal form does not apply (sin^2 + cos^2 = 1).  Only parameter-free
    fields qualify; the rationalized coefficients are re-verified with
    is_zero."""
    syms = set()
    for f in [v, *basis]:
        for c in f.components:
            syms |= c.free_symbols
    if any(s not in (T, X, U) for s in syms):
        return None
    rng = np.random.default_rng(SAMPLE_SEED)
    fns = [[lambdify(c, (T, X, U)) for c in f.components] for f in [v, *basis]]
    A, b = [], []
    for _ in range(3 * len(basis) + 4):
        pt = rng.uniform(0.5, 2.0, size=3)
        for ci in range(3):
            b.append(fns[0][ci](*pt))
            A.append([fb[ci](*pt) for fb in fns[1:]])
    coef, *_ = np.linalg.lstsq(np.array(A), np.array(b), rcond=None)
    sol = [Const(Fraction(float(c)).limit_denominator(10 ** 6)) for c in coef]
    combo = [sum((c * bf.components[i] for c, bf in zip(sol, basis)), Const(0))
             for i in range(3)]
    if all(is_zero(vc - cc).is_zero for vc, cc in zip(v.components, combo)):
        return sol
    return None
