"""Partial and total derivatives on the jet space, and substitution."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from ..errors import CyclicSubstitution, OrderOverflow
from .core import (
    Add, Const, Expr, FDeriv, Func, ONE, Sym, T, as_expr, eadd, from_poly,
    func_poly, jet, normalize, padd, pmul, ppow, pscale, to_poly, _finalize,
    MINUS_ONE,
)

__all__ = [
    "differentiate", "total_derivative", "substitute", "subs",
    "MAX_JET_ORDER", "D_t", "D_x",
]

MAX_JET_ORDER = 4

_F1 = Fraction(1)


class _Derivation:
    """A derivation acting on polys; leaf rules supplied by subclasses."""

    def __init__(self):
        self._atom_cache = {}

    def leaf(self, s):
        """Derivative of a Sym / FDeriv leaf as a poly."""
        raise NotImplementedError

    def exponent(self, e):
        """Derivative of an exponent expression (parameters only)."""
        return {}

    def atom(self, b):
        P = self._atom_cache.get(b)
        if P is None:
            P = self._atom_cache[b] = self._atom(b)
        return P

    def _atom(self, b):
        tb = type(b)
        if tb is Sym or tb is FDeriv:
            return self.leaf(b)
        if tb is Const:
            return {}
        if tb is Add:
            return self.poly(to_poly(b))
        if tb is Func:
            da = self.poly(to_poly(b.arg))
            if not da:
                return {}
            k = b.kind
            if k == "exp":
                return pmul({((b, ONE),): _F1}, da)
            if k == "ln":
                return pmul(da, ppow(to_poly(b.arg), MINUS_ONE))
            if k == "sin":
                return pmul(func_poly("cos", to_poly(b.arg)), da)
            if k == "cos":
                return pscale(pmul(func_poly("sin", to_poly(b.arg)), da), -_F1)
            if k == "arctan":
                a = to_poly(b.arg)
                return pmul(da, ppow(padd({(): _F1}, pmul(a, a)), MINUS_ONE))
        raise TypeError(f"cannot differentiate atom {b!r}")

    def poly(self, P):
        out = {}
        for mono, c in P.items():
            for i, (b, e) in enumerate(mono):
                db = self.atom(b)
                de = self.exponent(e) if not e.free_symbols.isdisjoint(self.exp_syms) else {}
                if not db and not de:
                    continue
                rest = {mono[:i] + mono[i + 1:]: c}
                if db:
                    lowered = _finalize([(b, eadd(e, MINUS_ONE))])
                    part = pmul(pmul(rest, lowered), pmul(to_poly(e), db))
                    out = padd(out, part)
                if de:
                    here = _finalize([(b, e)])
                    lnb = func_poly("ln", to_poly(b))
                    out = padd(out, pmul(pmul(rest, here), pmul(lnb, de)))
        return out

    exp_syms = frozenset()

    def __call__(self, e):
        return from_poly(self.poly(to_poly(as_expr(e))))


class _Partial(_Derivation):
    def __init__(self, s):
        super().__init__()
        self.s = s
        self.exp_syms = frozenset((s,)) if type(s) is Sym and s.kind == "param" else frozenset()

    def leaf(self, b):
        if b is self.s:
            return {(): _F1}
        if type(b) is FDeriv and self.s is T:
            return {((FDeriv(b.order + 1), ONE),): _F1}
        return {}

    def exponent(self, e):
        return self.poly(to_poly(e))


class _Total(_Derivation):
    def __init__(self, direction, max_order):
        super().__init__()
        self.direction = direction
        self.max_order = max_order

    def leaf(self, b):
        d = self.direction
        if type(b) is FDeriv:
            return {((FDeriv(b.order + 1), ONE),): _F1} if d == "t" else {}
        if b.kind == "indep":
            return {(): _F1} if b.name == d else {}
        if b.kind == "jet":
            nt, nx = b.index
            if d == "t":
                nt += 1
            else:
                nx += 1
            if nt + nx > self.max_order:
                raise OrderOverflow(
                    f"D_{d}({b.name}) needs a jet variable of order {nt + nx} "
                    f"(cap {self.max_order})")
            return {((jet(nt, nx), ONE),): _F1}
        return {}


@lru_cache(maxsize=None)
def _partial(s):
    return _Partial(s)


@lru_cache(maxsize=None)
def _total(direction, max_order):
    return _Total(direction, max_order)


def differentiate(e, s) -> Expr:
    """Partial derivative of ``e`` with respect to symbol ``s``.

    All other symbols are constants, except that f and its derivatives depend
    on t: d/dt f^(r) = f^(r+1).
    """
    s = as_expr(s)
    if not (type(s) is Sym or type(s) is FDeriv):
        raise TypeError("can only differentiate with respect to a symbol")
    return _partial(s)(e)


def total_derivative(e, direction: str, max_order: int = MAX_JET_ORDER) -> Expr:
    """Total derivative D_t or D_x on the jet space."""
    if direction not in ("t", "x"):
        raise ValueError("direction must be 't' or 'x'")
    return _total(direction, max_order)(e)


def D_t(e, max_order: int = MAX_JET_ORDER):
    return total_derivative(e, "t", max_order)


def D_x(e, max_order: int = MAX_JET_ORDER):
    return total_derivative(e, "x", max_order)


# ---------------------------------------------------------------------------
# substitution

def _subs_poly(P, bindings, bound, memo):
    out = {}
    for mono, c in P.items():
        hit = False
        for b, e in mono:
            if not b.free_symbols.isdisjoint(bound) or not e.free_symbols.isdisjoint(bound):
                hit = True
                break
        if not hit:
            out = padd(out, {mono: c})
            continue
        acc = {(): c}
        for b, e in mono:
            bp = _subs_atom(b, bindings, bound, memo)
            ee = _subs_expr(e, bindings, bound, memo) if not e.free_symbols.isdisjoint(bound) else e
            acc = pmul(acc, ppow(bp, ee))
            if not acc:
                break
        out = padd(out, acc)
    return out


def _subs_expr(e, bindings, bound, memo):
    r = memo.get(e)
    if r is None:
        r = memo[e] = from_poly(_subs_poly(to_poly(e), bindings, bound, memo))
    return r


def _subs_atom(b, bindings, bound, memo):
    if b.free_symbols.isdisjoint(bound):
        return to_poly(b)
    tb = type(b)
    if tb is Sym or tb is FDeriv:
        return to_poly(bindings[b])
    if tb is Func:
        return func_poly(b.kind, to_poly(_subs_expr(b.arg, bindings, bound, memo)))
    if tb is Add:
        return to_poly(_subs_expr(b, bindings, bound, memo))
    raise TypeError(tb)


def subs(e, bindings) -> Expr:
    """Simultaneous substitution without the cycle check (internal use)."""
    e = normalize(as_expr(e))
    if not bindings:
        return e
    b2 = {as_expr(k): normalize(as_expr(v)) for k, v in bindings.items()}
    bound = frozenset(b2)
    if e.free_symbols.isdisjoint(bound):
        return e
    return normalize(from_poly(_subs_poly(to_poly(e), b2, bound, {})))


def substitute(e, bindings) -> Expr:
    """Simultaneous substitution followed by normalization.

    Raises CyclicSubstitution when a symbol is mapped to an expression that
    contains it.
    """
    for k, v in bindings.items():
        k = as_expr(k)
        if k in as_expr(v).free_symbols:
            raise CyclicSubstitution(f"{k} is mapped to an expression containing itself")
    return subs(e, bindings)
