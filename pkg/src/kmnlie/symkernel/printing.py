"""Canonical printer and the expression parser.

Grammar (whitespace insignificant)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary (('^' | '**') unary)?
    primary := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'
    NUMBER  := digits ['.' digits]          (decimals are read exactly)
    NAME    := letter (letter | digit | '_')* "'"*
    FUNC    := exp | ln | log | sin | cos | arctan | atan | sqrt

Names: ``t``, ``x``; ``u`` and jet variables ``u_x``, ``u_tx``, ``u_xt``
(order-insensitive); ``f``, ``f'``, ``f''`` (or ``f_t``, ``f_tt``) and ``F``
for a fixed antiderivative of f; ``omega``, ``phi``, ``phi'``, ...; and
declared parameters.  Derivative-of-expression notation such as
``(u^2)_x`` is not part of the grammar.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..errors import ParseError, UnknownSymbol
from .core import (
    Add, Const, Expr, FDeriv, Func, Mul, Pow, Sym, T, X, as_expr, jet,
    normalize, red, sym,
)

__all__ = ["to_str", "parse", "DEFAULT_PARAMS"]

DEFAULT_PARAMS = frozenset({
    "m", "n", "k", "eps", "sigma", "a", "beta", "gamma", "gammaAmp", "c",
    "c1", "c2", "lam", "delta0", "delta1", "delta2", "delta3", "alpha",
    "delta", "kappa", "mu0", "mu1", "s", "q",
})

_FUNC_ALIASES = {"exp": "exp", "ln": "ln", "log": "ln", "sin": "sin",
                 "cos": "cos", "arctan": "arctan", "atan": "arctan",
                 "sqrt": "sqrt"}


# ---------------------------------------------------------------------------
# printing

def _const_str(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _leaf_str(e) -> str:
    if type(e) is FDeriv:
        return "F" if e.order < 0 else "f" + "'" * e.order
    return e.name


def _atomic(e) -> bool:
    t = type(e)
    if t is Const:
        return e.value.denominator == 1 and e.value >= 0
    return t in (Sym, FDeriv, Func)


def _wrap(e) -> str:
    s = to_str(e)
    return s if _atomic(e) else f"({s})"


def _term_parts(e):
    """(sign, body) where body prints the term without its leading sign."""
    t = type(e)
    if t is Const:
        v = e.value
        return (-1 if v < 0 else 1), _const_str(abs(v))
    if t is Mul and type(e.factors[0]) is Const:
        c = e.factors[0].value
        rest = e.factors[1:]
        body = "*".join(_factor_str(f) for f in rest)
        if abs(c) != 1:
            cs = _const_str(abs(c))
            cs = cs if abs(c).denominator == 1 else f"({cs})"
            body = cs + "*" + body
        return (-1 if c < 0 else 1), body
    return 1, _factor_str(e) if t is not Mul else "*".join(_factor_str(f) for f in e.factors)


def _factor_str(f) -> str:
    t = type(f)
    if t is Pow:
        return _pow_str(f)
    if t is Add:
        return f"({to_str(f)})"
    if t is Const:
        return _wrap(f)
    return to_str(f)


def _pow_str(p) -> str:
    b = _wrap(p.base)
    e = p.exp
    if type(e) is Const and e.value.denominator == 1 and e.value >= 0:
        es = str(e.value.numerator)
    elif type(e) is Sym:
        es = e.name
    else:
        es = f"({to_str(e)})"
    return f"{b}^{es}"


def to_str(e) -> str:
    """Parseable canonical text for an expression."""
    e = as_expr(e)
    t = type(e)
    if t is Const:
        return _const_str(e.value)
    if t is Sym or t is FDeriv:
        return _leaf_str(e)
    if t is Func:
        return f"{e.kind}({to_str(e.arg)})"
    if t is Pow:
        return _pow_str(e)
    if t is Mul:
        sign, body = _term_parts(e)
        return ("-" if sign < 0 else "") + body
    if t is Add:
        out = []
        for i, term in enumerate(e.terms):
            sign, body = _term_parts(term)
            if type(term) is Add:
                body = f"({body})"
            if i == 0:
                out.append(("-" if sign < 0 else "") + body)
            else:
                out.append((" - " if sign < 0 else " + ") + body)
        return "".join(out)
    raise TypeError(t)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z][A-Za-z0-9_]*'*)
  | (?P<op>\*\*|[-+*/^()])
""", re.VERBOSE)

_JET = re.compile(r"u_([tx]+)$")
_FDER = re.compile(r"f_(t+)$")


def _tokenize(text):
    pos = 0
    toks = []
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = mt.lastgroup
        if kind != "ws":
            toks.append((kind, mt.group(), pos))
        pos = mt.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text, params, max_order):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.params = params
        self.max_order = max_order

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def parse(self):
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", pos)
        return e

    def expr(self):
        terms = [self.term()]
        while self.peek()[1] in ("+", "-"):
            _, op, _ = self.take()
            t = self.term()
            terms.append(t if op == "+" else Mul((Const(-1), t)))
        return terms[0] if len(terms) == 1 else Add(terms)

    def term(self):
        factors = [self.unary()]
        while self.peek()[1] in ("*", "/"):
            _, op, _ = self.take()
            f = self.unary()
            factors.append(f if op == "*" else Pow(f, Const(-1)))
        return factors[0] if len(factors) == 1 else Mul(factors)

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Mul((Const(-1), self.unary()))
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[1] in ("^", "**"):
            self.take()
            return Pow(base, self.unary())
        return base

    def primary(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(Fraction(val))
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if val in _FUNC_ALIASES and self.peek()[1] == "(":
                self.take()
                arg = self.expr()
                self.expect(")")
                return Func(_FUNC_ALIASES[val], arg)
            return self.name(val, pos)
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected {val!r}", pos)

    def name(self, val, pos):
        base = val.rstrip("'")
        primes = len(val) - len(base)
        if primes:
            if base == "f":
                return FDeriv(primes)
            if base == "phi":
                return red(primes)
            raise UnknownSymbol(val, pos)
        if val == "t":
            return T
        if val == "x":
            return X
        if val == "u":
            return jet(0, 0)
        mj = _JET.match(val)
        if mj:
            s = mj.group(1)
            nt, nx = s.count("t"), s.count("x")
            if nt + nx > self.max_order:
                raise ParseError(f"jet variable {val} exceeds order {self.max_order}", pos)
            return jet(nt, nx)
        if val == "f":
            return FDeriv(0)
        mf = _FDER.match(val)
        if mf:
            return FDeriv(len(mf.group(1)))
        if val == "F":
            return FDeriv(-1)
        if val == "omega":
            return red(-1)
        if val == "phi":
            return red(0)
        if val in self.params:
            return sym(val)
        raise UnknownSymbol(val, pos)


def parse(text: str, params=(), *, max_order: int = 6, raw: bool = False) -> Expr:
    """Parse ``text`` into a normalized expression.

    ``params`` extends the default parameter names.  With ``raw=True`` the
    unnormalized tree is returned.
    """
    allowed = DEFAULT_PARAMS | frozenset(params)
    tree = _Parser(text, allowed, max_order).parse()
    return tree if raw else normalize(tree)
