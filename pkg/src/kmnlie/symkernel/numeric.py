"""Floating-point evaluation, the zero test and JSON (de)serialization."""

from __future__ import annotations

import enum
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ..errors import DomainError, EvalDomain, UnboundSymbol
from .core import (
    EPS, Add, Const, Expr, FDeriv, Func, Mul, Pow, Sym, as_expr, normalize,
)

__all__ = [
    "ZeroStatus", "is_zero", "eval_numeric", "lambdify", "to_json",
    "from_json", "symbol_name", "ZERO_TOL", "N_SAMPLES", "SAMPLE_SEED",
]

ZERO_TOL = 1e-9
N_SAMPLES = 16
SAMPLE_SEED = 20240611
MAX_RESAMPLES = 8


class ZeroStatus(enum.Enum):
    SymbolicZero = "SymbolicZero"
    NumericZero = "NumericZero"
    NonZero = "NonZero"

    @property
    def is_zero(self) -> bool:
        return self is not ZeroStatus.NonZero


def symbol_name(s) -> str:
    if type(s) is FDeriv:
        return "F" if s.order < 0 else "f" + "'" * s.order
    return s.name


# ---------------------------------------------------------------------------
# scalar helpers (math mode)

def _pow(a, b, bint):
    if a < 0 and not bint:
        raise DomainError(f"negative base {a!r} with non-integer exponent {b!r}")
    if a == 0 and b < 0:
        raise DomainError("zero raised to a negative power")
    try:
        return a ** b
    except OverflowError as exc:
        raise DomainError(str(exc)) from None


def _ln(a):
    if a <= 0:
        raise DomainError(f"ln of non-positive value {a!r}")
    return math.log(a)


def _exp(a):
    try:
        return math.exp(a)
    except OverflowError as exc:
        raise DomainError(str(exc)) from None


def _npow(a, b, bint):
    a = np.asarray(a, dtype=float)
    if not bint and np.any(a < 0):
        raise DomainError("negative base with non-integer exponent")
    if np.any((a == 0) & (np.asarray(b) < 0)):
        raise DomainError("zero raised to a negative power")
    return np.power(a, b)


def _nln(a):
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise DomainError("ln of non-positive value")
    return np.log(a)


_MATH_ENV = {"_pow": _pow, "_ln": _ln, "_exp": _exp, "_sin": math.sin,
             "_cos": math.cos, "_atan": math.atan, "_sqrt": math.sqrt}
_NP_ENV = {"_pow": _npow, "_ln": _nln, "_exp": np.exp, "_sin": np.sin,
           "_cos": np.cos, "_atan": np.arctan, "_sqrt": np.sqrt}


# ---------------------------------------------------------------------------
# code generation

class _Gen:
    def __init__(self, index):
        self.index = index
        self.consts = {}

    def const(self, v: Fraction):
        name = self.consts.get(v)
        if name is None:
            name = self.consts[v] = f"_c{len(self.consts)}"
        return name

    def __call__(self, e):
        t = type(e)
        if t is Const:
            return self.const(e.value)
        if t is Sym or t is FDeriv:
            i = self.index.get(e)
            if i is None:
                raise UnboundSymbol(f"symbol {symbol_name(e)!r} is not bound")
            return f"_v[{i}]"
        if t is Func:
            a = self(e.arg)
            if e.kind == "ln":
                return f"_ln({a})"
            if e.kind == "sqrt":
                return f"_pow({a}, 0.5, False)"
            name = {"exp": "_exp", "sin": "_sin", "cos": "_cos", "arctan": "_atan"}[e.kind]
            return f"{name}({a})"
        if t is Pow:
            b = self(e.base)
            ex = e.exp
            if type(ex) is Const and ex.value.denominator == 1:
                p = ex.value.numerator
                if 0 < p <= 4:
                    return "*".join([f"({b})"] * p)
                return f"_pow({b}, {p}, True)"
            return f"_pow({b}, {self(ex)}, False)"
        if t is Mul:
            return "*".join(f"({self(f)})" for f in e.factors)
        if t is Add:
            return "+".join(f"({self(a)})" for a in e.terms)
        raise TypeError(t)


@lru_cache(maxsize=4096)
def _compile(e, args, mode, split):
    index = {a: i for i, a in enumerate(args)}
    gen = _Gen(index)
    if split and type(e) is Add:
        body = "(" + ", ".join(gen(term) for term in e.terms) + ",)"
    elif split:
        body = f"({gen(e)},)"
    else:
        body = gen(e)
    env = dict(_NP_ENV if mode == "numpy" else _MATH_ENV)
    for v, name in gen.consts.items():
        env[name] = float(v)
    code = compile(f"lambda _v: {body}", "<kmnlie-expr>", "eval")
    return eval(code, env)


def _resolve_symbol(key):
    if isinstance(key, Expr):
        return key
    if isinstance(key, str):
        from .printing import parse
        s = parse(key, params=(key,))
        if not (type(s) is Sym or type(s) is FDeriv):
            raise ValueError(f"{key!r} does not name a symbol")
        return s
    raise TypeError(f"cannot interpret {key!r} as a symbol")


def lambdify(e, args, mode: str = "math"):
    """Compile ``e`` into ``fn(*values)``.

    ``args`` lists symbols (Expr or names).  ``mode="numpy"`` accepts arrays
    and broadcasts; both modes raise DomainError instead of returning nan.
    """
    if mode not in ("math", "numpy"):
        raise ValueError("mode must be 'math' or 'numpy'")
    e = normalize(as_expr(e))
    syms = tuple(_resolve_symbol(a) for a in args)
    fn = _compile(e, syms, mode, False)
    if mode == "numpy":
        def call(*values):
            with np.errstate(all="ignore"):
                return fn(values)
    else:
        def call(*values):
            return fn(values)
    call.expr = e
    call.args = syms
    return call


def eval_numeric(e, point) -> float:
    """Evaluate ``e`` in double precision at ``point`` (symbol -> float)."""
    e = normalize(as_expr(e))
    bound = {_resolve_symbol(k): float(v) for k, v in point.items()}
    missing = e.free_symbols - bound.keys()
    if missing:
        names = ", ".join(sorted(symbol_name(s) for s in missing))
        raise UnboundSymbol(f"unbound symbols: {names}")
    args = tuple(sorted(e.free_symbols, key=lambda s: s.key))
    fn = _compile(e, args, "math", False)
    try:
        r = fn(tuple(bound[a] for a in args))
    except ZeroDivisionError:
        raise DomainError("division by zero") from None
    except (OverflowError, ValueError) as exc:
        raise DomainError(str(exc)) from None
    return float(r)


# ---------------------------------------------------------------------------
# zero test

def _sample(args, rng):
    vals = []
    for a in args:
        if a is EPS:
            vals.append(1.0 if rng.random() < 0.5 else -1.0)
        else:
            vals.append(float(rng.uniform(0.5, 2.0)))
    return tuple(vals)


def is_zero(e, *, samples: int = N_SAMPLES, seed: int = SAMPLE_SEED,
            tol: float = ZERO_TOL) -> ZeroStatus:
    """Three-tier zero test: exact normal form first, then sampling.

    Every free symbol is drawn from [0.5, 2] except eps, which is drawn from
    {-1, 1} because the normal form already uses eps**2 == 1.
    """
    e = normalize(as_expr(e))
    if e is Const(0):
        return ZeroStatus.SymbolicZero
    args = tuple(sorted(e.free_symbols, key=lambda s: s.key))
    if not args:
        return ZeroStatus.NonZero
    fn = _compile(e, args, "math", True)
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        for attempt in range(MAX_RESAMPLES + 1):
            point = _sample(args, rng)
            try:
                terms = fn(point)
            except (DomainError, ZeroDivisionError, OverflowError, ValueError):
                continue
            if all(math.isfinite(v) for v in terms):
                break
        else:
            raise EvalDomain(
                f"no admissible sample point after {MAX_RESAMPLES} resamples")
        scale = max(abs(v) for v in terms)
        if abs(math.fsum(terms)) >= tol * (1.0 + scale):
            return ZeroStatus.NonZero
    return ZeroStatus.NumericZero


# ---------------------------------------------------------------------------
# JSON

def to_json(e):
    """Plain-data tree for ``json.dumps``."""
    e = normalize(as_expr(e))
    return _to_json(e)


def _to_json(e):
    t = type(e)
    if t is Const:
        return {"const": f"{e.value.numerator}/{e.value.denominator}"}
    if t is Sym:
        idx = list(e.index) if isinstance(e.index, tuple) else e.index
        return {"sym": e.name, "kind": e.kind, "index": idx}
    if t is FDeriv:
        return {"fderiv": e.order}
    if t is Func:
        return {"func": e.kind, "arg": _to_json(e.arg)}
    if t is Pow:
        return {"pow": [_to_json(e.base), _to_json(e.exp)]}
    if t is Mul:
        return {"mul": [_to_json(f) for f in e.factors]}
    if t is Add:
        return {"add": [_to_json(a) for a in e.terms]}
    raise TypeError(t)


def from_json(data) -> Expr:
    return normalize(_from_json(data))


def _from_json(d):
    if "const" in d:
        return Const(Fraction(d["const"]))
    if "sym" in d:
        idx = d.get("index")
        if isinstance(idx, list):
            idx = tuple(idx)
        return Sym(d["sym"], d.get("kind", "param"), idx)
    if "fderiv" in d:
        return FDeriv(int(d["fderiv"]))
    if "func" in d:
        return Func(d["func"], _from_json(d["arg"]))
    if "pow" in d:
        b, x = d["pow"]
        return Pow(_from_json(b), _from_json(x))
    if "mul" in d:
        return Mul([_from_json(f) for f in d["mul"]])
    if "add" in d:
        return Add([_from_json(a) for a in d["add"]])
    raise ValueError(f"malformed expression JSON: {d!r}")
