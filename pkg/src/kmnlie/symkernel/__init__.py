"""Exact symbolic kernel: expressions, derivatives, substitution, zero test."""

from .core import (
    EPS, HALF, OMEGA, ONE, T, U, X, ZERO, Add, Const, Expr, FDeriv, Func, Mul,
    Pow, Sym, as_expr, const, jet, normalize, red, sym,
)
from .calculus import (
    MAX_JET_ORDER, D_t, D_x, differentiate, substitute, total_derivative,
)
from .numeric import (
    ZeroStatus, eval_numeric, from_json, is_zero, lambdify, symbol_name,
    to_json,
)
from .printing import DEFAULT_PARAMS, parse, to_str

__all__ = [
    "Expr", "Const", "Sym", "FDeriv", "Func", "Pow", "Mul", "Add",
    "const", "sym", "jet", "red", "as_expr", "normalize",
    "T", "X", "U", "EPS", "OMEGA", "ZERO", "ONE", "HALF",
    "differentiate", "total_derivative", "D_t", "D_x", "substitute",
    "MAX_JET_ORDER", "parse", "to_str", "DEFAULT_PARAMS",
    "is_zero", "ZeroStatus", "eval_numeric", "lambdify", "to_json",
    "from_json", "symbol_name",
]
