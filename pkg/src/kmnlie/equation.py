"""Members of the class u_t + eps (u^m)_x + f(t) (u^n)_xxx = 0.

``FSpec`` describes the coefficient f(t) structurally, ``EquationSpec`` is
the tuple (m, n, eps, f), and ``EquationForm`` is the expanded left-hand
side together with the solved form of u_t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidSpec, LinearEquation
from .symkernel import (
    EPS, T, U, Const, Expr, FDeriv, Func, as_expr, differentiate, jet,
    normalize, parse, to_str,
)

__all__ = ["FSpec", "EquationSpec", "EquationForm", "F_KINDS"]

F_KINDS = ("One", "Power", "Exp", "ExpArctan", "PowerShifted", "TExpInv",
           "Linear", "General")

_T = T
_F = FDeriv(0)


def _ex(v):
    return parse(v) if isinstance(v, str) else as_expr(v)


def _num(e):
    """Rational value of a constant expression, else None."""
    e = normalize(_ex(e))
    return e.value if type(e) is Const else None


@dataclass(frozen=True)
class FSpec:
    """Structural description of f(t).

    kinds and their parameters:

    ========== ============================ =========================
    One        f = 1
    Power      f = c t^k                    c, k (k != 0)
    Exp        f = c e^(lam t)              c, lam
    ExpArctan  f = e^(k arctan t) sqrt(1+t^2)  k (k >= 0)
    PowerShifted f = (t+beta)^k t^(1-k)     k not in {0,1}, beta != 0
    TExpInv    f = t e^(1/t)
    Linear     f = t
    General    f = expr (an expression in t, or the opaque symbol f)
    ========== ============================ =========================
    """

    kind: str
    params: tuple = ()
    expr: Expr | None = None
    antideriv: Expr | None = None

    def __post_init__(self):
        if self.kind not in F_KINDS:
            raise InvalidSpec(f"unknown f kind {self.kind!r}")
        p = dict(self.params)
        if self.kind == "Power":
            if "c" not in p or "k" not in p:
                raise InvalidSpec("Power needs c and k")
            if _num(p["k"]) == 0:
                raise InvalidSpec("Power requires k != 0")
            if _num(p["c"]) == 0:
                raise InvalidSpec("f must not vanish")
        elif self.kind == "Exp":
            if _num(p.get("c", 1)) == 0:
                raise InvalidSpec("f must not vanish")
        elif self.kind == "ExpArctan":
            k = _num(p["k"])
            if k is not None and k < 0:
                raise InvalidSpec("ExpArctan requires k >= 0")
        elif self.kind == "PowerShifted":
            k, b = _num(p["k"]), _num(p["beta"])
            if k in (0, 1):
                raise InvalidSpec("PowerShifted requires k not in {0, 1}")
            if b == 0:
                raise InvalidSpec("PowerShifted requires beta != 0")
        elif self.kind == "General":
            if self.expr is None:
                raise InvalidSpec("General needs an expression")
            e = normalize(self.expr)
            if e is Const(0):
                raise InvalidSpec("f must not vanish")
            object.__setattr__(self, "expr", e)
        object.__setattr__(self, "params",
                           tuple(sorted((k, normalize(_ex(v))) for k, v in p.items())))

    # -- constructors --------------------------------------------------------
    @classmethod
    def one(cls):
        return cls("One")

    @classmethod
    def power(cls, k, c=1):
        return cls("Power", (("c", _ex(c)), ("k", _ex(k))))

    @classmethod
    def exp(cls, lam=1, c=1):
        return cls("Exp", (("c", _ex(c)), ("lam", _ex(lam))))

    @classmethod
    def exp_arctan(cls, k):
        return cls("ExpArctan", (("k", _ex(k)),))

    @classmethod
    def power_shifted(cls, k, beta):
        return cls("PowerShifted", (("beta", _ex(beta)), ("k", _ex(k))))

    @classmethod
    def texpinv(cls):
        return cls("TExpInv")

    @classmethod
    def linear(cls):
        return cls("Linear")

    @classmethod
    def general(cls, expr=None, antideriv=None):
        """Arbitrary f; without ``expr`` f stays the opaque symbol."""
        e = _F if expr is None else (parse(expr) if isinstance(expr, str) else as_expr(expr))
        a = antideriv
        if isinstance(a, str):
            a = parse(a)
        return cls("General", (), e, None if a is None else normalize(a))

    # -- queries ---------------------------------------------------------------
    def param(self, name, default=None):
        return dict(self.params).get(name, default)

    @property
    def is_opaque(self) -> bool:
        return self.kind == "General" and self.expr is _F

    def f_expr(self) -> Expr:
        p = dict(self.params)
        k = self.kind
        if k == "One":
            return Const(1)
        if k == "Power":
            return p["c"] * _T ** p["k"]
        if k == "Exp":
            return p["c"] * Func("exp", p["lam"] * _T)
        if k == "ExpArctan":
            return normalize(Func("exp", p["k"] * Func("arctan", _T))
                             * Func("sqrt", _T * _T + 1))
        if k == "PowerShifted":
            return (_T + p["beta"]) ** p["k"] * _T ** (1 - p["k"])
        if k == "TExpInv":
            return _T * Func("exp", _T ** -1)
        if k == "Linear":
            return _T
        return self.expr

    def antiderivative(self):
        """A fixed antiderivative of f in closed form, or None."""
        p = dict(self.params)
        k = self.kind
        if k == "One":
            return _T
        if k == "Linear":
            return _T * _T / 2
        if k == "Power":
            kk = p["k"]
            if _num(kk) == -1:
                return p["c"] * Func("ln", _T)
            if _num(kk) is None:
                return None
            return p["c"] * _T ** (kk + 1) / (kk + 1)
        if k == "Exp":
            lam = p["lam"]
            if _num(lam) == 0:
                return p["c"] * _T
            return p["c"] / lam * Func("exp", lam * _T)
        if k == "General":
            if self.is_opaque:
                return FDeriv(-1)
            if self.antideriv is None and T not in self.expr.free_symbols \
                    and not any(type(s) is FDeriv for s in self.expr.free_symbols):
                return self.expr * _T
            return self.antideriv
        return None

    def bindings(self, orders) -> dict:
        """Map FDeriv atoms of the given orders to closed forms.

        Order -1 (the antiderivative) is included only when known.
        """
        if self.is_opaque:
            return {}
        out = {}
        f = self.f_expr()
        top = max(orders) if orders else 0
        d = f
        for r in range(0, top + 1):
            if r in orders:
                out[FDeriv(r)] = d
            if r < top:
                d = differentiate(d, _T)
        if -1 in orders:
            a = self.antiderivative()
            if a is not None:
                out[FDeriv(-1)] = a
        return out

    def text(self) -> str:
        """Canonical textual form, e.g. ``Power(c=1, k=3): t^3``."""
        args = ", ".join(f"{k}={to_str(v)}" for k, v in self.params)
        return f"{self.kind}({args}): {to_str(self.f_expr())}"

    def __str__(self):
        return self.text()

    def to_json(self):
        d = {"kind": self.kind, "params": {k: to_str(v) for k, v in self.params}}
        if self.kind == "General":
            d["expr"] = to_str(self.expr)
            if self.antideriv is not None:
                d["antideriv"] = to_str(self.antideriv)
        return d

    @classmethod
    def from_json(cls, d):
        kind = d["kind"]
        params = tuple((k, parse(str(v))) for k, v in d.get("params", {}).items())
        if kind == "General":
            expr = d.get("expr")
            return cls.general(None if expr in (None, "f") else expr, d.get("antideriv"))
        return cls(kind, params)


@dataclass(frozen=True)
class EquationSpec:
    """One equation of the class: exponents m, n, sign eps, coefficient f."""

    m: Expr
    n: Expr
    eps: int
    f: FSpec = field(default_factory=FSpec.general)

    def __post_init__(self):
        m = normalize(parse(self.m) if isinstance(self.m, str) else as_expr(self.m))
        n = normalize(parse(self.n) if isinstance(self.n, str) else as_expr(self.n))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        if self.eps not in (1, -1):
            raise InvalidSpec("eps must be +1 or -1")
        object.__setattr__(self, "eps", int(self.eps))
        if not isinstance(self.f, FSpec):
            raise InvalidSpec("f must be an FSpec")
        if n is Const(0):
            raise InvalidSpec("n must be nonzero")
        if n is Const(1) and m in (Const(0), Const(1)):
            raise LinearEquation(f"(n, m) = (1, {to_str(m)}) gives a linear equation")

    @property
    def m_value(self):
        return _num(self.m)

    @property
    def n_value(self):
        return _num(self.n)

    def replace(self, **kw):
        d = {"m": self.m, "n": self.n, "eps": self.eps, "f": self.f}
        d.update(kw)
        return EquationSpec(**d)

    def __str__(self):
        return (f"m={to_str(self.m)}, n={to_str(self.n)}, eps={self.eps:+d}, "
                f"f={self.f.text()}")

    def to_json(self):
        return {"m": to_str(self.m), "n": to_str(self.n), "eps": self.eps,
                "f": self.f.to_json()}

    @classmethod
    def from_json(cls, d):
        return cls(parse(str(d["m"])), parse(str(d["n"])), int(d["eps"]),
                   FSpec.from_json(d["f"]) if "f" in d else FSpec.general())


class EquationForm:
    """Expanded left-hand side of one equation and its solved form for u_t.

    ``eps`` may be overridden by the symbol ``EPS`` to keep the sign
    symbolic.
    """

    def __init__(self, spec: EquationSpec, *, symbolic_eps: bool = False):
        self.spec = spec
        m, n = spec.m, spec.n
        e = EPS if symbolic_eps else Const(spec.eps)
        f = spec.f.f_expr()
        u = U
        ux, uxx, uxxx = jet(0, 1), jet(0, 2), jet(0, 3)
        disp = (u ** (n - 1) * uxxx + 3 * (n - 1) * u ** (n - 2) * ux * uxx
                + (n - 1) * (n - 2) * u ** (n - 3) * ux ** 3)
        rest = e * m * u ** (m - 1) * ux + n * f * disp
        self.eps = e
        self.f = f
        self.rest = normalize(rest)
        self.lhs = normalize(jet(1, 0) + rest)
        self.ut = normalize(-rest)

    def __repr__(self):
        return f"EquationForm({self.spec})"
