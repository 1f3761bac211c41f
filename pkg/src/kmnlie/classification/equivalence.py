"""Equivalence transformations of the class and of its conditional subclasses.

Every transform is stored as a family name plus parameter expressions.  The
forward maps are expressions in t, x, u that may also contain the symbols
m, n and eps; those are bound from the source equation when the transform is
applied.  ``T`` parameters (arbitrary time maps) are expressions in t.

families
--------
G          t~ = s d1 d3^(1-m) t + d0,  x~ = d1 x + d2,  u~ = d3 u,
           f~ = s d1^2 d3^(m-n) f,  eps~ = s eps
G_n0       (m = 0) t~ = T(t),  x~ = d1 x + d2,  u~ = d3 u,  f~ = d1^3 d3^(1-n) f / T_t
G_n1       (m = 1) as G_n0 but x~ = d1 (x - eps t) + s eps T + d2, eps~ = s eps
G_12       (n, m) = (1, 2) projective in (x, t, 1) with matrix
           [[kappa, mu1, mu0], [0, alpha, beta], [0, gamma, delta]]
M1toM0     x~ = x - eps t, maps m = 1 to m = 0
GClassMap  t~ = e G(t) with G' = g, f~ = e f / g, maps u_t + g (u^m)_x + f (u^n)_xxx = 0
           into the class with eps~ = e
Chain      sequential application of the listed transforms
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..equation import EquationSpec, FSpec
from ..errors import (
    DegenerateResult, DomainError, EvalDomain, FamilyMismatch, InvalidSpec,
    NonInvertibleParameterization, NotNormalizable,
)
from ..symkernel import (
    EPS, ONE, T, U, X, ZERO, Const, Expr, Func,
    as_expr, differentiate, eval_numeric, is_zero, lambdify, normalize, parse,
    sym, to_str,
)
from ..symkernel.calculus import subs
from ..symkernel.core import Add, to_poly

__all__ = [
    "EquivTransform", "FAMILIES", "apply_equiv", "push_solution",
    "compose_equiv", "invert_equiv", "canonicalize", "reduce_g_class",
    "recognize_f", "identity",
]

FAMILIES = ("G", "G_n0", "G_n1", "G_12", "M1toM0", "GClassMap", "Chain")

_M, _N = sym("m"), sym("n")

_PARAMS = {
    "G": ("delta0", "delta1", "delta2", "delta3", "s"),
    "G_n0": ("T", "delta1", "delta2", "delta3"),
    "G_n1": ("T", "delta1", "delta2", "delta3", "s"),
    "G_12": ("alpha", "beta", "gamma", "delta", "kappa", "mu0", "mu1", "s"),
    "M1toM0": (),
    "GClassMap": ("g", "G", "e"),
}

_DEFAULTS = {
    "G": {"delta0": 0, "delta1": 1, "delta2": 0, "delta3": 1, "s": 1},
    "G_n0": {"T": T, "delta1": 1, "delta2": 0, "delta3": 1},
    "G_n1": {"T": T, "delta1": 1, "delta2": 0, "delta3": 1, "s": 1},
    "G_12": {"alpha": 1, "beta": 0, "gamma": 0, "delta": 1, "kappa": 1,
             "mu0": 0, "mu1": 0, "s": 1},
    "M1toM0": {},
    "GClassMap": {"e": 1},
}


def _is_zero_expr(e) -> bool:
    try:
        return is_zero(e).is_zero
    except EvalDomain:
        # no admissible sample in the box (e.g. a time map whose image lies
        # below t = 0); only the exact verdict is available
        return normalize(e) is ZERO


def _sign(v) -> int:
    v = normalize(as_expr(v))
    if v not in (Const(1), Const(-1)):
        raise InvalidSpec(f"sign parameter must be +1 or -1, got {to_str(v)}")
    return int(v.value)


@dataclass(frozen=True)
class EquivTransform:
    family: str
    params: tuple = ()
    steps: tuple = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpec(f"unknown family {self.family!r}")
        if self.family == "Chain":
            return
        p = dict(_DEFAULTS[self.family])
        given = dict(self.params)
        unknown = set(given) - set(_PARAMS[self.family])
        if unknown:
            raise InvalidSpec(f"unknown parameters for {self.family}: {sorted(unknown)}")
        p.update(given)
        if self.family == "GClassMap" and ("g" not in p or "G" not in p):
            raise InvalidSpec("GClassMap needs g and its antiderivative G")
        norm = {}
        for k, v in p.items():
            norm[k] = parse(v) if isinstance(v, str) else normalize(as_expr(v))
        for k in ("s", "e"):
            if k in norm:
                _sign(norm[k])
        object.__setattr__(self, "params", tuple(sorted(norm.items())))
        self._check_nondegenerate()

    @classmethod
    def make(cls, family, **params):
        return cls(family, tuple(params.items()))

    def p(self, name) -> Expr:
        return dict(self.params)[name]

    def _check_nondegenerate(self):
        f = self.family
        if f in ("G", "G_n0", "G_n1"):
            if _is_zero_expr(self.p("delta1") * self.p("delta3")):
                raise NonInvertibleParameterization("delta1*delta3 must be nonzero")
        if f in ("G_n0", "G_n1"):
            if _is_zero_expr(differentiate(self.p("T"), T)):
                raise NonInvertibleParameterization("T_t must be nonzero")
        if f == "G_12":
            p = dict(self.params)
            det = p["alpha"] * p["delta"] - p["beta"] * p["gamma"]
            if _is_zero_expr(p["kappa"] * det):
                raise NonInvertibleParameterization("kappa*(alpha*delta-beta*gamma) must be nonzero")
        if f == "GClassMap":
            if _is_zero_expr(self.p("g")):
                raise NonInvertibleParameterization("g must be nonzero")

    # -- maps ------------------------------------------------------------------
    def maps(self):
        """(t~, x~, u~, f factor, eps factor) as expressions.

        f~(t~) = factor * f(t); eps~ = eps_factor * eps, except GClassMap
        whose eps factor is the absolute target sign (see ``eps_absolute``).
        """
        fam = self.family
        if fam == "Chain":
            raise FamilyMismatch("a chain has no single closed-form map")
        p = dict(self.params)
        if fam == "G":
            d0, d1, d2, d3, s = (p[k] for k in ("delta0", "delta1", "delta2", "delta3", "s"))
            return (s * d1 * d3 ** (1 - _M) * T + d0, d1 * X + d2, d3 * U,
                    s * d1 ** 2 * d3 ** (_M - _N), s)
        if fam in ("G_n0", "G_n1"):
            Tm, d1, d2, d3 = p["T"], p["delta1"], p["delta2"], p["delta3"]
            factor = d1 ** 3 * d3 ** (1 - _N) / differentiate(Tm, T)
            if fam == "G_n0":
                return Tm, d1 * X + d2, d3 * U, factor, ONE
            s = p["s"]
            return Tm, d1 * (X - EPS * T) + s * EPS * Tm + d2, d3 * U, factor, s
        if fam == "G_12":
            a, b, g, d = p["alpha"], p["beta"], p["gamma"], p["delta"]
            k, mu0, mu1, s = p["kappa"], p["mu0"], p["mu1"], p["s"]
            w = g * T + d
            det = a * d - b * g
            tt = (a * T + b) / w
            xt = (k * X + mu1 * T + mu0) / w
            ut = s * (2 * EPS * k * w * U - k * g * X + mu1 * d - mu0 * g) / (2 * EPS * det)
            return tt, xt, ut, k ** 3 / det / w, s
        if fam == "M1toM0":
            return T, X - EPS * T, U, ONE, ONE
        if fam == "GClassMap":
            e = p["e"]
            return e * p["G"], X, U, e / p["g"], e
        raise AssertionError(fam)

    @property
    def eps_absolute(self) -> bool:
        return self.family == "GClassMap"

    def bound_maps(self, spec: EquationSpec):
        """Forward maps with m, n, eps bound from the source spec."""
        b = {_M: spec.m, _N: spec.n, EPS: Const(spec.eps)}
        return tuple(normalize(subs(e, b)) for e in self.maps())

    def __str__(self):
        if self.family == "Chain":
            return " then ".join(str(s) for s in self.steps)
        args = ", ".join(f"{k}={to_str(v)}" for k, v in self.params)
        return f"{self.family}({args})"

    def to_json(self):
        if self.family == "Chain":
            return {"family": "Chain", "steps": [s.to_json() for s in self.steps]}
        return {"family": self.family, "params": {k: to_str(v) for k, v in self.params}}


def identity(family="G") -> EquivTransform:
    return EquivTransform(family)


# ---------------------------------------------------------------------------
# inverting time maps

def _split_const(P):
    const = {}
    rest = {}
    for mono, c in P.items():
        if any(T in b.free_symbols or T in e.free_symbols for b, e in mono):
            rest[mono] = c
        else:
            const[mono] = c
    from ..symkernel.core import from_poly
    return from_poly(const), rest


def invert_time(Tm: Expr, var: Expr = T) -> Expr:
    """Closed-form inverse t(t~) of t~ = Tm(t); the result is written in ``var``.

    Handles a t^p + b, a exp(lam t) + b, a ln t + b and Moebius maps.
    """
    from ..symkernel.core import from_poly
    Tm = normalize(Tm)
    tv = var
    b, rest = _split_const(to_poly(Tm))
    if len(rest) == 1:
        (mono, c), = rest.items()
        coef = []
        tpart = []
        for base, e in mono:
            (tpart if T in base.free_symbols or T in e.free_symbols else coef).append((base, e))
        a = from_poly({tuple(coef): c})
        if len(tpart) == 1:
            base, e = tpart[0]
            if base is T and T not in e.free_symbols:
                return normalize(((tv - b) / a) ** (1 / e))
            if type(base) is Func and base.kind == "exp" and e is ONE:
                lam = normalize(base.arg / T)
                if T not in lam.free_symbols:
                    return normalize(Func("ln", (tv - b) / a) / lam)
            if type(base) is Func and base.kind == "ln" and base.arg is T and e is ONE:
                return normalize(Func("exp", (tv - b) / a))
    # Moebius (a t + b) / (c t + d)
    num, den = _as_fraction(Tm)
    if den is not None:
        pa = normalize(differentiate(num, T))
        pc = normalize(differentiate(den, T))
        pb = normalize(subs(num, {T: ZERO}))
        pd = normalize(subs(den, {T: ZERO}))
        if all(T not in e.free_symbols for e in (pa, pb, pc, pd)) and \
                _is_zero_expr(num - pa * T - pb) and _is_zero_expr(den - pc * T - pd):
            return normalize((pd * tv - pb) / (pa - pc * tv))
    raise NonInvertibleParameterization(f"cannot invert time map {to_str(Tm)} in closed form")


def _as_fraction(e):
    """Write e as num/den with a single affine denominator in t, if possible."""
    dens = set()
    for mono in to_poly(e):
        for b, ex in mono:
            if type(b) is Add and T in b.free_symbols and ex is Const(-1):
                dens.add(b)
            elif T in b.free_symbols and type(ex) is Const and ex.value < 0:
                if b is T and ex is Const(-1):
                    dens.add(T)
                else:
                    return e, None
    if len(dens) != 1:
        return e, None
    den, = dens
    # exponents add per monomial so that den^-1 * den cancels
    from ..symkernel.core import from_poly, mul_base_power
    num = mul_base_power(to_poly(e), den, ONE)
    return normalize(from_poly(num)), den


# ---------------------------------------------------------------------------
# f recognition

def _t_monomial(e):
    """(c, k) if e == c * t^k with c, k free of t."""
    P = to_poly(e)
    if len(P) != 1:
        return None
    (mono, c), = P.items()
    from ..symkernel.core import from_poly
    k = ZERO
    coef = []
    for b, ex in mono:
        if b is T and T not in ex.free_symbols:
            k = ex
        elif T in b.free_symbols or T in ex.free_symbols:
            return None
        else:
            coef.append((b, ex))
    return from_poly({tuple(coef): c}), k


def recognize_f(e: Expr, hint: str | None = None) -> FSpec:
    """Structural FSpec for an expression in t (General if nothing fits)."""
    e = normalize(e)
    if e is ONE:
        return FSpec.one()
    if T not in e.free_symbols:
        return FSpec.general(e)
    cands = []
    tm = _t_monomial(e)
    if tm is not None:
        c, k = tm
        if k is ONE and c is ONE:
            cands.append(FSpec.linear())
        cands.append(FSpec.power(k, c))
    P = to_poly(e)
    if len(P) == 1:
        (mono, c), = P.items()
        for b, ex in mono:
            if type(b) is Func and b.kind == "exp":
                arg = b.arg
                lam = normalize(arg / T)
                if T not in lam.free_symbols:
                    cands.append(FSpec.exp(lam, normalize(e / Func("exp", arg))))
                ka = normalize(arg / Func("arctan", T))
                if T not in ka.free_symbols:
                    try:
                        cands.append(FSpec.exp_arctan(ka))
                    except InvalidSpec:
                        pass
            if type(b) is Add and T in b.free_symbols:
                beta = normalize(b - T)
                if T not in beta.free_symbols and beta is not ZERO:
                    try:
                        cands.append(FSpec.power_shifted(ex, beta))
                    except InvalidSpec:
                        pass
        cands.append(FSpec.texpinv())
    if hint is not None:
        cands.sort(key=lambda f: f.kind != hint)
    for f in cands:
        try:
            if normalize(f.f_expr() - e) is ZERO:
                return f
        except Exception:  # noqa: BLE001 - candidate construction only
            continue
    return FSpec.general(e)


# ---------------------------------------------------------------------------
# apply / push

def _family_check(tr: EquivTransform, spec: EquationSpec):
    fam = tr.family
    if fam == "G_n0" and spec.m is not ZERO:
        raise FamilyMismatch("G_n0 applies to m = 0 only")
    if fam in ("G_n1", "M1toM0") and spec.m is not ONE:
        raise FamilyMismatch(f"{fam} applies to m = 1 only")
    if fam == "G_12" and (spec.n is not ONE or spec.m is not Const(2)):
        raise FamilyMismatch("G_12 applies to (n, m) = (1, 2) only")


def apply_equiv(tr: EquivTransform, spec: EquationSpec) -> EquationSpec:
    """Image of ``spec`` with f~ written as a function of t~."""
    if tr.family == "Chain":
        for step in tr.steps:
            spec = apply_equiv(step, spec)
        return spec
    _family_check(tr, spec)
    tt, xt, ut, factor, epsf = tr.bound_maps(spec)
    new_eps = int(epsf.value) if tr.eps_absolute else int(epsf.value) * spec.eps
    new_m = ZERO if tr.family == "M1toM0" else spec.m
    if spec.f.is_opaque:
        # an arbitrary f stays arbitrary
        new_f = FSpec.general()
    else:
        ft = normalize(factor * spec.f.f_expr())
        t_of = invert_time(tt)
        new_f = recognize_f(subs(ft, {T: t_of}), hint=spec.f.kind)
    return EquationSpec(new_m, spec.n, new_eps, new_f)


def _affine_inverse(expr, var, target):
    """Solve target = expr for var when expr is affine in var."""
    A = normalize(differentiate(expr, var))
    if var in A.free_symbols:
        raise NonInvertibleParameterization("map is not affine in the variable")
    B = normalize(subs(expr, {var: ZERO}))
    return normalize((target - B) / A)


def inverse_maps(tr: EquivTransform, spec: EquationSpec):
    """Symbolic (t(t~), x(t~, x~)) written in the symbols t, x."""
    tt, xt, _, _, _ = tr.bound_maps(spec)
    t_of = invert_time(tt)
    x_of_t = _affine_inverse(xt, X, X)  # x as a function of (t, x~)
    return t_of, normalize(subs(x_of_t, {T: t_of}))


def push_solution(tr: EquivTransform, sol, spec: EquationSpec):
    """Transform a solution of ``spec`` into one of ``apply_equiv(tr, spec)``.

    ``sol`` is either an Expr in (t, x) or a callable (t, x) -> u.  An Expr
    input gives an Expr output; a callable gives a callable.
    """
    if tr.family == "Chain":
        for step in tr.steps:
            sol = push_solution(step, sol, spec)
            spec = apply_equiv(step, spec)
        return sol
    _family_check(tr, spec)
    tt, xt, ut, _, _ = tr.bound_maps(spec)
    if isinstance(sol, Expr) or isinstance(sol, str):
        sol = parse(sol) if isinstance(sol, str) else sol
        t_of, x_of = inverse_maps(tr, spec)
        u_new = subs(ut, {U: sol})
        return normalize(subs(u_new, {T: t_of, X: x_of}))
    try:
        t_of_expr = invert_time(tt)
        t_fn = lambdify(t_of_expr, [T])
    except NonInvertibleParameterization:
        t_fn = _numeric_time_inverse(tt)
    x_fn = lambdify(_affine_inverse(xt, X, X), [T, X])
    u_fn = lambdify(ut, [T, X, U])

    def pushed(t_new, x_new):
        try:
            t_old = t_fn(t_new)
            x_old = x_fn(t_old, x_new)
        except (ZeroDivisionError, OverflowError) as exc:
            raise DomainError(f"inverse map singular at t~={t_new}") from exc
        if not (math.isfinite(t_old) and math.isfinite(x_old)):
            raise DomainError(f"inverse map singular at t~={t_new}")
        return u_fn(t_old, x_old, sol(t_old, x_old))

    return pushed


def _numeric_time_inverse(tt):
    from scipy.optimize import brentq

    f = lambdify(tt, [T])

    def inv(target):
        lo, hi = -1.0, 1.0
        for _ in range(60):
            try:
                if (f(lo) - target) * (f(hi) - target) <= 0:
                    return brentq(lambda s: f(s) - target, lo, hi, xtol=1e-14)
            except Exception:  # noqa: BLE001
                pass
            lo, hi = lo * 2, hi * 2
        raise DomainError(f"could not invert the time map at {target}")

    return inv


# ---------------------------------------------------------------------------
# group laws

def _embed(tr: EquivTransform, family: str) -> EquivTransform:
    """Express a G transform as a member of a conditional group."""
    if tr.family == family:
        return tr
    if tr.family != "G":
        raise FamilyMismatch(f"cannot embed {tr.family} into {family}")
    p = dict(tr.params)
    d0, d1, d2, d3, s = p["delta0"], p["delta1"], p["delta2"], p["delta3"], p["s"]
    if family == "G_n0":
        return EquivTransform.make("G_n0", T=s * d1 * d3 * T + d0, delta1=d1,
                                   delta2=d2, delta3=d3)
    if family == "G_n1":
        return EquivTransform.make("G_n1", T=s * d1 * T + d0, delta1=d1,
                                   delta2=normalize(d2 - s * EPS * d0), delta3=d3, s=s)
    if family == "G_12":
        return EquivTransform.make("G_12", alpha=s * d1 / d3, beta=d0, gamma=0, delta=1,
                                   kappa=d1, mu0=d2, mu1=0, s=s)
    raise FamilyMismatch(f"cannot embed G into {family}")


def _mat(p):
    return [[p["kappa"], p["mu1"], p["mu0"]],
            [ZERO, p["alpha"], p["beta"]],
            [ZERO, p["gamma"], p["delta"]]]


def _matmul(A, B):
    return [[normalize(sum((A[i][k] * B[k][j] for k in range(3)), ZERO))
             for j in range(3)] for i in range(3)]


def _from_mat(M, s):
    return EquivTransform.make("G_12", kappa=M[0][0], mu1=M[0][1], mu0=M[0][2],
                               alpha=M[1][1], beta=M[1][2], gamma=M[2][1],
                               delta=M[2][2], s=s)


def compose_equiv(a: EquivTransform, b: EquivTransform) -> EquivTransform:
    """The transform "apply a, then b"."""
    fams = {a.family, b.family}
    if "Chain" in fams or "M1toM0" in fams or "GClassMap" in fams:
        steps = (a.steps if a.family == "Chain" else (a,)) + \
                (b.steps if b.family == "Chain" else (b,))
        return EquivTransform("Chain", steps=steps)
    if a.family != b.family:
        if "G" not in fams:
            raise FamilyMismatch(f"cannot compose {a.family} with {b.family}")
        target = (fams - {"G"}).pop()
        a, b = _embed(a, target), _embed(b, target)
    fam = a.family
    A, B = dict(a.params), dict(b.params)
    try:
        if fam == "G":
            aB = B["s"] * B["delta1"] * B["delta3"] ** (1 - _M)
            out = EquivTransform.make(
                "G", delta0=aB * A["delta0"] + B["delta0"],
                delta1=A["delta1"] * B["delta1"],
                delta2=B["delta1"] * A["delta2"] + B["delta2"],
                delta3=A["delta3"] * B["delta3"], s=A["s"] * B["s"])
        elif fam in ("G_n0", "G_n1"):
            kw = dict(T=subs(B["T"], {T: A["T"]}), delta1=A["delta1"] * B["delta1"],
                      delta2=B["delta1"] * A["delta2"] + B["delta2"],
                      delta3=A["delta3"] * B["delta3"])
            if fam == "G_n1":
                kw["s"] = A["s"] * B["s"]
            out = EquivTransform.make(fam, **kw)
        else:  # G_12
            out = _from_mat(_matmul(_mat(B), _mat(A)), A["s"] * B["s"])
    except NonInvertibleParameterization as exc:
        raise DegenerateResult(str(exc)) from None
    return out


def invert_equiv(a: EquivTransform) -> EquivTransform:
    fam = a.family
    if fam == "Chain":
        return EquivTransform("Chain", steps=tuple(invert_equiv(s) for s in reversed(a.steps)))
    if fam in ("M1toM0", "GClassMap"):
        raise FamilyMismatch(f"{fam} maps between different classes and has no inverse here")
    p = dict(a.params)
    if fam == "G":
        scale = p["s"] * p["delta1"] * p["delta3"] ** (1 - _M)
        return EquivTransform.make(
            "G", delta0=-p["delta0"] / scale, delta1=1 / p["delta1"],
            delta2=-p["delta2"] / p["delta1"], delta3=1 / p["delta3"], s=p["s"])
    if fam in ("G_n0", "G_n1"):
        kw = dict(T=invert_time(p["T"]), delta1=1 / p["delta1"],
                  delta2=-p["delta2"] / p["delta1"], delta3=1 / p["delta3"])
        if fam == "G_n1":
            kw["s"] = p["s"]
        return EquivTransform.make(fam, **kw)
    # G_12: inverse matrix up to scale = adjugate
    M = _mat(p)
    k, mu1, mu0 = M[0]
    al, be = M[1][1], M[1][2]
    ga, de = M[2][1], M[2][2]
    det2 = al * de - be * ga
    inv = [[det2, -(mu1 * de - mu0 * ga), mu1 * be - mu0 * al],
           [ZERO, k * de, -k * be],
           [ZERO, -k * ga, k * al]]
    return _from_mat([[normalize(v) for v in row] for row in inv], p["s"])


# ---------------------------------------------------------------------------
# canonical representatives

def _num(e):
    e = normalize(e)
    return e.value if type(e) is Const else None


def _abs_sign(c):
    """(sign, |c|) for a numeric constant expression, |c| as an Expr."""
    c = normalize(c)
    if c.free_symbols:
        raise NotNormalizable("coefficient must be numeric to fix its sign")
    v = eval_numeric(c, {})
    if v == 0:
        raise NotNormalizable("zero coefficient")
    s = 1 if v > 0 else -1
    return s, normalize(s * c)


def canonicalize(spec: EquationSpec, *, strict: bool = False):
    """Apply the documented normalizations; returns (spec~, witness).

    m in {0, 1}: map to m = 0 with f = 1 (time reparameterization T = int f).
    f = c e^(lam t): map to f = e^t.  f = c t^k: map to f = t^k.
    Anything else is returned unchanged with the identity witness, or raises
    NotNormalizable when ``strict``.
    """
    try:
        tr = _canonical_witness(spec)
    except (NotNormalizable, NonInvertibleParameterization) as exc:
        if strict:
            raise NotNormalizable(str(exc)) from None
        return spec, identity()
    if tr is None:
        if strict:
            raise NotNormalizable(f"no normalization applies to {spec}")
        return spec, identity()
    return apply_equiv(tr, spec), tr


def _canonical_witness(spec: EquationSpec):
    f = spec.f
    m, n = spec.m, spec.n
    if m in (ZERO, ONE):
        steps = []
        if m is ONE:
            steps.append(EquivTransform("M1toM0"))
        if f.kind != "One":
            F = f.antiderivative()
            if F is None or f.is_opaque:
                raise NotNormalizable("no closed-form antiderivative of f")
            steps.append(EquivTransform.make("G_n0", T=F))
        if not steps:
            return None
        return steps[0] if len(steps) == 1 else EquivTransform("Chain", steps=tuple(steps))
    D = normalize(3 * m - n - 2)
    if f.kind == "Exp":
        c, lam = f.param("c"), f.param("lam")
        if _num(lam) == 0:
            raise NotNormalizable("lam = 0 gives a constant f")
        s, ac = _abs_sign(c)
        if _num(D) == 0:
            if normalize(lam * lam * ac) is not ONE:
                raise NotNormalizable("3m-n-2 = 0 leaves the amplitude fixed")
            d3 = ONE
        else:
            d3 = normalize((1 / (lam * lam * ac)) ** (1 / D))
        d1 = normalize(s * lam * d3 ** (m - 1))
        if normalize(d1 - 1) is ZERO and d3 is ONE and s == 1:
            return None
        return EquivTransform.make("G", delta1=d1, delta3=d3, s=s)
    const = not f.is_opaque and f.kind == "General" and T not in f.f_expr().free_symbols
    if f.kind == "Power" or const:
        # a constant f is t^0 with amplitude c
        c, k = (f.f_expr(), ZERO) if const else (f.param("c"), f.param("k"))
        s, ac = _abs_sign(c)
        if ac is ONE and s == 1:
            return None
        if _num(k) == 2:
            if _num(D) == 0:
                raise NotNormalizable("k = 2 and 3m-n-2 = 0 leave the amplitude fixed")
            d3 = normalize(ac ** (-1 / D))
            return EquivTransform.make("G", delta1=s, delta3=d3, s=s)
        d = normalize(ac ** (-1 / (2 - k)))
        return EquivTransform.make("G", delta1=s * d, delta3=1, s=s)
    return None


def reduce_g_class(g, f, m, n, e: int = 1):
    """Map u_t + g(t)(u^m)_x + f(t)(u^n)_xxx = 0 into the class.

    Returns (EquationSpec, GClassMap transform); f~ = e f / g with t~ = e int g.
    """
    g = parse(g) if isinstance(g, str) else normalize(as_expr(g))
    f = parse(f) if isinstance(f, str) else normalize(as_expr(f))
    G = _antiderivative(g)
    tr = EquivTransform.make("GClassMap", g=g, G=G, e=e)
    src = EquationSpec(m, n, e, recognize_f(f))
    return apply_equiv(tr, src), tr


def _antiderivative(g):
    fs = recognize_f(g)
    a = fs.antiderivative()
    if a is None:
        raise NonInvertibleParameterization(f"no closed-form antiderivative of {to_str(g)}")
    return a
