"""Similarity reductions by one-parameter subalgebras.

Only generators with affine coefficients are handled,

    tau = a1 t + a0,   xi = b1 x + b2 t + b0,   eta = c1 u + c0,

which is enough for every reduction of the variable-coefficient KdV family
and for the scaling reduction of the boundary value problem.  The
characteristic system is integrated in closed form; the resulting ansatz is
always of the shape u = A(t, x) phi(omega) + B(t, x).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm

from .equation import EquationSpec, FSpec
from .errors import (
    DegenerateScaling, GuardViolation, NonSeparable, ResidualHasX,
    SpecMismatch, TrivialOrbit, UnsupportedGenerator,
)
from .prolongation import UX, UXX, VectorField, prolong3
from .symkernel import (
    EPS, OMEGA, T, U, X, Add, Const, Expr, FDeriv, Func, Sym, ZeroStatus, as_expr,
    differentiate, is_zero, lambdify, normalize, parse, red, sym, to_str,
)
from .symkernel.calculus import subs
from .symkernel.core import from_poly, to_poly

__all__ = [
    "Ansatz", "ReducedODE", "SubalgebraFamily", "BVPReduction",
    "similarity_ansatz", "reduce_pde", "pde_residual", "power_family_basis",
    "optimal_system_case7", "exact_solution_case", "bvp_reduce",
    "bvp_invariance_check", "PHI",
]

PHI = red(0)
_SIGMA, _A = sym("sigma"), sym("a")


def _zero(e) -> bool:
    return normalize(e) is Const(0)


def _coerce(e, params=()):
    return parse(e, params) if isinstance(e, str) else normalize(as_expr(e))


# ---------------------------------------------------------------------------
# ansatz

@dataclass(frozen=True)
class Ansatz:
    """u = shape * phi(omega) + offset, omega = omega(t, x).

    ``x_of`` expresses x through (t, omega) with omega written as the
    symbol ``OMEGA``; it is None on the branch omega = t.
    """

    omega: Expr
    shape: Expr
    offset: Expr
    x_of: Expr | None
    branch: str
    generator: VectorField | None = None

    @property
    def u_of_phi(self) -> Expr:
        return normalize(self.shape * PHI + self.offset)

    @property
    def phi_invariant(self) -> Expr:
        """The invariant (u - offset)/shape that phi stands for."""
        return normalize((U - self.offset) / self.shape)

    def u_from_profile(self, phi_of_omega) -> Expr:
        """u(t, x) for a closed-form profile phi(OMEGA)."""
        phi = subs(_coerce(phi_of_omega), {OMEGA: self.omega})
        return normalize(self.shape * phi + self.offset)

    def invariance_status(self, vf: VectorField | None = None):
        """Zero status of vf applied to omega and to the phi invariant."""
        vf = vf or self.generator
        return (_cleared_status(vf.apply(self.omega)),
                _cleared_status(vf.apply(self.phi_invariant)))

    def to_json(self):
        return {
            "branch": self.branch,
            "u": to_str(self.u_of_phi),
            "omega": to_str(self.omega),
            "x_of_omega": None if self.x_of is None else to_str(self.x_of),
        }


def _is_constant(e: Expr) -> bool:
    for s in e.free_symbols:
        if type(s) is FDeriv:
            return False
        if type(s) is Sym and s.kind in ("indep", "jet", "red"):
            return False
    return True


def _affine(vf: VectorField):
    tau, xi, eta = vf.components
    a1 = differentiate(tau, T)
    a0 = normalize(tau - a1 * T)
    b1 = differentiate(xi, X)
    b2 = differentiate(xi, T)
    b0 = normalize(xi - b1 * X - b2 * T)
    c1 = differentiate(eta, U)
    c0 = normalize(eta - c1 * U)
    coeffs = (a1, a0, b1, b2, b0, c1, c0)
    if not all(_is_constant(c) for c in coeffs):
        raise UnsupportedGenerator(f"generator {vf} does not have affine coefficients")
    return coeffs


def _particular_power(lam, b2, b0p, a1, s):
    """Particular solution of dx/ds = lam x/s + (b2 s + b0p)/(a1 s)."""
    out = Const(0)
    if not _zero(b2):
        if _zero(lam - 1):
            out = out + b2 / a1 * s * Func("ln", s)
        else:
            out = out + b2 / a1 * s / (1 - lam)
    if not _zero(b0p):
        if _zero(lam):
            out = out + b0p / a1 * Func("ln", s)
        else:
            out = out - b0p / (a1 * lam)
    return normalize(out)


def similarity_ansatz(vf: VectorField, spec: EquationSpec | None = None) -> Ansatz:
    """Integrate dt/tau = dx/xi = du/eta for an affine generator.

    ``spec`` only supplies eps when the generator carries the symbol eps.
    """
    if spec is not None and any(EPS in c.free_symbols for c in vf.components):
        vf = vf.subs({EPS: Const(spec.eps)})
    a1, a0, b1, b2, b0, c1, c0 = _affine(vf)
    if _zero(a1) and _zero(a0):
        return _galilean_branch(vf, b1, b2, b0, c1, c0)
    if not _zero(a1):
        s = normalize(T + a0 / a1)
        lam = normalize(b1 / a1)
        mu = normalize(c1 / a1)
        b0p = normalize(b0 - b2 * a0 / a1)
        xp = _particular_power(lam, b2, b0p, a1, s)
        omega = normalize((X - xp) * s ** (-lam))
        x_of = normalize(OMEGA * s ** lam + xp)
        shape = normalize(s ** mu)
        if _zero(c0):
            offset = Const(0)
        elif _zero(mu):
            offset = normalize(c0 / a1 * Func("ln", s))
        else:
            offset = normalize(-c0 / c1)
        return Ansatz(omega, shape, offset, x_of, "scaling", vf)
    # tau = a0 constant: translation in time
    beta = normalize(b1 / a0)
    if _zero(beta):
        xp = normalize(b2 / (2 * a0) * T * T + b0 / a0 * T)
        omega = normalize(X - xp)
        x_of = normalize(OMEGA + xp)
    else:
        p = normalize(-b2 / b1)
        q = normalize((p - b0 / a0) / beta)
        xp = normalize(p * T + q)
        omega = normalize((X - xp) * Func("exp", -beta * T))
        x_of = normalize(OMEGA * Func("exp", beta * T) + xp)
    nu = normalize(c1 / a0)
    if _zero(nu):
        shape, offset = Const(1), normalize(c0 / a0 * T)
    else:
        shape, offset = normalize(Func("exp", nu * T)), normalize(-c0 / c1)
    return Ansatz(omega, shape, offset, x_of, "translation", vf)


def _galilean_branch(vf, b1, b2, b0, c1, c0) -> Ansatz:
    d = normalize(b2 * T + b0)
    if _zero(b1) and _zero(d):
        raise TrivialOrbit("generator moves only u; there is no similarity variable")
    if _zero(b1) and T not in d.free_symbols and _zero(c1) and _zero(c0):
        raise TrivialOrbit("pure x-translation: invariant solutions are constants")
    if _zero(b1):
        if _zero(c1):
            shape, offset = Const(1), normalize(c0 * X / d)
        else:
            shape, offset = normalize(Func("exp", c1 * X / d)), normalize(-c0 / c1)
    else:
        w = normalize(b1 * X + d)
        if _zero(c1):
            shape, offset = Const(1), normalize(c0 / b1 * Func("ln", w))
        else:
            shape, offset = normalize(w ** (c1 / b1)), normalize(-c0 / c1)
    return Ansatz(T, shape, offset, None, "galilean", vf)


# ---------------------------------------------------------------------------
# substitution into the equation

def _chain(e: Expr, var: Sym, omega: Expr, top: int) -> Expr:
    """d/d var of an expression in (t, x, phi, phi', ...), phi = phi(omega)."""
    out = differentiate(e, var)
    w = differentiate(omega, var)
    if w is Const(0):
        return out
    for j in range(top + 1):
        pj = red(j)
        if pj in e.free_symbols:
            out = out + differentiate(e, pj) * w * red(j + 1)
    return normalize(out)


def _u_terms(u: Expr, omega: Expr, spec: EquationSpec, eps):
    """u_t + eps (u^m)_x + f (u^n)_xxx for u given in (t, x, phi-jets)."""
    m, n = spec.m, spec.n
    ut = _chain(u, T, omega, 0)
    conv = _chain(u ** m, X, omega, 0)
    w = u ** n
    for j in range(3):
        w = _chain(w, X, omega, j)
    return normalize(ut + eps * conv + spec.f.f_expr() * w)


def pde_residual(spec: EquationSpec, u, *, symbolic_eps: bool = False) -> Expr:
    """Left-hand side of the equation evaluated on u(t, x)."""
    u = _coerce(u, ("c1", "sigma", "gammaAmp", "a"))
    eps = EPS if symbolic_eps else Const(spec.eps)
    return _u_terms(u, Const(0), spec, eps)


@dataclass(frozen=True)
class ReducedODE:
    """lhs(omega, phi, phi', phi'', phi''') = 0 with residual = multiplier * lhs."""

    lhs: Expr
    multiplier: Expr
    ansatz: Ansatz
    spec: EquationSpec

    @property
    def order(self) -> int:
        return max((s.index for s in self.lhs.free_symbols
                    if type(s) is Sym and s.kind == "red" and s.index >= 0), default=0)

    def check(self) -> ZeroStatus:
        """Re-multiply and compare against the residual."""
        res = _residual_in_omega(self.ansatz, self.spec, EPS if EPS in self.lhs.free_symbols
                                 else Const(self.spec.eps))
        m = self.multiplier
        if self.ansatz.x_of is None:
            m = subs(m, {T: OMEGA})
        return _factorization_status(res, m, self.lhs)

    def to_json(self):
        return {"lhs": to_str(self.lhs), "multiplier": to_str(self.multiplier),
                "order": self.order}


def _residual_in_omega(ans: Ansatz, spec: EquationSpec, eps) -> Expr:
    r = _u_terms(ans.u_of_phi, ans.omega, spec, eps)
    if ans.x_of is None:
        if X in r.free_symbols:
            raise ResidualHasX("explicit x survives the substitution; the ansatz "
                               "does not come from a symmetry of this equation")
        return normalize(subs(r, {T: OMEGA}))
    return normalize(subs(r, {X: ans.x_of}))


def _has_t(e: Expr) -> bool:
    if T in e.free_symbols:
        return True
    return any(type(s) is FDeriv for s in e.free_symbols)


def _common_t_factor(P) -> Expr:
    """Common t-dependent factor of the monomials of P (GCD of t-powers)."""
    monos = list(P)
    if not monos:
        return Const(1)
    first = dict(monos[0])
    out = Const(1)
    for base, exp in first.items():
        if not (_has_t(base) or _has_t(exp)):
            continue
        exps = [dict(mo).get(base) for mo in monos]
        if any(e is None for e in exps):
            continue
        if all(type(e) is Const for e in exps):
            e0 = min(exps, key=lambda c: c.value)
        else:
            e0 = exp
        out = out * from_poly({((base, e0),): Fraction(1)})
    return normalize(out)


def _monomial_mul(e: Expr, fdict: dict, fc=Fraction(1)) -> Expr:
    """e * fc * prod(base^exp for base, exp in fdict).

    Exponents of shared bases are added term by term, so base^-p * base^p
    cancels exactly instead of expanding the sum.
    """
    terms = []
    for mono, c in to_poly(e).items():
        fac = dict(mono)
        rest = {b: x for b, x in fac.items() if b not in fdict}
        term = from_poly({tuple(rest.items()): c * fc}) if rest else Const(c * fc)
        for base, x in fdict.items():
            term = term * base ** normalize(fac.get(base, Const(0)) + x)
        terms.append(term)
    return normalize(sum(terms, Const(0)))


def _sum_denominators(e: Expr, only=None) -> dict:
    worst = {}
    for mono in to_poly(e):
        for base, exp in mono:
            if type(base) is Add and type(exp) is Const and exp.value < 0 \
                    and (only is None or only in base.free_symbols):
                worst[base] = max(worst.get(base, 0), -exp.value)
    return {b: Const(p) for b, p in worst.items()}


def _cleared_status(e: Expr) -> ZeroStatus:
    """Zero test after multiplying out denominators that are sums."""
    den = _sum_denominators(e)
    return is_zero(_monomial_mul(e, den) if den else e)


def _factorization_status(r: Expr, mult: Expr, lhs: Expr) -> ZeroStatus:
    M = to_poly(mult)
    if len(M) != 1:
        return is_zero(r - mult * lhs)
    (mono, c), = M.items()
    inv = {b: normalize(-x) for b, x in mono}
    return is_zero(_monomial_mul(r, inv, 1 / c) - lhs)


def _clear_denominators(L: Expr):
    """Scale L to integer coefficients without reduction-variable denominators.

    Returns (scale, scaled L).
    """
    worst = _sum_denominators(L, OMEGA)
    scale = Const(1)
    for base, p in worst.items():
        scale = scale * base ** p
    if worst:
        L = _monomial_mul(L, worst)
    P = to_poly(L)
    dens = [c.denominator for c in P.values()]
    if dens:
        d = lcm(*dens)
        g = 0
        for c in P.values():
            g = gcd(g, (c * d).numerator)
        factor = Fraction(d, g or 1)
        # sign: the highest phi-derivative term gets a positive coefficient
        top = _top_coefficient(P)
        if top is not None and top < 0:
            factor = -factor
        scale = scale * factor
        L = normalize(L * factor)
    return normalize(scale), L


def _top_coefficient(P):
    best, coef = -2, None
    for mono, c in sorted(P.items(), key=lambda it: repr(it[0])):
        for base, _ in mono:
            if type(base) is Sym and base.kind == "red" and base.index > best:
                best, coef = base.index, c
    return coef


def reduce_pde(ansatz: Ansatz, spec: EquationSpec, *, symbolic_eps: bool = False) -> ReducedODE:
    """Substitute the ansatz and split off the t-dependent multiplier."""
    eps = EPS if symbolic_eps else Const(spec.eps)
    r = _residual_in_omega(ansatz, spec, eps)
    P = to_poly(r)
    mult = _common_t_factor(P)
    L = normalize(r / mult)
    if _has_t(L):
        raise NonSeparable(f"residual does not factor as M(t) * L(omega, phi): {to_str(L)}")
    if L is Const(0):
        raise NonSeparable("ansatz solves the equation identically")
    scale, L = _clear_denominators(L)
    mult = normalize(mult / scale)
    if ansatz.x_of is None:
        mult = normalize(subs(mult, {OMEGA: T}))
    out = ReducedODE(L, mult, ansatz, spec)
    check_mult = mult if ansatz.x_of is not None else subs(mult, {T: OMEGA})
    if not _factorization_status(r, check_mult, L).is_zero:
        raise NonSeparable("multiplier verification failed")
    return out


# ---------------------------------------------------------------------------
# the variable-coefficient KdV family u_t + eps (u^2)_x + t^k u_xxx = 0

def power_family_basis(k):
    """Gamma_1, Gamma_2, Gamma_3 with eps kept symbolic."""
    k = _coerce(k)
    g1 = VectorField(Const(0), Const(1), Const(0))
    g2 = VectorField(Const(0), 2 * EPS * T, Const(1))
    g3 = VectorField(3 * T, (k + 1) * X, (k - 2) * U)
    return g1, g2, g3


@dataclass(frozen=True)
class SubalgebraFamily:
    """One family of inequivalent one-dimensional subalgebras."""

    label: str
    condition: str
    generator: VectorField
    params: dict = field(default_factory=dict)

    def instantiate(self, eps=None, **values) -> VectorField:
        bind = {sym(name): as_expr(Fraction(v) if isinstance(v, str) else v)
                for name, v in values.items()}
        for name, dom in self.params.items():
            v = bind.get(sym(name))
            if v is not None and dom == "sigma" and v not in (Const(-1), Const(0), Const(1)):
                raise GuardViolation("sigma must be -1, 0 or 1")
        if eps is not None:
            bind[EPS] = Const(eps)
        return self.generator.subs(bind)


def optimal_system_case7(k) -> list:
    """Optimal system of one-dimensional subalgebras for f = t^k."""
    k = _coerce(k)
    if k is Const(0) or k is Const(1):
        raise GuardViolation("the three-dimensional algebra requires k not in {0, 1}")
    g1, g2, g3 = power_family_basis(k)
    fams = [
        SubalgebraFamily("<G1>", "any k", g1),
        SubalgebraFamily("<G2+sigma*G1>", "any k", g2 + g1.scale(_SIGMA), {"sigma": "sigma"}),
    ]
    if k is Const(-1):
        fams.append(SubalgebraFamily("<G3+a*G1>", "k = -1", g3 + g1.scale(_A), {"a": "real"}))
    elif k is Const(2):
        fams.append(SubalgebraFamily("<G3+a*G2>", "k = 2", g3 + g2.scale(_A), {"a": "real"}))
    else:
        fams.append(SubalgebraFamily("<G3>", "k != -1, 2", g3))
    return fams


def exact_solution_case(spec: EquationSpec, c1=0, sigma=1):
    """u = (x + c1)/(2 eps t + sigma), valid for n = 1, m = 2 and any f.

    Returns a vectorized callable u(t, x) carrying the expression as ``expr``.
    """
    if spec.n is not Const(1) or spec.m is not Const(2):
        raise SpecMismatch("the affine solution needs n = 1 and m = 2")
    if sigma not in (-1, 0, 1) and not isinstance(sigma, Expr):
        raise GuardViolation("sigma must be -1, 0 or 1")
    expr = normalize((X + as_expr(c1)) / (2 * spec.eps * T + as_expr(sigma)))

    def u(t, x):
        return lambdify(expr, (T, X), mode="numpy")(t, x)

    u.expr = expr
    return u


# ---------------------------------------------------------------------------
# boundary value problem on the half line

@dataclass(frozen=True)
class BVPReduction:
    """Scaling reduction of the half-line problem with f = t^k."""

    spec: EquationSpec
    k: Expr
    gammaAmp: Expr
    c1: Expr
    c2: Expr
    q: Expr
    ansatz: Ansatz
    ode: Expr
    initial: tuple

    @property
    def generator(self) -> VectorField:
        m, n, k = self.spec.m, self.spec.n, self.k
        return VectorField((3 * m - n - 2) * T, (k * m - k + m - n) * X, (k - 2) * U)

    def to_json(self):
        return {"c1": to_str(self.c1), "c2": to_str(self.c2), "q": to_str(self.q),
                "ansatz": self.ansatz.to_json(), "ode": to_str(self.ode),
                "initial": [to_str(v) for v in self.initial]}


def _power_k(f: FSpec):
    if f.kind == "One":
        return Const(0)
    if f.kind == "Linear":
        return Const(1)
    if f.kind == "Power" and f.param("c") is Const(1):
        return f.param("k")
    raise SpecMismatch("the boundary value problem needs f = t^k")


def _ode13(m, n, eps, c1, c2):
    p0, p1 = PHI, red(1)
    w = p0 ** n
    v = p0 ** m
    for j in range(3):
        w = normalize(sum((differentiate(w, red(i)) * red(i + 1) for i in range(j + 1)),
                          Const(0)))
    dv = normalize(differentiate(v, p0) * p1)
    return normalize(w + eps * dv - c1 * OMEGA * p1 + c2 * p0)


def bvp_reduce(spec: EquationSpec, gammaAmp=1) -> BVPReduction:
    """Reduce the half-line problem to an initial value problem in omega."""
    k = _power_k(spec.f)
    m, n = spec.m, spec.n
    den = normalize(3 * m - n - 2)
    if den is Const(0):
        raise DegenerateScaling("3m - n - 2 = 0: the scaling generator does not move t")
    g = _coerce(gammaAmp)
    if type(g) is Const and g.value <= 0:
        raise GuardViolation("gammaAmp must be positive")
    c1 = normalize((k * m - k + m - n) / den)
    c2 = normalize((k - 2) / den)
    q = normalize(g * T ** c2)
    ans = Ansatz(normalize(X * T ** (-c1)), normalize(T ** c2), Const(0),
                 normalize(OMEGA * T ** c1), "scaling")
    ode = _ode13(m, n, Const(spec.eps), c1, c2)
    r = _residual_in_omega(ans, spec, Const(spec.eps))
    if not is_zero(r - T ** (c2 - 1) * ode).is_zero:
        raise NonSeparable("scaling ansatz does not reduce the equation")
    return BVPReduction(spec, k, g, c1, c2, q, ans, ode, (g, Const(0), Const(0)))


def bvp_invariance_check(spec: EquationSpec, vf: VectorField, q=None, gammaAmp=1) -> dict:
    """Invariance of the boundary manifold at x = 0 under vf.

    Conditions: the surface x = 0, u = q(t) on it, u_x = 0 and u_xx = 0.
    ``q`` defaults to the boundary datum that the scaling symmetry requires.
    """
    if q is None:
        q = bvp_reduce(spec, gammaAmp).q
    q = _coerce(q, ("gammaAmp",))
    tau, xi, eta = vf.components
    pr = prolong3(vf)
    on = {X: Const(0), U: q, UX: Const(0), UXX: Const(0)}

    def restrict(e):
        return normalize(subs(e, on))

    checks = {
        "surface x=0": normalize(subs(xi, on)),
        "u=q(t) at x=0": restrict(eta - tau * differentiate(q, T)),
        "u_x=0 at x=0": restrict(pr[UX]),
        "u_xx=0 at x=0": restrict(pr[UXX]),
    }
    report = {}
    for name, res in checks.items():
        st = is_zero(res)
        report[name] = {"pass": st.is_zero, "status": st.value, "residual": to_str(res)}
    report["constraint"] = f"tau*q'(t) = eta(t, 0, q) with q = {to_str(q)}"
    report["all_pass"] = all(v["pass"] for k_, v in report.items() if isinstance(v, dict))
    return report
