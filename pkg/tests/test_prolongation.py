import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kmnlie.classification import load_database
from kmnlie.classification.database import sample_specs
from kmnlie.equation import EquationSpec, FSpec
from kmnlie.errors import AmbiguousSpan
from kmnlie.prolongation import (
    PROLONGED_JETS, VectorField, commutator, is_symmetry, prolong3,
    span_membership, symmetry_defect,
)
from kmnlie.symkernel import Const, ZeroStatus, is_zero, jet, normalize, parse, sym

UT, UX = jet(1, 0), jet(0, 1)
K = sym("k")
G1 = VectorField.parse(xi="1")
G2 = VectorField.parse(xi="2*eps*t", eta="1")
G3 = VectorField.parse("3*t", "(k+1)*x", "(k-2)*u", params=("k",))


def test_translation_prolongs_to_zero():
    pf = prolong3(G1)
    assert all(pf[j] is Const(0) for j in PROLONGED_JETS)


def test_scaling_ux_coefficient():
    pf = prolong3(VectorField.parse(xi="x", eta="c*u", params=("c",)))
    assert pf[UX] is normalize((sym("c") - 1) * UX)


def test_boost_ut_coefficient():
    assert prolong3(G2)[UT] is normalize(-2 * sym("eps") * UX)


def test_defect_examples():
    kdv = EquationSpec(2, 1, 1, FSpec.one())
    assert symmetry_defect(G1, EquationSpec(3, 2, 1)) is Const(0)
    assert symmetry_defect(VectorField.parse(xi="t"), kdv) is normalize(-UX)
    gen = VectorField.parse("(3*m-n-2)*t", "(m-n)*x", "-2*u")
    for m, n in [(3, 2), (0, "-1/2"), (2, 3)]:
        spec = EquationSpec(m, n, 1, FSpec.one())
        assert is_symmetry(gen.subs({sym("m"): spec.m, sym("n"): spec.n}), spec) \
            is ZeroStatus.SymbolicZero


@pytest.mark.parametrize("eps", [1, -1])
def test_boost_needs_matching_eps(eps):
    spec = EquationSpec(2, 1, eps, FSpec.power(3))
    g = G2.subs({sym("eps"): Const(eps)})
    assert is_symmetry(g, spec) is ZeroStatus.SymbolicZero
    wrong = G2.subs({sym("eps"): Const(-eps)})
    assert is_symmetry(wrong, spec) is ZeroStatus.NonZero


def test_symbolic_eps_defect():
    spec = EquationSpec(2, 1, 1, FSpec.power(K))
    assert symmetry_defect(G2, spec, symbolic_eps=True) is Const(0)


def test_power_family_commutators():
    assert commutator(G1, G1).is_zero()
    assert commutator(G1, G3).components == G1.scale(K + 1).components
    assert commutator(G2, G3).components == G2.scale(K - 2).components
    assert commutator(G1, G2).is_zero()


def test_span_membership_examples():
    assert span_membership(G1.scale(2), [G1]) == [Const(2)]
    assert span_membership(G1.scale(K + 1), [G1, G2, G3]) == \
        [normalize(K + 1), Const(0), Const(0)]
    assert span_membership(VectorField.parse(xi="x"), [G1]) is None
    with pytest.raises(AmbiguousSpan):
        span_membership(G1, [G1, G1.scale(2)])


affine = st.sampled_from(["0", "1", "t", "x", "u", "2*t - x", "k*u + 1", "x*u", "t^2"])
fields = st.builds(VectorField.parse, affine, affine, affine, st.just(("k",)))
scalars = st.sampled_from([Const(1), Const(-2), Const(3) / 7, K])


@settings(max_examples=50)
@given(fields, fields, scalars, scalars)
def test_prolongation_is_linear(a, b, p, q):
    combo = prolong3(a.scale(p) + b.scale(q))
    pa, pb = prolong3(a), prolong3(b)
    for j in PROLONGED_JETS:
        assert normalize(combo[j] - p * pa[j] - q * pb[j]) is Const(0)


def _db_cases():
    return [(rec, sample_specs(rec, limit=1)[0]) for rec in load_database(validate=False)]


@pytest.mark.parametrize("rec,spec", _db_cases(), ids=lambda v: getattr(v, "caseId", ""))
def test_algebra_closure_antisymmetry_jacobi(rec, spec):
    gens = rec.instantiate(spec, symbolic_eps=True)
    for a, b in itertools.combinations(gens, 2):
        ab, ba = commutator(a, b), commutator(b, a)
        assert (ab + ba).is_zero()
        assert span_membership(ab, gens) is not None
    for a, b, c in itertools.combinations(gens, 3):
        jac = (commutator(a, commutator(b, c)) + commutator(b, commutator(c, a))
               + commutator(c, commutator(a, b)))
        assert all(is_zero(x).is_zero for x in jac.components)


# ---------------------------------------------------------------------------
# independent route: sympy prolongation through the characteristic Q

def _sympy_defect(tau, xi, eta, m, n, eps, f):
    sympy = pytest.importorskip("sympy")
    t, x = sympy.symbols("t x")
    u = sympy.Function("u")(t, x)
    tau, xi, eta = (sympy.sympify(s, locals={"t": t, "x": x, "u": u}) for s in (tau, xi, eta))
    fexpr = sympy.sympify(f, locals={"t": t})
    Q = eta - tau * u.diff(t) - xi * u.diff(x)

    def coef(*vars_):
        d = u.diff(*vars_)
        return Q.diff(*vars_) + tau * d.diff(t) + xi * d.diff(x)

    # the equation expanded: u_t + eps (u^m)_x + f (u^n)_xxx
    U, Ut, Ux, Uxx, Uxxx = sympy.symbols("U Ut Ux Uxx Uxxx")
    T_, X_ = sympy.symbols("T X")
    lhs = Ut + eps * sympy.diff(U ** m, U) * Ux + fexpr.subs(t, T_) * (
        n * U ** (n - 1) * Uxxx + 3 * n * (n - 1) * U ** (n - 2) * Ux * Uxx
        + n * (n - 1) * (n - 2) * U ** (n - 3) * Ux ** 3)
    jets = {U: u, Ut: u.diff(t), Ux: u.diff(x), Uxx: u.diff(x, 2), Uxxx: u.diff(x, 3),
            T_: t, X_: x}
    pr = (tau * lhs.diff(T_) + xi * lhs.diff(X_) + eta * lhs.diff(U)
          + coef(t) * lhs.diff(Ut) + coef(x) * lhs.diff(Ux)
          + coef(x, x) * lhs.diff(Uxx) + coef(x, x, x) * lhs.diff(Uxxx))
    pr = pr.subs(jets)
    ut = -(lhs - Ut).subs(jets)
    pr = pr.subs(u.diff(t, x, x), ut.diff(x, 2)).subs(u.diff(t, x), ut.diff(x))
    pr = pr.subs(u.diff(t), ut)
    return sympy.simplify(pr)


@pytest.mark.parametrize("gen,m,n,eps,f", [
    (("3*t", "4*x", "u"), 2, 1, 1, "t**3"),
    (("0", "2*t", "1"), 2, 1, -1, "t**3"),
    (("5*t", "x", "-2*u"), 3, 2, 1, "1"),
    (("0", "2*t", "1"), 2, 1, 1, "1"),
])
def test_sympy_oracle_agrees(gen, m, n, eps, f):
    expect_zero = _sympy_defect(*gen, m, n, eps, f) == 0
    spec = EquationSpec(m, n, eps, FSpec.general(f.replace("**", "^")))
    ours = is_symmetry(VectorField.parse(*(g.replace("**", "^") for g in gen)), spec)
    assert ours.is_zero == expect_zero
    assert expect_zero == (gen != ("0", "2*t", "1") or eps == 1)
