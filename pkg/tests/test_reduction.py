import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kmnlie.equation import EquationSpec, FSpec
from kmnlie.errors import (
    DegenerateScaling, GuardViolation, NonSeparable, ResidualHasX, SpecMismatch,
    TrivialOrbit, UnsupportedGenerator,
)
from kmnlie.prolongation import VectorField
from kmnlie.reduction import (
    PHI, bvp_invariance_check, bvp_reduce, power_family_basis, exact_solution_case,
    optimal_system_case7, pde_residual, reduce_pde, similarity_ansatz,
)
from kmnlie.symkernel import (
    EPS, OMEGA, Const, T, X, ZeroStatus, differentiate, eval_numeric, is_zero,
    normalize, parse, red, sym,
)
from kmnlie.symkernel.calculus import subs

SIGMA, A = sym("sigma"), sym("a")
P1, P3 = red(1), red(3)


def _same(a, b):
    return is_zero(normalize(a - b)) is ZeroStatus.SymbolicZero


def eq_tk(k, eps=1):
    return EquationSpec(2, 1, eps, FSpec.power(k))


# ---------------------------------------------------------------------------
# ansatz

def test_galilean_ansatz():
    g1, g2, _ = power_family_basis(3)
    ans = similarity_ansatz(g2 + g1.scale(SIGMA), eq_tk(3))
    assert ans.omega is T
    assert _same(ans.u_of_phi, X / (2 * T + SIGMA) + PHI)


def test_scaling_ansatz_generic_k():
    k = 3
    ans = similarity_ansatz(power_family_basis(k)[2], eq_tk(k))
    assert _same(ans.u_of_phi, T ** (Const(k - 2) / 3) * PHI)
    assert _same(ans.omega, X * T ** (-Const(k + 1) / 3))


def test_scaling_ansatz_k_minus_one_has_log():
    g1, _, g3 = power_family_basis(-1)
    ans = similarity_ansatz(g3 + g1.scale(A), eq_tk(-1))
    assert _same(ans.u_of_phi, PHI / T)
    assert _same(ans.omega, X - A / 3 * parse("ln(t)"))


@pytest.mark.parametrize("k", [3, -1, 2, "1/2", -2])
def test_invariants_are_annihilated(k):
    spec = eq_tk(k)
    for fam in optimal_system_case7(k)[1:]:
        vf = fam.instantiate(eps=1, sigma=1, a=2)
        ans = similarity_ansatz(vf, spec)
        assert all(s.is_zero for s in ans.invariance_status())


def test_eps_is_bound_from_spec():
    _, g2, _ = power_family_basis(2)
    ans = similarity_ansatz(g2, eq_tk(2, eps=-1))
    assert _same(ans.u_of_phi, X / (-2 * T) + PHI)


def test_unsupported_and_trivial_generators():
    with pytest.raises(UnsupportedGenerator):
        similarity_ansatz(VectorField.parse("1", "sin(x)", "0"))
    with pytest.raises(UnsupportedGenerator):
        similarity_ansatz(VectorField.parse("0", "x^2", "u"))
    with pytest.raises(TrivialOrbit):
        similarity_ansatz(VectorField.parse(eta="u"))
    with pytest.raises(TrivialOrbit):
        similarity_ansatz(VectorField.parse(xi="1"))


# ---------------------------------------------------------------------------
# reduced equations

def test_generic_branch_ode_and_multiplier():
    for k in (3, "1/2", -2):
        spec = eq_tk(k, eps=-1)
        k = spec.f.param("k")
        ode = reduce_pde(similarity_ansatz(power_family_basis(k)[2], spec), spec, symbolic_eps=True)
        want = 3 * P3 + 6 * EPS * PHI * P1 - (k + 1) * OMEGA * P1 + (k - 2) * PHI
        # fractional k gets rescaled to integer coefficients; the product is fixed
        top = differentiate(ode.lhs, P3)
        assert _same(ode.lhs / top, want / 3)
        assert _same(ode.multiplier * ode.lhs, T ** ((k - 5) / 3) / 3 * want)
        if k.value.denominator == 1:
            assert _same(ode.multiplier, T ** ((k - 5) / 3) / 3)
        assert ode.order == 3
        assert ode.check() is ZeroStatus.SymbolicZero


def test_galilean_ode():
    g1, g2, _ = power_family_basis(4)
    for eps in (1, -1):
        spec = eq_tk(4, eps)
        ode = reduce_pde(similarity_ansatz(g2 + g1.scale(SIGMA), spec), spec)
        assert _same(ode.lhs, (2 * eps * OMEGA + SIGMA) * P1 + 2 * eps * PHI)
        assert ode.order == 1
        assert ode.check().is_zero


def test_k2_branch_ode():
    _, g2, g3 = power_family_basis(2)
    for eps in (1, -1):
        spec = eq_tk(2, eps)
        ode = reduce_pde(similarity_ansatz(g3 + g2.scale(A), spec), spec)
        want = 3 * P3 + 6 * eps * PHI * P1 - 3 * OMEGA * P1 - 2 * A * eps * P1 + A
        assert _same(ode.lhs, want)
        assert ode.check().is_zero


def test_k_minus_one_branch_ode():
    g1, _, g3 = power_family_basis(-1)
    spec = eq_tk(-1)
    ode = reduce_pde(similarity_ansatz(g3 + g1.scale(A), spec), spec)
    assert _same(ode.lhs, 3 * P3 + 6 * PHI * P1 - A * P1 - 3 * PHI)
    assert ode.check().is_zero


def test_wrong_generator_leaves_x():
    # the boost with the wrong speed
    ans = similarity_ansatz(VectorField.parse(xi="t", eta="1"), eq_tk(3))
    with pytest.raises(ResidualHasX):
        reduce_pde(ans, eq_tk(3))


def test_wrong_k_is_not_separable():
    ans = similarity_ansatz(power_family_basis(3)[2], eq_tk(3))
    with pytest.raises(NonSeparable):
        reduce_pde(ans, eq_tk(4))


@settings(max_examples=25)
@given(st.fractions(min_value=-3, max_value=5, max_denominator=4), st.sampled_from([1, -1]))
def test_factorization_invariant_random_k(k, eps):
    if k in (0, 1):
        return
    spec = eq_tk(Const(k), eps)
    for fam in optimal_system_case7(spec.f.param("k"))[1:]:
        vf = fam.instantiate(eps=eps, sigma=-1, a="3/2")
        ode = reduce_pde(similarity_ansatz(vf, spec), spec)
        assert ode.check().is_zero


# ---------------------------------------------------------------------------
# optimal system

def test_optimal_system_branches():
    labels = lambda k: [f.label for f in optimal_system_case7(k)]
    assert labels(3) == ["<G1>", "<G2+sigma*G1>", "<G3>"]
    assert labels(-1)[2] == "<G3+a*G1>"
    assert labels(2)[2] == "<G3+a*G2>"
    assert optimal_system_case7(-1)[2].params == {"a": "real"}
    with pytest.raises(GuardViolation):
        optimal_system_case7(0)
    with pytest.raises(GuardViolation):
        optimal_system_case7(3)[1].instantiate(sigma=2)


def test_first_family_gives_no_reduction():
    fam = optimal_system_case7(3)[0]
    with pytest.raises(TrivialOrbit):
        similarity_ansatz(fam.instantiate(), eq_tk(3))


# ---------------------------------------------------------------------------
# exact solution

@pytest.mark.parametrize("f", [FSpec.power(3), FSpec.power(-1), FSpec.exp(), FSpec.general()])
def test_exact_solution_is_symbolic_zero(f):
    for eps in (1, -1):
        spec = EquationSpec(2, 1, eps, f)
        u = exact_solution_case(spec, c1=sym("c1"), sigma=SIGMA)
        assert pde_residual(spec, u.expr) is Const(0)


def test_exact_solution_numeric():
    spec = EquationSpec(2, 1, 1, FSpec.power(2))
    u = exact_solution_case(spec, c1=0, sigma=1)
    assert abs(float(u(1.0, 1.0)) - 1 / 3) < 1e-14
    r = pde_residual(spec, u.expr)
    rng = random.Random(3)
    for _ in range(100):
        t, x = rng.uniform(0.1, 3), rng.uniform(-5, 5)
        assert abs(eval_numeric(r, {T: t, X: x})) < 1e-12


def test_exact_solution_guards():
    with pytest.raises(SpecMismatch):
        exact_solution_case(EquationSpec(3, 1, 1))
    with pytest.raises(GuardViolation):
        exact_solution_case(eq_tk(2), sigma=2)


@pytest.mark.parametrize("eps,sigma", [(1, 1), (1, 0), (-1, -1), (-1, 1)])
def test_galilean_profile_reconstructs_exact_solution(eps, sigma):
    spec = eq_tk(3, eps)
    c = sym("c1")
    g1, g2, _ = power_family_basis(3)
    vf = g2.subs({EPS: Const(eps)}) + g1.scale(sigma)
    ans = similarity_ansatz(vf, spec)
    ode = reduce_pde(ans, spec)
    phi = c / (2 * eps * OMEGA + sigma)
    # phi solves the reduced ODE
    assert is_zero(subs(ode.lhs, {PHI: phi, P1: differentiate(phi, OMEGA)})).is_zero
    u = ans.u_from_profile(phi)
    assert _same(u, exact_solution_case(spec, c1=c, sigma=sigma).expr)


# ---------------------------------------------------------------------------
# boundary value problem

def test_bvp_reduce_k1():
    out = bvp_reduce(EquationSpec(2, 1, 1, FSpec.linear()), 1)
    assert out.c1 is Const(2) / 3 and out.c2 is Const(-1) / 3
    assert out.q is normalize(T ** (Const(-1) / 3))
    want = P3 + 2 * PHI * P1 - Const(2) / 3 * OMEGA * P1 - PHI / 3
    assert _same(out.ode, want)
    assert out.initial == (Const(1), Const(0), Const(0))


def test_bvp_reduce_k2_constant_boundary_value():
    out = bvp_reduce(EquationSpec(2, 1, 1, FSpec.power(2)), "3/2")
    assert out.q is Const(3) / 2


def test_bvp_reduce_degenerate_and_guards():
    with pytest.raises(DegenerateScaling):
        bvp_reduce(EquationSpec("4/3", 2, 1, FSpec.power(2)))
    with pytest.raises(GuardViolation):
        bvp_reduce(EquationSpec(2, 1, 1, FSpec.power(2)), 0)
    with pytest.raises(SpecMismatch):
        bvp_reduce(EquationSpec(2, 1, 1, FSpec.exp()))


def test_bvp_ode_polynomial_when_n_is_one():
    out = bvp_reduce(EquationSpec(3, 1, -1, FSpec.power(3)), 2)
    for s in out.ode.free_symbols:
        assert s in (PHI, P1, P3, OMEGA)
    from kmnlie.symkernel.core import to_poly
    for mono in to_poly(out.ode):
        for _, e in mono:
            assert type(e) is Const and e.value.denominator == 1 and e.value > 0


def test_bvp_invariance_report():
    spec = EquationSpec(2, 1, 1, FSpec.linear())
    red_ = bvp_reduce(spec)
    rep = bvp_invariance_check(spec, red_.generator)
    assert rep["all_pass"]
    assert len([k for k, v in rep.items() if isinstance(v, dict)]) == 4
    bad = bvp_invariance_check(spec, red_.generator, q="t")
    assert not bad["u=q(t) at x=0"]["pass"] and not bad["all_pass"]
    moved = bvp_invariance_check(spec, red_.generator + VectorField.parse(xi="1"))
    assert not moved["surface x=0"]["pass"]


@pytest.mark.parametrize("m,n,k", [(2, 1, 1), (3, 2, 2), ("1/2", -1, 3), (2, 3, -1)])
def test_bvp_ansatz_reduces(m, n, k):
    spec = EquationSpec(m, n, 1, FSpec.power(k))
    out = bvp_reduce(spec, 2)
    assert all(s.is_zero for s in out.ansatz.invariance_status(out.generator))
