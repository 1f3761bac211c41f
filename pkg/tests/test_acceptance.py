"""The eight acceptance criteria, one test each, with a PASS/FAIL line apiece."""

import itertools
import math
import random
import time

import numpy as np
import pytest

from kmnlie.classification import (
    EquivTransform, apply_equiv, compose_equiv, invert_equiv, load_database, lookup_case,
)
from kmnlie.classification.database import sample_specs
from kmnlie.equation import EquationSpec, FSpec
from kmnlie.numerics import (
    BoundarySpec, ODEProblem, PDEGrid, bvp_pipeline, integrate_ivp, mol_solve,
)
from kmnlie.prolongation import commutator, is_symmetry, span_membership
from kmnlie.reduction import (
    power_family_basis, bvp_reduce, exact_solution_case, pde_residual, reduce_pde,
    similarity_ansatz,
)
from kmnlie.symkernel import (
    EPS, OMEGA, Const, T, U, X, ZeroStatus, eval_numeric, is_zero, normalize, parse,
    red, sym, to_str,
)
from kmnlie.symkernel.calculus import subs

M, N, K, BETA = sym("m"), sym("n"), sym("k"), sym("beta")
PHI, P1, P3 = red(0), red(1), red(3)


def _symzero(e):
    return is_zero(normalize(e)) is ZeroStatus.SymbolicZero


def _has_transcendental(spec, gen):
    text = " ".join(to_str(e) for e in gen.components)
    if not spec.f.is_opaque:
        text += " " + to_str(spec.f.f_expr())
    return any(fn + "(" in text for fn in ("sin", "cos", "arctan", "exp", "ln"))


def _symbolic_spec(rec):
    g = rec.guard
    n = parse(g["n"]) if "n" in g else N
    m = normalize(subs(parse(g["m"]), {N: n})) if "m" in g else M
    fg = g.get("f", "any")
    if fg == "any":
        f = FSpec.general()
    else:
        kind = fg["kind"]
        if kind == "Power":
            f = FSpec.power(parse(fg["k"]) if "k" in fg else K)
        elif kind == "PowerShifted":
            f = FSpec.power_shifted(K, BETA)
        elif kind == "ExpArctan":
            f = FSpec.exp_arctan(K)
        else:
            f = {"One": FSpec.one, "Exp": FSpec.exp, "TExpInv": FSpec.texpinv,
                 "Linear": FSpec.linear}[kind]()
    return [EquationSpec(m, n, e, f) for e in ([g["eps"]] if "eps" in g else (1, -1))]


def _free_param_counts(rec, specs):
    vals = {}
    g = rec.guard
    for s in specs:
        if "n" not in g:
            vals.setdefault("n", set()).add(s.n)
        if "m" not in g:
            vals.setdefault("m", set()).add(s.m)
        fg = g.get("f", "any")
        # only parameters the guard leaves open; Exp's lam is fixed by canonical form
        free = {"Power": ("k",), "PowerShifted": ("k", "beta"), "ExpArctan": ("k",)}
        for name, v in s.f.params:
            if fg != "any" and name in free.get(fg["kind"], ()) and name not in fg:
                vals.setdefault(name, set()).add(v)
    return {k: len(v) for k, v in vals.items()}


# ---------------------------------------------------------------------------

def test_criterion_1_table_coverage(criterion):
    start = time.perf_counter()
    db = load_database(validate=False)
    tables = {}
    for r in db:
        tables.setdefault(r.table, set()).add(r.caseId.rstrip("ab"))
    counts_ok = (len(tables["T1"]), len(tables["T2"]), len(tables["R1"]),
                 len(tables["R2"])) == (9, 9, 2, 3)
    bad, numeric, checks, thin = [], 0, 0, []
    for rec in db:
        specs = sample_specs(rec)
        for name, c in _free_param_counts(rec, specs).items():
            if c < 5:
                thin.append((rec.caseId, name, c))
        for spec in specs:
            for g in rec.instantiate(spec):
                st = is_symmetry(g, spec)
                checks += 1
                if st is ZeroStatus.NumericZero and _has_transcendental(spec, g):
                    numeric += 1
                elif st is not ZeroStatus.SymbolicZero:
                    bad.append((rec.caseId, str(spec), str(g), st.value))
        for spec in _symbolic_spec(rec):
            for g in rec.instantiate(spec):
                checks += 1
                if not is_symmetry(g, spec).is_zero:
                    bad.append((rec.caseId, "symbolic", str(g)))
    r1 = [s for s in sample_specs(db["R1-4d"]) if not s.f.is_opaque]
    f_samples = len({s.f for s in r1})
    elapsed = time.perf_counter() - start
    ok = counts_ok and not bad and not thin and f_samples == 3 and elapsed < 120
    criterion(1, ok, f"{checks} defect checks, {numeric} NumericZero (transcendental atoms), "
                     f"{len(bad)} failures, {elapsed:.1f}s")
    assert not bad, bad[:3]
    assert not thin, thin
    assert ok


def test_criterion_2_algebra_closure(criterion):
    db = load_database(validate=False)
    failures = []
    for rec in db:
        for spec in sample_specs(rec, limit=2):
            gens = rec.instantiate(spec, symbolic_eps=True)
            for a, b in itertools.combinations(gens, 2):
                if span_membership(commutator(a, b), gens) is None:
                    failures.append((rec.caseId, str(spec)))
    g1, g2, g3 = power_family_basis(K)
    consts = (commutator(g1, g3).components == g1.scale(K + 1).components
              and commutator(g2, g3).components == g2.scale(K - 2).components
              and commutator(g1, g2).is_zero())
    ok = not failures and consts
    criterion(2, ok, f"closure failures {len(failures)}; t^k structure constants exact: {consts}")
    assert ok, failures[:3]


def test_criterion_3_reduction_fidelity(criterion):
    results = {}
    spec = EquationSpec(2, 1, 1, FSpec.power(K))
    g1, g2, g3 = power_family_basis(K)

    # no spec here: the generator keeps the symbol eps, as does the reduced equation
    ode = reduce_pde(similarity_ansatz(g2 + g1.scale(sym("sigma"))), spec, symbolic_eps=True)
    results["galilean"] = _symzero(ode.lhs - ((2 * EPS * OMEGA + sym("sigma")) * P1
                                              + 2 * EPS * PHI)) and ode.check().is_zero

    ode = reduce_pde(similarity_ansatz(g3, spec), spec, symbolic_eps=True)
    want = 3 * P3 + 6 * EPS * PHI * P1 - (K + 1) * OMEGA * P1 + (K - 2) * PHI
    results["generic k"] = (_symzero(ode.lhs - want) and ode.check().is_zero
                            and _symzero(ode.multiplier - T ** ((K - 5) / 3) / 3))

    for k, extra, want in (
            (-1, g1, 3 * P3 + 6 * EPS * PHI * P1 - sym("a") * P1 - 3 * PHI),
            (2, g2, 3 * P3 + 6 * EPS * PHI * P1 - 3 * OMEGA * P1
             - 2 * sym("a") * EPS * P1 + sym("a"))):
        sk = EquationSpec(2, 1, 1, FSpec.power(k))
        b1, b2, b3 = power_family_basis(k)
        vf = b3 + (b1 if k == -1 else b2).scale(sym("a"))
        ok_eps = True
        for eps in (1, -1):
            o = reduce_pde(similarity_ansatz(vf.subs({EPS: Const(eps)}), sk.replace(eps=eps)),
                           sk.replace(eps=eps))
            ok_eps &= _symzero(o.lhs - subs(want, {EPS: Const(eps)})) and o.check().is_zero
        results[f"k={k}"] = ok_eps
    ok = all(results.values())
    criterion(3, ok, ", ".join(f"{k}: {'ok' if v else 'MISMATCH'}" for k, v in results.items()))
    assert ok, results


def test_criterion_4_exact_solution(criterion):
    symbolic = []
    for f in (FSpec.general(), FSpec.power(K), FSpec.exp()):
        for eps in (1, -1):
            spec = EquationSpec(2, 1, eps, f)
            u = exact_solution_case(spec, c1=sym("c1"), sigma=sym("sigma"))
            symbolic.append(pde_residual(spec, u.expr) is Const(0))
    spec = EquationSpec(2, 1, 1, FSpec.power(3))
    r = pde_residual(spec, exact_solution_case(spec, c1=Const(1) / 2, sigma=1).expr)
    rng = random.Random(11)
    worst = max(abs(eval_numeric(r, {T: rng.uniform(0.1, 3), X: rng.uniform(-5, 5)}))
                for _ in range(100))
    ok = all(symbolic) and worst < 1e-12
    criterion(4, ok, f"symbolic residuals zero: {sum(symbolic)}/{len(symbolic)}, "
                     f"max numeric residual {worst:.1e}")
    assert ok


def _draw(family, rng):
    nz = [Const(v) for v in (1, 2, 3, -1, -2)] + [Const(1) / 2, Const(-3) / 4]
    pos = [Const(1), Const(2), Const(1) / 3, Const(5) / 2]
    anyc = [Const(v) for v in (0, 1, -2)] + [Const(3) / 5]
    c = rng.choice
    if family == "G":
        return EquivTransform.make("G", delta0=c(anyc), delta1=c(nz), delta2=c(anyc),
                                   delta3=c(pos), s=c([1, -1]))
    if family in ("G_n0", "G_n1"):
        kw = {"s": c([1, -1])} if family == "G_n1" else {}
        Tm = c(nz) * T ** c([Const(1), Const(3), Const(1) / 3]) + c(anyc)
        return EquivTransform.make(family, T=Tm, delta1=c(nz), delta2=c(anyc),
                                   delta3=c(pos), **kw)
    while True:
        a, b, g, d = c(nz), c(anyc), c(anyc), c(nz)
        if normalize(a * d - b * g) is not Const(0):
            break
    return EquivTransform.make("G_12", alpha=a, beta=b, gamma=g, delta=d, kappa=c(nz),
                               mu0=c(anyc), mu1=c(anyc), s=c([1, -1]))


def test_criterion_5_equivalence(criterion):
    inversion = EquivTransform.make("G_12", alpha=0, beta=1, gamma=1, delta=0, kappa=-1)
    out = apply_equiv(inversion, EquationSpec(2, 1, 1, FSpec.power(2)))
    mapped = (out.m is Const(2) and out.n is Const(1) and out.f.kind == "Power"
              and out.f.param("k") is Const(-1) and out.f.param("c") is Const(1)
              and lookup_case(out)[0].caseId == "T2-7")
    specs = {"G": EquationSpec(3, 2, 1, FSpec.power(2)),
             "G_n0": EquationSpec(0, 2, 1, FSpec.power(2)),
             "G_n1": EquationSpec(1, 2, 1, FSpec.power(2)),
             "G_12": EquationSpec(2, 1, 1, FSpec.power(2))}
    rng = random.Random(5)
    fails = {}
    for fam, spec in specs.items():
        fails[fam] = 0
        for _ in range(100):
            a = _draw(fam, rng)
            rt = compose_equiv(a, invert_equiv(a)).bound_maps(spec)[:3]
            if not all(_symzero(g - w) for g, w in zip(rt, (T, X, U))):
                fails[fam] += 1
    ok = mapped and not any(fails.values())
    criterion(5, ok, f"inversion map f -> 1/t: {mapped}; roundtrip failures per family {fails}")
    assert ok


def test_criterion_6_bvp_pipeline(criterion):
    out = bvp_pipeline(2, 1, 1, 1, 1, tol=1e-8, N=400, cfl=0.4, refine=True)
    ok = (out["linf_rel"] <= 1e-2 and out["runtime_s"] < 60
          and out["observed_order"] >= 1.5)
    criterion(6, ok, f"linf_rel {out['linf_rel']:.2e} (N=400), {out['linf_rel_coarse']:.2e} "
                     f"(N=200), order {out['observed_order']:.2f}, {out['runtime_s']:.1f}s")
    assert ok


def test_criterion_7_convergence(criterion):
    spec = EquationSpec(2, 1, 1, FSpec.linear())
    u = exact_solution_case(spec, c1=0, sigma=1)
    errs = []
    for n in (10, 20, 40, 80):
        grid = PDEGrid(4.0, n, (0.5, 1.0), n_out=3)
        sol = mol_solve(spec, lambda x: u(0.5, x), BoundarySpec.dirichlet_data(u), grid)
        errs.append(float(np.max(np.abs(sol["u"] - u(grid.t_out[:, None], grid.x[None, :])))))
    mol_orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    # the exact solution is affine in x, so the stencils are exact on it and
    # only the time error remains; the soliton run exercises the spatial error
    sol_u = lambda t, x: 1.5 / np.cosh(0.5 * (np.asarray(x) - np.asarray(t) - 8.0)) ** 2
    kdv = EquationSpec(2, 1, 1, FSpec.one())
    serr = []
    for n in (80, 160, 320):
        grid = PDEGrid(16.0, n, (0.0, 1.0), n_out=3)
        sol = mol_solve(kdv, lambda x: sol_u(0.0, x), BoundarySpec.dirichlet_data(sol_u), grid)
        serr.append(float(np.max(np.abs(sol["u"][-1] - sol_u(1.0, grid.x)))))
    sol_orders = [math.log2(a / b) for a, b in zip(serr, serr[1:])]

    red_ = bvp_reduce(EquationSpec(2, 1, 1, FSpec.linear()), 1)
    p = ODEProblem.from_bvp(red_, span=(0.0, 10.0))
    ref = 4.8318392222716655  # scipy DOP853 at rtol = atol = 1e-13
    ierr = [abs(integrate_ivp(p, fixed_step=h).grid["phi"][-1] - ref) for h in (0.4, 0.2, 0.1)]
    ivp_orders = [math.log2(a / b) for a, b in zip(ierr, ierr[1:])]
    ok = min(mol_orders) >= 1.9 and min(sol_orders) >= 1.9 and min(ivp_orders) >= 4
    criterion(7, ok, "MoL exact-solution orders " + "/".join(f"{o:.1f}" for o in mol_orders)
              + ", soliton orders " + "/".join(f"{o:.2f}" for o in sol_orders)
              + ", IVP fixed-step orders " + "/".join(f"{o:.2f}" for o in ivp_orders))
    assert ok


def test_criterion_8_kernel_soundness(criterion):
    import test_symkernel as ks

    suites = {
        "normalize idempotent": ks.test_normalize_idempotent,
        "print/parse round trip": ks.test_print_parse_round_trip,
        "derivative vs finite difference": ks.test_derivative_matches_finite_difference,
        "D_x D_t = D_t D_x": ks.test_total_derivatives_commute,
    }
    failed = []
    for name, fn in suites.items():
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - report every suite
            failed.append(f"{name}: {type(exc).__name__}")
    ok = not failed
    criterion(8, ok, f"{len(suites)} randomized suites x 1000 cases"
                     + (f"; failed {failed}" if failed else ""))
    assert ok
