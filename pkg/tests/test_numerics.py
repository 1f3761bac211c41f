import math

import numpy as np
import pytest

from kmnlie.equation import EquationSpec, FSpec
from kmnlie.errors import (
    CFLViolation, DomainError, ExtrapolationRequest, NoOverlap, NonFiniteState,
)
from kmnlie.numerics import (
    BoundarySpec, CompactonEdge, ODEProblem, PDEGrid, SolutionGrid, compare_grids,
    integrate_ivp, mol_solve, profile_interpolant, reconstruct, stable_dt,
)
from kmnlie.reduction import bvp_reduce, exact_solution_case, pde_residual
from kmnlie.symkernel import T, X, lambdify, parse

# scipy DOP853, rtol = atol = 1e-13, for the (m, n, k, gamma, eps) = (2, 1, 1, 1, 1) profile
PHI_REF = {2.0: 1.3386861021607521, 5.0: 2.6569818477102847, 10.0: 4.8318392222716655}

BVP = bvp_reduce(EquationSpec(2, 1, 1, FSpec.linear()), 1)


def _order(errs):
    return [math.log2(a / b) for a, b in zip(errs, errs[1:])]


# ---------------------------------------------------------------------------
# IVP

def test_exponential_decay():
    p = ODEProblem(lambda w, y: -y, (1.0,), (0.0, 1.0))
    for tol in (1e-6, 1e-10):
        res = integrate_ivp(p, tol)
        assert abs(res.grid["phi"][-1] - math.exp(-1)) < 10 * tol
        assert res.grid.axis("omega")[-1] == pytest.approx(1.0)


def test_tolerance_range():
    p = ODEProblem(lambda w, y: -y, (1.0,), (0.0, 1.0))
    with pytest.raises(ValueError):
        integrate_ivp(p, 1e-2)


def test_profile_matches_reference():
    p = ODEProblem.from_bvp(BVP, span=(0.0, 10.0))
    res = integrate_ivp(p, 1e-8)
    for w, ref in PHI_REF.items():
        assert abs(res(w)[0] - ref) <= 10 * 1e-8 * max(1.0, abs(ref))
    assert res.event is None


def test_fixed_step_order():
    p = ODEProblem.from_bvp(BVP, span=(0.0, 10.0))
    errs = [abs(integrate_ivp(p, fixed_step=h).grid["phi"][-1] - PHI_REF[10.0])
            for h in (0.4, 0.2, 0.1)]
    assert min(_order(errs)) >= 4


def test_adaptive_error_tracks_tolerance():
    p = ODEProblem.from_bvp(BVP, span=(0.0, 10.0))
    errs = [abs(integrate_ivp(p, tol).grid["phi"][-1] - PHI_REF[10.0])
            for tol in (1e-5, 1e-7, 1e-9)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-7


def test_compacton_edge_stops_cleanly():
    red_ = bvp_reduce(EquationSpec("1/2", "1/2", 1, FSpec.linear()), 1)
    res = integrate_ivp(ODEProblem.from_bvp(red_, span=(0.0, 10.0)), 1e-8)
    assert isinstance(res.event, CompactonEdge)
    assert 1.8 < res.event.omega < 2.0
    assert abs(res.event.state[0] - 1e-8) < 1e-12
    assert np.all(np.isfinite(res.grid["phi"]))
    assert res.grid.meta["compacton_edge"] == res.event.omega


def test_non_finite_initial_data():
    p = ODEProblem(lambda w, y: -y, (math.nan,), (0.0, 1.0))
    with pytest.raises(NonFiniteState) as info:
        integrate_ivp(p)
    assert info.value.where == 0.0


# ---------------------------------------------------------------------------
# reconstruction and comparison

@pytest.fixture(scope="module")
def profile():
    return integrate_ivp(ODEProblem.from_bvp(BVP, span=(0.0, 12.0)), 1e-10).grid


def test_reconstruct_at_unit_time_is_profile(profile):
    x = np.linspace(0, 5, 11)
    g = reconstruct(BVP, profile, [1.0, 1.5], x)
    assert np.allclose(g["u"][0], profile_interpolant(profile)(x), rtol=1e-14)


def test_reconstruct_left_column_is_q(profile):
    t = np.linspace(1, 2, 6)
    g = reconstruct(BVP, profile, t, np.array([0.0, 1.0]))
    assert np.allclose(g["u"][:, 0], t ** (-1 / 3), rtol=1e-13)


def test_reconstruct_refuses_extrapolation(profile):
    with pytest.raises(ExtrapolationRequest):
        reconstruct(BVP, profile, [1.0], [20.0])
    with pytest.raises(ExtrapolationRequest):
        reconstruct(BVP, profile, [0.0], [1.0])


def test_hermite_interpolation_order():
    errs = []
    for n in (20, 40, 80):
        w = np.linspace(0, 3, n + 1)
        g = SolutionGrid({"omega": w}, {"phi": np.sin(w), "dphi": np.cos(w)})
        mid = 0.5 * (w[1:] + w[:-1])
        errs.append(np.max(np.abs(profile_interpolant(g)(mid) - np.sin(mid))))
    assert min(_order(errs)) >= 3


def _tx_grid(t, x, fn):
    T_, X_ = np.meshgrid(t, x, indexing="ij")
    return SolutionGrid({"t": t, "x": x}, {"u": fn(T_, X_)})


def test_compare_identical_and_disjoint():
    g = _tx_grid(np.linspace(1, 2, 5), np.linspace(0, 1, 9), lambda t, x: t + x ** 2)
    out = compare_grids(g, g)
    assert out["linf_rel"] == 0 and out["l2_rel"] == 0
    far = _tx_grid(np.linspace(1, 2, 5), np.linspace(3, 4, 9), lambda t, x: t + x)
    with pytest.raises(NoOverlap):
        compare_grids(g, far)


def test_compare_shifted_grid_taylor_bound():
    x = np.linspace(0, 2, 41)
    dx = x[1] - x[0]
    t = np.linspace(1, 2, 5)
    a = _tx_grid(t, x, lambda t, x: np.sin(x + t))
    b = _tx_grid(t, x, lambda t, x: np.sin(x + dx + t))
    out = compare_grids(a, b)
    assert 0.3 * dx < out["linf_abs"] <= dx


# ---------------------------------------------------------------------------
# method of lines

def test_zero_data_stays_zero():
    spec = EquationSpec(2, 1, 1, FSpec.linear())
    grid = PDEGrid(5.0, 40, (1.0, 2.0), n_out=3)
    sol = mol_solve(spec, lambda x: 0 * x, BoundarySpec.flat(lambda t: 0 * t), grid,
                    dt=1e-4)
    assert np.all(sol["u"] == 0)


def test_cfl_violation():
    spec = EquationSpec(2, 1, 1, FSpec.linear())
    grid = PDEGrid(5.0, 40, (1.0, 2.0))
    limit = stable_dt(spec, grid, 1.0, cfl=1.0)
    with pytest.raises(CFLViolation):
        mol_solve(spec, lambda x: 1 + 0 * x, BoundarySpec.flat(lambda t: 1 + 0 * t), grid,
                  dt=2 * limit)


def test_fractional_exponent_needs_positive_u():
    spec = EquationSpec(2, "1/2", 1, FSpec.one())
    grid = PDEGrid(1.0, 16, (0.0, 0.1))
    with pytest.raises(DomainError):
        mol_solve(spec, lambda x: x - 0.5, BoundarySpec.dirichlet_data(lambda t, x: x - 0.5),
                  grid)


def test_grid_validation():
    with pytest.raises(ValueError):
        PDEGrid(1.0, 4, (0.0, 1.0))
    with pytest.raises(ValueError):
        SolutionGrid({"x": [0.0, 0.0, 1.0]}, {})


def test_csv_round_trip(tmp_path):
    g = _tx_grid(np.linspace(1, 2, 3), np.linspace(0, 1, 4), lambda t, x: t / 3 + x)
    g.meta["note"] = "x"
    back = SolutionGrid.from_csv(g.to_csv(tmp_path / "g.csv"))
    assert np.array_equal(back["u"], g["u"])
    assert np.array_equal(back.axis("x"), g.axis("x"))
    assert back.meta == g.meta
    assert (tmp_path / "g.csv").read_text().splitlines()[0] == "t,x,u"


def test_exact_solution_convergence():
    spec = EquationSpec(2, 1, 1, FSpec.linear())
    u = exact_solution_case(spec, c1=0, sigma=1)
    bc = BoundarySpec.dirichlet_data(u)
    errs, hs = [], []
    for N in (10, 20, 40, 80):
        grid = PDEGrid(4.0, N, (0.5, 1.0), n_out=3)
        sol = mol_solve(spec, lambda x: u(0.5, x), bc, grid)
        errs.append(np.max(np.abs(sol["u"] - u(grid.t_out[:, None], grid.x[None, :]))))
        hs.append(grid.h)
    assert min(_order(errs)) >= 1.9
    assert all(e <= 1e-2 * h * h for e, h in zip(errs, hs))


def test_manufactured_spatial_order():
    spec = EquationSpec(2, 2, 1, FSpec.linear())
    ue = parse("1 + (1/10)*sin(x)*cos(t)")
    src = lambdify(pde_residual(spec, ue), (T, X), mode="numpy")
    uf = lambdify(ue, (T, X), mode="numpy")
    errs = []
    for N in (40, 80, 160):
        grid = PDEGrid(2 * math.pi, N, (0.0, 0.5), n_out=3)
        sol = mol_solve(spec, lambda x: uf(0.0, x), BoundarySpec.dirichlet_data(uf), grid,
                        source=src)
        errs.append(np.max(np.abs(sol["u"][-1] - uf(0.5, grid.x))))
    assert min(_order(errs)) >= 1.9


def kdv_soliton(c=1.0, x0=8.0):
    # u_t + (u^2)_x + u_xxx = 0
    k = math.sqrt(c) / 2
    return lambda t, x: 1.5 * c / np.cosh(k * (np.asarray(x) - c * np.asarray(t) - x0)) ** 2


@pytest.mark.slow
def test_soliton_spatial_order():
    spec = EquationSpec(2, 1, 1, FSpec.one())
    u = kdv_soliton()
    errs = []
    for N in (80, 160, 320):
        grid = PDEGrid(16.0, N, (0.0, 1.0), n_out=3)
        sol = mol_solve(spec, lambda x: u(0.0, x), BoundarySpec.dirichlet_data(u), grid)
        errs.append(np.max(np.abs(sol["u"][-1] - u(1.0, grid.x))))
    assert min(_order(errs)) >= 1.9
