"""Method of lines for u_t + eps (u^m)_x + f(t) (u^n)_xxx = 0 on an interval.

Nodes x_i = x0 + i h, i = 0..N.  Node 0 and node N carry boundary values;
one ghost node on each side closes the centered four-point stencil

    (w_{i+2} - 2 w_{i+1} + 2 w_{i-1} - w_{i-2}) / (2 h^3),   w = u^n.

The left closure "flat" imposes u(x0) = q(t), u_x = u_xx = 0 through the
ghost value of the quartic u0 + a x^3 + b x^4 interpolating nodes 1 and 2.
Time stepping is classical RK4 inside a numba kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..equation import EquationSpec
from ..errors import CFLViolation, DomainError, NonFiniteState
from ..symkernel import T, lambdify
from .grids import SolutionGrid

__all__ = ["PDEGrid", "BoundarySpec", "mol_solve", "stable_dt"]


@dataclass(frozen=True)
class PDEGrid:
    """Spatial domain [x0, x0 + L] with N + 1 nodes, and the time span."""

    L: float
    N: int
    t_span: tuple
    n_out: int = 11
    cfl: float = 0.4
    x0: float = 0.0

    def __post_init__(self):
        if self.N < 8:
            raise ValueError("N must be at least 8")
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.n_out < 2:
            raise ValueError("n_out must be at least 2")
        if not self.t_span[1] > self.t_span[0]:
            raise ValueError("t_span must be increasing")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def x(self):
        return self.x0 + self.h * np.arange(self.N + 1)

    @property
    def t_out(self):
        return np.linspace(self.t_span[0], self.t_span[1], self.n_out)


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary closures.

    left  : "flat" (u = q(t), u_x = u_xx = 0) or "data" (values from g(t, x))
    right : "zero" (zero extension) or "data"
    """

    left: str = "flat"
    q: object = None
    right: str = "zero"
    data: object = None

    @classmethod
    def flat(cls, q, right_data=None):
        if right_data is None:
            return cls("flat", q, "zero", None)
        return cls("flat", q, "data", right_data)

    @classmethod
    def dirichlet_data(cls, g):
        return cls("data", None, "data", g)


@njit(cache=True, inline="always")
def _pow(a, p, pint):
    if pint:
        k = int(p)
        if k == 1:
            return a
        if k == 2:
            return a * a
        if k == 0:
            return 1.0
        return a ** k
    return a ** p


@njit(cache=True, fastmath=True)
def _rhs(u, fval, eps, m, n, mint, nint, h, upwind, left_flat, lg, rg, src, out, ext, w, v):
    N = u.shape[0] - 1
    for i in range(N + 1):
        ext[i + 1] = u[i]
    if left_flat:
        ext[0] = u[0] + 0.25 * (u[2] - u[0]) - 3.0 * (u[1] - u[0])
    else:
        ext[0] = lg
    ext[N + 2] = rg
    for j in range(N + 3):
        w[j] = _pow(ext[j], n, nint)
        v[j] = _pow(ext[j], m, mint)
    inv2h = 0.5 / h
    inv2h3 = 0.5 / (h * h * h)
    for i in range(1, N):
        j = i + 1
        if upwind:
            a = eps * m * _pow(ext[j], m - 1.0, mint)
            if a > 0:
                conv = (v[j] - v[j - 1]) / h
            else:
                conv = (v[j + 1] - v[j]) / h
        else:
            conv = (v[j + 1] - v[j - 1]) * inv2h
        disp = (w[j + 2] - 2.0 * w[j + 1] + 2.0 * w[j - 1] - w[j - 2]) * inv2h3
        out[i] = -eps * conv - fval * disp + src[i]
    out[0] = 0.0
    out[N] = 0.0


@njit(cache=True)
def _rk4_chunk(u, dt, nsteps, F, L0, LG, R0, RG, S, eps, m, n, mint, nint, h,
               upwind, left_flat, check_pos, has_src):
    """Advance nsteps; stage arrays have shape (nsteps, 3[, N+1]) for the
    times t, t + dt/2, t + dt.  Returns the index of the first bad step or -1."""
    N = u.shape[0] - 1
    k1 = np.zeros(N + 1)
    k2 = np.zeros(N + 1)
    k3 = np.zeros(N + 1)
    k4 = np.zeros(N + 1)
    tmp = np.empty(N + 1)
    ext = np.empty(N + 3)
    w = np.empty(N + 3)
    v = np.empty(N + 3)
    zero = np.zeros((3, N + 1))
    for s in range(nsteps):
        src = S[s] if has_src else zero
        if check_pos:
            for i in range(N + 1):
                if u[i] <= 0.0:
                    return s
        u[0] = L0[s, 0]
        u[N] = R0[s, 0]
        _rhs(u, F[s, 0], eps, m, n, mint, nint, h, upwind, left_flat, LG[s, 0], RG[s, 0],
             src[0], k1, ext, w, v)
        for i in range(N + 1):
            tmp[i] = u[i] + 0.5 * dt * k1[i]
        tmp[0] = L0[s, 1]
        tmp[N] = R0[s, 1]
        _rhs(tmp, F[s, 1], eps, m, n, mint, nint, h, upwind, left_flat, LG[s, 1], RG[s, 1],
             src[1], k2, ext, w, v)
        for i in range(N + 1):
            tmp[i] = u[i] + 0.5 * dt * k2[i]
        tmp[0] = L0[s, 1]
        tmp[N] = R0[s, 1]
        _rhs(tmp, F[s, 1], eps, m, n, mint, nint, h, upwind, left_flat, LG[s, 1], RG[s, 1],
             src[1], k3, ext, w, v)
        for i in range(N + 1):
            tmp[i] = u[i] + dt * k3[i]
        tmp[0] = L0[s, 2]
        tmp[N] = R0[s, 2]
        _rhs(tmp, F[s, 2], eps, m, n, mint, nint, h, upwind, left_flat, LG[s, 2], RG[s, 2],
             src[2], k4, ext, w, v)
        bad = False
        for i in range(1, N):
            u[i] = u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not np.isfinite(u[i]):
                bad = True
        u[0] = L0[s, 2]
        u[N] = R0[s, 2]
        if bad:
            return s
    return -1


def _is_int(v: float) -> bool:
    return float(v).is_integer()


def _fvalues(spec: EquationSpec):
    f = lambdify(spec.f.f_expr(), (T,), mode="numpy")
    return lambda t: np.broadcast_to(np.asarray(f(np.asarray(t, dtype=float)), dtype=float),
                                     np.shape(t)).astype(float)


def stable_dt(spec: EquationSpec, grid: PDEGrid, umax: float, cfl: float | None = None) -> float:
    """cfl * h^3 / (n max|f| umax^(n-1)), also capped by the convective limit."""
    cfl = grid.cfl if cfl is None else cfl
    n, m = float(spec.n_value), float(spec.m_value)
    ts = np.linspace(grid.t_span[0], grid.t_span[1], 513)
    fmax = float(np.max(np.abs(_fvalues(spec)(ts))))
    h = grid.h
    umax = max(umax, 1e-300)
    disp = abs(n) * fmax * umax ** (n - 1.0)
    dt = cfl * h ** 3 / disp if disp > 0 else math.inf
    conv = abs(m) * umax ** (m - 1.0) if m != 0 else 0.0
    if conv > 0:
        dt = min(dt, cfl * 2.0 * h / conv)
    return dt


def mol_solve(spec: EquationSpec, u0, bc: BoundarySpec, grid: PDEGrid, *,
              source=None, upwind: bool = False, dt: float | None = None) -> SolutionGrid:
    """Integrate from grid.t_span[0] and sample u at grid.t_out.

    ``u0(x)`` gives initial data; ``source(t, x)`` is an optional forcing
    added to the right-hand side (manufactured solutions).
    """
    if spec.n_value is None or spec.m_value is None:
        raise ValueError("m and n must be numbers")
    n, m = float(spec.n_value), float(spec.m_value)
    x = grid.x
    h = grid.h
    N = grid.N
    fvals = _fvalues(spec)
    u = np.array(np.broadcast_to(u0(x), x.shape), dtype=float)
    t0 = grid.t_span[0]

    left0, _ = _left_values(bc, np.array([t0]), x, h)
    right0, _ = _right_values(bc, np.array([t0]), x, h)
    u[0], u[N] = left0[0], right0[0]
    if not np.all(np.isfinite(u)):
        raise NonFiniteState("initial data is not finite", where=t0, state=None)
    check_pos = not (_is_int(n) and _is_int(m))
    if check_pos and np.any(u <= 0):
        raise DomainError("u <= 0 with a fractional exponent")
    umax = float(np.max(np.abs(u)))
    limit = stable_dt(spec, grid, umax, cfl=1.0)
    if dt is None:
        dt = grid.cfl * limit
    elif dt > limit:
        raise CFLViolation(f"dt = {dt:.3g} exceeds the stability limit {limit:.3g}")
    t_out = grid.t_out
    out = np.empty((len(t_out), N + 1))
    out[0] = u
    for j in range(1, len(t_out)):
        ta, tb = t_out[j - 1], t_out[j]
        ns = max(1, int(math.ceil((tb - ta) / dt - 1e-9)))
        d = (tb - ta) / ns
        base = ta + d * np.arange(ns)
        st = np.stack([base, base + 0.5 * d, base + d], axis=1)
        F = fvals(st)
        L0, LG = _left_values(bc, st, x, h)
        R0, RG = _right_values(bc, st, x, h)
        if source is None:
            S = np.zeros((1, 3, N + 1))
        else:
            S = np.asarray(source(st[:, :, None], x[None, None, :]), dtype=float)
            S = np.broadcast_to(S, (ns, 3, N + 1)).copy()
        bad = _rk4_chunk(u, d, ns, F, L0, LG, R0, RG, S, spec.eps, m, n,
                         _is_int(m), _is_int(n), h, upwind, bc.left == "flat", check_pos,
                         source is not None)
        if bad >= 0:
            tb_bad = ta + d * bad
            if check_pos and np.any(u <= 0):
                raise DomainError(f"u <= 0 with a fractional exponent at t = {tb_bad:.6g}")
            raise NonFiniteState("solution became non-finite", where=tb_bad,
                                 state=u.copy())
        out[j] = u
    meta = {"kind": "mol", "spec": spec.to_json(), "N": N, "L": grid.L, "x0": grid.x0,
            "dt": (t_out[1] - t_out[0]) / max(1, int(math.ceil((t_out[1] - t_out[0]) / dt - 1e-9))),
            "cfl": grid.cfl, "left": bc.left, "right": bc.right, "upwind": upwind}
    return SolutionGrid({"t": t_out, "x": x}, {"u": out}, meta)


def _left_values(bc, st, x, h):
    shape = np.shape(st)
    if bc.left == "flat":
        q = np.broadcast_to(np.asarray(bc.q(st), dtype=float), shape)
        return np.array(q, dtype=float), np.zeros(shape)
    if bc.left == "data":
        v0 = np.broadcast_to(bc.data(st, x[0]), shape)
        vg = np.broadcast_to(bc.data(st, x[0] - h), shape)
        return np.array(v0, dtype=float), np.array(vg, dtype=float)
    raise ValueError(f"unknown left closure {bc.left!r}")


def _right_values(bc, st, x, h):
    shape = np.shape(st)
    if bc.right == "zero":
        return np.zeros(shape), np.zeros(shape)
    if bc.right == "data":
        v0 = np.broadcast_to(bc.data(st, x[-1]), shape)
        vg = np.broadcast_to(bc.data(st, x[-1] + h), shape)
        return np.array(v0, dtype=float), np.array(vg, dtype=float)
    raise ValueError(f"unknown right closure {bc.right!r}")
