"""Dormand-Prince 5(4) integrator for the reduced third-order problems."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, NonFiniteState, StepUnderflow
from ..symkernel import OMEGA, Const, differentiate, lambdify, normalize, red, to_str
from .grids import SolutionGrid

__all__ = ["ODEProblem", "CompactonEdge", "IVPResult", "integrate_ivp", "dp45_step"]

# Dormand-Prince tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = np.array((35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0))
_E = _B - np.array((5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                    187 / 2100, 1 / 40))
# continuous extension (Hairer, Norsett, Wanner)
_D = np.array((-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
               -10690763975 / 1880347072, 701980252875 / 199316789632,
               -1453857185 / 822651844, 69997945 / 29380423))

_SAFETY = 0.9
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA
_FAC_MIN, _FAC_MAX = 0.2, 10.0


@dataclass
class ODEProblem:
    """y' = rhs(w, y) for y = (phi, phi', ..., phi^(r-1)).

    ``n`` flags the singular leading coefficient n phi^(n-1): for n != 1
    the integration stops at a CompactonEdge once phi drops below
    ``phi_floor``.
    """

    rhs: object
    y0: tuple
    span: tuple
    n: float = 1.0
    phi_floor: float = 1e-8
    params: dict = field(default_factory=dict)
    label: str = ""

    @classmethod
    def from_ode(cls, lhs, y0, span, *, n=1.0, params=None, label=""):
        """Isolate the top derivative of lhs(omega, phi, ...) = 0."""
        order = max((s.index for s in lhs.free_symbols
                     if getattr(s, "kind", None) == "red" and s.index >= 0), default=0)
        if order == 0:
            raise ValueError("equation has no phi derivative")
        top = red(order)
        a = differentiate(lhs, top)
        if top in a.free_symbols:
            raise ValueError("equation is not linear in its highest derivative")
        rest = normalize(lhs - a * top)
        expr = normalize(-rest / a)
        args = (OMEGA,) + tuple(red(j) for j in range(order))
        f = lambdify(expr, args)

        def rhs(w, y):
            out = np.empty(order)
            out[:-1] = y[1:]
            out[-1] = f(w, *y)
            return out

        return cls(rhs, tuple(float(v) for v in y0), tuple(map(float, span)), float(n),
                   params=dict(params or {}), label=label or to_str(lhs))

    @classmethod
    def from_bvp(cls, red_, span=(0.0, 10.0), **kw):
        """The initial value problem of a BVPReduction."""
        p = {"m": to_str(red_.spec.m), "n": to_str(red_.spec.n), "eps": red_.spec.eps,
             "k": to_str(red_.k), "c1": to_str(red_.c1), "c2": to_str(red_.c2),
             "gammaAmp": to_str(red_.gammaAmp)}
        y0 = [float(_value(v)) for v in red_.initial]
        n = red_.spec.n
        return cls.from_ode(red_.ode, y0, span, n=float(_value(n)), params=p, **kw)


def _value(e):
    e = normalize(e)
    if type(e) is not Const:
        raise ValueError(f"{to_str(e)} is not a number")
    return e.value


@dataclass(frozen=True)
class CompactonEdge:
    """phi reached the floor at ``omega`` (singular leading coefficient)."""

    omega: float
    state: tuple


@dataclass
class IVPResult:
    grid: SolutionGrid
    event: CompactonEdge | None
    steps: int
    rejected: int
    nfev: int
    dense: object = None

    def __call__(self, w):
        return self.dense(w)


def dp45_step(rhs, w, y, h, k1=None):
    """One Dormand-Prince step; returns (y_new, error estimate, stages)."""
    if k1 is None:
        k1 = np.asarray(rhs(w, y), dtype=float)
    k = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k))
        k.append(np.asarray(rhs(w + _C[i] * h, yi), dtype=float))
    K = np.array(k)
    return y + h * (_B @ K), h * (_E @ K), K


class _Dense:
    """Piecewise quartic continuous extension over accepted steps."""

    def __init__(self):
        self.w0 = []
        self.h = []
        self.coef = []

    def add(self, w, h, y0, y1, K):
        r2 = y1 - y0
        r3 = h * K[0] - r2
        r4 = r2 - h * K[6] - r3
        r5 = h * (_D @ K)
        self.w0.append(w)
        self.h.append(h)
        self.coef.append((y0, r2, r3, r4, r5))

    def eval_one(self, i, w):
        y0, r2, r3, r4, r5 = self.coef[i]
        th = (w - self.w0[i]) / self.h[i]
        th1 = 1.0 - th
        return y0 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))

    def __call__(self, w):
        ws = np.atleast_1d(np.asarray(w, dtype=float))
        starts = np.array(self.w0)
        sign = -1.0 if self.h and self.h[0] < 0 else 1.0
        out = []
        for x in ws:
            i = int(np.searchsorted(sign * starts, sign * x, side="right") - 1)
            i = min(max(i, 0), len(starts) - 1)
            out.append(self.eval_one(i, x))
        arr = np.array(out)
        return arr[0] if np.ndim(w) == 0 else arr


def _safe_rhs(rhs, w, y):
    try:
        v = np.asarray(rhs(w, y), dtype=float)
    except (DomainError, ZeroDivisionError, OverflowError, ValueError):
        return None
    return v if np.all(np.isfinite(v)) else None


def _error_norm(err, y, y_new, tol):
    sc = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / sc) ** 2)))


def _locate_edge(dense, i, w0, w1, floor):
    a, b = w0, w1
    for _ in range(80):
        mid = 0.5 * (a + b)
        if dense.eval_one(i, mid)[0] < floor:
            b = mid
        else:
            a = mid
        if b - a <= 1e-15 * max(1.0, abs(b)):
            break
    return b


def integrate_ivp(p: ODEProblem, tol: float = 1e-8, *, fixed_step: float | None = None,
                  h0: float | None = None, max_steps: int = 1_000_000) -> IVPResult:
    """Integrate p over its span.

    With ``fixed_step`` the fifth-order solution is propagated without error
    control (used for convergence studies); otherwise PI step control keeps
    the local error below ``tol`` (relative and absolute).
    """
    if fixed_step is None and not (1e-12 <= tol <= 1e-3):
        raise ValueError("tol must lie in [1e-12, 1e-3]")
    w0, w1 = p.span
    direction = 1.0 if w1 >= w0 else -1.0
    y = np.array(p.y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("initial data is not finite", where=w0, state=tuple(y))
    singular = p.n != 1.0
    k1 = _safe_rhs(p.rhs, w0, y)
    if k1 is None:
        raise NonFiniteState("right-hand side not finite at the initial point",
                             where=w0, state=tuple(y))
    nfev = 1
    w = w0
    ws, ys = [w], [y.copy()]
    dense = _Dense()
    event = None
    steps = rejected = 0
    span_len = abs(w1 - w0)

    if fixed_step is not None:
        nsteps = max(1, int(round(span_len / fixed_step)))
        h = direction * span_len / nsteps
        for _ in range(nsteps):
            y_new, _, K = dp45_step(p.rhs, w, y, h, k1)
            nfev += 6
            if not np.all(np.isfinite(y_new)):
                raise NonFiniteState("state became non-finite", where=w + h, state=tuple(y_new))
            dense.add(w, h, y, y_new, K)
            w, y, k1 = w + h, y_new, K[6]
            steps += 1
            ws.append(w)
            ys.append(y.copy())
        return _finish(p, ws, ys, None, steps, 0, nfev, dense)

    if h0 is None:
        scale = tol + tol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((k1 / scale) ** 2))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h = min(h, 0.1 * span_len)
    else:
        h = abs(h0)
    h *= direction
    err_prev = 1e-4
    while direction * (w1 - w) > 1e-14 * max(1.0, abs(w1)):
        if steps + rejected >= max_steps:
            raise StepUnderflow("step budget exhausted", where=w, state=tuple(y))
        if abs(h) < 1e-14 * max(1.0, abs(w)):
            raise StepUnderflow("step size underflow", where=w, state=tuple(y))
        if direction * (w + h - w1) > 0:
            h = w1 - w
        y_new, err, K = _trial(p.rhs, w, y, h, k1)
        nfev += 6
        if y_new is None:
            h *= 0.25
            rejected += 1
            continue
        en = _error_norm(err, y, y_new, tol)
        if en <= 1.0:
            dense.add(w, h, y, y_new, K)
            idx = len(dense.w0) - 1
            if singular and y_new[0] < p.phi_floor:
                we = _locate_edge(dense, idx, w, w + h, p.phi_floor)
                state = dense.eval_one(idx, we)
                event = CompactonEdge(float(we), tuple(float(v) for v in state))
                ws.append(we)
                ys.append(state)
                steps += 1
                break
            fac = _SAFETY * max(en, 1e-10) ** (-_ALPHA) * err_prev ** _BETA
            w, y, k1 = w + h, y_new, K[6]
            ws.append(w)
            ys.append(y.copy())
            steps += 1
            err_prev = max(en, 1e-4)
            h *= min(_FAC_MAX, max(_FAC_MIN, fac))
        else:
            rejected += 1
            fac = _SAFETY * en ** (-_ALPHA)
            h *= min(1.0, max(_FAC_MIN, fac))
    return _finish(p, ws, ys, event, steps, rejected, nfev, dense)


def _trial(rhs, w, y, h, k1):
    k = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k))
        ki = _safe_rhs(rhs, w + _C[i] * h, yi)
        if ki is None:
            return None, None, None
        k.append(ki)
    K = np.array(k)
    return y + h * (_B @ K), h * (_E @ K), K


def _finish(p, ws, ys, event, steps, rejected, nfev, dense):
    Y = np.array(ys)
    names = ["phi", "dphi", "ddphi", "d3phi"][:Y.shape[1]]
    meta = {"kind": "profile", "span": list(p.span), "params": p.params,
            "label": p.label, "steps": steps, "rejected": rejected}
    if event is not None:
        meta["compacton_edge"] = event.omega
    grid = SolutionGrid({"omega": np.array(ws)},
                        {nm: Y[:, j] for j, nm in enumerate(names)}, meta)
    return IVPResult(grid, event, steps, rejected, nfev, dense)
