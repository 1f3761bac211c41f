"""Command line front end.

    kmnlie classify --n 1 --m 2 --eps 1 --f "t^3"
    kmnlie verify --case T1-5 --m 3 --n 2
    kmnlie verify --all
    kmnlie commutators --case T2-7 --k 3
    kmnlie reduce --k 2 --a 1
    kmnlie solve-ode --m 2 --n 1 --k 1 --gamma 1 --out profile.csv
    kmnlie solve-pde --m 2 --n 1 --k 1 --gamma 1 --grid-n 200 --out u.csv
    kmnlie bvp-pipeline --m 2 --n 1 --k 1 --gamma 1 --eps 1

Exit status: 0 success, 1 verification failure or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from . import errors
from .equation import EquationSpec, FSpec

COMMANDS = ("classify", "verify", "commutators", "reduce", "solve-ode", "solve-pde",
            "bvp-pipeline")

_USAGE_ERRORS = (errors.ParseError, errors.UnknownSymbol, errors.InvalidSpec,
                 errors.LinearEquation, errors.GuardViolation, errors.SpecMismatch,
                 errors.DegenerateScaling, errors.UnsupportedGenerator, errors.TrivialOrbit)

_KIND_FORM = re.compile(r"^\s*([A-Za-z]+)\s*\((.*)\)\s*$")


class UsageError(Exception):
    pass


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("equation")
    g.add_argument("--m", help="convection exponent m")
    g.add_argument("--n", help="dispersion exponent n")
    g.add_argument("--eps", type=int, choices=(-1, 1), help="sign eps")
    g.add_argument("--f", help='coefficient f(t): an expression such as "t^3", or '
                               'a kind form such as "PowerShifted(k=2, beta=1)"')
    g.add_argument("--k", help="shorthand for f = t^k")
    p = common.add_argument_group("parameters")
    p.add_argument("--sigma", type=int, choices=(-1, 0, 1))
    p.add_argument("--a", help="free parameter a of the f = t^k subalgebras")
    p.add_argument("--gamma", help="boundary amplitude gammaAmp > 0")
    p.add_argument("--tol", type=float)
    p.add_argument("--grid-n", type=int, dest="grid_n")
    p.add_argument("--t-span", dest="t_span", help="t0,t1")
    p.add_argument("--x-span", dest="x_span", help="x0,x1 (omega span for solve-ode)")
    p.add_argument("--out", help="output path")
    p.add_argument("--seed", type=int)
    p.add_argument("--all", action="store_true", help="verify every database case")
    p.add_argument("--case", help="case id, e.g. T1-5")
    p.add_argument("--config", help="JSON file with the same keys as the flags")

    ap = argparse.ArgumentParser(prog="kmnlie", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for c in COMMANDS:
        sub.add_parser(c, parents=[common])
    return ap


def _merge_config(ns):
    cfg = {}
    if ns.config:
        try:
            cfg = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    out = {}
    for key, val in cfg.items():
        out[key.replace("-", "_")] = val
    for key, val in vars(ns).items():
        if val is not None and val is not False:
            out[key] = val
        else:
            out.setdefault(key, val)
    return out


def parse_f(text) -> FSpec:
    from .classification.equivalence import recognize_f
    from .symkernel import parse

    text = str(text).strip()
    m = _KIND_FORM.match(text)
    if m and m.group(1) in ("Power", "Exp", "ExpArctan", "PowerShifted", "One", "TExpInv",
                            "Linear"):
        kind, body = m.group(1), m.group(2)
        params = {}
        for part in filter(None, (s.strip() for s in body.split(","))):
            if "=" not in part:
                raise UsageError(f"expected name=value in {text!r}")
            name, val = (s.strip() for s in part.split("=", 1))
            params[name] = parse(val)
        return FSpec(kind, tuple(params.items()))
    if text in ("f", "any", "general"):
        return FSpec.general()
    return recognize_f(parse(text))


def _spec(cfg, *, required=True) -> EquationSpec | None:
    from .symkernel import parse

    if cfg.get("m") is None or cfg.get("n") is None:
        if required:
            raise UsageError("--m and --n are required for this command")
        return None
    if cfg.get("f") is not None and cfg.get("k") is not None:
        raise UsageError("give either --f or --k, not both")
    if cfg.get("k") is not None:
        f = FSpec.power(parse(str(cfg["k"])))
    elif cfg.get("f") is not None:
        f = parse_f(cfg["f"])
    else:
        f = FSpec.general()
    eps = cfg.get("eps")
    return EquationSpec(parse(str(cfg["m"])), parse(str(cfg["n"])),
                        1 if eps is None else int(eps), f)


def _span(text, default):
    if text is None:
        return default
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    parts = str(text).split(",")
    if len(parts) != 2:
        raise UsageError(f"span must look like a,b: {text!r}")
    return tuple(float(p) for p in parts)


def _emit(obj, cfg, stream):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    out = cfg.get("out")
    if out:
        Path(out).write_text(text)
    else:
        stream.write(text)


# ---------------------------------------------------------------------------
# commands

def cmd_classify(cfg, stream):
    from .classification import load_database, lookup_case
    from .symkernel import to_str

    spec = _spec(cfg)
    recs = lookup_case(spec, load_database(validate=False))
    out = []
    for r in recs:
        out.append({"table": r.table, "caseId": r.caseId, "dimension": r.dimension,
                    "generators": [str(g) for g in r.instantiate(spec)],
                    "bindings": {to_str(k): to_str(v)
                                 for k, v in (r.matches(spec) or {}).items()},
                    "notes": r.notes})
    _emit({"spec": spec.to_json(), "matches": out}, cfg, stream)
    return 0


def _verify_specs(rec, cfg):
    from .classification.database import sample_specs

    spec = _spec(cfg, required=False)
    if spec is None:
        return sample_specs(rec)
    if cfg.get("f") is None and cfg.get("k") is None:
        # borrow f from the record so "--m 3 --n 2" works for f-specific rows
        fs = {s.f for s in sample_specs(rec)}
        cands = [spec.replace(f=f) for f in sorted(fs, key=str)]
        cands = [s for s in cands if rec.matches(s) is not None]
        if cands:
            return cands[:1]
    if rec.matches(spec) is None:
        raise UsageError(f"spec {spec} does not satisfy the guard of {rec.caseId}")
    return [spec]


def cmd_verify(cfg, stream):
    from .classification import load_database
    from .prolongation import symmetry_defect
    from .symkernel import is_zero

    db = load_database(validate=False)
    if cfg.get("all"):
        recs = list(db)
    elif cfg.get("case"):
        try:
            recs = [db[cfg["case"]]]
        except KeyError:
            raise UsageError(f"unknown case {cfg['case']!r}; known: "
                             + ", ".join(r.caseId for r in db)) from None
    else:
        raise UsageError("verify needs --case ID or --all")
    kw = {} if cfg.get("seed") is None else {"seed": int(cfg["seed"])}
    report, ok = [], True
    for rec in recs:
        for spec in _verify_specs(rec, cfg):
            for i, g in enumerate(rec.instantiate(spec)):
                st = is_zero(symmetry_defect(g, spec), **kw)
                ok &= st.is_zero
                report.append({"caseId": rec.caseId, "spec": str(spec), "generator": i + 1,
                               "field": str(g), "status": st.value})
    _emit({"ok": ok, "checks": report}, cfg, stream)
    return 0 if ok else 1


def cmd_commutators(cfg, stream):
    from .classification import load_database
    from .classification.database import sample_specs
    from .prolongation import commutator, span_membership
    from .symkernel import to_str

    db = load_database(validate=False)
    case = cfg.get("case") or "T2-7"
    try:
        rec = db[case]
    except KeyError:
        raise UsageError(f"unknown case {case!r}") from None
    spec = _spec(cfg, required=False)
    if spec is None:
        if case == "T2-7" and cfg.get("k") is not None:
            spec = _spec({**cfg, "m": "2", "n": "1"})
        else:
            spec = sample_specs(rec, limit=1)[0]
    if rec.matches(spec) is None:
        raise UsageError(f"spec {spec} does not satisfy the guard of {rec.caseId}")
    gens = rec.instantiate(spec, symbolic_eps=True)
    table, ok = {}, True
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            c = span_membership(commutator(gens[i], gens[j]), gens)
            ok &= c is not None
            table[f"[G{i + 1},G{j + 1}]"] = None if c is None else [to_str(v) for v in c]
    _emit({"caseId": rec.caseId, "spec": str(spec), "closed": ok, "structure": table},
          cfg, stream)
    return 0 if ok else 1


def cmd_reduce(cfg, stream):
    from .reduction import (
        bvp_reduce, optimal_system_case7, reduce_pde, similarity_ansatz,
    )
    from .symkernel import Const, parse, sym, to_str

    k = parse(str(cfg["k"])) if cfg.get("k") is not None else sym("k")
    eps = int(cfg["eps"]) if cfg.get("eps") is not None else 1
    spec = EquationSpec(2, 1, eps, FSpec.power(k))
    values = {}
    if cfg.get("sigma") is not None:
        values["sigma"] = int(cfg["sigma"])
    if cfg.get("a") is not None:
        values["a"] = parse(str(cfg["a"]))
    out = []
    bvp_only = cfg.get("gamma") is not None and k in (Const(0), Const(1))
    for fam in ([] if bvp_only else optimal_system_case7(k)):
        vals = {name: values[name] for name in fam.params if name in values}
        vf = fam.instantiate(eps=eps, **vals)
        entry = {"family": fam.label, "condition": fam.condition, "generator": str(vf)}
        try:
            ans = similarity_ansatz(vf, spec)
        except errors.TrivialOrbit as exc:
            entry["trivial"] = str(exc)
            out.append(entry)
            continue
        red = reduce_pde(ans, spec)
        entry.update({"ansatz": ans.to_json(), "ode": to_str(red.lhs),
                      "multiplier": to_str(red.multiplier)})
        out.append(entry)
    result = {"spec": spec.to_json(), "reductions": out}
    if bvp_only:
        result["reductions_skipped"] = "k in {0, 1}: no three-dimensional algebra"
    if cfg.get("gamma") is not None and cfg.get("m") is not None:
        result["bvp"] = bvp_reduce(_spec(cfg), parse(str(cfg["gamma"]))).to_json()
    _emit(result, cfg, stream)
    return 0


def _bvp(cfg):
    from .reduction import bvp_reduce
    from .symkernel import parse

    spec = _spec(cfg)
    return bvp_reduce(spec, parse(str(cfg.get("gamma") or 1)))


def cmd_solve_ode(cfg, stream):
    from .numerics import ODEProblem, integrate_ivp

    red = _bvp(cfg)
    span = _span(cfg.get("x_span"), (0.0, 10.0))
    res = integrate_ivp(ODEProblem.from_bvp(red, span=span), float(cfg.get("tol") or 1e-8))
    path = Path(cfg.get("out") or "profile.csv")
    res.grid.to_csv(path)
    summary = {"csv": str(path), "steps": res.steps, "rejected": res.rejected,
               "compacton_edge": None if res.event is None else res.event.omega,
               "omega_end": float(res.grid.axis("omega")[-1]),
               "phi_end": float(res.grid["phi"][-1])}
    stream.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_solve_pde(cfg, stream):
    import numpy as np

    from .numerics import BoundarySpec, PDEGrid, mol_solve
    from .numerics.ivp import ODEProblem, integrate_ivp
    from .numerics.pipeline import profile_interpolant
    from .reduction import exact_solution_case

    spec = _spec(cfg)
    t_span = _span(cfg.get("t_span"), (1.0, 2.0))
    x0, x1 = _span(cfg.get("x_span"), (0.0, 5.0))
    N = int(cfg.get("grid_n") or 400)
    grid = PDEGrid(x1 - x0, N, t_span, x0=x0)
    if cfg.get("sigma") is not None:
        u = exact_solution_case(spec, 0, int(cfg["sigma"]))
        sol = mol_solve(spec, lambda x: u(t_span[0], x), BoundarySpec.dirichlet_data(u), grid)
    else:
        red = _bvp(cfg)
        c1, c2, g = (float(v.value) for v in (red.c1, red.c2, red.gammaAmp))
        w_hi = (x1 * 1.05 + 1.0) * max(t ** (-c1) for t in t_span)
        res = integrate_ivp(ODEProblem.from_bvp(red, span=(0.0, w_hi)),
                            float(cfg.get("tol") or 1e-8))
        interp = profile_interpolant(res.grid)

        def data(t, x):
            t = np.asarray(t, dtype=float)
            return np.nan_to_num(t ** c2 * interp(np.asarray(x, dtype=float) * t ** (-c1)))

        bc = BoundarySpec.flat(lambda t: g * np.asarray(t, dtype=float) ** c2, data)
        sol = mol_solve(spec, lambda x: data(t_span[0], x), bc, grid)
    path = Path(cfg.get("out") or "solution.csv")
    sol.to_csv(path)
    stream.write(json.dumps({"csv": str(path), "N": N, "t_span": list(t_span)},
                            indent=2, sort_keys=True) + "\n")
    return 0


def cmd_bvp_pipeline(cfg, stream):
    from .numerics import bvp_pipeline

    spec = _spec(cfg)
    if spec.f.kind not in ("Power", "Linear", "One"):
        raise UsageError("bvp-pipeline needs f = t^k (use --k)")
    red = _bvp(cfg)
    t_span = _span(cfg.get("t_span"), (1.0, 2.0))
    x0, x1 = _span(cfg.get("x_span"), (0.0, 5.0))
    if x0 != 0.0:
        raise UsageError("the boundary sits at x = 0; --x-span must start at 0")
    out = bvp_pipeline(spec.m.value, spec.n.value, red.k.value, red.gammaAmp.value, spec.eps,
                       tol=float(cfg.get("tol") or 1e-8), N=int(cfg.get("grid_n") or 400),
                       L=x1, t_span=t_span)
    out.pop("_grids")
    out.pop("runtime_s")
    out["pass"] = out["linf_rel"] <= 1e-2
    _emit(out, cfg, stream)
    return 0 if out["pass"] else 1


_DISPATCH = {
    "classify": cmd_classify, "verify": cmd_verify, "commutators": cmd_commutators,
    "reduce": cmd_reduce, "solve-ode": cmd_solve_ode, "solve-pde": cmd_solve_pde,
    "bvp-pipeline": cmd_bvp_pipeline,
}


def main(argv=None, stream=None) -> int:
    stream = stream or sys.stdout
    ap = _parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _merge_config(ns)
        return _DISPATCH[ns.command](cfg, stream)
    except UsageError as exc:
        print(f"kmnlie {ns.command}: {exc}", file=sys.stderr)
        return 2
    except _USAGE_ERRORS as exc:
        print(f"kmnlie {ns.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except errors.KmnError as exc:
        where = getattr(exc, "where", None)
        ctx = f" (at {where})" if where is not None else ""
        print(f"kmnlie {ns.command}: {type(exc).__name__}: {exc}{ctx}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
