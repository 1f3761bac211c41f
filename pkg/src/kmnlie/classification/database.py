"""Case records of the classification tables and their lookup."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources

from ..equation import EquationSpec, FSpec
from ..errors import InvalidSpec, LinearEquation
from ..prolongation import VectorField, is_symmetry
from ..symkernel import EPS, Const, normalize, parse, sym, to_str
from ..symkernel.calculus import subs

__all__ = [
    "CaseRecord", "CaseDatabase", "load_database", "lookup_case",
    "f_guard_bindings", "SWEEP",
]

_M, _N, _K, _BETA = sym("m"), sym("n"), sym("k"), sym("beta")

# grid of parameter values used to instantiate symbolic rows
SWEEP = {
    "n": ("-1/2", "1/2", "2", "3", "5/2", "-2"),
    "m": ("-1", "0", "1/2", "2", "3", "3/2", "-3"),
    "k": ("-1", "1/2", "1", "2", "3", "-2"),
    "beta": ("1", "-1/2", "2", "3", "1/3"),
    "eps": (1, -1),
}

# concrete f samples standing in for an arbitrary f: (f, antiderivative)
GENERAL_F_SAMPLES = (
    ("t^2 + 1", "t^3/3 + t"),
    ("exp(t)", "exp(t)"),
    ("2 + 1/(1 + t^2)", "2*t + arctan(t)"),
)


def _p(text):
    return parse(text)


@dataclass(frozen=True)
class CaseRecord:
    """One row of the classification database."""

    table: str
    caseId: str
    guard: dict
    generators: tuple
    notes: str = ""
    hint: dict | None = field(default=None, compare=False)
    as_printed: dict = field(default_factory=dict, compare=False)

    @property
    def dimension(self) -> int:
        return len(self.generators)

    @property
    def f_kind(self) -> str:
        g = self.guard.get("f", "any")
        return "any" if g == "any" else g["kind"]

    def specificity(self) -> int:
        g = self.guard
        score = sum(1 for key in ("n", "m", "eps") if key in g)
        fg = g.get("f", "any")
        if fg != "any":
            score += 1 + sum(1 for key in ("k", "beta") if key in fg)
        return score

    def matches(self, spec: EquationSpec):
        """Parameter bindings (k, beta) if the guard holds, else None."""
        g = self.guard
        n, m = spec.n, spec.m
        if "n" in g and n is not _p(g["n"]):
            return None
        if any(n is _p(v) for v in g.get("n_not", ())):
            return None
        if "m" in g and m is not normalize(subs(_p(g["m"]), {_N: n})):
            return None
        if any(m is _p(v) for v in g.get("m_not", ())):
            return None
        if "eps" in g and spec.eps != g["eps"]:
            return None
        return f_guard_bindings(g.get("f", "any"), spec.f)

    def instantiate(self, spec: EquationSpec, *, symbolic_eps: bool = False):
        """Generators with m, n, eps and the f parameters bound from ``spec``."""
        fb = f_guard_bindings(self.guard.get("f", "any"), spec.f) or {}
        bind = {_M: spec.m, _N: spec.n, **fb}
        if not symbolic_eps:
            bind[EPS] = Const(spec.eps)
        return [g.subs(bind) for g in self.generators]

    def generator_strings(self):
        return [g.to_json() for g in self.generators]

    def to_json(self):
        d = {"table": self.table, "caseId": self.caseId, "guard": self.guard,
             "generators": [[to_str(c) for c in g.components] for g in self.generators],
             "notes": self.notes}
        if self.hint:
            d["normalization_hint"] = self.hint
        return d


def _kind_view(f: FSpec):
    """(kind, params) with small structural aliases resolved."""
    e = f.f_expr()
    if f.kind == "General" and type(e) is Const:
        return ("One", {}) if e is Const(1) else ("General", {})
    if f.kind == "Exp" and f.param("lam") is Const(0) and f.param("c") is Const(1):
        return "One", {}
    return f.kind, dict(f.params)


def f_guard_bindings(guard, f: FSpec):
    """Match an f guard; returns generator parameter bindings or None."""
    if guard == "any":
        out = {}
        if f.kind in ("Power", "ExpArctan", "PowerShifted"):
            out[_K] = f.param("k")
        if f.kind == "PowerShifted":
            out[_BETA] = f.param("beta")
        return out
    kind, p = _kind_view(f)
    want = guard["kind"]
    if want == "One":
        return {} if kind == "One" else None
    if want == "Power":
        if kind == "Linear":
            k = Const(1)
        elif kind == "Power" and p["c"] is Const(1):
            k = p["k"]
        else:
            return None
        if "k" in guard and k is not _p(guard["k"]):
            return None
        if any(k is _p(v) for v in guard.get("k_not", ())):
            return None
        return {_K: k}
    if want == "Exp":
        if kind == "Exp" and p["c"] is Const(1) and p["lam"] is Const(1):
            return {}
        return None
    if want == "ExpArctan":
        return {_K: p["k"]} if kind == "ExpArctan" else None
    if want == "PowerShifted":
        if kind == "PowerShifted":
            return {_K: p["k"], _BETA: p["beta"]}
        return None
    if want == "TExpInv":
        return {} if kind == "TExpInv" else None
    if want == "Linear":
        if kind == "Linear" or (kind == "Power" and p["c"] is Const(1) and p["k"] is Const(1)):
            return {}
        return None
    raise InvalidSpec(f"unknown f guard kind {want!r}")


class CaseDatabase:
    """Immutable collection of case records."""

    def __init__(self, records, version=1):
        self.records = tuple(records)
        self.version = version
        self._by_id = {r.caseId: r for r in self.records}
        if len(self._by_id) != len(self.records):
            raise InvalidSpec("duplicate case ids in database")

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, case_id) -> CaseRecord:
        return self._by_id[case_id]

    def lookup(self, spec: EquationSpec):
        if spec.n is Const(1) and spec.m in (Const(0), Const(1)):
            raise LinearEquation("linear equations are excluded")
        hits = []
        for order, rec in enumerate(self.records):
            if rec.matches(spec) is not None:
                hits.append((order, rec))
        hits.sort(key=lambda it: (-it[1].specificity(), -it[1].dimension, it[0]))
        out = [_annotate(rec, spec) for _, rec in hits]
        return out

    def validate(self, *, full: bool = False):
        """Check every generator's defect at sample instantiations.

        Returns a list of (caseId, spec, generator index, status) failures.
        """
        failures = []
        for rec in self.records:
            for spec in sample_specs(rec, limit=None if full else 1):
                for i, g in enumerate(rec.instantiate(spec)):
                    st = is_symmetry(g, spec)
                    if not st.is_zero:
                        failures.append((rec.caseId, spec, i, st))
        return failures


def _annotate(rec: CaseRecord, spec: EquationSpec) -> CaseRecord:
    notes = rec.notes
    if rec.hint:
        fb = f_guard_bindings(rec.guard.get("f", "any"), spec.f) or {}
        val = fb.get(sym(rec.hint["param"]))
        if type(val) is Const and val.value < _p(rec.hint["min"]).value:
            notes = (notes + "; " if notes else "") + rec.hint["text"]
    if rec.caseId == "T1-7":
        k = f_guard_bindings(rec.guard["f"], spec.f)[_K]
        if k is Const(2) and spec.m is normalize((spec.n + 2) / 3):
            notes = (notes + "; " if notes else "") + \
                "collides with T1-8 (m=(n+2)/3, k=2); T1-8 is the maximal algebra"
    return rec if notes == rec.notes else replace(rec, notes=notes)


def _record_from_json(d) -> CaseRecord:
    params = ("k", "beta", "m", "n", "eps")
    gens = tuple(VectorField.parse(*g, params=params) for g in d["generators"])
    guard = d["guard"]
    for key in ("n", "m"):
        if key in guard:
            _p(guard[key])
    printed = {int(i): VectorField.parse(*g, params=params)
               for i, g in d.get("as_printed", {}).items()}
    return CaseRecord(d["table"], d["caseId"], guard, gens, d.get("notes", ""),
                      d.get("normalization_hint"), printed)


@lru_cache(maxsize=None)
def _load(validate: bool) -> CaseDatabase:
    text = resources.files(__package__).joinpath("cases.json").read_text()
    data = json.loads(text)
    db = CaseDatabase([_record_from_json(d) for d in data["cases"]], data.get("version", 1))
    if validate:
        bad = db.validate()
        if bad:
            cid, spec, i, st = bad[0]
            raise InvalidSpec(f"database case {cid} generator {i} fails at {spec}: {st.value}")
    return db


def load_database(validate: bool = True) -> CaseDatabase:
    """The shipped database; validated once per process unless disabled."""
    if validate:
        return _load(True)
    return _load(False)


def lookup_case(spec: EquationSpec, db: CaseDatabase | None = None):
    """Matching records, most specific first."""
    return (db or load_database(validate=False)).lookup(spec)


# ---------------------------------------------------------------------------
# sample instantiations

def _values(guard, key, n_val=None):
    if key in guard:
        expr = _p(guard[key])
        if n_val is not None:
            expr = normalize(subs(expr, {_N: n_val}))
        return [expr]
    excl = {_p(v) for v in guard.get(key + "_not", ())}
    return [v for v in (_p(s) for s in SWEEP[key]) if v not in excl]


def _f_samples(fg):
    if fg == "any":
        out = [FSpec.general()]
        out += [FSpec.general(f, F) for f, F in GENERAL_F_SAMPLES]
        return out
    kind = fg["kind"]
    if kind == "One":
        return [FSpec.one()]
    if kind == "Exp":
        return [FSpec.exp()]
    if kind == "TExpInv":
        return [FSpec.texpinv()]
    if kind == "Linear":
        return [FSpec.linear()]
    if kind == "Power":
        ks = [_p(fg["k"])] if "k" in fg else [
            _p(s) for s in SWEEP["k"] if _p(s) not in {_p(v) for v in fg.get("k_not", ())}]
        return [FSpec.power(k) for k in ks]
    if kind == "ExpArctan":
        return [FSpec.exp_arctan(_p(k)) for k in ("0", "1/2", "1", "2", "3")]
    if kind == "PowerShifted":
        return [FSpec.power_shifted(_p(k), _p(b))
                for k in SWEEP["k"] if _p(k) not in (Const(0), Const(1))
                for b in SWEEP["beta"]]
    raise InvalidSpec(kind)


def sample_specs(rec: CaseRecord, limit=None):
    """Concrete specs satisfying the record's guard, drawn from SWEEP."""
    g = rec.guard
    out = []
    eps_vals = [g["eps"]] if "eps" in g else list(SWEEP["eps"])
    for n in _values(g, "n"):
        for m in _values(g, "m", n):
            if n is Const(1) and m in (Const(0), Const(1)):
                continue
            for f in _f_samples(g.get("f", "any")):
                for e in eps_vals:
                    spec = EquationSpec(m, n, e, f)
                    if rec.matches(spec) is None:
                        continue
                    out.append(spec)
                    if limit is not None and len(out) >= limit:
                        return out
    return out
