"""Look up the symmetry case of a few K(m,n) equations and check the generators.

Run:  python demos/classify_and_verify.py
"""

from kmnlie.classification import EquationSpec, FSpec, canonicalize, lookup_case
from kmnlie.prolongation import commutator, is_symmetry, span_membership

# A time-dependent dispersion f(t) = t^3 with m = 2, n = 1 lands in a family
# with a three-dimensional algebra; a constant f gives the classical case.
equations = [
    EquationSpec(2, 1, 1, FSpec.power(3)),
    EquationSpec(5, 2, 1, FSpec.one()),
    EquationSpec(3, 2, -1, FSpec.exp(2, 5)),
]

for spec in equations:
    # amplitudes and time shifts are absorbed first
    canon, _ = canonicalize(spec)
    rec = lookup_case(canon)[0]
    print(f"{spec}\n  case {rec.caseId}")
    gens = rec.instantiate(canon)
    for g in gens:
        print(f"    {g}   defect: {is_symmetry(g, canon).value}")
    closed = all(span_membership(commutator(a, b), gens) is not None
                 for i, a in enumerate(gens) for b in gens[i + 1:])
    print(f"  algebra closes under the bracket: {closed}\n")
