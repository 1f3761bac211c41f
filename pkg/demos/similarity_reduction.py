"""Reduce u_t + eps (u^2)_x + t^k u_xxx = 0 to ODEs along the optimal system.

Each one-dimensional subalgebra gives an invariant omega and a profile phi;
substituting back leaves an ODE in omega alone.
"""

from kmnlie.equation import EquationSpec, FSpec
from kmnlie.reduction import (
    exact_solution_case, optimal_system_case7, pde_residual, reduce_pde, similarity_ansatz,
)
from kmnlie.errors import TrivialOrbit
from kmnlie.symkernel import to_str

for k in (3, 2, -1):
    spec = EquationSpec(2, 1, 1, FSpec.power(k))
    print(f"k = {k}")
    for fam in optimal_system_case7(k):
        vf = fam.instantiate(eps=1, sigma=1, a=2)
        try:
            ans = similarity_ansatz(vf, spec)
        except TrivialOrbit:
            print(f"  {fam.label:14s} pure translation, nothing to reduce")
            continue
        ode = reduce_pde(ans, spec)
        print(f"  {fam.label:14s} omega = {to_str(ans.omega)}")
        print(f"  {'':14s} {to_str(ode.lhs)} = 0")

# the Galilean family integrates in closed form
spec = EquationSpec(2, 1, 1, FSpec.power(3))
u = exact_solution_case(spec, c1=1, sigma=1)
print("\nexact solution:", to_str(u.expr))
print("residual:", to_str(pde_residual(spec, u.expr)))
