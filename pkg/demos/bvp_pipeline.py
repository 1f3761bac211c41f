"""Boundary value problem on x >= 0: reduce, integrate the profile, compare with MoL.

The scaling symmetry that fixes the surface x = 0 and the datum u(t, 0) = q(t)
turns the PDE into a third-order ODE for phi(omega).  Integrating that ODE and
mapping it back must agree with a direct method-of-lines solution of the PDE.
"""

from kmnlie.equation import EquationSpec, FSpec
from kmnlie.numerics import bvp_pipeline
from kmnlie.reduction import bvp_reduce
from kmnlie.symkernel import to_str

spec = EquationSpec(2, 1, 1, FSpec.linear())
red = bvp_reduce(spec, 1)
print("boundary datum q(t) =", to_str(red.q))
print("reduced ODE:", to_str(red.ode), "= 0")
print("initial data (phi, phi', phi'') at omega = 0:", [to_str(v) for v in red.initial])

for N in (100, 200, 400):
    rep = bvp_pipeline(2, 1, 1, 1, 1, N=N)
    print(f"N = {N:4d}   max relative difference {rep['linf_rel']:.2e}")
