"""Dual numbers: an ODE whose solution space is a single indecomposable module.

Over R[eps]/(eps^2) the equation f' + eps f = 0 has the solutions
c1 + (c2 - c1 x) eps. The solution space is two-dimensional over R but does
not split: it is the regular module of the algebra, which is indecomposable.
"""

import numpy as np

from lambdaode import Curve, LinearODE, decompose_solution_space, picard_solve, preset, solution_basis
from lambdaode.module import regular

V = regular(preset("dual_numbers"))
curve = Curve.preset("line", 2, 4096)
eps = np.array([0.0, 1.0])

ode = LinearODE(V, curve, lambda t: eps, 0.0, [2.0, -3.0])
rep = picard_solve(ode)
x = rep.solution.t
exact = np.column_stack([2 + 0 * x, -3 - 2 * x])
print(f"f(0) = 2 - 3 eps: {rep.iterations} Picard iterations, stop: {rep.stop_reason}")
print(f"  max error against 2 + (-3 - 2x) eps: {np.max(np.abs(rep.solution.values - exact)):.2e}")

space = solution_basis(ode)
for j, F in enumerate(space.basis_solutions, 1):
    print(f"  basis solution F_{j} at x = 1: {F(np.array(1.0))}")

dec = decompose_solution_space(space)
print(f"summand dimensions: {dec.dims}  (one summand: the solution space does not split)")
