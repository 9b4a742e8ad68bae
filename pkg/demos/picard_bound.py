"""How tight is the a-priori Picard bound?

For f' = f, f(0) = 1 on [0, 1] the n-th Picard difference is x^(n+1)/(n+1)!,
and its sup equals the bound M L^n H^(n+1)/(n+1)! with M = L = H = 1. The
table shows the measured ratio, which sits at 1 up to the trapezoid error.
"""

import math

import numpy as np

from lambdaode import IVP, Curve, picard_solve, preset
from lambdaode.module import regular

p = IVP(regular(preset("reals")), Curve.preset("line", 1, 2 ** 15), lambda t, f: f, 0.0, np.array([1.0]),
        lipschitz=1.0, bound=1.0)
rep = picard_solve(p, tol=1e-12)

print(f"{'n':>3} {'measured':>12} {'bound':>12} {'ratio':>12}")
for n, (d, b) in enumerate(zip(rep.successive_diffs, rep.apriori_bounds)):
    print(f"{n:3d} {d:12.4e} {b:12.4e} {d / b:12.9f}")
print(f"sum of differences {sum(rep.successive_diffs):.12f}, e - 1 = {math.e - 1:.12f}")
print(f"certificate: {rep.certificate}, bound dominated: {rep.bound_dominated}")
