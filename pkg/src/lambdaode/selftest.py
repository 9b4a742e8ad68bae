"""Built-in invariant suite behind ``lambdaode selftest``.

Each check compares library output against an independent closed form and
returns a dict ``{name, passed, value, limit}``. The whole suite runs in a
few seconds at the default grid.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import algebra as alg
from . import module as mod
from .calculus import Curve, ftc_roundtrip, integrate
from .ode import IVP, apriori_bound, picard_solve
from .problem import load_problem
from .solspace import decompose_solution_space, solution_basis, superposition_check


def _check(name, value, limit, passed=None):
    ok = bool(value <= limit) if passed is None else bool(passed)
    return {"name": name, "passed": ok, "value": float(value), "limit": float(limit)}


def check_algebras():
    out = []
    for name in alg.PRESET_NAMES:
        A = alg.preset(name, 3 if name == "product" else None)
        rep = A.check_axioms()
        worst = max(c.violation for c in rep.checks)
        out.append(_check(f"axioms[{name}]", worst, alg.AXIOM_TOL, rep.passed))
        for kind in ("regular", "simple"):
            V = mod.module_preset(kind, A, 2)
            out.append(_check(f"representation[{name}/{kind}]", V.representation_residual(), 1e-12))
    return out


def check_moments(N=4096):
    out = []
    for cname, dim in (("line", 1), ("diagonal", 2)):
        c = Curve.preset(cname, dim, N)
        worst = 0.0
        for n in range(6):
            f = c.grid(values=(c.H ** n)[:, None])
            exact = c.length ** (n + 1) / (n + 1)
            worst = max(worst, abs(integrate(f, c)[0] - exact))
        out.append(_check(f"moment_identity[{cname}]", worst, 1e-5))
    return out


def check_ftc(N=4096):
    c = Curve.preset("line", 1, N)
    f = c.grid(lambda t: np.column_stack([np.sin(3 * t), np.exp(-t) * np.cos(5 * t)]))
    rep = ftc_roundtrip(f, c, 0.25)
    coarse = ftc_roundtrip(c.with_grid(N // 2).grid(lambda t: np.column_stack([np.sin(3 * t),
                                                                             np.exp(-t) * np.cos(5 * t)])),
                           c.with_grid(N // 2), 0.25)
    ratio = coarse.residual_d_of_t / rep.residual_d_of_t
    return [
        _check("ftc[D(Tf)-f]", rep.residual_d_of_t, 1e-3),
        _check("ftc[T(Df)-(f-f(t0))]", rep.residual_t_of_d, 1e-3),
        _check("ftc[refinement ratio >= 1.8]", -ratio, -1.8),
    ]


def check_picard_bound():
    A = alg.preset("reals")
    V = mod.regular(A)
    # at 2**15 cells the trapezoid error stays below the 1e-6 relative slack for n <= 12
    c = Curve.preset("line", 1, 2 ** 15)
    p = IVP(V, c, lambda t, f: f, 0.0, np.array([1.0]), lipschitz=1.0, bound=1.0,
            linear_part=lambda t, d: d)
    rep = picard_solve(p, tol=1e-12)
    worst = max(d / apriori_bound(1, 1, 1, n) - 1 for n, d in enumerate(rep.successive_diffs[:13]))
    return [
        _check("picard[diff <= bound]", worst, 1e-6),
        _check("picard[sum diffs <= e-1]", sum(rep.successive_diffs) / (math.e - 1) - 1, 1e-6),
        _check("picard[value at 1 vs e]", abs(rep.solution.values[-1, 0] - math.e), 1e-6),
    ]


def check_examples():
    out = []
    for name in ("example1", "example2", "example2_coordinatewise", "example3", "oscillator", "nonlinear"):
        P = load_problem(name)
        tol = float(P.solver["tol"])
        rep = picard_solve(P.first_order(), tol=tol)
        m = P.module.dim
        err = float(np.max(P.module.norm(rep.solution.values[:, :m] - P.exact(rep.solution.t))))
        out.append(_check(f"solve[{name}] error", err, 1e-6, rep.converged and err <= 1e-6))
        out.append(_check(f"solve[{name}] residuals", max(rep.residual_ode, rep.residual_integral), 10 * tol))
    return out


def check_solution_spaces(seed=0):
    out = []
    expected = {"example1": [1], "example2": [1, 1, 1], "example2_coordinatewise": [1, 1, 1], "example3": [2]}
    for name, dims in expected.items():
        P = load_problem(name)
        s = solution_basis(P.first_order(), tol=float(P.solver["tol"]))
        out.append(_check(f"basis[{name}] certified", 0, 0, all(s.certified) and s.dim == P.module.dim))
        ev = s.eval_matrix_at(s.ode.t0)
        out.append(_check(f"basis[{name}] ev(t0) = I", float(np.max(np.abs(ev - np.eye(s.dim)))), 0.0))
        sp = superposition_check(s, seed=seed)
        out.append(_check(f"basis[{name}] superposition", sp.max_residual, sp.limit))
        d = decompose_solution_space(s, seed=seed)
        out.append(_check(f"decompose[{name}] dims {d.dims}", 0, 0, sorted(d.dims) == dims))
    return out


SUITES = (check_algebras, check_moments, check_ftc, check_picard_bound, check_examples, check_solution_spaces)


def run_selftest(seed: int = 0, verbose: bool = True) -> list[dict]:
    results = []
    for suite in SUITES:
        t0 = time.perf_counter()
        res = suite(seed=seed) if suite is check_solution_spaces else suite()
        if verbose:
            for r in res:
                print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']:<48s} value={r['value']:.3g}"
                      f" limit={r['limit']:.3g}")
            print(f"      ({suite.__name__}: {time.perf_counter() - t0:.2f} s)")
        results.extend(res)
    return results
