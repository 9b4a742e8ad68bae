"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v``; the summary section lists each
criterion with its measured value and tolerance.
"""

import math
import time

import numpy as np

from lambdaode.algebra import preset
from lambdaode.calculus import Curve, ftc_roundtrip, integrate
from lambdaode.module import regular
from lambdaode.ode import IVP, HigherOrderODE, LinearODE, picard_solve, project_first_block, reduce_order, \
    residuals, uniqueness_check
from lambdaode.problem import load_problem
from lambdaode.solspace import (decompose_solution_space, evaluation_matrix, solution_basis, superposition_check,
                                verify_module_closure)

N = 4096
TOL = 1e-8


def line(dim=1, n=N):
    return Curve.preset("line", dim, n)


def example1(n=N):
    return LinearODE(regular(preset("reals")), line(1, n), lambda t: (1 / (1 + t))[:, None], 0.0, [1.0],
                     lipschitz=1.0)


def dual_ode(name, f0):
    return LinearODE(regular(preset(name)), line(2), lambda t: np.array([0.0, 1.0]), 0.0, f0)


def test_criterion_01_first_example(criterion):
    start = time.perf_counter()
    rep = picard_solve(example1(), tol=TOL)
    elapsed = time.perf_counter() - start
    err = float(np.max(np.abs(rep.solution.values[:, 0] - 1 / (1 + rep.solution.t))))
    ok = rep.converged and err <= 1e-6 and elapsed < 5.0
    criterion(1, ok, f"max error {err:.2e} <= 1e-6, runtime {elapsed:.3f}s < 5s")
    assert ok


def test_criterion_02_dual_numbers(criterion):
    worst = 0.0
    basis_err = 0.0
    dims = {}
    for name in ("dual_numbers", "nilpotent_loop"):
        for c1, c2 in [(1, 0), (0, 1), (2, -3)]:
            rep = picard_solve(dual_ode(name, [c1, c2]), tol=TOL)
            x = rep.solution.t
            exact = np.column_stack([c1 + 0 * x, c2 - c1 * x])
            worst = max(worst, float(np.max(np.abs(rep.solution.values - exact))))
        s = solution_basis(dual_ode(name, [0, 0]), tol=TOL)
        x = s.t
        expect = [np.column_stack([1 + 0 * x, -x]), np.column_stack([0 * x, 1 + 0 * x])]
        basis_err = max(basis_err, *(float(np.max(np.abs(F.values - E))) for F, E in zip(s.basis_solutions, expect)))
        dims[name] = decompose_solution_space(s).dims
    ok = worst <= 1e-6 and basis_err <= 1e-6 and all(d == [2] for d in dims.values())
    criterion(2, ok, f"solution error {worst:.2e} <= 1e-6, basis {{1-x eps, eps}} error {basis_err:.2e} <= 1e-6, "
                     f"summand dims {dims}")
    assert ok


def test_criterion_03_product_algebra(criterion):
    worst = 0.0
    dims = {}
    for name in ("example2", "example2_coordinatewise"):
        p = load_problem(name)
        rep = picard_solve(p.ode, tol=TOL)
        x = rep.solution.t
        # every action matrix is diagonal: the system decouples into scalar equations
        M = p.module.action_matrix(p.ode.A(x))
        assert np.array_equal(M, M * np.eye(3))
        # f_j = f0_j exp(-int_0^x a_j) with a_j the j-th diagonal coefficient
        if name == "example2":
            ints = np.column_stack([x + x ** 2 / 2] * 3)
        else:
            ints = np.column_stack([x + x ** 2 / 2, 2 * x, np.sin(x)])
        oracle = p.ode.f0 * np.exp(-ints)
        worst = max(worst, float(np.max(np.abs(rep.solution.values - oracle))))
        dims[name] = decompose_solution_space(solution_basis(p.ode, tol=TOL)).dims
    ok = worst <= 1e-6 and all(sorted(d) == [1, 1, 1] for d in dims.values())
    criterion(3, ok, f"max error vs scalar oracles {worst:.2e} <= 1e-6, summand dims {dims}")
    assert ok


def test_criterion_04_picard_certificate(criterion):
    p = IVP(regular(preset("reals")), line(1, 2 ** 15), lambda t, f: f, 0.0, np.array([1.0]), lipschitz=1.0,
            bound=1.0)
    start = time.perf_counter()
    rep = picard_solve(p, tol=1e-12)
    elapsed = time.perf_counter() - start
    diffs = rep.successive_diffs[:13]
    ratios = [d * math.factorial(n + 1) for n, d in enumerate(diffs)]
    total = float(sum(rep.successive_diffs))
    ok = (len(diffs) == 13 and max(ratios) <= 1 + 1e-6 and total <= (math.e - 1) * (1 + 1e-6) and elapsed < 1.0)
    criterion(4, ok, f"max diff[n]*(n+1)! over n<=12 = {max(ratios):.8f} <= 1+1e-6, "
                     f"sum {total:.10f} <= (e-1)(1+1e-6), runtime {elapsed:.3f}s < 1s")
    assert ok


def test_criterion_05_ftc_round_trips(criterion):
    rng = np.random.default_rng(2024)
    V = regular(preset("dual_numbers"))
    worst = 0.0
    worst_ratio = np.inf
    for _ in range(20):
        amp = rng.standard_normal((4, 2))
        freq = rng.uniform(0.5, 4.0, (4, 2))
        phase = rng.uniform(0, 2 * np.pi, (4, 2))
        t0 = float(rng.uniform(0, np.pi / 2))

        def func(t):
            return np.einsum("kj,kjt->tj", amp, np.sin(freq[..., None] * t + phase[..., None]))

        res = []
        for n in (N, N // 2):
            c = Curve.preset("quarter_circle", 2, n)
            r = ftc_roundtrip(c.grid(func), c, t0, norm=V.norm)
            res.append((r.residual_d_of_t, r.residual_t_of_d))
        worst = max(worst, *res[0])
        worst_ratio = min(worst_ratio, res[1][0] / res[0][0], res[1][1] / res[0][1])
    ok = worst <= 1e-3 and worst_ratio >= 1.8
    criterion(5, ok, f"worst residual {worst:.2e} <= 1e-3, smallest N/2 to N inflation {worst_ratio:.2f} >= 1.8")
    assert ok


def test_criterion_06_moment_identity(criterion):
    worst = 0.0
    for c in (Curve.preset("line", 1, N), Curve.segment([0.0, 0.0], [1.0, 1.0])):
        c = c.with_grid(N)
        for n in range(6):
            f = c.grid(values=(c.H ** n)[:, None])
            worst = max(worst, abs(float(integrate(f, c)[0]) - c.length ** (n + 1) / (n + 1)))
    ok = worst <= 1e-5
    criterion(6, ok, f"max moment error {worst:.2e} <= 1e-5 (segment and diagonal, n = 0..5)")
    assert ok


def test_criterion_07_equivalence_of_residuals(criterion):
    worst = 0.0
    for name in ("example1", "example2", "example2_coordinatewise", "example3", "nonlinear", "oscillator"):
        p = load_problem(name)
        rep = picard_solve(p.first_order(), tol=p.solver["tol"])
        assert rep.converged
        worst = max(worst, rep.residual_ode / p.solver["tol"], rep.residual_integral / p.solver["tol"])
    p = example1()
    sol = picard_solve(p, tol=TOL).solution
    bumped = sol.with_values(sol.values + 1e-2 * np.sin(7 * sol.t)[:, None])
    detected = residuals(p, bumped)[0]
    ok = worst <= 10 and detected > 1e-3
    criterion(7, ok, f"worst residual/tol {worst:.2f} <= 10, perturbed residual_ode {detected:.2e} > 1e-3")
    assert ok


def test_criterion_08_uniqueness(criterion):
    worst = 0.0
    cases = [(example1(), np.array([2.0])), (dual_ode("dual_numbers", [2.0, -3.0]), np.array([-1.0, 5.0]))]
    for p, start in cases:
        a = picard_solve(p, tol=1e-12)
        b = picard_solve(p, tol=1e-12, initial_iterate=start)
        u = uniqueness_check(p, a.solution, b.solution)
        assert u.preconditions_met
        worst = max(worst, u.sup_difference)
    ok = worst <= 1e-8
    criterion(8, ok, f"sup difference between runs {worst:.2e} <= 1e-8")
    assert ok


def test_criterion_09_module_structure(criterion):
    details = []
    ok = True
    for name in ("example1", "example2", "example3"):
        p = load_problem(name)
        s = solution_basis(p.ode, tol=p.solver["tol"])
        sup = superposition_check(s)
        closure = [verify_module_closure(s, e).passed for e in np.eye(p.algebra.dim)]
        ident = bool(np.array_equal(evaluation_matrix(s, p.ode.t0).matrix, np.eye(p.module.dim)))
        certified = sum(s.certified)
        good = sup.passed and all(closure) and ident and certified == p.module.dim
        ok &= good
        details.append(f"{name}: superposition {sup.max_residual:.1e}, closure {all(closure)}, ev(t0)=I {ident}, "
                       f"{certified}/{p.module.dim} certified")
    criterion(9, ok, "; ".join(details))
    assert ok


def test_criterion_10_order_reduction(criterion):
    R = regular(preset("reals"))
    h = HigherOrderODE(R, line(), [lambda t: np.ones((len(t), 1)), lambda t: np.zeros((len(t), 1))], 0.0,
                       [[1.0], [0.0]])
    rep = picard_solve(reduce_order(h), tol=TOL)
    f = project_first_block(rep.solution, 1)
    err = float(np.max(np.abs(f.values[:, 0] - np.cos(f.t))))
    ok = rep.converged and err <= 1e-5
    criterion(10, ok, f"max error vs cos(x) {err:.2e} <= 1e-5")
    assert ok
