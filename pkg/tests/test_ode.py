import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from lambdaode.algebra import preset
from lambdaode.calculus import Curve
from lambdaode.module import coordinatewise, regular
from lambdaode.ode import (IVP, HigherOrderODE, LinearODE, apriori_bound, companion, estimate_lipschitz,
                           picard_solve, project_first_block, reduce_order, residuals, uniqueness_check)
from lambdaode.stepfn import VGridFunction

REALS = regular(preset("reals"))
DUAL = regular(preset("dual_numbers"))


def line(dim=1, N=4096):
    return Curve.preset("line", dim, N)


def exp_ivp(N=4096, **kw):
    return IVP(REALS, line(N=N), lambda t, f: f, 0.0, np.array([1.0]), lipschitz=1.0, bound=1.0, **kw)


def example1(N=4096):
    return LinearODE(REALS, line(N=N), lambda t: (1 / (1 + t))[:, None], 0.0, [1.0], lipschitz=1.0)


def dual_ode(f0, N=4096):
    return LinearODE(DUAL, line(2, N), lambda t: np.array([0.0, 1.0]), 0.0, f0)


# ------------------------------------------------------------------ bound


def test_apriori_bound_values():
    assert apriori_bound(2.0, 3.0, 0.5, 0) == pytest.approx(1.0)  # M H
    assert apriori_bound(0.0, 3.0, 2.0, 7) == 0.0
    assert apriori_bound(1, 1, 1, 4) == pytest.approx(1 / 120)
    # no overflow for large n: compare with the log-gamma form
    expect = math.exp(400 * math.log(10) + 401 * math.log(10) - math.lgamma(402))
    assert apriori_bound(1, 10, 10, 400) == pytest.approx(expect, rel=1e-9)


# ------------------------------------------------------------------ Picard


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_picard_iterates_are_truncated_exponentials(n):
    rep = picard_solve(exp_ivp(), max_iter=n, tol=1e-14)
    x = rep.solution.t
    oracle = sum(x ** k / math.factorial(k) for k in range(n + 1))
    np.testing.assert_allclose(rep.solution.values[:, 0], oracle, atol=1e-6)
    assert rep.iterations == n and not rep.converged


def test_bound_domination_and_total_for_exponential():
    rep = picard_solve(exp_ivp(N=2 ** 15), tol=1e-12)
    assert rep.converged and rep.bound_dominated
    assert sum(rep.successive_diffs) <= (math.e - 1) * (1 + 1e-6)
    assert rep.H == pytest.approx(1.0)


def test_example1_matches_closed_form():
    rep = picard_solve(example1())
    exact = 1 / (1 + rep.solution.t)
    assert np.max(np.abs(rep.solution.values[:, 0] - exact)) <= 1e-6
    assert rep.converged and rep.bound_dominated
    assert rep.certificate == "supplied"


@pytest.mark.parametrize("c1, c2", [(1, 0), (0, 1), (2, -3)])
def test_dual_number_solutions(c1, c2):
    rep = picard_solve(dual_ode([c1, c2]))
    x = rep.solution.t
    np.testing.assert_allclose(rep.solution.values, np.column_stack([c1 + 0 * x, c2 - c1 * x]), atol=1e-12)


def test_t0_inside_the_interval_solves_in_both_directions():
    c = line()
    p = LinearODE(REALS, c, lambda t: (1 / (1 + t))[:, None], 0.5, [1.0 / 1.5])
    rep = picard_solve(p)
    np.testing.assert_allclose(rep.solution.values[:, 0], 1 / (1 + c.t), atol=1e-6)


def test_nonlinear_ivp_matches_closed_form():
    p = IVP(REALS, line(), lambda t, f: -f * f, 0.0, np.array([1.0]), lipschitz=2.0, bound=1.0)
    rep = picard_solve(p)
    assert rep.converged
    np.testing.assert_allclose(rep.solution.values[:, 0], 1 / (1 + rep.solution.t), atol=1e-6)


def test_rk_cross_check_on_coordinatewise_system():
    V = coordinatewise(preset("product", 3))

    def A(t):
        return np.column_stack([1 + t, 2 + 0 * t, np.cos(t)])

    p = LinearODE(V, line(3), A, 0.0, [1.0, -1.0, 0.5])
    rep = picard_solve(p)
    ref = solve_ivp(lambda t, y: -A(np.array([t]))[0] * y, (0, 1), [1.0, -1.0, 0.5], t_eval=rep.solution.t,
                    rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(rep.solution.values, ref.y.T, atol=1e-7)


def test_missing_lipschitz_is_estimated_and_marked_heuristic():
    p = IVP(REALS, line(), lambda t, f: -f / (1 + t[:, None]), 0.0, np.array([1.0]))
    rep = picard_solve(p)
    assert rep.certificate == "heuristic"
    assert 1.0 <= rep.lipschitz <= 1.25
    with pytest.raises(ValueError):
        picard_solve(p, estimate=False)


def test_linear_ode_without_L_uses_grid_sampled_operator_norm():
    rep = picard_solve(LinearODE(REALS, line(), lambda t: (1 / (1 + t))[:, None], 0.0, [1.0]))
    assert rep.certificate == "grid-sampled"
    assert rep.lipschitz == pytest.approx(1.0)


def test_max_iter_reports_not_converged():
    rep = picard_solve(example1(), max_iter=2)
    assert not rep.converged and rep.stop_reason == "max_iter"
    with pytest.raises(ValueError):
        picard_solve(example1(), tol=0.0)


def test_ivp_validation():
    with pytest.raises(ValueError):
        IVP(REALS, line(), lambda t, f: f, 2.0, np.array([1.0]))
    with pytest.raises(ValueError):
        IVP(REALS, line(), lambda t, f: f, 0.0, np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        IVP(REALS, line(), lambda t, f: f, 0.0, np.array([1.0]), lipschitz=-1.0)


# ------------------------------------------------------------------ residuals


def test_residuals_of_exact_solution_are_small():
    p = example1()
    c = p.curve
    f = VGridFunction(c.t, (1 / (1 + c.t))[:, None])
    r_ode, r_int = residuals(p, f)
    assert r_ode <= 1e-4 and r_int <= 1e-4


def test_residuals_of_constant_with_zero_rhs_vanish():
    p = IVP(REALS, line(), lambda t, f: np.zeros_like(f), 0.0, np.array([3.0]))
    f = VGridFunction(p.curve.t, np.full((p.curve.N + 1, 1), 3.0))
    assert max(residuals(p, f)) <= 1e-12


def test_perturbation_is_detected():
    p = example1()
    rep = picard_solve(p)
    bad = rep.solution.with_values(rep.solution.values + 0.1)
    assert residuals(p, bad)[0] > 1e-3


# ------------------------------------------------------------------ uniqueness


def test_two_first_iterates_give_the_same_solution():
    p = example1()
    a = picard_solve(p, tol=1e-12)
    b = picard_solve(p, tol=1e-12, initial_iterate=np.array([2.0]))
    u = uniqueness_check(p, a.solution, b.solution)
    assert u.preconditions_met and u.certified
    assert u.sup_difference <= 1e-8
    assert b.bound_dominated


def test_uniqueness_of_identical_functions():
    a = picard_solve(example1()).solution
    assert uniqueness_check(example1(), a, a).sup_difference == 0.0


def test_different_initial_values_violate_preconditions():
    a = picard_solve(dual_ode([1.0, 0.0])).solution
    b = picard_solve(dual_ode([1.0, 0.5])).solution
    u = uniqueness_check(dual_ode([1.0, 0.0]), a, b)
    assert not u.preconditions_met and not u.certified
    assert "different IVP" in u.reason


# ------------------------------------------------------------------ Lipschitz


def test_lipschitz_estimates():
    p = IVP(REALS, line(), lambda t, f: -f / (1 + t[:, None]), 0.0, np.array([1.0]))
    assert 1.0 <= estimate_lipschitz(p) <= 1.25
    q = IVP(REALS, line(), lambda t, f: np.ones_like(f), 0.0, np.array([1.0]))
    assert estimate_lipschitz(q) == 0.0
    with pytest.raises(ValueError):
        estimate_lipschitz(p, samples=1)


def test_lipschitz_of_linear_ode_below_power_iteration_operator_norm():
    V = regular(preset("dual_numbers", p=2.0))
    c = line(2, 64)
    p = LinearODE(V, c, lambda t: np.column_stack([1 + t, np.sin(3 * t)]), 0.0, [1.0, 0.0])
    # oracle: largest singular value of each action matrix by power iteration
    rng = np.random.default_rng(0)
    sup = 0.0
    for M in p.matrices(c.t):
        x = rng.standard_normal(2)
        for _ in range(100):
            x = M.T @ (M @ x)
            x /= np.linalg.norm(x)
        sup = max(sup, np.linalg.norm(M @ x))
    assert p.operator_norm_sup() == pytest.approx(sup, rel=1e-9)
    assert estimate_lipschitz(p, safety=1.0) <= sup * (1 + 1e-12)


# ------------------------------------------------------------------ order reduction


def test_order_reduction_oscillator():
    h = HigherOrderODE(REALS, line(), [lambda t: np.ones((len(t), 1)), lambda t: np.zeros((len(t), 1))],
                       0.0, [[1.0], [0.0]])
    rep = picard_solve(reduce_order(h))
    f = project_first_block(rep.solution, 1)
    np.testing.assert_allclose(f.values[:, 0], np.cos(f.t), atol=1e-5)
    np.testing.assert_allclose(rep.solution.values[:, 1], -np.sin(f.t), atol=1e-5)


def test_zero_coefficients_give_the_linear_jet():
    zero = lambda t: np.zeros((len(t), 1))  # noqa: E731
    h = HigherOrderODE(REALS, line(N=256), [zero, zero], 0.0, [[2.0], [-3.0]])
    rep = picard_solve(reduce_order(h))
    np.testing.assert_allclose(rep.solution.values[:, 0], 2 - 3 * rep.solution.t, atol=1e-13)


def test_companion_block_structure():
    V = DUAL
    A0 = lambda t: np.tile([1.0, 2.0], (len(t), 1))  # noqa: E731
    A1 = lambda t: np.tile([0.0, 5.0], (len(t), 1))  # noqa: E731
    h = HigherOrderODE(V, line(2, 8), [A0, A1], 0.0, [[1, 0], [0, 0]])
    C = companion(h, np.array([0.3]))[0]
    np.testing.assert_array_equal(C[:2, :2], 0)
    np.testing.assert_array_equal(C[:2, 2:], np.eye(2))
    np.testing.assert_allclose(C[2:, :2], -V.action_matrix([1.0, 2.0]))
    np.testing.assert_allclose(C[2:, 2:], -V.action_matrix([0.0, 5.0]))
    with pytest.raises(ValueError):
        HigherOrderODE(V, line(2, 8), [A0], 0.0, [[1, 0]])
    with pytest.raises(ValueError):
        HigherOrderODE(V, line(2, 8), [A0, A1], 0.0, [[1, 0]])


def test_nonhomogeneous_source():
    # f' = 1 with f(0) = 0 gives f = x
    p = LinearODE(REALS, line(N=512), lambda t: np.zeros((len(t), 1)), 0.0, [0.0],
                  g=lambda t: np.ones((len(t), 1)))
    rep = picard_solve(p)
    np.testing.assert_allclose(rep.solution.values[:, 0], rep.solution.t, atol=1e-13)


# ------------------------------------------------------------------ properties


@settings(max_examples=15, deadline=None)
@given(k1=st.floats(-3, 3), k2=st.floats(-3, 3), seed=st.integers(0, 2**32 - 1))
def test_solution_map_is_linear_in_initial_value(k1, k2, seed):
    rng = np.random.default_rng(seed)
    u0, w0 = rng.standard_normal((2, 2))
    s = lambda f0: picard_solve(dual_ode(f0, N=512), tol=1e-12).solution.values  # noqa: E731
    np.testing.assert_allclose(s(k1 * u0 + k2 * w0), k1 * s(u0) + k2 * s(w0), atol=1e-8)


@settings(max_examples=15, deadline=None)
@given(L=st.floats(0.1, 3.0), f0=st.floats(-2, 2))
def test_diffs_dominated_by_bound_for_scaled_growth(L, f0):
    p = IVP(REALS, line(N=2 ** 15), lambda t, f: L * f, 0.0, np.array([f0]), lipschitz=L, bound=abs(L * f0),
            linear_part=lambda t, d: L * d)
    rep = picard_solve(p, tol=1e-10)
    assert rep.bound_dominated
