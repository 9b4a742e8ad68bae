"""Solution spaces of homogeneous linear ODEs as modules over the algebra."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .module import Decomposition, decompose
from .ode import LinearODE, SolveReport, picard_solve, residuals
from .stepfn import VGridFunction


class NotConvergedError(RuntimeError):
    pass


@dataclass
class SolutionSpace:
    """Basis solutions ``F_j`` with ``F_j(t0) = e_j``; ``ev_{t0}`` is then the identity."""

    ode: LinearODE
    basis_solutions: list[VGridFunction]
    reports: list[SolveReport]
    residual_tol: float

    @property
    def dim(self) -> int:
        return len(self.basis_solutions)

    @property
    def t(self) -> np.ndarray:
        return self.basis_solutions[0].t

    def eval_matrix_at(self, t: float) -> np.ndarray:
        """Column j is ``F_j(t)``."""
        return np.column_stack([F(np.asarray(t)) for F in self.basis_solutions])

    def combine(self, coeffs) -> VGridFunction:
        """``sum_j coeffs[j] F_j`` -- the solution with initial value ``coeffs``."""
        coeffs = np.asarray(coeffs)
        vals = sum(c * F.values for c, F in zip(coeffs, self.basis_solutions))
        return self.basis_solutions[0].with_values(vals)

    @property
    def certified(self) -> list[bool]:
        return [
            r.converged and r.residual_ode <= self.residual_tol and r.residual_integral <= self.residual_tol
            for r in self.reports
        ]


def solution_basis(ode: LinearODE, N: int | None = None, tol: float = 1e-8, max_iter: int = 64,
                   residual_tol: float | None = None, jobs: int = 1) -> SolutionSpace:
    """Solve the homogeneous ODE once per module basis vector.

    ``residual_tol`` (default ``10 * tol``) is the threshold a basis solution's
    residuals must meet to count as certified.
    """
    if not ode.homogeneous:
        raise ValueError("solution spaces are built for homogeneous equations (g = 0)")
    m = ode.module.dim
    eye = np.eye(m, dtype=np.result_type(ode.module.dtype, float))

    def run(j):
        return picard_solve(ode.with_initial(eye[j]), N=N, tol=tol, max_iter=max_iter)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run, range(m)))
    else:
        reports = [run(j) for j in range(m)]
    failed = [j for j, r in enumerate(reports) if not r.converged]
    if failed:
        raise NotConvergedError(f"basis solves did not converge for e_{[j + 1 for j in failed]}")
    return SolutionSpace(ode, [r.solution for r in reports], reports,
                         10 * tol if residual_tol is None else residual_tol)


@dataclass(frozen=True)
class EvaluationMatrix:
    t: float
    matrix: np.ndarray
    condition: float


def evaluation_matrix(s: SolutionSpace, t: float, warn_condition: float = 1e12) -> EvaluationMatrix:
    """Matrix of ``ev_t`` in the basis solutions, with its condition number.

    Near-singular matrices only warn: invertibility is guaranteed for exact
    solutions, not for their grid approximations.
    """
    E = s.eval_matrix_at(t)
    cond = float(np.linalg.cond(E))
    if not cond < warn_condition:
        warnings.warn(f"evaluation matrix at t={t} is nearly singular (cond={cond:.3g})", RuntimeWarning)
    return EvaluationMatrix(float(t), E, cond)


@dataclass(frozen=True)
class ClosureReport:
    a: np.ndarray
    base_residuals: list[float]
    acted_residuals: list[float]

    @property
    def passed(self) -> bool:
        return all(r2 <= 10 * r1 + 1e-10 for r1, r2 in zip(self.base_residuals, self.acted_residuals))


def _acted(s: SolutionSpace, a, F: VGridFunction) -> VGridFunction:
    return F.with_values(s.ode.module.act(a, F.values))


def verify_module_closure(s: SolutionSpace, a) -> ClosureReport:
    """``residual_ode(a . F_j)`` against ``residual_ode(F_j)`` for every basis solution."""
    a = s.ode.module.algebra.element(a)
    base = [residuals(s.ode, F)[0] for F in s.basis_solutions]
    acted = [residuals(s.ode, _acted(s, a, F))[0] for F in s.basis_solutions]
    return ClosureReport(a, base, acted)


@dataclass(frozen=True)
class SuperpositionReport:
    max_residual: float
    limit: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.limit


def superposition_check(s: SolutionSpace, trials: int = 16, seed: int = 0) -> SuperpositionReport:
    """Residuals of ``k1 F_i + k2 F_j`` for random scalars with ``|k1| + |k2| = 1``.

    The residual of a linear ODE is linear in its argument, so the scalars
    are normalised; the combination then has to stay within the same
    threshold as the basis solutions themselves.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        i, j = rng.integers(0, s.dim, 2)
        k = rng.uniform(-1, 1, 2)
        k1, k2 = k / np.abs(k).sum()
        g = s.basis_solutions[i].scale(k1) + s.basis_solutions[j].scale(k2)
        worst = max(worst, residuals(s.ode, g)[0])
    return SuperpositionReport(worst, s.residual_tol)


@dataclass(frozen=True)
class SolutionDecomposition:
    module_decomposition: Decomposition
    coefficients: list[np.ndarray]
    functions: list[list[VGridFunction]]

    @property
    def dims(self) -> list[int]:
        return [c.shape[1] for c in self.coefficients]

    @property
    def repeated_summands(self) -> bool:
        """True when some isomorphism class occurs more than once (Krull-Schmidt allows this)."""
        return self.module_decomposition.has_repeated_summands

    def to_dict(self) -> dict:
        d = self.module_decomposition
        return {
            "summand_dims": self.dims,
            "isomorphism_classes": list(d.isomorphism_classes),
            "repeated_summands": self.repeated_summands,
            "trials": d.trials,
            "seed": d.seed,
            "tol": d.tol,
            "coefficients": [_matrix_json(c) for c in self.coefficients],
        }


def _matrix_json(M):
    M = np.asarray(M)
    if np.iscomplexobj(M):
        return {"re": M.real.tolist(), "im": M.imag.tolist()}
    return M.tolist()


def decompose_solution_space(s: SolutionSpace, seed: int = 0, tol: float = 1e-8) -> SolutionDecomposition:
    """Decompose V and carry each summand into Sol through ``ev_{t0}^{-1}``.

    Because ``ev_{t0}(F_j) = e_j``, a summand with basis columns Q in V is
    spanned in Sol by the functions ``sum_j Q[j, k] F_j``; Q doubles as the
    coefficient matrix over the basis solutions.
    """
    d = decompose(s.ode.module, seed=seed, tol=tol)
    coeffs = [np.asarray(Q) for Q in d.summands]
    funcs = [[s.combine(q) for q in Q.T] for Q in coeffs]
    return SolutionDecomposition(d, coeffs, funcs)
