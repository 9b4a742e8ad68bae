"""V-valued initial value problems solved by Picard iteration.

The right-hand side ``G`` is a vectorized callable ``rhs(t, f)`` taking an
array of curve parameters of shape (K,) and module coordinates of shape (K, m)
and returning shape (K, m). It must be pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .calculus import Curve, _cum_at, _cumtrapz, differentiate
from .module import BanachModule, direct_sum, random_module_elements
from .stepfn import VGridFunction

RHS = Callable[[np.ndarray, np.ndarray], np.ndarray]

BOUND_RTOL = 1e-6


class LipschitzEstimateError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class IVP:
    """``D_V f = G(t, f)``, ``f(t0) = f0`` along ``curve``.

    ``linear_part`` (optional) maps a difference of states to the difference of
    right-hand sides; it is available when G is affine in f and lets the solver
    form successive differences without cancellation.
    """

    module: BanachModule
    curve: Curve
    rhs: RHS
    t0: float
    f0: np.ndarray
    lipschitz: float | None = None
    bound: float | None = None
    linear_part: RHS | None = None
    name: str = "ivp"
    certificate: str = "supplied"

    def __post_init__(self):
        f0 = np.asarray(self.f0)
        if f0.ndim == 0:
            f0 = f0[None]
        if f0.shape != (self.module.dim,):
            raise ValueError(f"initial value has shape {f0.shape}, module dimension is {self.module.dim}")
        object.__setattr__(self, "f0", f0)
        if not self.curve.alpha <= self.t0 <= self.curve.beta:
            raise ValueError(f"t0={self.t0} outside the curve domain [{self.curve.alpha}, {self.curve.beta}]")
        for name in ("lipschitz", "bound"):
            val = getattr(self, name)
            if val is not None and not val >= 0:
                raise ValueError(f"{name} must be nonnegative")

    def G(self, t, f) -> np.ndarray:
        out = np.asarray(self.rhs(np.asarray(t, dtype=float), f))
        if out.shape != np.shape(f):
            out = np.broadcast_to(out, np.shape(f))
        return out

    def on_grid(self, N: int | None) -> "IVP":
        if N is None or N == self.curve.N:
            return self
        return replace(self, curve=self.curve.with_grid(N))


def _as_source(g, m):
    """Normalize a nonhomogeneous term to a callable t -> (K, m) or None."""
    if g is None:
        return None
    if isinstance(g, VGridFunction):
        if g.dim != m:
            raise ValueError(f"nonhomogeneous term has {g.dim} components, module has {m}")
        return g
    if callable(g):
        return g
    raise TypeError("g must be None, a VGridFunction, or a callable t -> (K, m)")


@dataclass(frozen=True, eq=False)
class LinearODE:
    """``D_V f + A(t) . f = g(t)``, ``f(t0) = f0``.

    ``A`` returns algebra elements, shape (K, n), acting through the module.
    Alternatively ``operator`` returns (K, m, m) matrices directly; this is
    how order reduction supplies its companion blocks.
    """

    module: BanachModule
    curve: Curve
    A: Callable | None
    t0: float
    f0: np.ndarray
    g: VGridFunction | Callable | None = None
    operator: Callable | None = None
    lipschitz: float | None = None
    name: str = "linear"

    def __post_init__(self):
        if (self.A is None) == (self.operator is None):
            raise ValueError("give exactly one of A (algebra-valued) or operator (matrix-valued)")
        f0 = np.atleast_1d(np.asarray(self.f0))
        if f0.shape != (self.module.dim,):
            raise ValueError(f"initial value has shape {f0.shape}, module dimension is {self.module.dim}")
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "g", _as_source(self.g, self.module.dim))

    @property
    def homogeneous(self) -> bool:
        return self.g is None

    def matrices(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.operator is not None:
            M = np.asarray(self.operator(t))
        else:
            a = np.asarray(self.A(t))
            a = np.broadcast_to(a, (len(t), self.module.algebra.dim)) if a.ndim < 2 else a
            M = self.module.action_matrix(a)
        return np.broadcast_to(M, (len(t), self.module.dim, self.module.dim))

    def source(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.g is None:
            return np.zeros((len(t), self.module.dim))
        return np.broadcast_to(np.asarray(self.g(t)), (len(t), self.module.dim))

    def with_initial(self, f0) -> "LinearODE":
        return replace(self, f0=f0)

    def homogeneous_part(self) -> "LinearODE":
        return replace(self, g=None)

    def operator_norm_sup(self, curve: Curve | None = None) -> float:
        """Largest induced norm of ``v -> -A(t).v`` over the grid nodes."""
        curve = curve or self.curve
        return float(np.max(_induced_norm(self.matrices(curve.t), self.module)))

    def to_ivp(self, curve: Curve | None = None, bound_lipschitz: bool = True) -> IVP:
        curve = curve or self.curve
        L = self.lipschitz
        if L is None and not bound_lipschitz:
            certificate = "not computed"
        elif L is None:
            L = self.operator_norm_sup(curve)
            certificate = "grid-sampled"
        else:
            certificate = "supplied"
        ode = self

        def rhs(t, f):
            return -np.einsum("kij,kj->ki", ode.matrices(t), f) + ode.source(t)

        def lin(t, d):
            return -np.einsum("kij,kj->ki", ode.matrices(t), d)

        return IVP(self.module, curve, rhs, self.t0, self.f0, L, None, lin, self.name, certificate)


def _induced_norm(M: np.ndarray, V: BanachModule) -> np.ndarray:
    """Induced V-norm of each matrix in the stack ``M`` (shape (..., m, m))."""
    p = V.norm_exponent
    if V.weights is not None:
        d = V.weights ** (1.0 / p) if np.isfinite(p) else V.weights
        M = (d[:, None] * M) / d[None, :]
    if p in (1, 2) or np.isinf(p):
        return np.linalg.norm(M, ord=p, axis=(-2, -1))
    n1 = np.linalg.norm(M, ord=1, axis=(-2, -1))
    ninf = np.linalg.norm(M, ord=np.inf, axis=(-2, -1))
    return n1 ** (1 / p) * ninf ** (1 - 1 / p)


@dataclass(frozen=True, eq=False)
class HigherOrderODE:
    """``D^n f + A_{n-1} D^{n-1} f + ... + A_0 f = g`` with initial jet ``(f, Df, ..., D^{n-1} f)(t0)``."""

    module: BanachModule
    curve: Curve
    coefficients: Sequence[Callable]
    t0: float
    jet: Sequence
    g: VGridFunction | Callable | None = None

    def __post_init__(self):
        n = len(self.coefficients)
        if n < 2:
            raise ValueError("order must be at least 2; use LinearODE for first order")
        if len(self.jet) != n:
            raise ValueError(f"initial jet needs {n} entries, got {len(self.jet)}")
        object.__setattr__(self, "g", _as_source(self.g, self.module.dim))

    @property
    def order(self) -> int:
        return len(self.coefficients)


def companion(h: HigherOrderODE, t) -> np.ndarray:
    """Companion matrices ``C(t)`` with ``D F = C(t) F + (0, ..., 0, g)``.

    Identity blocks sit right of the diagonal (the state is ordered
    ``f, Df, ...``) and the last block row is ``-A_0, ..., -A_{n-1}``.
    """
    t = np.asarray(t, dtype=float)
    V, n, m = h.module, h.order, h.module.dim
    K = len(t)
    C = np.zeros((K, n * m, n * m), dtype=np.result_type(V.dtype, float))
    eye = np.eye(m)
    for i in range(n - 1):
        C[:, i * m:(i + 1) * m, (i + 1) * m:(i + 2) * m] = eye
    for j, Aj in enumerate(h.coefficients):
        a = np.asarray(Aj(t))
        a = np.broadcast_to(a, (K, V.algebra.dim)) if a.ndim < 2 else a
        C[:, (n - 1) * m:, j * m:(j + 1) * m] = -V.action_matrix(a)
    return C


def reduce_order(h: HigherOrderODE) -> LinearODE:
    """First-order system on ``V^{(+)n}`` for the state ``(f, Df, ..., D^{n-1} f)``."""
    n, m = h.order, h.module.dim
    W = direct_sum(h.module, n)
    f0 = np.concatenate([np.atleast_1d(np.asarray(v)) for v in h.jet])

    def operator(t):
        return -companion(h, t)

    g = None
    if h.g is not None:
        src = h.g

        def g(t):
            out = np.zeros((len(t), n * m), dtype=np.result_type(W.dtype, float))
            out[:, (n - 1) * m:] = np.asarray(src(t))
            return out

    return LinearODE(W, h.curve, None, h.t0, f0, g, operator=operator, name="reduced")


def project_first_block(f: VGridFunction, m: int) -> VGridFunction:
    return f.with_values(f.values[:, :m])


# ------------------------------------------------------------------ certificate


def apriori_bound(M: float, L: float, H: float, n: int) -> float:
    """``M L^n H^(n+1) / (n+1)!`` -- bound on the n-th successive Picard difference."""
    if min(M, L, H) < 0 or n < 0:
        raise ValueError("apriori_bound needs nonnegative inputs")
    term = M * H
    for k in range(1, n + 1):
        term *= L * H / (k + 1)
    return term


def _power_over_factorial(x: float, j: int) -> float:
    out = 1.0
    for k in range(1, j + 1):
        out *= x / k
    return out


def _tail(terms_from: Callable[[int], float], start: int, LH: float) -> float:
    total = 0.0
    j = start
    while j < 100_000:
        b = terms_from(j)
        total += b
        if j > LH and b <= 1e-17 * max(total, 1e-300):
            break
        j += 1
    return total


@dataclass
class SolveReport:
    solution: VGridFunction
    iterations: int
    successive_diffs: list[float]
    apriori_bounds: list[float]
    tail_bounds: list[float]
    residual_ode: float
    residual_integral: float
    converged: bool
    lipschitz: float
    bound_M: float
    H: float
    certificate: str
    stop_reason: str
    tol: float
    extras: dict = field(default_factory=dict)

    @property
    def bound_dominated(self) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.solution.values))))
        return all(
            d <= b * (1 + BOUND_RTOL) + 1e-15 * scale
            for d, b in zip(self.successive_diffs, self.apriori_bounds)
        )

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "tol": self.tol,
            "N": self.solution.N,
            "successive_diffs": self.successive_diffs,
            "apriori_bounds": self.apriori_bounds,
            "tail_bounds": self.tail_bounds,
            "bound_dominated": self.bound_dominated,
            "lipschitz": self.lipschitz,
            "bound_M": self.bound_M,
            "H": self.H,
            "certificate": self.certificate,
            "residual_ode": self.residual_ode,
            "residual_integral": self.residual_integral,
            **self.extras,
        }

    def bounds_rows(self):
        return [(i, d, b) for i, (d, b) in enumerate(zip(self.successive_diffs, self.apriori_bounds))]


class _Integrator:
    """``g -> int_{t0}^{t} g dH`` on a fixed curve grid."""

    def __init__(self, curve: Curve, t0: float):
        self.H = curve.H
        self.H0 = float(curve.H_at(t0))

    def __call__(self, values: np.ndarray) -> np.ndarray:
        C = _cumtrapz(values, self.H)
        return C - _cum_at(values, self.H, C, self.H0)

    def scalar(self, phi: np.ndarray) -> np.ndarray:
        return self(phi[:, None])[:, 0]


def picard_solve(p: IVP | LinearODE, N: int | None = None, tol: float = 1e-8, max_iter: int = 64,
                 initial_iterate=None, estimate: bool = True, seed: int = 0) -> SolveReport:
    """Iterate ``F_{k+1} = f0 + T_{t0}^{t} G(., F_k)`` on the curve grid.

    Stops once the measured successive difference or the a-priori tail bound
    falls below ``tol``. Without a supplied Lipschitz constant one is
    estimated by sampling and the certificate is marked heuristic.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if isinstance(p, LinearODE):
        curve = p.curve.with_grid(N) if N else p.curve
        p = p.to_ivp(curve)
    else:
        p = p.on_grid(N)
    certificate = p.certificate
    curve, V = p.curve, p.module
    t = curve.t
    K = len(t)
    T = _Integrator(curve, p.t0)
    H0 = T.H0
    Hmax = max(curve.length - H0, H0)

    L = p.lipschitz
    if L is None:
        if not estimate:
            raise ValueError("no Lipschitz constant given and estimation disabled")
        L = estimate_lipschitz(p, seed=seed)
        certificate = "heuristic"
    f0 = np.broadcast_to(p.f0, (K, V.dim))
    G0 = p.G(t, f0)
    M = p.bound if p.bound is not None else float(np.max(V.norm(G0)))

    if initial_iterate is None:
        F = np.array(f0, dtype=np.result_type(f0, G0, float))
        Gprev = G0
    else:
        F = np.asarray(initial_iterate.values if isinstance(initial_iterate, VGridFunction) else initial_iterate)
        F = np.array(np.broadcast_to(F, (K, V.dim)), dtype=np.result_type(F, G0, float))
        Gprev = p.G(t, F)
    F_next = f0 + T(Gprev)
    delta = F_next - F

    diffs: list[float] = []
    bounds: list[float] = []
    tails: list[float] = []
    D0 = None
    converged = False
    stop = "max_iter"
    n = 0
    while True:
        d = float(np.max(V.norm(delta)))
        if not np.isfinite(d):
            stop = "non-finite iterate"
            break
        if initial_iterate is None:
            def bound(j, M=M):
                return apriori_bound(M, L, Hmax, j)
        else:
            # first iterate differs from f0: ||F_{j+1} - F_j|| <= D0 (L H)^j / j!
            if D0 is None:
                D0 = d

            def bound(j, D0=D0):
                return D0 * _power_over_factorial(L * Hmax, j)
        b = bound(n)
        tail = _tail(bound, n + 1, L * Hmax)
        diffs.append(d)
        bounds.append(b)
        tails.append(tail)
        F = F_next
        if d < tol or tail < tol:
            converged = True
            stop = "measured difference below tol" if d < tol else "a-priori tail below tol"
            break
        n += 1
        if n >= max_iter:
            break
        if p.linear_part is not None:
            delta = T(p.linear_part(t, delta))
        else:
            Gcur = p.G(t, F)
            delta = T(Gcur - Gprev)
            Gprev = Gcur
        F_next = F + delta

    sol = VGridFunction(t, F)
    r_ode, r_int = residuals(p, sol)
    return SolveReport(
        solution=sol,
        iterations=len(diffs),
        successive_diffs=diffs,
        apriori_bounds=bounds,
        tail_bounds=tails,
        residual_ode=r_ode,
        residual_integral=r_int,
        converged=converged,
        lipschitz=float(L),
        bound_M=float(M),
        H=float(Hmax),
        certificate=certificate,
        stop_reason=stop,
        tol=tol,
    )


def residuals(p: IVP | LinearODE, f: VGridFunction) -> tuple[float, float]:
    """Differential-form residual (interior nodes) and integral-form residual, both in the V-norm."""
    if isinstance(p, LinearODE):
        p = p.to_ivp(p.curve.with_grid(f.N), bound_lipschitz=False)
    curve = p.curve if p.curve.N == f.N else p.curve.with_grid(f.N)
    V = p.module
    Gf = p.G(f.t, f.values)
    Df = differentiate(f, curve).values
    r_ode = float(np.max(V.norm((Df - Gf)[1:-1])))
    T = _Integrator(curve, p.t0)
    r_int = float(np.max(V.norm(f.values - p.f0 - T(Gf))))
    return r_ode, r_int


# ------------------------------------------------------------------ uniqueness


@dataclass(frozen=True)
class UniquenessReport:
    preconditions_met: bool
    reason: str
    sup_difference: float
    residual_integral: tuple[float, float]
    gronwall_bound: float
    inequality_excess: float
    certified: bool

    def to_dict(self) -> dict:
        return {
            "preconditions_met": self.preconditions_met,
            "reason": self.reason,
            "sup_difference": self.sup_difference,
            "residual_integral": list(self.residual_integral),
            "gronwall_bound": self.gronwall_bound,
            "inequality_excess": self.inequality_excess,
            "certified": self.certified,
        }


def uniqueness_check(p: IVP | LinearODE, f: VGridFunction, f_tilde: VGridFunction,
                     tol: float = 1e-7, lipschitz: float | None = None) -> UniquenessReport:
    """Gronwall certificate that two near-solutions of ``p`` coincide.

    With integral residuals ``r`` and ``r~`` the difference ``phi = ||f - f~||``
    obeys ``phi <= delta + L T(phi)`` with ``delta = r + r~``; the discrete
    Gronwall inequality then gives ``sup phi <= delta e^{L H} / (1 - L h / 2)``.
    """
    if isinstance(p, LinearODE):
        p = p.to_ivp(p.curve.with_grid(f.N))
    p = p.on_grid(f.N)
    if not np.array_equal(f.t, f_tilde.t):
        raise ValueError("both functions must live on the same grid")
    V, curve = p.module, p.curve
    r1 = residuals(p, f)[1]
    r2 = residuals(p, f_tilde)[1]
    phi = V.norm(f.values - f_tilde.values)
    sup = float(np.max(phi))
    L = lipschitz if lipschitz is not None else p.lipschitz
    if L is None:
        L = estimate_lipschitz(p)
    bad = [name for name, r in (("f", r1), ("f_tilde", r2)) if not r <= tol]
    if bad:
        off = [
            name for name, g in (("f", f), ("f_tilde", f_tilde))
            if float(V.norm(g(np.asarray(p.t0)) - p.f0)) > tol
        ]
        reason = "not a near-solution of this IVP: " + ", ".join(bad)
        if off:
            reason += "; initial value differs from f0 for " + ", ".join(off) + " (different IVP)"
        return UniquenessReport(False, reason, sup, (r1, r2), math.inf, math.nan, False)
    T = _Integrator(curve, p.t0)
    Tphi = np.abs(T.scalar(phi))
    delta = r1 + r2
    excess = float(np.max(phi - delta - L * Tphi))
    h = float(np.max(np.diff(curve.H)))
    H = max(curve.length - T.H0, T.H0)
    shrink = 1 - L * h / 2
    bound = delta * math.exp(L * H) / shrink if shrink > 0 else math.inf
    certified = sup <= bound * (1 + 1e-9) + 1e-15
    return UniquenessReport(True, "ok", sup, (r1, r2), bound, excess, certified)


# ------------------------------------------------------------------ Lipschitz


def estimate_lipschitz(p: IVP | LinearODE, samples: int = 512, seed: int = 0, safety: float = 1.25) -> float:
    """``safety * max ||G(t, v1) - G(t, v2)|| / ||v1 - v2||`` over random samples."""
    if isinstance(p, LinearODE):
        p = p.to_ivp()
    if samples < 2:
        raise ValueError("need at least two samples")
    V, curve = p.module, p.curve
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(curve.t), samples)
    idx[:2] = [0, len(curve.t) - 1]
    ts = curve.t[idx]
    scale = max(1.0, float(V.norm(p.f0)))
    v1 = p.f0 + scale * random_module_elements(V, samples, rng)
    v2 = v1 + random_module_elements(V, samples, rng) * scale * 10.0 ** rng.uniform(-6, 0, (samples, 1))
    num = V.norm(p.G(ts, v1) - p.G(ts, v2))
    den = V.norm(v1 - v2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num / den
    if not np.all(np.isfinite(ratio)):
        raise LipschitzEstimateError("unbounded or undefined difference quotients of G")
    return safety * float(np.max(ratio))
