"""Integration and differentiation of V-valued functions along parametrized curves.

Both operators work in the arclength variable ``H(t)`` of the curve, so that
the integral is taken against the length (Hausdorff) measure and the
derivative is its inverse. Grid functions use the composite trapezoid rule,
step functions are integrated exactly, and derivatives are five-point
difference quotients in H.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .algebra import _pnorm
from .stepfn import VGridFunction, VStepFunction, _check_domain, _frozen, write_csv


@dataclass(frozen=True, eq=False)
class Curve:
    """Uniformly sampled embedding ``gamma: [alpha, beta] -> algebra coordinates``.

    ``H[i]`` is the length of the polygon through ``points[:i+1]`` measured in
    the coordinate p-norm (``p = 2`` gives Euclidean arclength).
    """

    t: np.ndarray
    points: np.ndarray
    H: np.ndarray
    p: float = 2.0
    gamma: Callable | None = None
    is_straight_segment: bool = False
    name: str = "curve"

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        if H[0] != 0 or np.any(np.diff(H) < 0):
            raise ValueError("arclength table must start at 0 and be nondecreasing")
        for f in ("t", "points", "H"):
            object.__setattr__(self, f, _frozen(getattr(self, f)))

    @classmethod
    def from_function(cls, gamma, alpha: float, beta: float, N: int, p: float = 2.0,
                      straight: bool = False, name: str = "curve") -> "Curve":
        if N < 1:
            raise ValueError("need N >= 1 cells")
        if not beta > alpha:
            raise ValueError("parameter domain must have alpha < beta")
        t = np.linspace(alpha, beta, N + 1)
        pts = np.asarray(gamma(t))
        if pts.ndim == 1:
            pts = pts[:, None]
        steps = _pnorm(np.diff(pts, axis=0), p)
        if np.any(steps <= 0):
            raise ValueError("curve samples repeat: the embedding must be injective")
        H = np.concatenate([[0.0], np.cumsum(steps)])
        return cls(t, pts, H, p, gamma, straight, name)

    @classmethod
    def segment(cls, start, end, N: int = 4096, p: float = 2.0, alpha: float = 0.0,
                beta: float = 1.0) -> "Curve":
        start = np.atleast_1d(np.asarray(start))
        end = np.atleast_1d(np.asarray(end))
        if start.shape != end.shape:
            raise ValueError("segment endpoints must have the same dimension")

        def gamma(t):
            s = (np.asarray(t, dtype=float) - alpha) / (beta - alpha)
            return start[None, :] + s[:, None] * (end - start)[None, :]

        return cls.from_function(gamma, alpha, beta, N, p, straight=True, name="segment")

    @classmethod
    def preset(cls, name: str, dim: int, N: int = 4096, p: float = 2.0) -> "Curve":
        """``line`` (0 to b_1), ``diagonal`` (0 to b_1 + b_2), ``quarter_circle`` in the b_1, b_2 plane."""
        if name == "line":
            end = np.zeros(dim)
            end[0] = 1.0
            c = cls.segment(np.zeros(dim), end, N, p)
        elif name == "diagonal":
            if dim < 2:
                raise ValueError("diagonal curve needs an algebra of dimension >= 2")
            end = np.zeros(dim)
            end[:2] = 1.0
            c = cls.segment(np.zeros(dim), end, N, p)
        elif name == "quarter_circle":
            if dim < 2:
                raise ValueError("quarter circle needs an algebra of dimension >= 2")

            def gamma(t):
                out = np.zeros((len(t), dim))
                out[:, 0] = np.cos(t)
                out[:, 1] = np.sin(t)
                return out

            c = cls.from_function(gamma, 0.0, np.pi / 2, N, p)
        else:
            raise ValueError(f"unknown curve preset {name!r}")
        object.__setattr__(c, "name", name)
        return c

    @property
    def N(self) -> int:
        return len(self.t) - 1

    @property
    def alpha(self) -> float:
        return float(self.t[0])

    @property
    def beta(self) -> float:
        return float(self.t[-1])

    @property
    def length(self) -> float:
        return float(self.H[-1])

    def with_grid(self, N: int) -> "Curve":
        if N == self.N:
            return self
        if self.gamma is None:
            raise ValueError("curve was built from samples only and cannot be regridded")
        c = Curve.from_function(self.gamma, self.alpha, self.beta, N, self.p, self.is_straight_segment)
        object.__setattr__(c, "name", self.name)
        return c

    def H_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        _check_domain(t, self.alpha, self.beta)
        return np.interp(t, self.t, self.H)

    def cell_measures(self, breakpoints) -> np.ndarray:
        return np.diff(self.H_at(breakpoints))

    def grid(self, func=None, values=None) -> VGridFunction:
        """Grid function on this curve's nodes from ``func(t)`` or explicit samples."""
        if func is not None:
            values = np.asarray(func(self.t))
        return VGridFunction(self.t, values)


def arclength(curve: Curve, t0: float, t1: float) -> float:
    if t1 < t0:
        raise ValueError("arclength needs t0 <= t1")
    H = curve.H_at([t0, t1])
    return float(H[1] - H[0])


def _H_nodes(f: VGridFunction, curve: Curve) -> np.ndarray:
    if f.t.shape == curve.t.shape and np.array_equal(f.t, curve.t):
        return curve.H
    _check_domain(f.t, curve.alpha, curve.beta)
    if abs(f.alpha - curve.alpha) > 1e-12 or abs(f.beta - curve.beta) > 1e-12:
        raise ValueError("grid function does not cover the curve's parameter domain")
    return curve.H_at(f.t)


def _cumtrapz(values: np.ndarray, H: np.ndarray) -> np.ndarray:
    dH = np.diff(H)[:, None]
    cells = 0.5 * dH * (values[1:] + values[:-1])
    out = np.zeros_like(values, dtype=np.result_type(values, float))
    np.cumsum(cells, axis=0, out=out[1:])
    return out


def _cum_at(values: np.ndarray, H: np.ndarray, C: np.ndarray, Hq: float) -> np.ndarray:
    """Integral from H[0] to Hq of the piecewise-linear interpolant (in H)."""
    k = int(np.clip(np.searchsorted(H, Hq, side="right") - 1, 0, len(H) - 2))
    w = H[k + 1] - H[k]
    s = Hq - H[k]
    fq = values[k] + (values[k + 1] - values[k]) * (s / w)
    return C[k] + 0.5 * s * (values[k] + fq)


def integrate(f: VGridFunction | VStepFunction, curve: Curve) -> np.ndarray:
    """``sum_j (int f_j dH) e_j`` over the whole curve."""
    if isinstance(f, VStepFunction):
        p = f.partition
        if abs(p.alpha - curve.alpha) > 1e-12 or abs(p.beta - curve.beta) > 1e-12:
            raise ValueError("step function domain does not match the curve")
        mu = curve.cell_measures(p.breakpoints)
        return mu @ f.values
    H = _H_nodes(f, curve)
    return _cumtrapz(f.values, H)[-1]


@dataclass(frozen=True, eq=False)
class IPoset:
    """Accumulated integrals over the nested intervals ``[t0, t]``, ``t >= t0``."""

    t: np.ndarray
    H: np.ndarray
    values: np.ndarray

    def to_csv(self, path=None) -> str:
        names = [f"F_{j + 1}" for j in range(self.values.shape[1])]
        return write_csv(self.t, self.values, names, path, extra={"H": self.H})


def variable_upper_integral(f: VGridFunction | VStepFunction, curve: Curve, t0: float):
    """``F(t) = int_{t0}^{t} f dH`` on the curve grid, negative-oriented for ``t < t0``.

    Returns ``(IPoset, F)`` where the poset lists ``(t, H([t0, t]), F(t))`` for
    ``t0`` and every node after it.
    """
    _check_domain(np.asarray(t0), curve.alpha, curve.beta)
    H0 = float(curve.H_at(t0))
    if isinstance(f, VStepFunction):
        p = f.partition
        Hb = curve.H_at(p.breakpoints)
        Cb = np.concatenate([np.zeros((1, f.dim)), np.cumsum(np.diff(Hb)[:, None] * f.values, axis=0)])

        def cum(Hq):
            k = np.clip(np.searchsorted(Hb, Hq, side="right") - 1, 0, p.cells - 1)
            return Cb[k] + (Hq - Hb[k])[:, None] * f.values[k]

        Fv = cum(curve.H) - cum(np.array([H0]))[0]
        grid_t = curve.t
        Hn = curve.H
    else:
        Hn = _H_nodes(f, curve)
        C = _cumtrapz(f.values, Hn)
        Fv = C - _cum_at(f.values, Hn, C, H0)
        grid_t = f.t
    F = VGridFunction(grid_t, Fv)
    after = grid_t > t0
    poset = IPoset(
        np.concatenate([[t0], grid_t[after]]),
        np.concatenate([[0.0], Hn[after] - H0]),
        np.vstack([np.zeros((1, Fv.shape[1]), dtype=Fv.dtype), Fv[after]]),
    )
    return poset, F


def antiderivative(f: VGridFunction, curve: Curve, t0: float) -> VGridFunction:
    return variable_upper_integral(f, curve, t0)[1]


def _stencil_weights(H: np.ndarray, width: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Derivative weights of the local degree-(width-1) interpolant at every node.

    Interior nodes get centred stencils, the outermost ones shift inwards.
    Offsets are scaled by the mean spacing so the Vandermonde systems stay
    well conditioned.
    """
    K = len(H)
    half = width // 2
    idx = np.clip(np.arange(K) - half, 0, K - width)[:, None] + np.arange(width)[None, :]
    h = (H[-1] - H[0]) / (K - 1)
    x = (H[idx] - H[:, None]) / h
    vander = x[:, None, :] ** np.arange(width)[None, :, None]
    rhs = np.zeros((K, width, 1))
    rhs[:, 1, 0] = 1.0
    w = np.linalg.solve(vander, rhs)[..., 0] / h
    return idx, w


def differentiate(f: VGridFunction, curve: Curve) -> VGridFunction:
    """Componentwise derivative in arclength.

    Five-point difference quotients in H (centred inside, one-sided at the
    ends); grids with fewer than five nodes fall back to three-point ones.
    """
    if f.N < 2:
        raise ValueError("differentiation needs at least three grid nodes")
    H = _H_nodes(f, curve)
    if np.any(np.diff(H) <= 0):
        raise ValueError("degenerate grid: repeated arclength values")
    if f.N < 4:
        return f.with_values(np.gradient(f.values, H, axis=0, edge_order=2))
    idx, w = _stencil_weights(H)
    # differences against the centre node make constants differentiate to exactly 0
    diffs = f.values[idx] - f.values[:, None]
    return f.with_values(np.einsum("kj,kj...->k...", w, diffs))


@dataclass(frozen=True)
class FTCReport:
    residual_d_of_t: float
    residual_t_of_d: float
    N: int
    excluded_nodes: int

    def to_dict(self) -> dict:
        return {
            "residual_d_of_t": self.residual_d_of_t,
            "residual_t_of_d": self.residual_t_of_d,
            "N": self.N,
            "excluded_nodes": self.excluded_nodes,
        }


def _sup(values, norm):
    if values.size == 0:
        return 0.0
    if norm is None:
        return float(np.max(np.abs(values)))
    return float(np.max(norm(values)))


def ftc_roundtrip(f: VGridFunction, curve: Curve, t0: float, norm=None,
                  jumps: Iterable[float] = (), exclusion_cells: int = 2) -> FTCReport:
    """Residuals ``sup ||D(Tf) - f||`` (interior nodes) and ``sup ||T(Df) - (f - f(t0))||``.

    Nodes within ``exclusion_cells`` cells of any listed jump are left out of
    both suprema. ``norm`` maps an (K, m) array to K norms; default is the
    max-abs coordinate.
    """
    keep = np.ones(len(f.t), dtype=bool)
    h = np.max(np.diff(f.t))
    for tj in jumps:
        keep &= np.abs(f.t - tj) > exclusion_cells * h * (1 + 1e-9)
    DT = differentiate(antiderivative(f, curve, t0), curve)
    r1 = (DT.values - f.values)[1:-1][keep[1:-1]]
    TD = antiderivative(differentiate(f, curve), curve, t0)
    f_t0 = f(np.asarray(t0))
    r2 = (TD.values - (f.values - f_t0))[keep]
    return FTCReport(_sup(r1, norm), _sup(r2, norm), f.N, int((~keep).sum()))
