"""V-valued step functions and sampled functions on a parameter interval.

Values are stored as coordinate arrays with the module coordinates on the last
axis; the module itself is passed explicitly to the operations that need its
action or norm.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .module import BanachModule


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Partition:
    breakpoints: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        if b.ndim != 1 or len(b) < 2:
            raise ValueError("a partition needs at least two breakpoints")
        if not np.all(np.diff(b) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", _frozen(b))

    @property
    def alpha(self) -> float:
        return float(self.breakpoints[0])

    @property
    def beta(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def cells(self) -> int:
        return len(self.breakpoints) - 1

    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def cell_index(self, t) -> np.ndarray:
        """Index of the cell containing t, right-continuous; ``beta`` belongs to the last cell."""
        t = np.asarray(t, dtype=float)
        _check_domain(t, self.alpha, self.beta)
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        return np.clip(idx, 0, self.cells - 1)


def _check_domain(t, alpha, beta, slack=1e-12):
    span = beta - alpha
    if np.any(t < alpha - slack * span) or np.any(t > beta + slack * span):
        raise ValueError(f"parameter outside the domain [{alpha}, {beta}]")


@dataclass(frozen=True, eq=False)
class VStepFunction:
    """``f = sum_i v_i 1_{[t_{i-1}, t_i)}``, closed on the right at the last cell."""

    partition: Partition
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.partition.cells:
            raise ValueError(
                f"need one value per cell ({self.partition.cells}), got array of shape {v.shape}"
            )
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def constant(cls, value, alpha: float = 0.0, beta: float = 1.0) -> "VStepFunction":
        return cls(Partition([alpha, beta]), np.atleast_1d(np.asarray(value))[None, :])

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __call__(self, t):
        return self.values[self.partition.cell_index(t)]

    def __add__(self, other: "VStepFunction") -> "VStepFunction":
        p, a, b = common_refinement(self, other)
        return VStepFunction(p, a + b)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, k) -> "VStepFunction":
        return VStepFunction(self.partition, k * self.values)

    def simplified(self) -> "VStepFunction":
        """Merge neighbouring cells carrying identical values."""
        keep = [0]
        for i in range(1, self.partition.cells):
            if not np.array_equal(self.values[i], self.values[keep[-1]]):
                keep.append(i)
        b = self.partition.breakpoints
        breaks = np.append(b[keep], b[-1])
        return VStepFunction(Partition(breaks), self.values[keep])


def common_refinement(f: VStepFunction, g: VStepFunction):
    """Shared partition and both value arrays on it."""
    if f.partition.alpha != g.partition.alpha or f.partition.beta != g.partition.beta:
        raise ValueError("step functions live on different domains")
    b = np.union1d(f.partition.breakpoints, g.partition.breakpoints)
    mids = 0.5 * (b[1:] + b[:-1])
    return Partition(b), f(mids), g(mids)


@dataclass(frozen=True, eq=False)
class VGridFunction:
    """Samples ``values[i] = f(t[i])`` on an increasing grid; linear in between."""

    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("grid needs at least two nodes")
        if not np.all(np.diff(t) > 0):
            raise ValueError("grid nodes must be strictly increasing")
        if v.ndim != 2 or v.shape[0] != len(t):
            raise ValueError(f"sample count {v.shape[0]} does not match grid size {len(t)}")
        object.__setattr__(self, "t", _frozen(t))
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def uniform(cls, alpha: float, beta: float, N: int, func=None, values=None) -> "VGridFunction":
        """Grid of ``N`` cells; sample ``func(t_array)`` or take ``values`` as given."""
        if N < 1:
            raise ValueError("need N >= 1 cells")
        t = np.linspace(alpha, beta, N + 1)
        if func is not None:
            values = np.asarray(func(t))
            if values.ndim == 1:
                values = values[:, None]
        return cls(t, values)

    @property
    def N(self) -> int:
        return len(self.t) - 1

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def alpha(self) -> float:
        return float(self.t[0])

    @property
    def beta(self) -> float:
        return float(self.t[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        _check_domain(t, self.alpha, self.beta)
        cols = [_interp(t, self.t, self.values[:, j]) for j in range(self.dim)]
        return np.stack(cols, axis=-1)

    def with_values(self, values) -> "VGridFunction":
        return VGridFunction(self.t, values)

    def __add__(self, other: "VGridFunction") -> "VGridFunction":
        _same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "VGridFunction") -> "VGridFunction":
        _same_grid(self, other)
        return self.with_values(self.values - other.values)

    def scale(self, k) -> "VGridFunction":
        return self.with_values(k * self.values)

    def sup_norm(self, V: "BanachModule") -> float:
        return float(np.max(V.norm(self.values)))

    def to_csv(self, path=None) -> str:
        return write_csv(self.t, self.values, [f"f_{j + 1}" for j in range(self.dim)], path)


def _interp(x, xp, fp):
    if np.iscomplexobj(fp):
        return np.interp(x, xp, fp.real) + 1j * np.interp(x, xp, fp.imag)
    return np.interp(x, xp, fp)


def _same_grid(f: VGridFunction, g: VGridFunction):
    if f.t.shape != g.t.shape or not np.array_equal(f.t, g.t):
        raise ValueError("grid functions live on different grids")


def evaluate(f: VStepFunction | VGridFunction, t):
    return f(t)


def module_action(V: "BanachModule", a, f):
    """Pointwise ``(a.f)(t) = a . f(t)``; ``a`` may also be a per-sample array of algebra elements."""
    if f.dim != V.dim:
        raise ValueError(f"function has {f.dim} components, module has dimension {V.dim}")
    vals = V.act(a, f.values)
    if isinstance(f, VStepFunction):
        return VStepFunction(f.partition, vals)
    return f.with_values(vals)


def norm(V: "BanachModule", f: VStepFunction, measure=None) -> float:
    """``sum_i ||v_i||_V mu(I_i)``.

    ``measure`` is an array of cell measures, an object with a
    ``cell_measures(breakpoints)`` method (a Curve), or None for Lebesgue
    measure in the parameter.
    """
    if measure is None:
        mu = f.partition.lengths()
    elif hasattr(measure, "cell_measures"):
        mu = measure.cell_measures(f.partition.breakpoints)
    else:
        mu = np.asarray(measure, dtype=float)
        if mu.shape != (f.partition.cells,):
            raise ValueError("need one measure per partition cell")
    return float(np.sum(V.norm(f.values) * mu))


def tensor_decompose(f: VGridFunction) -> list[VGridFunction]:
    """Scalar component functions ``f_j`` with ``f = sum_j f_j (x) e_j``."""
    return [f.with_values(f.values[:, j : j + 1]) for j in range(f.dim)]


def recombine(components: Sequence[VGridFunction]) -> VGridFunction:
    if not components:
        raise ValueError("need at least one component")
    t = components[0].t
    for c in components:
        _same_grid(components[0], c)
    return VGridFunction(t, np.hstack([c.values for c in components]))


def juxtapose(f: VStepFunction, g: VStepFunction, xi: float = 0.5) -> VStepFunction:
    """Splice f onto ``[alpha, alpha + xi L)`` and g onto the rest of the domain.

    With ``xi = 1/2`` on ``[0, 1]`` this is ``f(2x)`` for ``x < 1/2`` and
    ``g(2x - 1)`` afterwards.
    """
    if not 0 < xi < 1:
        raise ValueError("xi must lie strictly between 0 and 1")
    pf, pg = f.partition, g.partition
    if pf.alpha != pg.alpha or pf.beta != pg.beta:
        raise ValueError("juxtaposed functions must share their domain")
    a, L = pf.alpha, pf.beta - pf.alpha
    cut = a + xi * L
    left = a + xi * (pf.breakpoints - a)
    right = cut + (1 - xi) * (pg.breakpoints - a)
    breaks = np.concatenate([left[:-1], [cut], right[1:-1], [pf.beta]])
    values = np.concatenate([f.values, g.values]).astype(np.result_type(f.values, g.values))
    return VStepFunction(Partition(breaks), values)


def write_csv(t, values, names, path=None, extra=None) -> str:
    """CSV with header ``t, <extra names>, <names>``; 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    extra = extra or {}
    w.writerow(["t", *extra.keys(), *names])
    cols = list(extra.values())
    for i, ti in enumerate(t):
        row = [_fmt(ti)] + [_fmt(c[i]) for c in cols] + [_fmt(x) for x in values[i]]
        w.writerow(row)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def _fmt(x) -> str:
    if isinstance(x, (complex, np.complexfloating)):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    return f"{float(x):.17g}"


def read_csv(path) -> VGridFunction:
    """Inverse of ``VGridFunction.to_csv``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3 or rows[0][0].strip() != "t":
        raise ValueError(f"{path}: not a grid-function CSV")
    body = rows[1:]
    t = np.array([float(r[0]) for r in body])
    cells = [[r[j] for j in range(1, len(rows[0]))] for r in body]
    if any("j" in c for row in cells for c in row):
        vals = np.array([[complex(c) for c in row] for row in cells])
    else:
        vals = np.array([[float(c) for c in row] for row in cells])
    return VGridFunction(t, vals)
