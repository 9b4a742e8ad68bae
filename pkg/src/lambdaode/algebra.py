"""Finite-dimensional associative algebras given by structure constants.

Elements are plain 1-D numpy arrays of coordinates in the fixed basis
``b_1, ..., b_n``; batches of elements are 2-D arrays with one element per row.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

AXIOM_TOL = 1e-12


@dataclass(frozen=True)
class AxiomCheck:
    name: str
    passed: bool
    violation: float


@dataclass(frozen=True)
class AxiomReport:
    checks: tuple[AxiomCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> AxiomCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {c.name: {"passed": c.passed, "violation": c.violation} for c in self.checks}


@dataclass(frozen=True, eq=False)
class FiniteDimAlgebra:
    """Algebra with ``b_i * b_j = sum_k structure[i, j, k] b_k``.

    ``sigma`` holds the values of the surjective homomorphism onto the scalars
    on each basis element and ``norm_exponent`` the p of the coordinate p-norm.
    """

    structure: np.ndarray
    unit: np.ndarray
    sigma: np.ndarray
    norm_exponent: float = 1.0
    basis_labels: tuple[str, ...] = ()
    field: str = "real"
    name: str = "custom"

    def __post_init__(self):
        c = np.asarray(self.structure)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]) or c.shape[0] < 1:
            raise ValueError(f"structure constants must have shape (n, n, n), got {c.shape}")
        n = c.shape[0]
        if self.field not in ("real", "complex"):
            raise ValueError(f"field must be 'real' or 'complex', got {self.field!r}")
        dtype = complex if self.field == "complex" else float
        unit = np.asarray(self.unit, dtype=dtype)
        sigma = np.asarray(self.sigma, dtype=dtype)
        if unit.shape != (n,) or sigma.shape != (n,):
            raise ValueError("unit and sigma must have length equal to the algebra dimension")
        if self.norm_exponent < 1:
            raise ValueError("norm exponent p must satisfy p >= 1")
        labels = tuple(self.basis_labels) or tuple(f"b{i + 1}" for i in range(n))
        if len(labels) != n:
            raise ValueError("need one basis label per basis element")
        for arr in (c, unit, sigma):
            if not np.all(np.isfinite(arr)):
                raise ValueError("algebra data must be finite")
        object.__setattr__(self, "structure", np.array(c, dtype=dtype))
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "basis_labels", labels)
        for arr in (self.structure, self.unit, self.sigma):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.structure.shape[0]

    @property
    def dtype(self):
        return complex if self.field == "complex" else float

    def element(self, coords) -> np.ndarray:
        x = np.asarray(coords, dtype=np.result_type(self.dtype, np.asarray(coords).dtype))
        if x.shape[-1:] != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got shape {x.shape}")
        return x

    def basis(self, i: int) -> np.ndarray:
        e = np.zeros(self.dim, dtype=self.dtype)
        e[i] = 1
        return e

    def multiply(self, x, y) -> np.ndarray:
        """Bilinear product; broadcasts over leading batch axes."""
        x = self.element(x)
        y = self.element(y)
        return np.einsum("...i,...j,ijk->...k", x, y, self.structure)

    def p_norm(self, x) -> np.ndarray | float:
        x = self.element(x)
        return _pnorm(x, self.norm_exponent)

    def sigma_of(self, x):
        x = self.element(x)
        return x @ self.sigma

    def left_matrix(self, x) -> np.ndarray:
        """Matrix of ``y -> x*y`` acting on coordinate columns."""
        x = self.element(x)
        return np.einsum("i,ijk->kj", x, self.structure)

    def check_axioms(self) -> AxiomReport:
        return check_axioms(self)


def _pnorm(x: np.ndarray, p: float, weights=None):
    a = np.abs(x)
    if weights is not None:
        if np.isinf(p):
            return np.max(a * weights, axis=-1)
        return np.sum(weights * a**p, axis=-1) ** (1.0 / p)
    if np.isinf(p):
        return np.max(a, axis=-1)
    if p == 1:
        return np.sum(a, axis=-1)
    if p == 2:
        return np.sqrt(np.sum(a * a, axis=-1))
    return np.sum(a**p, axis=-1) ** (1.0 / p)


def check_axioms(A: FiniteDimAlgebra, tol: float = AXIOM_TOL) -> AxiomReport:
    """Exact enumeration of associativity, unit, and sigma axioms over basis tuples."""
    c = A.structure
    n = A.dim
    # (b_i b_j) b_m versus b_i (b_j b_m)
    left = np.einsum("ijl,lmk->ijmk", c, c)
    right = np.einsum("jml,ilk->ijmk", c, c)
    assoc = float(np.max(np.abs(left - right))) if n else 0.0

    eye = np.eye(n)
    ul = np.einsum("i,ijk->jk", A.unit, c)  # unit * b_j
    ur = np.einsum("j,ijk->ik", A.unit, c)  # b_i * unit
    unit_viol = float(max(np.max(np.abs(ul - eye)), np.max(np.abs(ur - eye))))

    s = A.sigma
    mult_viol = float(np.max(np.abs(c @ s - np.outer(s, s))))
    unit_sigma = float(abs(A.unit @ s - 1))
    surj = float(np.max(np.abs(s)))

    checks = (
        AxiomCheck("associativity", assoc <= tol, assoc),
        AxiomCheck("unit", unit_viol <= tol, unit_viol),
        AxiomCheck("sigma_multiplicative", mult_viol <= tol, mult_viol),
        AxiomCheck("sigma_unital", unit_sigma <= tol, unit_sigma),
        # violation here is how far sigma is from vanishing identically
        AxiomCheck("sigma_surjective", surj > tol, 0.0 if surj > tol else 1.0),
    )
    return AxiomReport(checks)


def _product(n: int, p: float) -> FiniteDimAlgebra:
    if n < 1:
        raise ValueError("product(n) needs n >= 1")
    c = np.zeros((n, n, n))
    for i in range(n):
        c[i, i, i] = 1.0
    sigma = np.zeros(n)
    sigma[0] = 1.0
    return FiniteDimAlgebra(
        c, np.ones(n), sigma, p, tuple(f"p{i + 1}" for i in range(n)), name=f"product({n})"
    )


def _dual(field: str, p: float, name: str) -> FiniteDimAlgebra:
    c = np.zeros((2, 2, 2))
    c[0, 0, 0] = 1.0
    c[0, 1, 1] = 1.0
    c[1, 0, 1] = 1.0
    # eps * eps = 0
    return FiniteDimAlgebra(c, [1.0, 0.0], [1.0, 0.0], p, ("1", "eps"), field=field, name=name)


def preset(name: str, n: int | None = None, p: float = 1.0) -> FiniteDimAlgebra:
    """Named algebras.

    ``reals``, ``complex_over_reals``, ``product`` (needs ``n``; also accepts
    ``"product(3)"``), ``dual_numbers`` (real), ``nilpotent_loop`` (the complex
    path algebra of a one-loop quiver modulo the square of the loop).
    """
    key = name.strip()
    if key.startswith("product(") and key.endswith(")"):
        n = int(key[len("product("):-1])
        key = "product"
    if key == "reals":
        return FiniteDimAlgebra(np.ones((1, 1, 1)), [1.0], [1.0], p, ("1",), name="reals")
    if key == "complex_over_reals":
        c = np.zeros((2, 2, 2))
        c[0, 0, 0] = 1.0
        c[0, 1, 1] = 1.0
        c[1, 0, 1] = 1.0
        c[1, 1, 0] = -1.0
        # no surjective real homomorphism C -> R exists; sigma is the identity C -> C
        return FiniteDimAlgebra(
            c, [1.0, 0.0], [1.0, 1j], p, ("1", "i"), field="complex", name="complex_over_reals"
        )
    if key == "product":
        if n is None:
            raise ValueError("product preset needs n")
        return _product(int(n), p)
    if key == "dual_numbers":
        return _dual("real", p, "dual_numbers")
    if key == "nilpotent_loop":
        return _dual("complex", p, "nilpotent_loop")
    raise ValueError(f"unknown algebra preset {name!r}")


PRESET_NAMES: Sequence[str] = ("reals", "complex_over_reals", "product", "dual_numbers", "nilpotent_loop")


def random_elements(A: FiniteDimAlgebra, size: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal((size, A.dim))
    if A.field == "complex":
        x = x + 1j * rng.standard_normal((size, A.dim))
    return x
