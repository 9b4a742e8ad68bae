"""Finitely generated normed modules over a finite-dimensional algebra.

A module of dimension m is stored as one m x m action matrix per algebra basis
element. Module elements are coordinate arrays of length m (or batches with the
coordinates on the last axis).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .algebra import FiniteDimAlgebra, _pnorm, random_elements

log = logging.getLogger(__name__)

SIGMA_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BanachModule:
    """Module ``V`` with ``b_i . v = actions[i] @ v`` and a weighted p-norm."""

    algebra: FiniteDimAlgebra
    actions: np.ndarray
    norm_exponent: float = 1.0
    weights: np.ndarray | None = None
    name: str = "custom"

    def __post_init__(self):
        R = np.asarray(self.actions)
        n = self.algebra.dim
        if R.ndim != 3 or R.shape[0] != n or R.shape[1] != R.shape[2] or R.shape[1] < 1:
            raise ValueError(
                f"need {n} square action matrices for a dim-{n} algebra, got shape {R.shape}"
            )
        if self.norm_exponent < 1:
            raise ValueError("module norm exponent must be >= 1")
        dtype = np.result_type(self.algebra.dtype, R.dtype)
        R = np.array(R, dtype=dtype)
        R.setflags(write=False)
        object.__setattr__(self, "actions", R)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (R.shape[1],) or np.any(w <= 0):
                raise ValueError("norm weights must be positive, one per module coordinate")
            object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.actions.shape[1]

    @property
    def dtype(self):
        return self.actions.dtype

    def element(self, coords) -> np.ndarray:
        v = np.asarray(coords)
        if v.shape[-1:] != (self.dim,):
            raise ValueError(f"expected {self.dim} module coordinates, got shape {v.shape}")
        return v

    def action_matrix(self, a) -> np.ndarray:
        """``sum_i a_i R(b_i)``; batched over leading axes of ``a``."""
        a = self.algebra.element(a)
        return np.einsum("...i,ijk->...jk", a, self.actions)

    def act(self, a, v) -> np.ndarray:
        """Module action ``a . v``; ``a`` and ``v`` broadcast over leading axes."""
        a = self.algebra.element(a)
        v = self.element(v)
        return np.einsum("...i,ijk,...k->...j", a, self.actions, v)

    def norm(self, v):
        return _pnorm(self.element(v), self.norm_exponent, self.weights)

    def representation_residual(self) -> float:
        """Max-entry residual of ``R(b_i) R(b_j) = sum_k c_ijk R(b_k)`` plus ``R(1) = I``."""
        R = self.actions
        lhs = np.einsum("iab,jbc->ijac", R, R)
        rhs = np.einsum("ijk,kac->ijac", self.algebra.structure, R)
        unit = self.action_matrix(self.algebra.unit) - np.eye(self.dim)
        return float(max(np.max(np.abs(lhs - rhs)), np.max(np.abs(unit))))

    def operator_norm_bound(self, a) -> float:
        """Upper bound for the induced norm of ``v -> a.v``; exact for p in {1, 2, inf}."""
        M = self.action_matrix(a)
        p = self.norm_exponent
        if self.weights is not None:
            d = self.weights ** (1.0 / p) if np.isfinite(p) else self.weights
            M = (d[:, None] * M) / d[None, :]
        if p in (1, 2) or np.isinf(p):
            return float(np.linalg.norm(M, ord=p))
        # Riesz-Thorin interpolation between the 1- and inf-norms
        return float(np.linalg.norm(M, 1) ** (1 / p) * np.linalg.norm(M, np.inf) ** (1 - 1 / p))

    def check_sigma_normed(self, samples: int = 10_000, seed: int = 0, tol: float = SIGMA_TOL):
        return check_sigma_normed(self, samples, seed, tol)

    def endomorphism_algebra(self, atol: float | None = None) -> np.ndarray:
        return endomorphism_algebra(self.actions, atol)

    def decompose(self, seed: int = 0, tol: float = 1e-8, trials: int = 32) -> "Decomposition":
        return decompose(self, seed, tol, trials)


def regular(A: FiniteDimAlgebra, p: float | None = None) -> BanachModule:
    """``V = A`` acting on itself by left multiplication."""
    R = np.stack([A.left_matrix(A.basis(i)) for i in range(A.dim)])
    return BanachModule(A, R, A.norm_exponent if p is None else p, name="regular")


def simple(A: FiniteDimAlgebra, m: int = 1, p: float | None = None) -> BanachModule:
    """``k^m`` with ``a . v = sigma(a) v``; a direct sum of m copies of the simple module."""
    if m < 1:
        raise ValueError("simple module needs m >= 1")
    R = A.sigma[:, None, None] * np.eye(m)[None]
    return BanachModule(A, R, A.norm_exponent if p is None else p, name="simple" if m == 1 else f"simple^{m}")


def coordinatewise(A: FiniteDimAlgebra, p: float | None = None) -> BanachModule:
    """``k^n`` with ``b_i`` acting as the i-th coordinate projection (product algebras)."""
    n = A.dim
    R = np.zeros((n, n, n))
    for i in range(n):
        R[i, i, i] = 1.0
    V = BanachModule(A, R, A.norm_exponent if p is None else p, name="coordinatewise")
    if V.representation_residual() > 1e-12:
        raise ValueError(f"coordinatewise action is not a representation of {A.name}")
    return V


def direct_sum(V: BanachModule, copies: int) -> BanachModule:
    """``V^{(+)copies}`` with block-diagonal action and the same p-norm on concatenated coordinates."""
    if copies < 1:
        raise ValueError("copies must be >= 1")
    R = np.stack([scipy.linalg.block_diag(*([Ri] * copies)) for Ri in V.actions])
    w = None if V.weights is None else np.tile(V.weights, copies)
    return BanachModule(V.algebra, R, V.norm_exponent, w, name=f"{V.name}^{copies}")


def module_preset(name: str, A: FiniteDimAlgebra, m: int | None = None, p: float | None = None) -> BanachModule:
    if name == "regular":
        return regular(A, p)
    if name == "simple":
        return simple(A, 1 if m is None else m, p)
    if name == "coordinatewise":
        return coordinatewise(A, p)
    raise ValueError(f"unknown module preset {name!r}")


def random_module_elements(V: BanachModule, size: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((size, V.dim))
    if np.iscomplexobj(V.actions):
        v = v + 1j * rng.standard_normal((size, V.dim))
    return v


# ---------------------------------------------------------------- sigma-norm check


@dataclass(frozen=True)
class SigmaNormReport:
    samples: int
    max_excess_sigma: float
    max_excess_submultiplicative: float
    worst_pair: tuple[list, list]
    tol: float

    @property
    def sigma_normed(self) -> bool:
        return self.max_excess_sigma <= self.tol

    @property
    def submultiplicative(self) -> bool:
        return self.max_excess_submultiplicative <= self.tol

    @property
    def passed(self) -> bool:
        return self.sigma_normed

    @property
    def verdict(self) -> str:
        if self.sigma_normed:
            return "sigma-normed"
        if self.submultiplicative:
            return "normed for the algebra norm (||a.v|| <= ||a|| ||v||) but not sigma-normed"
        return "neither sigma-normed nor submultiplicative"

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "max_excess_sigma": self.max_excess_sigma,
            "max_excess_submultiplicative": self.max_excess_submultiplicative,
            "sigma_normed": self.sigma_normed,
            "submultiplicative": self.submultiplicative,
            "verdict": self.verdict,
            "worst_pair": {"a": _jsonable(self.worst_pair[0]), "v": _jsonable(self.worst_pair[1])},
        }


def _jsonable(x):
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return [[float(z.real), float(z.imag)] for z in x]
    return [float(z) for z in x]


def sigma_excess(V: BanachModule, a, v) -> np.ndarray:
    """``||a.v|| - |sigma(a)| ||v||``; positive entries violate the sigma-norm inequality."""
    return V.norm(V.act(a, v)) - np.abs(V.algebra.sigma_of(a)) * V.norm(v)


def check_sigma_normed(V: BanachModule, samples: int = 10_000, seed: int = 0, tol: float = SIGMA_TOL) -> SigmaNormReport:
    """Sample ``||a.v|| <= |sigma(a)| ||v||`` with a, v on the unit spheres.

    Every pair of basis elements is included besides the random draws, so
    single-basis-element counterexamples are never missed.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    A = V.algebra
    rng = np.random.default_rng(seed)
    a = random_elements(A, samples, rng)
    v = random_module_elements(V, samples, rng)
    ea = np.repeat(np.eye(A.dim), V.dim, axis=0)
    ev = np.tile(np.eye(V.dim), (A.dim, 1))
    a = np.vstack([ea.astype(a.dtype), a])
    v = np.vstack([ev.astype(v.dtype), v])
    a = a / A.p_norm(a)[:, None]
    v = v / V.norm(v)[:, None]
    av = V.norm(V.act(a, v))
    vn = V.norm(v)
    ex_sigma = av - np.abs(A.sigma_of(a)) * vn
    ex_sub = av - A.p_norm(a) * vn
    k = int(np.argmax(ex_sigma))
    return SigmaNormReport(
        samples=len(a),
        max_excess_sigma=float(ex_sigma[k]),
        max_excess_submultiplicative=float(np.max(ex_sub)),
        worst_pair=(a[k], v[k]),
        tol=tol,
    )


# ------------------------------------------------------------ endomorphisms


HOM_ATOL = 1e-10


def _null_space(M: np.ndarray, atol: float) -> np.ndarray:
    """Right null space with an absolute singular-value cutoff.

    A cutoff relative to the largest singular value would misread roundoff
    as rank whenever the whole system is numerically zero (e.g. equal 1x1
    actions), so the threshold is absolute and scaled by the caller.
    """
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(s > atol))
    return vh[rank:].conj().T


def hom_space(src: np.ndarray, dst: np.ndarray, atol: float | None = None) -> np.ndarray:
    """Basis of ``{X : X src_i = dst_i X}`` as an array of shape (d, m_dst, m_src).

    ``atol`` defaults to ``HOM_ATOL`` times the largest action entry (at least 1).
    """
    ms, md = src.shape[1], dst.shape[1]
    blocks = [np.kron(np.eye(md), S.T) - np.kron(D, np.eye(ms)) for S, D in zip(src, dst)]
    if atol is None:
        atol = HOM_ATOL * max(1.0, float(np.max(np.abs(src))), float(np.max(np.abs(dst))))
    N = _null_space(np.vstack(blocks), atol)
    return N.T.reshape(-1, md, ms)


def endomorphism_algebra(actions: np.ndarray, atol: float | None = None) -> np.ndarray:
    """Basis of the commutant ``{X : X R_i = R_i X}``, shape (d, m, m)."""
    return hom_space(actions, actions, atol)


def is_isomorphic(R1: np.ndarray, R2: np.ndarray, rng: np.random.Generator, tol: float = 1e-8,
                  draws: int = 8) -> bool:
    """Random element of Hom(R1, R2) is invertible.

    Restricted actions carry the decomposition's numerical error, so the
    Hom equations are solved with a cutoff of ``tol`` times the action scale.
    """
    if R1.shape[1] != R2.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(R1))), float(np.max(np.abs(R2))))
    H = hom_space(R1, R2, atol=max(HOM_ATOL, tol) * scale)
    if len(H) == 0:
        return False
    # generic elements of Hom are invertible iff the modules are isomorphic; a
    # single draw can land near the singular locus, so keep the best of several
    best = 0.0
    for _ in range(draws):
        X = np.tensordot(_draw(rng, len(H), np.iscomplexobj(H)), H, axes=1)
        s = np.linalg.svd(X, compute_uv=False)
        best = max(best, s[-1] / s[0])
    return bool(best > np.sqrt(tol))


# ------------------------------------------------------------ decomposition


@dataclass(frozen=True)
class Decomposition:
    """Invariant subspaces (orthonormal column bases) whose direct sum is V."""

    summands: tuple[np.ndarray, ...]
    trials: int
    tol: float
    seed: int
    isomorphism_classes: tuple[int, ...] = field(default=())

    @property
    def dims(self) -> list[int]:
        return [Q.shape[1] for Q in self.summands]

    @property
    def multiplicities(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for c in self.isomorphism_classes:
            out[c] = out.get(c, 0) + 1
        return out

    @property
    def has_repeated_summands(self) -> bool:
        return any(k > 1 for k in self.multiplicities.values())


def _draw(rng: np.random.Generator, size: int, complex_: bool) -> np.ndarray:
    c = rng.standard_normal(size)
    if complex_:
        c = c + 1j * rng.standard_normal(size)
    return c


def _cluster(eigs: np.ndarray, gap: float) -> list[list[int]]:
    """Single-linkage clusters of eigenvalues closer than ``gap``."""
    n = len(eigs)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(eigs[i] - eigs[j]) <= gap:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _split_once(R: np.ndarray, rng: np.random.Generator, tol: float, complex_: bool):
    m = R.shape[1]
    End = endomorphism_algebra(R)
    if len(End) <= 1:
        return None
    E = np.tensordot(_draw(rng, len(End), complex_), End, axes=1)
    E = E / np.linalg.norm(E)
    real = not np.iscomplexobj(E)
    eigs = np.linalg.eigvals(E)
    # a defective eigenvalue with a k-by-k Jordan block scatters by about eps**(1/k);
    # the sqrt(tol) gap keeps such scatter in one group (merging true clusters only costs a retry)
    gap = np.sqrt(tol)
    groups = _cluster(eigs, gap)
    if real:
        # a real invariant subspace needs each conjugate pair in one group
        merged = True
        while merged:
            merged = False
            for gi in groups:
                for gj in groups:
                    if gi is not gj and any(abs(np.conj(eigs[a]) - eigs[b]) <= gap for a in gi for b in gj):
                        gi.extend(gj)
                        groups.remove(gj)
                        merged = True
                        break
                if merged:
                    break
    if len(groups) < 2:
        return None
    label = np.empty(m, dtype=int)
    for k, g in enumerate(groups):
        label[g] = k
    # schur's callback sees each eigenvalue again; identify its group by the nearest member
    spaces = []
    for k in range(len(groups)):
        def pick(z, k=k):
            return label[int(np.argmin(np.abs(eigs - z)))] == k

        if real:
            _, Z, sdim = scipy.linalg.schur(E, output="real", sort=lambda re, im: pick(complex(re, im)))
        else:
            _, Z, sdim = scipy.linalg.schur(E.astype(complex), output="complex", sort=pick)
        if sdim != len(groups[k]):
            return None
        spaces.append(Z[:, :sdim])
    full = np.hstack(spaces)
    s = np.linalg.svd(full, compute_uv=False)
    if s[-1] < np.sqrt(tol):
        # nearly parallel pieces: a defective eigenvalue split by rounding
        return None
    scale = max(1.0, float(np.max(np.abs(R))))
    for Q in spaces:
        resid = max(np.max(np.abs(Ri @ Q - Q @ (Q.conj().T @ Ri @ Q))) for Ri in R)
        if resid > max(tol, 1e-10) * scale * 10:
            return None
    return spaces


def _restrict(R: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return np.stack([Q.conj().T @ Ri @ Q for Ri in R])


def decompose(V: BanachModule, seed: int = 0, tol: float = 1e-8, trials: int = 32) -> Decomposition:
    """Split V into summands with no nontrivial idempotent found.

    Draws random endomorphisms, splits along their generalized eigenspaces when
    the spectrum has well-separated clusters, and recurses. A summand is
    reported indecomposable after ``trials`` consecutive draws fail to split
    it; this is evidence, not proof.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng(seed)
    complex_ = V.algebra.field == "complex" or np.iscomplexobj(V.actions)
    total_trials = 0

    def rec(R: np.ndarray) -> list[np.ndarray]:
        nonlocal total_trials
        m = R.shape[1]
        if m == 1:
            return [np.eye(1, dtype=R.dtype)]
        for _ in range(trials):
            total_trials += 1
            try:
                spaces = _split_once(R, rng, tol, complex_)
            except (np.linalg.LinAlgError, ValueError) as exc:  # retry with a fresh draw
                log.debug("eigensolver failure during split: %s", exc)
                continue
            if spaces is None:
                continue
            out = []
            for Q in spaces:
                out.extend(Q @ child for child in rec(_restrict(R, Q)))
            return out
        return [np.eye(m, dtype=R.dtype)]

    summands = rec(V.actions)
    if not complex_:
        summands = [np.real_if_close(Q, tol=1000) for Q in summands]
    summands.sort(key=lambda Q: -Q.shape[1])

    restricted = [_restrict(V.actions, Q) for Q in summands]
    classes: list[int] = []
    reps: list[np.ndarray] = []
    for Rq in restricted:
        for c, rep in enumerate(reps):
            if is_isomorphic(Rq, rep, rng, tol):
                classes.append(c)
                break
        else:
            classes.append(len(reps))
            reps.append(Rq)
    return Decomposition(tuple(summands), total_trials, tol, seed, tuple(classes))


def summand_residual(V: BanachModule, Q: np.ndarray) -> float:
    """How far the column span of Q is from being closed under every action matrix."""
    P = Q @ np.linalg.pinv(Q)
    return float(max(np.max(np.abs(Ri @ Q - P @ Ri @ Q)) for Ri in V.actions))
