"""Dense operator substrate: validation, norms, spectra, tensor products and
partial traces on finite-dimensional tensor-power spaces.

Operators are plain square ``numpy`` arrays (complex128).  Product-space
indices use base-``d`` positional encoding with the first tensor factor as the
most significant digit, so ``np.kron`` and the reshapes below agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import BadArity, DimensionOverflow, NegativeEigenvalue, NotHermitian

TOL_HERM = 1e-10
TOL_RECON = 1e-10
TOL_EIG = 1e-12

# total matrix entries; 2**22 complex128 entries is 64 MiB per matrix
MAX_ENTRIES = 2**22


def check_dimension(dim: int, max_entries: int | None = None) -> int:
    cap = MAX_ENTRIES if max_entries is None else max_entries
    if dim < 1:
        raise BadArity(f"dimension must be positive, got {dim}")
    if dim * dim > cap:
        raise DimensionOverflow(f"{dim}x{dim} operator exceeds the cap of {cap} entries")
    return dim


def as_operator(a) -> np.ndarray:
    """Coerce ``a`` to a finite square complex matrix."""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise BadArity(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("operator has non-finite entries")
    return m


def int_log(dim: int, d: int) -> int:
    """Return n with d**n == dim, or raise BadArity."""
    if d < 1:
        raise BadArity(f"single-particle dimension must be positive, got {d}")
    if d == 1:
        if dim != 1:
            raise BadArity(f"{dim} is not a power of 1")
        return 1
    n, p = 0, 1
    while p < dim:
        p *= d
        n += 1
    if p != dim:
        raise BadArity(f"{dim} is not a power of {d}")
    return n


# -- tensor indexing ---------------------------------------------------------

def flat_index(factors: Sequence[int], d: int) -> int:
    """Flat product-basis index of ``e_{x_1} (x) ... (x) e_{x_k}``."""
    idx = 0
    for x in factors:
        if not 0 <= x < d:
            raise BadArity(f"factor index {x} outside [0, {d})")
        idx = idx * d + int(x)
    return idx


def tensor_factors(index: int, d: int, k: int) -> tuple[int, ...]:
    """Inverse of :func:`flat_index`."""
    if not 0 <= index < d**k:
        raise BadArity(f"flat index {index} outside [0, {d**k})")
    out = []
    for _ in range(k):
        index, r = divmod(index, d)
        out.append(r)
    return tuple(reversed(out))


def basis_digits(d: int, k: int) -> np.ndarray:
    """Array of shape (d**k, k): row ``i`` holds the factors of flat index ``i``."""
    grids = np.indices((d,) * k).reshape(k, -1)
    return grids.T.copy()


# -- spectra and norms -------------------------------------------------------

def is_hermitian(a, tol: float = TOL_HERM) -> bool:
    m = as_operator(a)
    scale = max(operator_norm(m), np.finfo(float).tiny)
    return float(np.max(np.abs(m - m.conj().T))) <= tol * scale


def hermitian_spectrum(a, tol: float = TOL_HERM) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues sorted in descending order.
    eigenbasis : ndarray
        Unitary matrix whose columns are the matching eigenvectors, so that
        ``a == U @ diag(eigenvalues) @ U.conj().T``.
    """
    m = as_operator(a)
    if not is_hermitian(m, tol):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    order = np.argsort(vals, kind="stable")[::-1]
    return vals[order], vecs[:, order]


def operator_norm(a) -> float:
    """Largest singular value."""
    m = np.asarray(a, dtype=complex)
    if m.size == 0 or not np.any(m):
        return 0.0
    return float(np.linalg.norm(m, 2))


def trace_norm(a) -> float:
    """Sum of singular values."""
    m = np.asarray(a, dtype=complex)
    if m.size == 0 or not np.any(m):
        return 0.0
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


# -- products and partial traces ---------------------------------------------

def tensor_product(a, b, max_entries: int | None = None) -> np.ndarray:
    a, b = as_operator(a), as_operator(b)
    check_dimension(a.shape[0] * b.shape[0], max_entries)
    return np.kron(a, b)


def tensor_power(a, k: int, max_entries: int | None = None) -> np.ndarray:
    a = as_operator(a)
    if k < 1:
        raise BadArity(f"tensor power needs k >= 1, got {k}")
    check_dimension(a.shape[0] ** k, max_entries)
    return reduce(np.kron, [a] * k)


def kron_all(factors: Iterable[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, factors)


def partial_trace_last(K, d: int, n: int, k: int) -> np.ndarray:
    """Trace out the last ``n - k`` factors of an operator on ``(C^d)^{(x) n}``.

    The result ``L`` is the unique operator with
    ``Tr[(C (x) I) K] == Tr[C L]`` for every ``C`` on the first ``k`` factors.
    ``k == n`` returns a copy of ``K``.
    """
    K = as_operator(K)
    if not 1 <= k <= n:
        raise BadArity(f"need 1 <= k <= n, got k={k}, n={n}")
    if K.shape[0] != d**n:
        raise BadArity(f"operator dimension {K.shape[0]} != {d}**{n}")
    if k == n:
        return K.copy()
    a, b = d**k, d ** (n - k)
    return np.trace(K.reshape(a, b, a, b), axis1=1, axis2=3)


# -- single-particle states --------------------------------------------------

@dataclass(frozen=True)
class SingleParticleState:
    """Nonnegative Hermitian operator on the single-particle space.

    ``eigenvalues`` are descending and clamped at zero; ``eigenbasis`` holds the
    eigenvectors as columns.
    """

    base: np.ndarray
    eigenvalues: np.ndarray
    eigenbasis: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, a) -> "SingleParticleState":
        m = as_operator(a)
        vals, vecs = hermitian_spectrum(m)
        scale = max(operator_norm(m), 1.0)
        if vals[-1] < -TOL_EIG * scale:
            raise NegativeEigenvalue(f"eigenvalue {vals[-1]:.3e} is negative beyond tolerance")
        vals = np.where(vals < 0, 0.0, vals)
        recon = (vecs * vals) @ vecs.conj().T
        if np.max(np.abs(recon - m)) > TOL_RECON * scale:
            raise NotHermitian("spectral reconstruction does not match the input")
        return cls(m, vals, vecs)

    @classmethod
    def from_eigenvalues(cls, eigenvalues, eigenbasis=None) -> "SingleParticleState":
        lam = np.asarray(eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise BadArity("eigenvalues must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite")
        if lam.min() < -TOL_EIG * max(1.0, float(np.abs(lam).max())):
            raise NegativeEigenvalue(f"eigenvalue {lam.min():.3e} is negative beyond tolerance")
        lam = np.where(lam < 0, 0.0, lam)
        order = np.argsort(lam, kind="stable")[::-1]
        lam = lam[order]
        if eigenbasis is None:
            u = np.eye(lam.size, dtype=complex)[:, order]
        else:
            u = as_operator(eigenbasis)[:, order]
        base = (u * lam) @ u.conj().T
        return cls(base, lam, u)

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self.base

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())

    @property
    def norm(self) -> float:
        return float(self.eigenvalues[0])

    def power(self, m: int) -> np.ndarray:
        """Matrix power ``rho**m`` evaluated through the eigenbasis."""
        u = self.eigenbasis
        return (u * self.eigenvalues**m) @ u.conj().T

    def apply(self, f) -> np.ndarray:
        """Spectral calculus: ``U diag(f(lambda)) U^dagger``."""
        u = self.eigenbasis
        return (u * f(self.eigenvalues)) @ u.conj().T


def as_state(rho) -> SingleParticleState:
    """Accept a state, a matrix, or a 1-d eigenvalue list (diagonal state)."""
    if isinstance(rho, SingleParticleState):
        return rho
    arr = np.asarray(rho)
    if arr.ndim == 1:
        return SingleParticleState.from_eigenvalues(arr)
    return SingleParticleState.from_matrix(arr)


def random_state(d: int, rng: np.random.Generator) -> SingleParticleState:
    """Density matrix ``G^dagger G / Tr(G^dagger G)`` for complex Gaussian ``G``."""
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g.conj().T @ g
    m = m / np.trace(m).real
    return SingleParticleState.from_matrix((m + m.conj().T) / 2)
