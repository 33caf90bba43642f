"""Reduced density operators of product states ``rho^{wedge n}`` / ``rho^{vee n}``.

Three routes compute the same operator ``L^k_n rho^{(.)n}``:

* brute force: build the n-particle operator and partially trace it;
* recurrence: the double recursion in ``(n, k)`` that only ever touches
  k-particle operators;
* explicit: the signed composition sum weighted by the normalisation
  coefficients ``xi``.

:func:`spectral_contraction` evaluates the explicit sum in the eigenbasis of
``rho``, where it is diagonal on (anti)symmetrized occupation vectors; this is
what makes large mode counts reachable.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import BadArity, DegenerateState
from .operators import (
    SingleParticleState,
    as_state,
    basis_digits,
    check_dimension,
    kron_all,
    partial_trace_last,
)
from .symmetry import Permutation, Sector, graded_power, graded_product, symmetrizer


class Path(str, enum.Enum):
    BRUTE_FORCE = "bruteforce"
    RECURRENCE = "recurrence"
    EXPLICIT = "explicit"

    @classmethod
    def coerce(cls, value) -> "Path":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "").replace("-", "")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown path {value!r}") from None


# -- normalisation coefficients ----------------------------------------------

@dataclass(frozen=True)
class XiTable:
    """``xi_s = Tr rho^{wedge s}`` (Fermi) or ``Tr rho^{vee s}`` (Bose), s = 0..N."""

    sector: Sector
    values: np.ndarray

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, s: int) -> float:
        if s < 0:
            raise BadArity(f"negative index {s}")
        return float(self.values[s])

    @property
    def ratios(self) -> np.ndarray:
        """``s_n = xi_{n-1} / xi_n`` for n = 1..N; NaN where ``xi_n == 0``."""
        num, den = self.values[:-1], self.values[1:]
        out = np.full(len(den), np.nan)
        ok = den > 0
        out[ok] = num[ok] / den[ok]
        return out

    def ratio(self, n: int) -> float:
        if not 1 <= n <= self.N:
            raise BadArity(f"ratio index {n} outside 1..{self.N}")
        if not self.values[n] > 0:
            raise DegenerateState(f"xi_{n} = 0, ratio s_{n} is undefined")
        return float(self.values[n - 1] / self.values[n])


def _eigenvalues(rho) -> np.ndarray:
    if isinstance(rho, SingleParticleState):
        return rho.eigenvalues
    arr = np.asarray(rho)
    if arr.ndim == 1:
        return SingleParticleState.from_eigenvalues(arr).eigenvalues
    return as_state(arr).eigenvalues


def elementary_symmetric(lam, N: int) -> np.ndarray:
    """e_0..e_N of ``lam`` by adding one variable at a time (no cancellation for lam >= 0)."""
    e = np.zeros(N + 1)
    e[0] = 1.0
    for x in lam:
        e[1:] = e[1:] + x * e[:-1]
    return e


def complete_homogeneous(lam, N: int) -> np.ndarray:
    h = np.zeros(N + 1)
    h[0] = 1.0
    for x in lam:
        for j in range(1, N + 1):
            h[j] += x * h[j - 1]
    return h


def newton_coefficients(lam, N: int, sector) -> np.ndarray:
    """Same coefficients via Newton's identities on the power sums.

    ``n e_n = sum_i (-1)^{i-1} e_{n-i} p_i`` and ``n h_n = sum_i h_{n-i} p_i``.
    The Fermi recursion alternates in sign and loses accuracy for long, spread
    spectra; it is kept as an independent cross-check.
    """
    sector = Sector.coerce(sector)
    lam = np.asarray(lam, dtype=float)
    p = np.array([0.0] + [float(np.sum(lam**i)) for i in range(1, N + 1)])
    out = np.zeros(N + 1)
    out[0] = 1.0
    for n in range(1, N + 1):
        acc = 0.0
        for i in range(1, n + 1):
            sgn = (-1) ** (i - 1) if sector.is_fermi else 1
            acc += sgn * out[n - i] * p[i]
        out[n] = acc / n
    if sector.is_fermi:
        out[len(lam) + 1:] = 0.0
    return out


def xi_table(rho, N: int, sector, method: str = "summation") -> XiTable:
    """Normalisation coefficients from the eigenvalues of ``rho``.

    ``method="summation"`` (default) builds e_n / h_n by the positive-term
    one-variable-at-a-time recursion; ``method="newton"`` uses power sums.
    """
    sector = Sector.coerce(sector)
    if N < 1:
        raise BadArity(f"N must be >= 1, got {N}")
    lam = _eigenvalues(rho)
    if method == "summation":
        vals = elementary_symmetric(lam, N) if sector.is_fermi else complete_homogeneous(lam, N)
    elif method == "newton":
        vals = newton_coefficients(lam, N, sector)
    else:
        raise ValueError(f"unknown method {method!r}")
    vals.setflags(write=False)
    return XiTable(sector, vals)


def _xi_for(state, n: int, sector: Sector, xi: XiTable | None) -> XiTable:
    if xi is None or xi.N < n:
        return xi_table(state, n, sector)
    if xi.sector is not sector:
        raise BadArity(f"xi table is for {xi.sector.value}, requested {sector.value}")
    return xi


# -- results -----------------------------------------------------------------

@dataclass(frozen=True)
class ContractionResult:
    """k-particle operator ``L^k_n`` of a product state, with its metadata.

    ``matrix`` is the plain contraction: trace ``xi_n`` when unnormalized,
    trace 1 when normalized.  :attr:`scaled` gives ``C(n, k) * matrix``.
    """

    matrix: np.ndarray = field(repr=False)
    n: int
    k: int
    sector: Sector
    path: Path
    normalized: bool
    xi_n: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def scaled(self) -> np.ndarray:
        return math.comb(self.n, self.k) * self.matrix

    def metadata(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "sector": self.sector.value,
            "path": self.path.value,
            "normalized": self.normalized,
            "xi_n": self.xi_n,
        }


def _check_nk(n: int, k: int, allow_equal: bool = True):
    if k < 1 or n < 1 or k > n or (k == n and not allow_equal):
        rel = "<=" if allow_equal else "<"
        raise BadArity(f"need 1 <= k {rel} n, got n={n}, k={k}")


def _finish(scaled, state, n, k, sector, path, normalized, xi) -> ContractionResult:
    xi_n = xi[n]
    mat = scaled / math.comb(n, k)
    if normalized:
        if not xi_n > 0:
            raise DegenerateState(f"xi_{n} = 0: no normalized {sector.value} state with {n} particles")
        mat = mat / xi_n
    return ContractionResult(mat, n, k, sector, path, normalized, xi_n)


# -- brute force -------------------------------------------------------------

def contract_bruteforce(rho, n: int, k: int, sector, normalized: bool = False) -> ContractionResult:
    """Build ``P^(n) rho^{(x) n}`` on the full n-particle space and trace out n-k factors.

    Normalisation uses the trace of the constructed operator; ``DegenerateState``
    is raised when the xi table reports ``xi_n == 0``.
    """
    sector = Sector.coerce(sector)
    _check_nk(n, k)
    state = as_state(rho)
    d = state.dim
    check_dimension(d**n)
    big = graded_power(state, n, sector)
    xi_n = float(np.trace(big).real)
    mat = partial_trace_last(big, d, n, k)
    if normalized:
        if not xi_table(state, n, sector)[n] > 0:
            raise DegenerateState(f"xi_{n} = 0: no normalized {sector.value} state with {n} particles")
        mat = mat / xi_n
    return ContractionResult(mat, n, k, sector, Path.BRUTE_FORCE, normalized, xi_n)


# -- recurrence --------------------------------------------------------------

def recurrence_table(rho, n: int, k: int, sector, xi: XiTable | None = None) -> dict:
    """All scaled contractions ``C(m, j) L^j_m rho^{(.)m}`` needed for (n, k).

    Keys are ``(m, j)``.  The first column follows
    ``m L^1_m = xi_{m-1} rho -/+ (m-1) (L^1_{m-1}) rho``; higher columns use
    ``R(m, j) = R(m-1, j-1) (.) rho -/+ R(m-1, j) (I^{j-1} (x) rho) P^(j)``
    with ``R(j, j) = rho^{(.) j}``; minus for Fermi, plus for Bose.
    """
    sector = Sector.coerce(sector)
    state = as_state(rho)
    xi = _xi_for(state, n, sector, xi)
    d = state.dim
    m_rho = state.matrix
    sgn = -1.0 if sector.is_fermi else 1.0

    table: dict[tuple[int, int], np.ndarray] = {(1, 1): m_rho.copy()}
    # column j is needed for m <= n - (k - j)
    for m in range(2, n - k + 2):
        table[(m, 1)] = xi[m - 1] * m_rho + sgn * table[(m - 1, 1)] @ m_rho
    for j in range(2, k + 1):
        check_dimension(d**j)
        table[(j, j)] = graded_power(state, j, sector)
        right = np.kron(np.eye(d ** (j - 1)), m_rho) @ symmetrizer(sector, d, j)
        for m in range(j + 1, n - k + j + 1):
            table[(m, j)] = (
                graded_product(table[(m - 1, j - 1)], m_rho, sector, d)
                + sgn * table[(m - 1, j)] @ right
            )
    return table


def contract_recurrence(
    rho, n: int, k: int, sector, xi: XiTable | None = None, normalized: bool = False
) -> ContractionResult:
    sector = Sector.coerce(sector)
    _check_nk(n, k, allow_equal=False)
    state = as_state(rho)
    xi = _xi_for(state, n, sector, xi)
    check_dimension(state.dim**k)
    table = recurrence_table(state, n, k, sector, xi)
    return _finish(table[(n, k)], state, n, k, sector, Path.RECURRENCE, normalized, xi)


# -- explicit composition sum ------------------------------------------------

def compositions(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """All ``(i_1, ..., i_k)`` with ``i_j >= 1`` and ``sum <= n``, lexicographically."""
    if k == 0:
        yield ()
        return
    for first in range(1, n - (k - 1) + 1):
        for rest in compositions(n - first, k - 1):
            yield (first,) + rest


def composition_weight(parts_total: int, n: int, k: int, sector: Sector, xi: XiTable) -> float:
    w = xi[n - parts_total]
    if sector.is_fermi and (k + parts_total) % 2:
        w = -w
    return w


def contract_explicit(
    rho, n: int, k: int, sector, xi: XiTable | None = None, normalized: bool = False
) -> ContractionResult:
    """Signed composition sum of graded products of matrix powers of ``rho``.

    ``C(n,k) L^k_n = sum_i w(|i|) rho^{i_1} (.) ... (.) rho^{i_k}`` with
    ``w(s) = xi_{n-s} (-1)^{k+s}`` (Fermi) or ``xi_{n-s}`` (Bose).  Because the
    graded product chain equals ``P (rho^{i_1} (x) ... (x) rho^{i_k}) P``, the
    tensor products are accumulated first (in lexicographic order) and
    projected once.
    """
    sector = Sector.coerce(sector)
    _check_nk(n, k)
    state = as_state(rho)
    xi = _xi_for(state, n, sector, xi)
    d = state.dim
    check_dimension(d**k)
    powers = {i: state.power(i) for i in range(1, n - k + 2)}
    acc = np.zeros((d**k, d**k), dtype=complex)
    for parts in compositions(n, k):
        w = composition_weight(sum(parts), n, k, sector, xi)
        if w == 0.0:
            continue
        acc += w * kron_all(powers[i] for i in parts)
    p = symmetrizer(sector, d, k) if k > 1 else np.eye(d)
    return _finish(p @ acc @ p, state, n, k, sector, Path.EXPLICIT, normalized, xi)


_PATHS = {
    Path.BRUTE_FORCE: lambda s, n, k, sec, xi, norm: contract_bruteforce(s, n, k, sec, norm),
    Path.RECURRENCE: contract_recurrence,
    Path.EXPLICIT: contract_explicit,
}


def contract(rho, n: int, k: int, sector, path="explicit", normalized: bool = False,
             xi: XiTable | None = None) -> ContractionResult:
    return _PATHS[Path.coerce(path)](rho, n, k, Sector.coerce(sector), xi, normalized)


def sigma_k(rho, n: int, k: int, sector, path="explicit", xi: XiTable | None = None) -> ContractionResult:
    """Normalized k-particle reduced density operator of the n-particle product state."""
    return contract(rho, n, k, sector, path, normalized=True, xi=xi)


# -- eigenbasis form ---------------------------------------------------------

def project_tensor(t: np.ndarray, sector) -> np.ndarray:
    """Apply the (anti)symmetrizer to a vector stored as a k-index tensor."""
    sector = Sector.coerce(sector)
    k = t.ndim
    acc = np.zeros_like(t)
    for perm in itertools.permutations(range(k)):
        sign = Permutation(perm).sign if sector.is_fermi else 1
        acc += sign * np.transpose(t, perm)
    return acc / math.factorial(k)


def project_vector(v, d: int, k: int, sector) -> np.ndarray:
    return project_tensor(np.asarray(v, dtype=complex).reshape((d,) * k), sector).reshape(-1)


def occupation_multisets(d: int, k: int, sector) -> np.ndarray:
    """Sorted index tuples labelling the eigenvectors of k-particle contractions.

    Fermi: strictly increasing (k-subsets); Bose: nondecreasing (multisets).
    """
    sector = Sector.coerce(sector)
    gen = (itertools.combinations(range(d), k) if sector.is_fermi
           else itertools.combinations_with_replacement(range(d), k))
    out = np.array(list(gen), dtype=np.int64)
    return out.reshape(-1, k)


@dataclass(frozen=True)
class SpectralContraction:
    """k-particle contraction given by its spectral decomposition.

    In the eigenbasis ``U`` of ``rho`` the operator equals
    ``sum_M weights[M] |M><M|`` where ``|M>`` is the normalized
    (anti)symmetrization of ``e_{M_1} (x) ... (x) e_{M_k}``.
    """

    sector: Sector
    n: int
    k: int
    multisets: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    eigenbasis: np.ndarray = field(repr=False)
    normalized: bool = True
    xi_n: float = float("nan")

    @property
    def d(self) -> int:
        return self.eigenbasis.shape[0]

    @property
    def trace(self) -> float:
        return float(np.sum(self.weights))

    @property
    def operator_norm(self) -> float:
        return float(np.max(np.abs(self.weights))) if self.weights.size else 0.0

    def with_weights(self, weights) -> "SpectralContraction":
        return SpectralContraction(self.sector, self.n, self.k, self.multisets,
                                   np.asarray(weights, dtype=float), self.eigenbasis,
                                   self.normalized, self.xi_n)

    def diagonal_tensor(self) -> np.ndarray:
        """Weight of each product basis vector (in the eigenbasis), shape ``(d,) * k``."""
        d, k = self.d, self.k
        out = np.zeros((d,) * k)
        for perm in itertools.permutations(range(k)):
            out[tuple(self.multisets[:, list(perm)].T)] = self.weights
        return out

    def matvec(self, v) -> np.ndarray:
        """Apply the operator to a vector of length ``d**k`` without materializing it."""
        d, k = self.d, self.k
        u = self.eigenbasis
        t = np.asarray(v, dtype=complex).reshape((d,) * k)
        for axis in range(k):
            t = np.moveaxis(np.tensordot(u.conj().T, t, axes=([1], [axis])), 0, axis)
        t = self.diagonal_tensor() * project_tensor(t, self.sector)
        for axis in range(k):
            t = np.moveaxis(np.tensordot(u, t, axes=([1], [axis])), 0, axis)
        return t.reshape(-1)

    def to_dense(self) -> np.ndarray:
        """Materialize on ``(C^d)^{(x) k}``; only sensible for small ``d**k``."""
        d, k = self.d, self.k
        check_dimension(d**k)
        lookup = {tuple(m): w for m, w in zip(self.multisets.tolist(), self.weights)}
        digits = basis_digits(d, k)
        diag = np.array([lookup.get(tuple(sorted(row)), 0.0) for row in digits.tolist()])
        p = symmetrizer(self.sector, d, k) if k > 1 else np.eye(d)
        inner = diag[:, None] * p
        u = kron_all([self.eigenbasis] * k)
        return u @ inner @ u.conj().T


def _homogeneous_columns(values: np.ndarray, degree: int) -> np.ndarray:
    """h_0..h_degree of each row of ``values`` (rows are variable lists)."""
    h = np.zeros((values.shape[0], degree + 1))
    h[:, 0] = 1.0
    for r in range(values.shape[1]):
        x = values[:, r]
        for j in range(1, degree + 1):
            h[:, j] += x * h[:, j - 1]
    return h


def spectral_contraction(
    rho, n: int, k: int, sector, xi: XiTable | None = None, normalized: bool = True
) -> SpectralContraction:
    """Explicit composition sum evaluated on each occupation multiset.

    For the eigenvector ``|M>`` the product ``rho^{i_1} (x) ... (x) rho^{i_k}``
    acts as ``prod_r lambda_{M_r}^{i_r}``; summing over compositions with total
    ``m`` gives ``prod(lambda_M) h_{m-k}(lambda_M)``, so

        C(n,k) L^k_n |M> = sum_m w(m) prod(lambda_M) h_{m-k}(lambda_M) |M>.
    """
    sector = Sector.coerce(sector)
    _check_nk(n, k)
    state = as_state(rho)
    xi = _xi_for(state, n, sector, xi)
    lam = state.eigenvalues
    multisets = occupation_multisets(state.dim, k, sector)
    vals = lam[multisets]
    h = _homogeneous_columns(vals, n - k)
    coeff = np.array([composition_weight(m, n, k, sector, xi) for m in range(k, n + 1)])
    weights = np.prod(vals, axis=1) * (h @ coeff) / math.comb(n, k)
    if normalized:
        if not xi[n] > 0:
            raise DegenerateState(f"xi_{n} = 0: no normalized {sector.value} state with {n} particles")
        weights = weights / xi[n]
    return SpectralContraction(sector, n, k, multisets, weights, state.eigenbasis, normalized, xi[n])
