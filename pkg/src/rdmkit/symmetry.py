"""Permutations of tensor factors, (anti)symmetrizers, graded products and the
cycle-decomposition trace formula.

Permutations are 0-based here: ``Permutation((1, 2, 0))`` sends 0->1, 1->2,
2->0.  Use :meth:`Permutation.from_one_based` when transcribing textbook
notation.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import BadArity, DimensionOverflow
from .operators import (
    as_operator,
    basis_digits,
    check_dimension,
    int_log,
    tensor_power,
)

MAX_PROJECTOR_ORDER = 8
MAX_TRACE_ORDER = 10


class Sector(str, enum.Enum):
    """Particle statistics: Fermi selects the antisymmetrizer, Bose the symmetrizer."""

    FERMI = "fermi"
    BOSE = "bose"

    @classmethod
    def coerce(cls, value) -> "Sector":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown sector {value!r}; expected 'fermi' or 'bose'") from None

    @property
    def is_fermi(self) -> bool:
        return self is Sector.FERMI

    def weight(self, perm: "Permutation") -> int:
        return perm.sign if self.is_fermi else 1


@dataclass(frozen=True)
class CycleDecomposition:
    """Disjoint cycles of a permutation.

    Each cycle ``(l_1, ..., l_q)`` satisfies ``pi(l_s) = l_{s+1}`` and
    ``pi(l_q) = l_1``; cycles start at their smallest element and are listed
    in order of that element.
    """

    cycles: tuple[tuple[int, ...], ...]

    @property
    def count(self) -> int:
        return len(self.cycles)

    @property
    def size(self) -> int:
        return sum(len(c) for c in self.cycles)

    @property
    def sign(self) -> int:
        return -1 if (self.size - self.count) % 2 else 1


@dataclass(frozen=True)
class Permutation:
    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(len(images))):
            raise BadArity(f"{images} is not a permutation of 0..{len(images) - 1}")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, k: int) -> "Permutation":
        return cls(tuple(range(k)))

    @classmethod
    def from_one_based(cls, images: Sequence[int]) -> "Permutation":
        return cls(tuple(i - 1 for i in images))

    def __len__(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def compose(self, other: "Permutation") -> "Permutation":
        """``(self o other)(i) = self(other(i))``."""
        if len(self) != len(other):
            raise BadArity("cannot compose permutations of different sizes")
        return Permutation(tuple(self.images[j] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self)
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    @property
    def sign(self) -> int:
        return cycle_decompose(self).sign


def all_permutations(k: int) -> Iterator[Permutation]:
    """All of S_k in lexicographic order of the image tuples."""
    for images in itertools.permutations(range(k)):
        yield Permutation(images)


def cycle_decompose(perm: Permutation) -> CycleDecomposition:
    seen = [False] * len(perm)
    cycles = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycle = []
        i = start
        while not seen[i]:
            seen[i] = True
            cycle.append(i)
            i = perm.images[i]
        cycles.append(tuple(cycle))
    return CycleDecomposition(tuple(cycles))


def _parity(images: Sequence[int]) -> int:
    seen = [False] * len(images)
    transpositions = 0
    for start in range(len(images)):
        i, length = start, 0
        while not seen[i]:
            seen[i] = True
            i = images[i]
            length += 1
        if length:
            transpositions += length - 1
    return -1 if transpositions % 2 else 1


# -- operators on the tensor power -------------------------------------------

def _target_indices(images: tuple[int, ...], digits: np.ndarray, d: int) -> np.ndarray:
    n = len(images)
    inv = np.empty(n, dtype=int)
    inv[list(images)] = np.arange(n)
    powers = d ** np.arange(n - 1, -1, -1)
    return digits[:, inv] @ powers


def permutation_operator(perm: Permutation, d: int, n: int | None = None) -> np.ndarray:
    """Unitary that moves tensor factor ``i`` to slot ``perm(i)``.

    The basis vector ``e_{x_1} (x) ... (x) e_{x_n}`` is mapped to
    ``e_{x_{pi^-1(1)}} (x) ... (x) e_{x_{pi^-1(n)}}``, which makes the map a
    group homomorphism: ``P(pi o sigma) = P(pi) P(sigma)``.
    """
    if n is None:
        n = len(perm)
    if len(perm) != n:
        raise BadArity(f"permutation acts on {len(perm)} points, expected {n}")
    dim = check_dimension(d**n)
    digits = basis_digits(d, n)
    out = np.zeros((dim, dim), dtype=complex)
    out[_target_indices(perm.images, digits, d), np.arange(dim)] = 1.0
    return out


@lru_cache(maxsize=64)
def _projector(sector: Sector, d: int, n: int) -> np.ndarray:
    dim = d**n
    if sector.is_fermi and n > d:
        out = np.zeros((dim, dim), dtype=complex)
    else:
        digits = basis_digits(d, n)
        cols = np.arange(dim)
        acc = np.zeros((dim, dim))
        for images in itertools.permutations(range(n)):
            w = _parity(images) if sector.is_fermi else 1
            acc[_target_indices(images, digits, d), cols] += w
        out = acc.astype(complex) / math.factorial(n)
    out.setflags(write=False)
    return out


def symmetrizer(sector, d: int, n: int) -> np.ndarray:
    """Projector onto the antisymmetric (Fermi) or symmetric (Bose) subspace.

    Built as ``(1/n!) sum_pi sgn(pi)^[Fermi] P(pi)``; the returned array is
    cached and read-only.
    """
    sector = Sector.coerce(sector)
    if n < 1:
        raise BadArity(f"projector order must be >= 1, got {n}")
    if n > MAX_PROJECTOR_ORDER:
        raise DimensionOverflow(f"projector order {n} exceeds cap {MAX_PROJECTOR_ORDER}")
    check_dimension(d**n)
    return _projector(sector, d, n)


def graded_product(b, c, sector, d: int) -> np.ndarray:
    """``P (b (x) c) P`` with ``P`` the projector of the combined order."""
    b, c = as_operator(b), as_operator(c)
    k, m = int_log(b.shape[0], d), int_log(c.shape[0], d)
    p = symmetrizer(sector, d, k + m)
    return p @ np.kron(b, c) @ p


def graded_power(rho, n: int, sector) -> np.ndarray:
    """``P^(n) rho^{(x) n}``: the n-fold wedge (Fermi) or vee (Bose) power."""
    sector = Sector.coerce(sector)
    if hasattr(rho, "eigenvalues"):
        m = rho.matrix
    else:
        m = as_operator(rho)
    d = m.shape[0]
    if n < 1:
        raise BadArity(f"power must be >= 1, got {n}")
    if n == 1:
        return m.copy()
    check_dimension(d**n)
    if sector.is_fermi and n > d:
        return np.zeros((d**n, d**n), dtype=complex)
    return symmetrizer(sector, d, n) @ tensor_power(m, n)


def sector_trace(bs: Sequence, sector) -> complex:
    """``k! Tr[(B_1 (x) ... (x) B_k) P^(k)]`` without forming the tensor product.

    Each permutation contributes ``sgn(pi)^[Fermi]`` times the product, over its
    cycles ``(l_1, ..., l_q)``, of ``Tr(B_{l_1} B_{l_2} ... B_{l_q})``.
    Summation follows the lexicographic order of S_k, so results are
    reproducible bit for bit.
    """
    sector = Sector.coerce(sector)
    mats = [as_operator(b) for b in bs]
    k = len(mats)
    if k < 1:
        raise BadArity("need at least one operator")
    if k > MAX_TRACE_ORDER:
        raise BadArity(f"order {k} exceeds cap {MAX_TRACE_ORDER}")
    d = mats[0].shape[0]
    if any(b.shape[0] != d for b in mats):
        raise BadArity("all operators must act on the same single-particle space")

    cycle_traces: dict[tuple[int, ...], complex] = {}

    def cycle_trace(cycle: tuple[int, ...]) -> complex:
        if cycle not in cycle_traces:
            prod = mats[cycle[0]]
            for i in cycle[1:]:
                prod = prod @ mats[i]
            cycle_traces[cycle] = complex(np.trace(prod))
        return cycle_traces[cycle]

    total = 0j
    for perm in all_permutations(k):
        dec = cycle_decompose(perm)
        term = complex(dec.sign if sector.is_fermi else 1)
        for cycle in dec.cycles:
            term *= cycle_trace(cycle)
        total += term
    return total


def subspace_dimension(sector, d: int, n: int) -> int:
    sector = Sector.coerce(sector)
    return math.comb(d, n) if sector.is_fermi else math.comb(d + n - 1, n)


__all__ = [
    "Sector",
    "Permutation",
    "CycleDecomposition",
    "all_permutations",
    "cycle_decompose",
    "permutation_operator",
    "symmetrizer",
    "graded_product",
    "graded_power",
    "sector_trace",
    "subspace_dimension",
]
