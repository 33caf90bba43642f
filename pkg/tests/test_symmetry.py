import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_matrix
from rdmkit.errors import BadArity, DimensionOverflow
from rdmkit.operators import SingleParticleState, random_state, tensor_power
from rdmkit.symmetry import (
    Permutation,
    Sector,
    all_permutations,
    cycle_decompose,
    graded_power,
    graded_product,
    permutation_operator,
    sector_trace,
    subspace_dimension,
    symmetrizer,
)

perms = st.integers(1, 6).flatmap(lambda k: st.permutations(list(range(k)))).map(Permutation)


def brute_sector_trace(bs, sector):
    d, k = bs[0].shape[0], len(bs)
    big = bs[0]
    for b in bs[1:]:
        big = np.kron(big, b)
    return math.factorial(k) * np.trace(big @ symmetrizer(sector, d, k))


# -- permutations ------------------------------------------------------------

def test_identity_operator():
    np.testing.assert_array_equal(permutation_operator(Permutation.identity(3), 2), np.eye(8))


def test_swap_operator():
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    np.testing.assert_array_equal(permutation_operator(Permutation((1, 0)), 2), swap)


def test_operator_moves_factor_i_to_slot_pi_i(rng):
    # e_{x_1} (x) e_{x_2} (x) e_{x_3} with pi = (0->1, 1->2, 2->0)
    pi = Permutation((1, 2, 0))
    vecs = [np.eye(3)[i] for i in (0, 1, 2)]
    out = permutation_operator(pi, 3) @ np.kron(np.kron(vecs[0], vecs[1]), vecs[2])
    inv = pi.inverse()
    expect = np.kron(np.kron(vecs[inv(0)], vecs[inv(1)]), vecs[inv(2)])
    np.testing.assert_array_equal(out, expect)


@given(st.permutations(list(range(3))), st.permutations(list(range(3))))
def test_operator_homomorphism(a, b):
    pa, pb = Permutation(tuple(a)), Permutation(tuple(b))
    lhs = permutation_operator(pa.compose(pb), 2)
    np.testing.assert_array_equal(lhs, permutation_operator(pa, 2) @ permutation_operator(pb, 2))


def test_permutation_validation():
    with pytest.raises(BadArity):
        Permutation((0, 0, 1))
    assert Permutation.from_one_based((2, 1, 3)) == Permutation((1, 0, 2))
    with pytest.raises(BadArity):
        permutation_operator(Permutation((1, 0)), 2, n=3)


def test_cycle_examples():
    ident = cycle_decompose(Permutation.identity(3))
    assert ident.cycles == ((0,), (1,), (2,)) and ident.count == 3 and ident.sign == 1
    three = cycle_decompose(Permutation.from_one_based((2, 3, 1)))
    assert three.cycles == ((0, 1, 2),) and three.count == 1 and three.sign == 1
    swap = cycle_decompose(Permutation.from_one_based((2, 1, 3)))
    assert swap.cycles == ((0, 1), (2,)) and swap.count == 2 and swap.sign == -1


@given(perms)
def test_cycle_structure(p):
    dec = cycle_decompose(p)
    flat = sorted(i for c in dec.cycles for i in c)
    assert flat == list(range(len(p)))
    for cyc in dec.cycles:
        for s, l in enumerate(cyc):
            assert p(l) == cyc[(s + 1) % len(cyc)]
    # sign from inversion count
    inversions = sum(1 for i, j in itertools.combinations(range(len(p)), 2) if p(i) > p(j))
    assert dec.sign == (-1) ** inversions == (-1) ** (len(p) - dec.count)


@given(perms, st.data())
def test_compose_inverse(p, data):
    q = Permutation(tuple(data.draw(st.permutations(list(range(len(p)))))))
    assert p.compose(p.inverse()) == Permutation.identity(len(p))
    assert p.compose(q).sign == p.sign * q.sign


def test_all_permutations_lexicographic():
    got = [p.images for p in all_permutations(3)]
    assert got == sorted(got) and len(got) == 6


# -- projectors --------------------------------------------------------------

def test_projector_n1_is_identity():
    for sector in Sector:
        np.testing.assert_array_equal(symmetrizer(sector, 3, 1), np.eye(3))


def test_fermi_two_modes_two_particles():
    a = symmetrizer("fermi", 2, 2)
    v = np.array([0, 1, -1, 0]) / np.sqrt(2)
    np.testing.assert_allclose(a, np.outer(v, v), atol=1e-15)
    assert np.trace(a).real == pytest.approx(1)


def test_bose_trace():
    assert np.trace(symmetrizer("bose", 2, 2)).real == pytest.approx(3)


@pytest.mark.parametrize("sector", list(Sector))
@pytest.mark.parametrize("d,n", [(d, n) for d in (1, 2, 3) for n in range(1, 6)])
def test_projector_laws(sector, d, n):
    p = symmetrizer(sector, d, n)
    np.testing.assert_allclose(p @ p, p, atol=1e-10)
    np.testing.assert_allclose(p, p.conj().T, atol=1e-10)
    assert np.trace(p).real == pytest.approx(subspace_dimension(sector, d, n), abs=1e-9)


def test_projector_cap():
    with pytest.raises(DimensionOverflow):
        symmetrizer("bose", 1, 9)
    with pytest.raises(DimensionOverflow):
        symmetrizer("bose", 5, 8)


def test_projector_is_read_only():
    p = symmetrizer("fermi", 2, 3)
    with pytest.raises(ValueError):
        p[0, 0] = 1.0


# -- graded products ---------------------------------------------------------

def test_graded_product_of_identities():
    for sector in Sector:
        np.testing.assert_allclose(graded_product(np.eye(3), np.eye(3), sector, 3), symmetrizer(sector, 3, 2))


def test_graded_product_associativity(rng):
    rho = random_state(2, rng).matrix
    lhs = graded_product(graded_product(rho, rho, "fermi", 2), rho, "fermi", 2)
    a3 = symmetrizer("fermi", 2, 3)
    np.testing.assert_allclose(lhs, a3 @ tensor_power(rho, 3) @ a3, atol=1e-14)
    lhs = graded_product(graded_product(rho, rho, "bose", 2), rho, "bose", 2)
    s3 = symmetrizer("bose", 2, 3)
    np.testing.assert_allclose(lhs, s3 @ tensor_power(rho, 3) @ s3, atol=1e-14)


def test_graded_power_examples():
    half = SingleParticleState.from_eigenvalues([0.5, 0.5])
    np.testing.assert_allclose(graded_product(half.matrix, half.matrix, "bose", 2), symmetrizer("bose", 2, 2) / 4)
    p = graded_power(half, 2, "fermi")
    np.testing.assert_allclose(p, symmetrizer("fermi", 2, 2) / 4)
    assert np.trace(p).real == pytest.approx(0.25)
    np.testing.assert_array_equal(graded_power(half, 1, "fermi"), half.matrix)
    assert not np.any(graded_power(half, 3, "fermi"))


@given(st.sampled_from(list(Sector)), st.integers(1, 3), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_graded_power_positive_and_in_sector(sector, d, n, seed):
    rho = random_state(d, np.random.default_rng(seed))
    g = graded_power(rho, n, sector)
    np.testing.assert_allclose(g, g.conj().T, atol=1e-13)
    assert np.linalg.eigvalsh(g).min() >= -1e-12
    if n > 1:
        p = symmetrizer(sector, d, n)
        np.testing.assert_allclose(p @ g @ p, g, atol=1e-13)
        np.testing.assert_allclose(p @ g, g @ p, atol=1e-13)
    if sector is Sector.FERMI and n > d:
        assert not np.any(g)


@pytest.mark.parametrize("sector", list(Sector))
@pytest.mark.parametrize("k", [2, 3])
def test_projector_commutes_with_power_sums(sector, k, rng):
    rho = random_state(2, rng).matrix
    pw = {i: np.linalg.matrix_power(rho, i) for i in range(1, 6)}
    for m in range(k, 6):
        # R = sum over chains 0 < j_1 < ... < j_k = m of rho^{j_1} (x) rho^{j_2 - j_1} (x) ...
        r = np.zeros((2**k, 2**k), dtype=complex)
        for chain in itertools.combinations(range(1, m), k - 1):
            js = (0,) + chain + (m,)
            term = pw[js[1] - js[0]]
            for a, b in zip(js[1:], js[2:]):
                term = np.kron(term, pw[b - a])
            r += term
        p = symmetrizer(sector, 2, k)
        np.testing.assert_allclose(p @ r, r @ p, atol=1e-13)


# -- cycle trace formula -----------------------------------------------------

def test_sector_trace_identity_examples():
    eye = np.eye(2)
    assert sector_trace([eye, eye], "fermi") == pytest.approx(2)
    assert sector_trace([eye, eye], "bose") == pytest.approx(6)


@pytest.mark.parametrize("sector", list(Sector))
def test_sector_trace_k3_brute(sector, rng):
    bs = [random_matrix(rng, 2) for _ in range(3)]
    assert sector_trace(bs, sector) == pytest.approx(brute_sector_trace(bs, sector), rel=1e-12)


@given(st.sampled_from(list(Sector)), st.integers(1, 3), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_sector_trace_matches_brute(sector, d, k, seed):
    rng = np.random.default_rng(seed)
    bs = [random_matrix(rng, d) for _ in range(k)]
    ref = brute_sector_trace(bs, sector)
    assert abs(sector_trace(bs, sector) - ref) <= 1e-10 * max(1.0, abs(ref))


def test_sector_trace_errors():
    with pytest.raises(BadArity):
        sector_trace([np.eye(2), np.eye(3)], "bose")
    with pytest.raises(BadArity):
        sector_trace([], "bose")
    with pytest.raises(BadArity):
        sector_trace([np.eye(1)] * 11, "bose")


def test_sector_trace_deterministic(rng):
    bs = [random_matrix(rng, 3) for _ in range(4)]
    assert sector_trace(bs, "fermi") == sector_trace([b.copy() for b in bs], "fermi")


def test_sector_coercion():
    assert Sector.coerce("FERMI") is Sector.FERMI
    with pytest.raises(ValueError):
        Sector.coerce("anyon")
