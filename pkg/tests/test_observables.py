import math
from typing import List

import numpy as np
import pytest

from tests.conftest import ChainFactory
from tests.conftest import QuenchFactory
from toric_quench.chain import DisorderModel
from toric_quench.chain import clean_chain
from toric_quench.chain import sample_chain
from toric_quench.chain import with_fields
from toric_quench.errors import DomainError
from toric_quench.freefermion import Quench
from toric_quench.observables import binary_entropy
from toric_quench.observables import binary_entropy_array
from toric_quench.observables import correlation_profile
from toric_quench.observables import correlation_xx
from toric_quench.observables import entanglement_entropy
from toric_quench.observables import entropy_profile
from toric_quench.observables import majorana_correlation
from toric_quench.observables import pfaffian
from toric_quench.observables import to_nats
from toric_quench.observables import two_point_blocks
from toric_quench.observables import _string_gamma
from toric_quench.oracle import dense_entropy
from toric_quench.oracle import dense_evolve
from toric_quench.oracle import dense_ground_state


@pytest.fixture
def ghz_quench(make_quench: QuenchFactory) -> Quench:
    """Quench from the h0 = 0 (GHZ) ground state of a clean 16-site ring to h = 0.5"""
    return make_quench(clean_chain(16, 0.5), 0.0)


@pytest.mark.parametrize("d", [1, 2, 7, 15])
def test_ghz_correlation_is_perfect(ghz_quench: Quench, d: int) -> None:
    result = correlation_xx(ghz_quench.at(0.0), 1, 1 + d)
    assert result.magnitude == pytest.approx(1.0, abs=1e-10)
    assert result.d == d
    assert result.j == 1
    assert result.t == 0.0


@pytest.mark.parametrize("length", [1, 4, 8, 15])
def test_ghz_entropy_is_one_bit(ghz_quench: Quench, length: int) -> None:
    result = entanglement_entropy(ghz_quench.at(0.0), 1, length)
    assert result.bits == pytest.approx(1.0, abs=1e-8)
    assert result.l == length
    assert len(result.nu) == length


def test_full_ring_entropy_vanishes(ghz_quench: Quench) -> None:
    assert entanglement_entropy(ghz_quench.at(3.0), 1, 16).bits == pytest.approx(0.0, abs=1e-8)


def test_two_point_block_structure(random_chain: ChainFactory, make_quench: QuenchFactory) -> None:
    blocks = two_point_blocks(make_quench(random_chain(12, 0), 0.0).at(1.1))
    np.testing.assert_allclose(np.diag(blocks.aa), np.ones(12), atol=1e-12)
    np.testing.assert_allclose(np.diag(blocks.bb), -np.ones(12), atol=1e-12)
    np.testing.assert_allclose(blocks.aa, blocks.aa.conj().T, atol=1e-12)
    np.testing.assert_allclose(blocks.bb, blocks.bb.conj().T, atol=1e-12)
    # <B_m A_n> = -<A_n B_m>^*, the adjoint relation between the two mixed blocks
    np.testing.assert_allclose(blocks.ba, -blocks.ab.conj().T, atol=1e-12)


def test_two_point_blocks_restricted(random_chain: ChainFactory, make_quench: QuenchFactory) -> None:
    prop = make_quench(random_chain(12, 1), 0.0).at(0.4)
    full = two_point_blocks(prop)
    sub = two_point_blocks(prop, [3, 4, 5])
    np.testing.assert_allclose(sub.aa, full.aa[3:6, 3:6])
    np.testing.assert_allclose(sub.ba, full.ba[3:6, 3:6])
    np.testing.assert_array_equal(sub.sites, [3, 4, 5])


def test_correlation_bounds(random_chain: ChainFactory, make_quench: QuenchFactory) -> None:
    prop = make_quench(random_chain(32, 2), 0.0).at(7.0)
    for d in (1, 5, 12, 31):
        result = correlation_xx(prop, 1, 1 + d)
        assert 0.0 <= result.magnitude <= 1.0 + 1e-8
        assert result.determinant >= -1e-8


def test_correlation_profile_matches_single_queries(random_chain: ChainFactory, make_quench: QuenchFactory) -> None:
    prop = make_quench(random_chain(20, 3), 0.1).at(2.5)
    profile = correlation_profile(prop, [1, 4, 9], first=5)
    for result, d in zip(profile, [1, 4, 9]):
        assert result.magnitude == pytest.approx(correlation_xx(prop, 5, 5 + d).magnitude, abs=1e-12)
        assert result.j == 5
    assert correlation_profile(prop, []) == []


@pytest.mark.parametrize("j, l", [(3, 3), (4, 2), (0, 2), (1, 21)])
def test_correlation_sites_checked(random_chain: ChainFactory, make_quench: QuenchFactory, j: int, l: int) -> None:
    prop = make_quench(random_chain(20, 0), 0.0).at(0.0)
    with pytest.raises(DomainError):
        correlation_xx(prop, j, l)


def test_profile_distance_checked(random_chain: ChainFactory, make_quench: QuenchFactory) -> None:
    prop = make_quench(random_chain(10, 0), 0.0).at(0.0)
    with pytest.raises(DomainError):
        correlation_profile(prop, [2, 10])
    with pytest.raises(DomainError):
        correlation_profile(prop, [0])


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_pfaffian_consistency(random_chain: ChainFactory, make_quench: QuenchFactory, d: int) -> None:
    prop = make_quench(random_chain(10, 4), 0.3).at(1.9)
    gamma = _string_gamma(two_point_blocks(prop, np.arange(2, 3 + d)), d)
    np.testing.assert_allclose(gamma, -gamma.T, atol=1e-12)
    assert abs(pfaffian(gamma)) == pytest.approx(correlation_xx(prop, 3, 3 + d).magnitude, abs=1e-9)


def test_pfaffian_small_matrices() -> None:
    assert pfaffian(np.zeros((0, 0))) == 1.0
    assert pfaffian(np.array([[0.0, 2.5], [-2.5, 0.0]])) == 2.5
    a = np.array(
        [
            [0.0, 1.0, 2.0, 3.0],
            [-1.0, 0.0, 4.0, 5.0],
            [-2.0, -4.0, 0.0, 6.0],
            [-3.0, -5.0, -6.0, 0.0],
        ]
    )
    # a12 a34 - a13 a24 + a14 a23
    assert pfaffian(a) == pytest.approx(1.0 * 6.0 - 2.0 * 5.0 + 3.0 * 4.0)
    assert pfaffian(a) ** 2 == pytest.approx(np.linalg.det(a))
    assert pfaffian(np.zeros((3, 3))) == 0.0


def test_pfaffian_squares_to_determinant() -> None:
    rng = np.random.default_rng(5)
    x = rng.normal(size=(8, 8))
    a = x - x.T
    assert pfaffian(a) ** 2 == pytest.approx(np.linalg.det(a), rel=1e-9)


@pytest.mark.parametrize(
    "x, expected",
    [
        (0.5, 1.0),
        (0.0, 0.0),
        (1.0, 0.0),
        (0.25, 0.8112781244591328),
        (0.75, 0.8112781244591328),
    ],
)
def test_binary_entropy(x: float, expected: float) -> None:
    assert binary_entropy(x) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("x", [-0.01, 1.01, float("nan")])
def test_binary_entropy_domain(x: float) -> None:
    with pytest.raises(DomainError):
        binary_entropy(x)
    with pytest.raises(ValueError):
        binary_entropy_array([0.5, x])


def test_to_nats() -> None:
    assert to_nats(1.0) == pytest.approx(math.log(2.0))
    assert to_nats(0.0) == 0.0


def test_majorana_correlation_is_antisymmetric(random_chain: ChainFactory, make_quench: QuenchFactory) -> None:
    corr = majorana_correlation(make_quench(random_chain(14, 5), 0.0).at(3.3), 2, 6)
    assert corr.gamma.shape == (12, 12)
    np.testing.assert_allclose(corr.gamma, -corr.gamma.T, atol=1e-10)
    eigenvalues = np.linalg.eigvalsh(1j * corr.gamma)
    assert np.all(np.abs(eigenvalues) <= 1.0 + 1e-8)
    with pytest.raises(DomainError):
        majorana_correlation(make_quench(random_chain(14, 5), 0.0).at(0.0), 10, 6)


def test_entropy_invariants(random_chain: ChainFactory, make_quench: QuenchFactory) -> None:
    prop = make_quench(random_chain(24, 6), 0.0).at(4.0)
    for length in (1, 3, 10):
        result = entanglement_entropy(prop, 1, length)
        assert 0.0 <= result.bits <= length
        assert all(0.0 <= nu <= 1.0 for nu in result.nu)
        expected = float(np.sum(binary_entropy_array((1.0 - np.array(result.nu)) / 2.0)))
        assert result.bits == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("first, length, complement_first", [(1, 5, 6), (1, 12, 13), (4, 21, 1), (1, 23, 24)])
def test_entropy_of_complement(
    random_chain: ChainFactory, make_quench: QuenchFactory, first: int, length: int, complement_first: int
) -> None:
    # both arcs lie inside 1..N, so each entropy comes from its own correlation matrix
    n = 24
    prop = make_quench(random_chain(n, 7), 0.0).at(2.7)
    arc = entanglement_entropy(prop, first, length)
    complement = entanglement_entropy(prop, complement_first, n - length)
    assert len(arc.nu) == length
    assert len(complement.nu) == n - length
    assert arc.bits == pytest.approx(complement.bits, abs=1e-7)


@pytest.mark.parametrize("first, length", [(7, 4), (8, 2), (6, 7), (5, 5)])
def test_wrapping_arc_matches_dense(
    random_chain: ChainFactory, make_quench: QuenchFactory, first: int, length: int
) -> None:
    chain = random_chain(8, 4)
    prop = make_quench(chain, 0.0).at(1.9)
    state = dense_evolve(dense_ground_state(with_fields(chain, 0.0)), chain, 1.9)
    expected = dense_entropy(state, first, length)
    assert entanglement_entropy(prop, first, length).bits == pytest.approx(expected, abs=1e-7)


def test_entropy_profile_matches_single_queries(random_chain: ChainFactory, make_quench: QuenchFactory) -> None:
    prop = make_quench(random_chain(16, 8), 0.0).at(5.0)
    lengths = [2, 5, 11, 16]
    for result, length in zip(entropy_profile(prop, lengths, first=3), lengths):
        assert result.bits == pytest.approx(entanglement_entropy(prop, 3, length).bits, abs=1e-10)
        assert result.first == 3


@pytest.mark.parametrize("first, length", [(0, 2), (1, 0), (1, 17), (17, 1)])
def test_entropy_arc_checked(random_chain: ChainFactory, make_quench: QuenchFactory, first: int, length: int) -> None:
    prop = make_quench(random_chain(16, 0), 0.0).at(0.0)
    with pytest.raises(DomainError):
        entanglement_entropy(prop, first, length)


@pytest.mark.slow
@pytest.mark.parametrize("d", [8, 16, 32])
def test_clean_correlation_asymptote(make_quench: QuenchFactory, d: int) -> None:
    prop = make_quench(clean_chain(512, 0.5), 0.0).at(200.0)
    expected = ((1.0 + math.sqrt(0.75)) / 2.0) ** (d + 1)
    assert correlation_xx(prop, 1, 1 + d).magnitude == pytest.approx(expected, rel=0.02)


@pytest.mark.slow
def test_disorder_freezes_entropy_and_correlation(make_quench: QuenchFactory) -> None:
    n, t, starts = 512, 250.0, range(1, 257, 32)
    model = DisorderModel(0.5, 0.5, n, master_seed=2024)
    growth: List[float] = []
    correlation: List[float] = []
    for realization in range(100):
        prop = make_quench(sample_chain(model, realization), 0.0).at(t)
        for first in starts:
            half, quarter = entropy_profile(prop, [256, 128], first)
            growth.append(half.bits - quarter.bits)
            correlation.append(correlation_profile(prop, [64], first)[0].magnitude)
    clean = make_quench(clean_chain(n, 0.5), 0.0).at(t)
    clean_half, clean_quarter = entropy_profile(clean, [256, 128])
    clean_correlation = correlation_profile(clean, [64])[0].magnitude

    assert float(np.mean(growth)) < 0.05
    assert clean_half.bits - clean_quarter.bits > 0.5
    assert float(np.mean(correlation)) > 10.0 * clean_correlation
