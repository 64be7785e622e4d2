"""
Dense exact-diagonalization reference for short chains.

Basis states are labelled by integers whose bits are the mu^z occupations (bit value 1 means mu^z = -1), with site 1
the most significant bit, so reshaping an amplitude vector to (2,) * N puts the tensor axes in site order.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray
from scipy.special import xlogy

from toric_quench.chain import ChainSpec
from toric_quench.errors import DimensionMismatchError
from toric_quench.errors import DomainError
from toric_quench.errors import NumericalInconsistencyError
from toric_quench.errors import OracleSizeError
from toric_quench.observables import TwoPointBlocks

__all__ = [
    "DenseState",
    "DenseIsingChain",
    "HAMILTONIAN_SITE_LIMIT",
    "EVOLUTION_SITE_LIMIT",
    "DEGENERACY_TOLERANCE",
    "dense_hamiltonian",
    "dense_parity_operator",
    "dense_ground_state",
    "dense_evolve",
    "dense_correlation",
    "dense_entropy",
    "dense_two_point",
]

logger = logging.getLogger(__name__)

HAMILTONIAN_SITE_LIMIT = 14
EVOLUTION_SITE_LIMIT = 12
DEGENERACY_TOLERANCE = 1e-10
NORM_TOLERANCE = 1e-12

IntArray = NDArray[np.int64]


@dataclass(frozen=True, eq=False)
class DenseState:
    amplitudes: NDArray[np.complex128]
    n_sites: int

    def __post_init__(self) -> None:
        if self.amplitudes.shape != (2**self.n_sites,):
            raise DimensionMismatchError("dense state", 2**self.n_sites, self.amplitudes.shape[0])
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise NumericalInconsistencyError("|norm - 1|", abs(norm - 1.0), NORM_TOLERANCE, "dense state")


def _check_size(n_sites: int, limit: int, operation: str) -> None:
    if n_sites > limit:
        raise OracleSizeError(n_sites, limit, operation)


def _basis(n_sites: int) -> IntArray:
    return np.arange(2**n_sites, dtype=np.int64)


def _site_mask(n_sites: int, site: int) -> int:
    """Bit mask of 0-based `site`"""
    return 1 << (n_sites - 1 - site)


def _occupations(n_sites: int) -> NDArray[np.int64]:
    """(2^N, N) array of bit values, column j for 0-based site j"""
    index = _basis(n_sites)
    shifts = np.arange(n_sites - 1, -1, -1, dtype=np.int64)
    return (index[:, np.newaxis] >> shifts[np.newaxis, :]) & 1


def _even_states(n_sites: int) -> IntArray:
    return np.flatnonzero(_occupations(n_sites).sum(axis=1) % 2 == 0)


def dense_hamiltonian(spec: ChainSpec) -> NDArray[np.float64]:
    """H = sum_j -J_j mu^x_j mu^x_{j+1} - h_j mu^z_j with the periodic term -J_N mu^x_N mu^x_1"""
    n = spec.n_sites
    _check_size(n, HAMILTONIAN_SITE_LIMIT, "dense_hamiltonian")
    index = _basis(n)
    z = 1 - 2 * _occupations(n)
    h = np.diag(-(z @ spec.field_array).astype(np.float64))
    for j, coupling in enumerate(spec.couplings):
        mask = _site_mask(n, j) | _site_mask(n, (j + 1) % n)
        h[index, index ^ mask] -= coupling
    return h


def dense_parity_operator(n_sites: int) -> NDArray[np.float64]:
    """P = prod_j mu^z_j, diagonal in the occupation basis"""
    _check_size(n_sites, HAMILTONIAN_SITE_LIMIT, "dense_parity_operator")
    parity = 1.0 - 2.0 * (_occupations(n_sites).sum(axis=1) % 2)
    return np.diag(parity)


@dataclass(frozen=True, eq=False)
class DenseIsingChain:
    """A chain with its dense Hamiltonian and the eigendecompositions of both parity blocks, computed on demand"""

    spec: ChainSpec

    def __post_init__(self) -> None:
        _check_size(self.spec.n_sites, HAMILTONIAN_SITE_LIMIT, "DenseIsingChain")

    @property
    def n_sites(self) -> int:
        return self.spec.n_sites

    @cached_property
    def hamiltonian(self) -> NDArray[np.float64]:
        return dense_hamiltonian(self.spec)

    @cached_property
    def even_states(self) -> IntArray:
        return _even_states(self.n_sites)

    @cached_property
    def odd_states(self) -> IntArray:
        return np.setdiff1d(_basis(self.n_sites), self.even_states)

    def _block_eigensystem(self, states: IntArray) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        block = self.hamiltonian[np.ix_(states, states)]
        energies, vectors = scipy.linalg.eigh(block)
        return energies, vectors

    @cached_property
    def even_eigensystem(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        return self._block_eigensystem(self.even_states)

    @cached_property
    def odd_eigensystem(self) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        return self._block_eigensystem(self.odd_states)

    @property
    def even_ground_energy(self) -> float:
        return float(self.even_eigensystem[0][0])

    @cached_property
    def even_ground_degenerate(self) -> bool:
        energies = self.even_eigensystem[0]
        return len(energies) > 1 and bool(energies[1] - energies[0] < DEGENERACY_TOLERANCE)

    def ground_state(self) -> DenseState:
        """Lowest even-parity eigenvector; in a degenerate even manifold the lowest-index eigenvector is taken"""
        if self.even_ground_degenerate:
            logger.warning(
                "even-sector ground state of %d-site chain is degenerate (gap %.3e); taking lowest-index eigenvector",
                self.n_sites,
                self.even_eigensystem[0][1] - self.even_eigensystem[0][0],
            )
        amplitudes = np.zeros(2**self.n_sites, dtype=np.complex128)
        amplitudes[self.even_states] = self.even_eigensystem[1][:, 0]
        return DenseState(amplitudes, self.n_sites)

    def evolve(self, state: DenseState, t: float) -> DenseState:
        """exp(-iHt) |state> by spectral calculus, one parity block at a time"""
        if state.n_sites != self.n_sites:
            raise DimensionMismatchError("dense evolution", self.n_sites, state.n_sites)
        _check_size(self.n_sites, EVOLUTION_SITE_LIMIT, "dense_evolve")
        out = np.zeros_like(state.amplitudes)
        for states, (energies, vectors) in (
            (self.even_states, self.even_eigensystem),
            (self.odd_states, self.odd_eigensystem),
        ):
            coefficients = vectors.T @ state.amplitudes[states]
            out[states] = vectors @ (np.exp(-1j * energies * t) * coefficients)
        # renormalize away round-off so the state invariant holds to 1e-12
        return DenseState(out / np.linalg.norm(out), self.n_sites)


def dense_ground_state(spec: ChainSpec) -> DenseState:
    return DenseIsingChain(spec).ground_state()


def dense_evolve(state: DenseState, spec: ChainSpec, t: float) -> DenseState:
    return DenseIsingChain(spec).evolve(state, t)


def dense_correlation(state: DenseState, j: int, l: int) -> float:  # noqa: E741
    """<mu^x_j mu^x_l>, sites 1-based"""
    n = state.n_sites
    if not (1 <= j <= n and 1 <= l <= n) or j == l:
        raise DomainError("(j, l)", (j, l), f"need two distinct sites in 1..{n}")
    mask = _site_mask(n, j - 1) | _site_mask(n, l - 1)
    psi = state.amplitudes
    return float(np.vdot(psi, psi[_basis(n) ^ mask]).real)


def dense_entropy(state: DenseState, first: int, length: int) -> float:
    """Von Neumann entropy in bits of the sites first..first+length-1 (1-based, wrapping around the ring)"""
    n = state.n_sites
    if not (1 <= first <= n and 1 <= length <= n):
        raise DomainError("arc", (first, length), f"need 1 <= first <= {n} and 1 <= L <= {n}")
    if length == n:
        return 0.0
    arc = [(first - 1 + k) % n for k in range(length)]
    rest = [s for s in range(n) if s not in arc]
    tensor = np.transpose(state.amplitudes.reshape((2,) * n), arc + rest)
    singular = scipy.linalg.svdvals(tensor.reshape(2**length, 2 ** (n - length)))
    p = singular**2
    p = p / p.sum()
    return float(-np.sum(xlogy(p, p)) / np.log(2.0))


def _apply_majoranas(state: DenseState) -> Tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """
    Rows A_l |psi> and B_l |psi> for 0-based l, with A_l = (prod_{j<l} mu^z_j) mu^x_l and
    B_l = -i (prod_{j<l} mu^z_j) mu^y_l = (prod_{j<l} mu^z_j) mu^x_l mu^z_l.
    """
    n = state.n_sites
    index = _basis(n)
    z = 1 - 2 * _occupations(n)
    # string[:, l] = prod_{j<l} z_j
    string = np.cumprod(np.hstack([np.ones((index.size, 1), dtype=np.int64), z[:, :-1]]), axis=1)
    psi = state.amplitudes
    a_rows = np.zeros((n, index.size), dtype=np.complex128)
    b_rows = np.zeros((n, index.size), dtype=np.complex128)
    for site in range(n):
        flipped = index ^ _site_mask(n, site)
        a_rows[site, flipped] = string[:, site] * psi
        b_rows[site, flipped] = string[:, site] * z[:, site] * psi
    return a_rows, b_rows


def dense_two_point(state: DenseState) -> TwoPointBlocks:
    """<A_m A_n>, <B_m B_n>, <A_m B_n>, <B_m A_n> evaluated directly on the state vector"""
    _check_size(state.n_sites, EVOLUTION_SITE_LIMIT, "dense_two_point")
    a_rows, b_rows = _apply_majoranas(state)
    # <O_m O_n> = <O_m^+ psi | O_n psi> with A^+ = A and B^+ = -B
    return TwoPointBlocks(
        aa=a_rows.conj() @ a_rows.T,
        bb=-(b_rows.conj() @ b_rows.T),
        ab=a_rows.conj() @ b_rows.T,
        ba=-(b_rows.conj() @ a_rows.T),
        sites=np.arange(state.n_sites),
    )
