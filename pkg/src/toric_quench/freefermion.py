"""
Free-fermion solution of a single chain.

After the Jordan-Wigner map the chain Hamiltonian in the even-parity sector is the quadratic form

    H = 1/2 sum_mn  c+_m A_mn c_n - c_m A_mn c+_n + c+_m B_mn c+_n - c_m B_mn c_n

with antiperiodic fermion boundary conditions.  It is diagonalized through the singular value decomposition
(A - B) = phi^T diag(omega) psi, and a sudden quench from an initial to a final Hamiltonian is described by the
closed-form matrices phi~(t), psi~(t) that expand the Heisenberg-picture Majorana operators A_l(t), B_l(t) over the
initial quasiparticles.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from toric_quench.chain import ChainSpec
from toric_quench.errors import DimensionMismatchError

__all__ = [
    "QuadraticHamiltonian",
    "BogoliubovBasis",
    "QuenchPropagator",
    "Quench",
    "build_quadratic",
    "diagonalize",
    "quench_propagator",
    "ground_energy",
    "quench_energy",
    "ZERO_MODE_TOLERANCE",
]

logger = logging.getLogger(__name__)

ZERO_MODE_TOLERANCE = 1e-12
"""Below this, a mode energy is treated as a zero mode and the sign pairing of (phi_k, psi_k) is fixed by convention"""

RealMatrix = NDArray[np.float64]
ComplexMatrix = NDArray[np.complex128]


def _frozen(a: NDArray[np.generic]) -> NDArray[np.generic]:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    a_matrix: RealMatrix
    """Symmetric N x N hopping/field matrix"""

    b_matrix: RealMatrix
    """Antisymmetric N x N pairing matrix"""

    spec: ChainSpec

    @property
    def n_sites(self) -> int:
        return self.spec.n_sites


@dataclass(frozen=True, eq=False)
class BogoliubovBasis:
    """Rows phi_k, psi_k with phi (A - B) = diag(omega) psi and psi (A + B) = diag(omega) phi; omega ascending"""

    phi: RealMatrix
    psi: RealMatrix
    omega: NDArray[np.float64]
    zero_modes: int = 0
    """Number of modes with omega_k below `ZERO_MODE_TOLERANCE`"""

    @property
    def n_sites(self) -> int:
        return int(self.omega.shape[0])


def build_quadratic(spec: ChainSpec) -> QuadraticHamiltonian:
    n = spec.n_sites
    couplings = spec.coupling_array

    # bond matrix: T[j, j+1] carries -J_j in the bulk; the wrapping bond carries +J_N (antiperiodic fermions)
    bond = np.zeros((n, n))
    sites = np.arange(n)
    signs = np.full(n, -1.0)
    signs[-1] = 1.0
    np.add.at(bond, (sites, (sites + 1) % n), signs * couplings)

    a_matrix = np.diag(2.0 * spec.field_array) + (bond + bond.T)
    b_matrix = bond - bond.T
    return QuadraticHamiltonian(_frozen(a_matrix), _frozen(b_matrix), spec)


def diagonalize(hamiltonian: QuadraticHamiltonian) -> BogoliubovBasis:
    u, s, vh = scipy.linalg.svd(hamiltonian.a_matrix - hamiltonian.b_matrix)
    # singular values come out descending
    phi = np.ascontiguousarray(u.T[::-1])
    psi = np.ascontiguousarray(vh[::-1])
    omega = np.ascontiguousarray(s[::-1])

    zero_modes = int(np.count_nonzero(omega < ZERO_MODE_TOLERANCE))
    if zero_modes:
        logger.warning(
            "%d near-zero Bogoliubov mode(s) (smallest omega %.3e); fixing sign pairing by convention",
            zero_modes,
            omega[0],
        )
        if np.linalg.det(phi) * np.linalg.det(psi) < 0:
            psi[0] *= -1.0

    return BogoliubovBasis(_frozen(phi), _frozen(psi), _frozen(omega), zero_modes)


def ground_energy(basis: BogoliubovBasis) -> float:
    """Energy of the quasiparticle vacuum; no constant is dropped from the spin Hamiltonian"""
    return -0.5 * float(np.sum(basis.omega))


@dataclass(frozen=True, eq=False)
class QuenchPropagator:
    t: float
    phi_tilde: ComplexMatrix
    psi_tilde: ComplexMatrix

    @property
    def n_sites(self) -> int:
        return int(self.phi_tilde.shape[0])


@dataclass(frozen=True, eq=False)
class Quench:
    """
    Sudden quench from the vacuum of `initial` evolved by `final`.  The time independent overlaps are computed once,
    so propagators at many times share them.
    """

    initial: BogoliubovBasis
    final: BogoliubovBasis

    def __post_init__(self) -> None:
        if self.initial.n_sites != self.final.n_sites:
            raise DimensionMismatchError("quench bases", self.initial.n_sites, self.final.n_sites)

    @cached_property
    def overlaps(self) -> Tuple[RealMatrix, RealMatrix]:
        """(phi_f phi_i^T, psi_f psi_i^T)"""
        return self.final.phi @ self.initial.phi.T, self.final.psi @ self.initial.psi.T

    def at(self, t: float) -> QuenchPropagator:
        x, y = self.overlaps
        omega_t = self.final.omega * t
        cos = np.cos(omega_t)[:, np.newaxis]
        sin = np.sin(omega_t)[:, np.newaxis]
        phi_tilde = self.final.phi.T @ (cos * x - 1j * (sin * y))
        psi_tilde = self.final.psi.T @ (cos * y - 1j * (sin * x))
        return QuenchPropagator(float(t), _frozen(phi_tilde), _frozen(psi_tilde))


def quench_propagator(initial: BogoliubovBasis, final: BogoliubovBasis, t: float) -> QuenchPropagator:
    """
    phi~(t) = phi_f^T cos(w_f t) phi_f phi_i^T - i phi_f^T sin(w_f t) psi_f psi_i^T
    psi~(t) = psi_f^T cos(w_f t) psi_f psi_i^T - i psi_f^T sin(w_f t) phi_f phi_i^T
    """
    return Quench(initial, final).at(t)


def quench_energy(prop: QuenchPropagator, hamiltonian: QuadraticHamiltonian) -> float:
    """<H> in the evolved state, from the Majorana two-point functions"""
    if prop.n_sites != hamiltonian.n_sites:
        raise DimensionMismatchError("propagator vs Hamiltonian", hamiltonian.n_sites, prop.n_sites)
    phi, psi = prop.phi_tilde, prop.psi_tilde
    ab = phi @ psi.conj().T
    ba = -(psi @ phi.conj().T)
    # c+_m c_n - c_m c+_n = (BA - AB)/2 and c+_m c+_n - c_m c_n = (AB + BA)/2, elementwise in (m, n)
    energy = 0.25 * np.sum(hamiltonian.a_matrix * (ba - ab) + hamiltonian.b_matrix * (ab + ba))
    return float(energy.real)
