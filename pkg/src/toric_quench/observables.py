"""
Equal-time observables of a quenched chain, all reduced to Majorana two-point functions.

With A_l = c+_l + c_l and B_l = c+_l - c_l (so A_l^2 = 1 and B_l^2 = -1) the spin string mu^x_j mu^x_l equals
B_j A_{j+1} B_{j+1} ... A_l, whose expectation is a Pfaffian by Wick's theorem.  The entanglement entropy of a
contiguous arc follows from the spectrum of the arc's Majorana correlation matrix.
"""
import logging
import math
from dataclasses import dataclass
from typing import Iterable
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.special import xlogy

from toric_quench.errors import DimensionMismatchError
from toric_quench.errors import DomainError
from toric_quench.errors import NumericalInconsistencyError
from toric_quench.freefermion import QuenchPropagator

__all__ = [
    "TwoPointBlocks",
    "MajoranaCorrelation",
    "CorrelationResult",
    "EntropyResult",
    "two_point_blocks",
    "correlation_xx",
    "correlation_profile",
    "majorana_correlation",
    "entanglement_entropy",
    "entropy_profile",
    "binary_entropy",
    "binary_entropy_array",
    "to_nats",
    "pfaffian",
    "DET_TOLERANCE",
    "NU_TOLERANCE",
]

logger = logging.getLogger(__name__)

DET_TOLERANCE = 1e-8
"""det Gamma in [-DET_TOLERANCE, 0) is round-off and clamps to 0; anything more negative is an error"""

NU_TOLERANCE = 1e-6
"""Correlation-matrix eigenvalues up to 1 + NU_TOLERANCE clamp to 1; anything larger is an error"""

ComplexMatrix = NDArray[np.complex128]
RealMatrix = NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class TwoPointBlocks:
    """<A_m A_n>, <B_m B_n>, <A_m B_n>, <B_m A_n> over `sites` (0-based row/column labels)"""

    aa: ComplexMatrix
    bb: ComplexMatrix
    ab: ComplexMatrix
    ba: ComplexMatrix
    sites: NDArray[np.int64]


@dataclass(frozen=True, eq=False)
class MajoranaCorrelation:
    """Real antisymmetric 2L x 2L correlation matrix of the arc first..first+L-1, rows ordered A_1, B_1, A_2, ..."""

    gamma: RealMatrix
    t: float
    first: int
    length: int


@dataclass(frozen=True)
class CorrelationResult:
    d: int
    magnitude: float
    """|<mu^x_j mu^x_{j+d}>|"""
    t: float
    j: int = 1
    determinant: float = 1.0
    """det Gamma before clamping, kept so sweeps can monitor round-off"""


@dataclass(frozen=True)
class EntropyResult:
    l: int  # noqa: E741
    bits: float
    nu: Tuple[float, ...]
    t: float = 0.0
    first: int = 1


def two_point_blocks(prop: QuenchPropagator, sites: Optional[ArrayLike] = None) -> TwoPointBlocks:
    """
    AA = phi~ phi~^+, BB = -psi~ psi~^+, AB = phi~ psi~^+, BA = -psi~ phi~^+, optionally restricted to a set of
    0-based `sites` (rows and columns both).
    """
    index = np.arange(prop.n_sites) if sites is None else np.asarray(sites, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= prop.n_sites):
        raise DimensionMismatchError("two-point sites", prop.n_sites, int(index.max()) + 1)
    phi = prop.phi_tilde[index]
    psi = prop.psi_tilde[index]
    phi_h = phi.conj().T
    psi_h = psi.conj().T
    return TwoPointBlocks(
        aa=phi @ phi_h,
        bb=-(psi @ psi_h),
        ab=phi @ psi_h,
        ba=-(psi @ phi_h),
        sites=index,
    )


def _string_gamma(blocks: TwoPointBlocks, d: int) -> ComplexMatrix:
    """Gamma(j, j+d) from blocks over the window j..j+d (window index 0 is site j)"""
    # off the diagonal <B_m B_n> and <A_m A_n> are purely imaginary and <B_m A_n> is real
    s = 1j * blocks.bb[:d, :d].imag
    q = 1j * blocks.aa[1 : d + 1, 1 : d + 1].imag
    np.fill_diagonal(s, 0.0)
    np.fill_diagonal(q, 0.0)
    g = blocks.ba[:d, 1 : d + 1].real.astype(np.complex128)
    return np.block([[s, g], [-g.T, q]])


def _magnitude_from_gamma(gamma: ComplexMatrix, context: str) -> Tuple[float, float]:
    det = np.linalg.det(gamma)
    value = float(det.real)
    if value < -DET_TOLERANCE:
        raise NumericalInconsistencyError("det Gamma", value, -DET_TOLERANCE, context)
    if value < 0.0:
        logger.debug("clamping det Gamma = %.3e to 0 (%s)", value, context)
    return math.sqrt(max(value, 0.0)), value


def correlation_xx(prop: QuenchPropagator, j: int, l: int) -> CorrelationResult:  # noqa: E741
    """|<mu^x_j mu^x_l>| at the propagator's time; sites are 1-based with 1 <= j < l <= N"""
    n = prop.n_sites
    if not 1 <= j < l <= n:
        raise DomainError("(j, l)", (j, l), f"need 1 <= j < l <= {n}")
    d = l - j
    blocks = two_point_blocks(prop, np.arange(j - 1, l))
    magnitude, det = _magnitude_from_gamma(_string_gamma(blocks, d), f"j={j}, l={l}, t={prop.t}")
    return CorrelationResult(d=d, magnitude=magnitude, t=prop.t, j=j, determinant=det)


def correlation_profile(prop: QuenchPropagator, distances: Iterable[int], first: int = 1) -> List[CorrelationResult]:
    """correlation_xx(first, first + d) for every d, sharing one set of two-point blocks"""
    ds = [int(d) for d in distances]
    if not ds:
        return []
    d_max = max(ds)
    if min(ds) < 1 or first < 1 or first + d_max > prop.n_sites:
        raise DomainError("distances", (first, min(ds), d_max), f"need 1 <= d and first + d <= {prop.n_sites}")
    blocks = two_point_blocks(prop, np.arange(first - 1, first + d_max))
    results = []
    for d in ds:
        magnitude, det = _magnitude_from_gamma(_string_gamma(blocks, d), f"j={first}, d={d}, t={prop.t}")
        results.append(CorrelationResult(d=d, magnitude=magnitude, t=prop.t, j=first, determinant=det))
    return results


def majorana_correlation(prop: QuenchPropagator, first: int, length: int) -> MajoranaCorrelation:
    """Correlation matrix of a non-wrapping arc, 1 <= first and first + length - 1 <= N"""
    if length < 1 or first < 1 or first + length - 1 > prop.n_sites:
        raise DomainError("arc", (first, length), f"need a non-wrapping arc inside 1..{prop.n_sites}")
    blocks = two_point_blocks(prop, np.arange(first - 1, first - 1 + length))
    gamma = np.empty((2 * length, 2 * length))
    gamma[0::2, 0::2] = blocks.aa.imag  # Re(-i AA)
    gamma[1::2, 1::2] = -blocks.bb.imag  # Re(-i psi~ psi~^+)
    gamma[0::2, 1::2] = blocks.ab.real
    gamma[1::2, 0::2] = blocks.ba.real
    np.fill_diagonal(gamma, 0.0)
    return MajoranaCorrelation(gamma=gamma, t=prop.t, first=first, length=length)


def binary_entropy_array(x: ArrayLike) -> NDArray[np.float64]:
    """-x log2 x - (1-x) log2 (1-x) elementwise, with 0 log 0 = 0"""
    p = np.asarray(x, dtype=np.float64)
    if np.any(p < 0.0) or np.any(p > 1.0) or not np.all(np.isfinite(p)):
        raise DomainError("binary entropy argument", p, "must lie in [0, 1]")
    return np.asarray(-(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / math.log(2.0), dtype=np.float64)


def binary_entropy(x: float) -> float:
    return float(binary_entropy_array(x))


def to_nats(bits: float) -> float:
    return bits * math.log(2.0)


def _entropy_from_gamma(gamma: RealMatrix, length: int, context: str) -> Tuple[float, Tuple[float, ...]]:
    # spectrum of i Gamma comes in pairs +-nu
    eigenvalues = np.linalg.eigvalsh(1j * gamma)
    nu = eigenvalues[length:]
    largest = float(np.max(np.abs(eigenvalues)))
    if largest > 1.0 + NU_TOLERANCE:
        raise NumericalInconsistencyError("|nu|", largest, 1.0 + NU_TOLERANCE, context)
    if largest > 1.0:
        logger.debug("clamping |nu| = 1 + %.3e to 1 (%s)", largest - 1.0, context)
    nu = np.clip(nu, 0.0, 1.0)
    bits = float(np.sum(binary_entropy_array((1.0 - nu) / 2.0)))
    return bits, tuple(float(v) for v in nu)


def _resolve_arc(n: int, first: int, length: int) -> Tuple[int, int]:
    """A non-wrapping arc with the same entropy as first..first+length-1 on the ring"""
    if not 1 <= length <= n or not 1 <= first <= n:
        raise DomainError("arc", (first, length), f"need 1 <= first <= {n} and 1 <= L <= {n}")
    if length == n:
        return 1, n
    if first + length - 1 <= n:
        return first, length
    # the state is pure, so a wrapping arc has the entropy of its complement
    logger.debug("arc (%d, %d) wraps; using its complement", first, length)
    return first + length - n, n - length


def entanglement_entropy(prop: QuenchPropagator, first: int, length: int) -> EntropyResult:
    """Von Neumann entropy in bits of the arc of `length` sites starting at 1-based site `first`"""
    arc_first, arc_length = _resolve_arc(prop.n_sites, first, length)
    corr = majorana_correlation(prop, arc_first, arc_length)
    bits, nu = _entropy_from_gamma(corr.gamma, arc_length, f"first={first}, L={length}, t={prop.t}")
    return EntropyResult(l=length, bits=bits, nu=nu, t=prop.t, first=first)


def entropy_profile(prop: QuenchPropagator, lengths: Iterable[int], first: int = 1) -> List[EntropyResult]:
    """
    Entropies of the arcs first..first+L-1 for every L.  Arcs that stay inside the chain are leading sub-blocks of
    the largest one, so its correlation matrix is built once.
    """
    ls = [int(length) for length in lengths]
    inside = [length for length in ls if 1 <= length < prop.n_sites and first + length - 1 <= prop.n_sites]
    shared: Optional[MajoranaCorrelation] = majorana_correlation(prop, first, max(inside)) if inside else None

    results = []
    for length in ls:
        if shared is not None and length in inside:
            bits, nu = _entropy_from_gamma(
                shared.gamma[: 2 * length, : 2 * length], length, f"first={first}, L={length}, t={prop.t}"
            )
            results.append(EntropyResult(l=length, bits=bits, nu=nu, t=prop.t, first=first))
        else:
            results.append(entanglement_entropy(prop, first, length))
    return results


def pfaffian(a: ArrayLike) -> complex:
    """Pfaffian by expansion along the first row.  Cost grows as (2n-1)!!, meant for matrices up to about 12 x 12"""
    m = np.asarray(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError("pfaffian needs a square matrix", m.shape[0], m.shape[-1])
    return _pfaffian(m)


def _pfaffian(m: NDArray[np.generic]) -> complex:
    n = m.shape[0]
    if n == 0:
        return 1.0
    if n % 2:
        return 0.0
    total: complex = 0.0
    rest = np.arange(1, n)
    for k in range(1, n):
        if m[0, k] == 0:
            continue
        keep = rest[rest != k]
        sign = 1.0 if k % 2 else -1.0
        total += sign * complex(m[0, k]) * _pfaffian(m[np.ix_(keep, keep)])
    return total
