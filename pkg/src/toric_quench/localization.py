"""
Dynamical localization probe.

In the interleaved basis (c_1, c+_1, c_2, c+_2, ...) the chain Hamiltonian is H = 1/2 psi+ M psi with a real symmetric
2N x 2N matrix M of 2 x 2 blocks.  Localization shows up as decay in |j - k| of the disorder average of
sup_t || [exp(-itM)]_jk ||, which is probed here on a finite time grid and fitted to C exp(-eta d^zeta).
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable
from typing import Dict
from typing import Iterable
from typing import Iterator
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import more_itertools
import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy import optimize

from toric_quench.chain import ChainSpec
from toric_quench.chain import DisorderModel
from toric_quench.chain import sample_chain
from toric_quench.cleantheory import max_group_velocity
from toric_quench.errors import DomainError
from toric_quench.errors import FitError
from toric_quench.freefermion import build_quadratic
from toric_quench.util import jackknife

__all__ = [
    "OneParticleMatrix",
    "LocalizationProfile",
    "ExponentialFit",
    "DecayFit",
    "FitStability",
    "build_m",
    "propagator_block_norm",
    "default_time_grid",
    "realization_sup_norms",
    "sup_norm_profile",
    "fit_decay",
    "fit_decay_stability",
    "BOUNDARY_MARGIN",
    "MIN_FIT_SAMPLES",
    "MIN_DECAY_DECADES",
]

logger = logging.getLogger(__name__)

BOUNDARY_MARGIN = 10
"""Sites this close to the wrapping bond are never used as a source or target"""

MIN_FIT_SAMPLES = 6
TIME_CHUNK = 256
STABILITY_TOLERANCE = 0.1
MIN_DECAY_DECADES = 1.0
"""Decades the fitted exponential must fall across the sampled distances to count as localized"""

FloatArray = NDArray[np.float64]
Mapper = Callable[[Callable[[int], FloatArray], Iterable[int]], Iterable[FloatArray]]


@dataclass(frozen=True, eq=False)
class OneParticleMatrix:
    m: FloatArray
    spec: ChainSpec

    @property
    def n_sites(self) -> int:
        return self.spec.n_sites

    @cached_property
    def eigensystem(self) -> Tuple[FloatArray, NDArray[np.float64]]:
        energies, vectors = scipy.linalg.eigh(self.m)
        return energies, vectors

    def _rows(self, site: int) -> slice:
        """Rows of 1-based `site`"""
        if not 1 <= site <= self.n_sites:
            raise DomainError("site", site, f"need 1 <= site <= {self.n_sites}")
        return slice(2 * (site - 1), 2 * site)

    def propagator(self, t: float) -> NDArray[np.complex128]:
        """exp(-itM) by spectral calculus"""
        energies, vectors = self.eigensystem
        return np.asarray((vectors * np.exp(-1j * energies * t)) @ vectors.T, dtype=np.complex128)

    def block(self, j: int, k: int, t: float) -> NDArray[np.complex128]:
        """The 2 x 2 block [exp(-itM)]_jk"""
        energies, vectors = self.eigensystem
        left = vectors[self._rows(j)] * np.exp(-1j * energies * t)
        return np.asarray(left @ vectors[self._rows(k)].T, dtype=np.complex128)


def build_m(spec: ChainSpec) -> OneParticleMatrix:
    """
    Block (j, k) is [[A_jk, B_jk], [-B_jk, -A_jk]]: 2 h_j sigma^z on site, -J_j S and -J_j S^T on the bonds and +J_N on
    the corner blocks, where S = [[1, 1], [-1, -1]].
    """
    quadratic = build_quadratic(spec)
    a, b = quadratic.a_matrix, quadratic.b_matrix
    n = spec.n_sites
    m = np.empty((2 * n, 2 * n))
    m[0::2, 0::2] = a
    m[0::2, 1::2] = b
    m[1::2, 0::2] = -b
    m[1::2, 1::2] = -a
    m.setflags(write=False)
    return OneParticleMatrix(m, spec)


def propagator_block_norm(m: OneParticleMatrix, j: int, k: int, t: float) -> float:
    """Spectral norm of [exp(-itM)]_jk, sites 1-based"""
    return float(np.linalg.norm(m.block(j, k, t), ord=2))


def default_time_grid(model: DisorderModel, distances: Iterable[int], t_max: Optional[float] = None) -> FloatArray:
    """
    0, dt, 2 dt, ... up to at least T_max.  The block norm is Lipschitz in t with constant at most omega_max, so
    dt = 0.1 / omega_max; T_max is raised if needed to twice the largest distance times the clean maximal velocity.
    """
    # every omega_k is bounded by ||A - B|| <= 2 max h + 2 max J
    omega_bound = 2.0 * model.base_field + 2.0 * (1.0 + model.epsilon)
    step = 0.1 / omega_bound
    d_max = max(distances, default=0)
    required = 2.0 * d_max * max_group_velocity(min(model.base_field, 1.0))
    if t_max is None:
        t_max = required
    elif t_max < required:
        logger.warning("raising T_max from %g to %g to cover distance %d", t_max, required, d_max)
        t_max = required
    n_steps = int(math.ceil(t_max / step))
    return np.arange(n_steps + 1) * step


def _bulk_pairs(
    n_sites: int, distances: Sequence[int], n_sources: int
) -> Tuple[List[int], List[List[Tuple[int, int]]]]:
    """
    Evenly spaced 0-based bulk sources and, per distance, the (source, target) pairs with both ends in the bulk and
    no crossing of the wrapping bond.
    """
    low, high = BOUNDARY_MARGIN, n_sites - 1 - BOUNDARY_MARGIN
    if high < low:
        raise DomainError("n_sites", n_sites, f"chain has no bulk beyond {BOUNDARY_MARGIN} sites from the corner")
    sources = sorted(set(int(round(s)) for s in np.linspace(low, high, n_sources)))
    pairs: List[List[Tuple[int, int]]] = []
    for d in distances:
        found = [(j, k) for j in sources for k in {j - d, j + d} if low <= k <= high]
        if not found:
            raise DomainError("distance", d, f"no bulk pair at this distance in a {n_sites}-site chain")
        pairs.append(found)
    return sources, pairs


def _time_chunks(t_grid: FloatArray) -> Iterator[FloatArray]:
    for chunk in more_itertools.chunked(t_grid, TIME_CHUNK):
        yield np.asarray(chunk, dtype=np.float64)


def realization_sup_norms(
    model: DisorderModel, realization: int, t_grid: ArrayLike, distances: Sequence[int], n_sources: int = 8
) -> FloatArray:
    """For one realization, max over `t_grid` of the block norm at each distance, averaged over bulk pairs"""
    times = np.asarray(t_grid, dtype=np.float64)
    m = build_m(sample_chain(model, realization))
    energies, vectors = m.eigensystem
    sources, pairs = _bulk_pairs(m.n_sites, distances, n_sources)

    sup: Dict[Tuple[int, int], float] = {}
    for j in sources:
        targets = sorted({k for found in pairs for (s, k) in found if s == j})
        if not targets:
            continue
        row = vectors[2 * j : 2 * j + 2]
        cols = vectors[np.ravel([[2 * k, 2 * k + 1] for k in targets])]
        best = np.zeros(len(targets))
        for chunk in _time_chunks(times):
            phases = np.exp(-1j * np.outer(chunk, energies))
            # (times, 2, 2 * targets) -> (times, targets, 2, 2)
            blocks = (row[np.newaxis, :, :] * phases[:, np.newaxis, :]) @ cols.T
            blocks = blocks.reshape(len(chunk), 2, len(targets), 2).transpose(0, 2, 1, 3)
            norms = np.linalg.norm(blocks, ord=2, axis=(-2, -1))
            best = np.maximum(best, norms.max(axis=0))
        sup.update({(j, k): float(v) for k, v in zip(targets, best)})

    return np.array([np.mean([sup[pair] for pair in found]) for found in pairs])


@dataclass(frozen=True, eq=False)
class _RealizationTask:
    """One realization as a picklable callable for worker pools"""

    model: DisorderModel
    t_grid: FloatArray
    distances: Tuple[int, ...]
    n_sources: int

    def __call__(self, realization: int) -> FloatArray:
        return realization_sup_norms(self.model, realization, self.t_grid, self.distances, self.n_sources)


@dataclass(frozen=True, eq=False)
class LocalizationProfile:
    epsilon: float
    distances: Tuple[int, ...]
    per_realization: FloatArray
    """(realizations, distances) sup norms"""
    t_max: float

    @property
    def n_realizations(self) -> int:
        return int(self.per_realization.shape[0])

    @cached_property
    def _averaged(self) -> Tuple[FloatArray, FloatArray]:
        return jackknife(self.per_realization)

    @property
    def mean(self) -> FloatArray:
        return self._averaged[0]

    @property
    def stderr(self) -> FloatArray:
        return self._averaged[1]

    def samples(self) -> List[Tuple[int, float]]:
        return [(d, float(v)) for d, v in zip(self.distances, self.mean)]


def sup_norm_profile(
    model: DisorderModel,
    t_grid: ArrayLike,
    distances: Sequence[int],
    n_realizations: int,
    n_sources: int = 8,
    mapper: Mapper = map,
) -> LocalizationProfile:
    """
    Disorder average of sup_t ||[exp(-itM)]_jk|| at |j - k| = d.  `mapper` may be an ordered parallel map (such as
    `multiprocessing.Pool.imap`); realizations are reduced in index order so the result does not depend on it.
    """
    if n_realizations < 1:
        raise DomainError("n_realizations", n_realizations, "need at least one realization")
    times = np.asarray(t_grid, dtype=np.float64)
    ds = tuple(int(d) for d in distances)

    rows = list(mapper(_RealizationTask(model, times, ds, n_sources), range(n_realizations)))
    logger.info("sup-norm profile for epsilon=%g over %d realizations", model.epsilon, n_realizations)
    return LocalizationProfile(model.epsilon, ds, np.vstack(rows), float(times[-1]))


@dataclass(frozen=True)
class ExponentialFit:
    """ln v = ln C - eta d with eta >= 0"""

    c_fit: float
    eta_fit: float
    residual: float
    eta_stderr: float
    d_range: float
    """Largest minus smallest sampled distance"""

    @property
    def decades(self) -> float:
        """Orders of magnitude the fitted C exp(-eta d) falls across the sampled distances"""
        return self.eta_fit * self.d_range / math.log(10.0)

    @property
    def is_localized(self) -> bool:
        """eta is resolved from 0 by more than two standard errors and the fit falls by MIN_DECAY_DECADES or more"""
        return self.eta_fit > 2.0 * self.eta_stderr and self.decades >= MIN_DECAY_DECADES


@dataclass(frozen=True)
class DecayFit:
    c_fit: float
    eta_fit: float
    zeta_fit: float
    residual: float
    """Root-mean-square residual of ln v"""
    samples: Tuple[Tuple[float, float], ...]
    exponential: ExponentialFit
    """The fit constrained to zeta = 1"""


def _fit_fixed_zeta(d: FloatArray, y: FloatArray, zeta: float) -> Tuple[float, float, float]:
    design = np.column_stack([np.ones_like(d), -(d**zeta)])
    solved = optimize.lsq_linear(design, y, bounds=([-np.inf, 0.0], [np.inf, np.inf]))
    log_c, eta = solved.x
    residual = float(np.sqrt(np.mean((design @ solved.x - y) ** 2)))
    return float(log_c), float(eta), residual


def _exponential_fit(d: FloatArray, y: FloatArray) -> ExponentialFit:
    log_c, eta, residual = _fit_fixed_zeta(d, y, 1.0)
    design = np.column_stack([np.ones_like(d), -d])
    dof = max(d.size - 2, 1)
    sigma2 = float(np.sum((design @ np.array([log_c, eta]) - y) ** 2)) / dof
    covariance = sigma2 * scipy.linalg.inv(design.T @ design)
    stderr = float(math.sqrt(max(covariance[1, 1], 0.0)))
    return ExponentialFit(math.exp(log_c), eta, residual, stderr, float(np.ptp(d)))


def fit_decay(samples: Iterable[Tuple[float, float]], zeta_min: float = 0.1) -> DecayFit:
    """
    Least-squares fit of ln v = ln C - eta d^zeta.  For each zeta the problem is linear in (ln C, eta), so only zeta
    is searched numerically; zeta = 1 is always a candidate.
    """
    pairs = tuple((float(d), float(v)) for d, v in samples)
    if len(pairs) < MIN_FIT_SAMPLES:
        raise FitError(f"need at least {MIN_FIT_SAMPLES} samples", len(pairs))
    d = np.array([p[0] for p in pairs])
    v = np.array([p[1] for p in pairs])
    if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
        raise FitError("all sample values must be finite and > 0", len(pairs))
    if np.ptp(v) == 0.0:
        raise FitError("all sample values are equal", len(pairs))
    if not 0.0 < zeta_min <= 1.0:
        raise DomainError("zeta_min", zeta_min, "must lie in (0, 1]")
    y = np.log(v)

    exponential = _exponential_fit(d, y)
    best_zeta, (log_c, eta, residual) = 1.0, _fit_fixed_zeta(d, y, 1.0)
    if zeta_min < 1.0:
        searched = optimize.minimize_scalar(
            lambda z: _fit_fixed_zeta(d, y, z)[2], bounds=(zeta_min, 1.0), method="bounded", options={"xatol": 1e-6}
        )
        candidate = _fit_fixed_zeta(d, y, float(searched.x))
        if candidate[2] < residual:
            best_zeta, (log_c, eta, residual) = float(searched.x), candidate

    return DecayFit(math.exp(log_c), eta, best_zeta, residual, pairs, exponential)


@dataclass(frozen=True)
class FitStability:
    fit: DecayFit
    fit_doubled: DecayFit
    """Fit to the profile with T_max doubled"""

    @property
    def relative_eta_change(self) -> float:
        reference = max(abs(self.fit.exponential.eta_fit), 1e-300)
        return abs(self.fit_doubled.exponential.eta_fit - self.fit.exponential.eta_fit) / reference

    @property
    def stable(self) -> bool:
        return self.relative_eta_change < STABILITY_TOLERANCE


def fit_decay_stability(profile: LocalizationProfile, profile_doubled: LocalizationProfile) -> FitStability:
    """Compare decay fits before and after doubling T_max; the sup over all t is only bounded from below"""
    if profile.distances != profile_doubled.distances:
        raise DomainError("distances", profile_doubled.distances, "profiles must share distances")
    return FitStability(fit_decay(profile.samples()), fit_decay(profile_doubled.samples()))
