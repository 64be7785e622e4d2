"""
Closed-form results for the clean chain (J = 1, uniform field): dispersion, quench occupations, the semiclassical
quasiparticle picture of correlation decay and entanglement growth, the generalized Gibbs ensemble, and the static
perimeter/area laws of the Wilson loop.

Momentum integrals run over (-pi, pi]; every integrand here is even in p, so they are evaluated on (0, pi) and doubled.
"""
import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import integrate
from scipy import optimize

from toric_quench.errors import DomainError
from toric_quench.errors import IntegrationError
from toric_quench.observables import binary_entropy_array

__all__ = [
    "CleanQuenchSpec",
    "GGEResult",
    "Regime",
    "StaticLaw",
    "dispersion",
    "group_velocity",
    "max_group_velocity",
    "bogoliubov_angle_diff",
    "occupation",
    "semiclassical_correlation",
    "semiclassical_entropy",
    "gge",
    "gge_finite",
    "thermal_inverse_correlation_length",
    "static_laws",
    "quench_loop_law",
    "revival_period",
    "linear_dispersion_entropy",
    "QUAD_EPSABS",
]

logger = logging.getLogger(__name__)

QUAD_EPSABS = 1e-9
GAP_TOLERANCE = 1e-14

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class CleanQuenchSpec:
    h0: float
    """Pre-quench field; the initial state is the ground state of H(h0)"""
    h: float
    """Post-quench field"""
    n_sites: Optional[int] = None
    """Ring length, or None for the thermodynamic limit"""

    def __post_init__(self) -> None:
        if not (self.h0 >= 0.0 and self.h >= 0.0):
            raise DomainError("(h0, h)", (self.h0, self.h), "fields must be >= 0")
        if self.n_sites is not None and self.n_sites < 2:
            raise DomainError("n_sites", self.n_sites, "a ring needs at least 2 sites")


def _omega(h: float, p: FloatArray) -> FloatArray:
    return np.asarray(2.0 * np.sqrt(1.0 - 2.0 * h * np.cos(p) + h * h), dtype=np.float64)


def _cos_delta(h0: float, h: float, p: FloatArray) -> FloatArray:
    denominator = _omega(h, p) * _omega(h0, p)
    if np.any(denominator < GAP_TOLERANCE):
        raise DomainError("p", p, f"gap closes for h0={h0} or h={h}")
    value = 4.0 * (1.0 + h * h0 - (h + h0) * np.cos(p)) / denominator
    return np.asarray(np.clip(value, -1.0, 1.0), dtype=np.float64)


def dispersion(h: float, p: float) -> float:
    """omega_p = 2 sqrt(1 - 2h cos p + h^2)"""
    return float(_omega(h, np.asarray(p)))


def group_velocity(h: float, p: float) -> float:
    """d omega_p / dp = 4h sin p / omega_p"""
    omega = dispersion(h, p)
    if omega < GAP_TOLERANCE:
        raise DomainError("p", p, f"group velocity undefined where the gap closes (h={h})")
    return 4.0 * h * math.sin(p) / omega


def _velocity_peak(h: float) -> Tuple[float, float]:
    """(p*, max |omega'|) over (0, pi)"""
    found = optimize.minimize_scalar(
        lambda p: -group_velocity(h, p), bounds=(1e-9, math.pi - 1e-9), method="bounded", options={"xatol": 1e-12}
    )
    return float(found.x), float(-found.fun)


def max_group_velocity(h: float) -> float:
    """max_p |omega'_p|, found numerically; equals 2h for h <= 1 and 2 above"""
    if h == 0.0:
        return 0.0
    return _velocity_peak(h)[1]


def bogoliubov_angle_diff(h0: float, h: float, p: float) -> float:
    """Delta_p in [0, pi] with cos Delta_p = 4(1 + h h0 - (h + h0) cos p) / (omega_p omega0_p)"""
    return float(np.arccos(_cos_delta(h0, h, np.asarray(p))))


def occupation(h0: float, h: float, p: float) -> float:
    """Post-quench quasiparticle occupation n_p = (1 - cos Delta_p) / 2"""
    return float((1.0 - _cos_delta(h0, h, np.asarray(p))) / 2.0)


def _quad(f: Callable[[float], float], a: float, b: float, name: str) -> float:
    if b <= a:
        return 0.0
    out = integrate.quad(f, a, b, epsabs=QUAD_EPSABS, limit=200, full_output=1)
    # a fourth element carries quadpack's warning message
    if len(out) > 3:
        raise IntegrationError(name, str(out[3]), float(out[1]))
    return float(out[0])


def _light_cone_edges(h: float, d: float, t: float) -> List[float]:
    """Points of (0, pi) where 2|omega'_p| t = d"""
    if t <= 0.0 or h == 0.0:
        return []
    p_star, _ = _velocity_peak(h)

    def excess(p: float) -> float:
        return 2.0 * abs(group_velocity(h, p)) * t - d

    if excess(p_star) <= 0.0:
        return []
    edges = []
    if excess(1e-12) < 0.0:
        edges.append(optimize.brentq(excess, 1e-12, p_star, xtol=1e-14))
    if excess(math.pi - 1e-12) < 0.0:
        edges.append(optimize.brentq(excess, p_star, math.pi - 1e-12, xtol=1e-14))
    return [float(e) for e in edges]


def _light_cone_integral(spec: CleanQuenchSpec, d: float, t: float, f: Callable[[float], float], name: str) -> float:
    """
    t * int_{2|w'|t < d} dp/2pi 2|w'_p| f(p)  +  d * int_{2|w'|t > d} dp/2pi f(p)
    """
    if not (spec.h <= 1.0 and spec.h0 <= 1.0):
        raise DomainError("(h0, h)", (spec.h0, spec.h), "semiclassical forms need both fields <= 1")
    if d <= 0.0 or t < 0.0:
        raise DomainError("(D, t)", (d, t), "need D > 0 and t >= 0")
    h = spec.h
    knots = [0.0] + _light_cone_edges(h, d, t) + [math.pi]
    logger.debug("light-cone knots for D=%s, t=%s: %s", d, t, knots)
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        middle = 0.5 * (a + b)
        if 2.0 * abs(group_velocity(h, middle)) * t < d:
            total += _quad(lambda p: 2.0 * t * abs(group_velocity(h, p)) * f(p), a, b, name)
        else:
            total += _quad(lambda p: d * f(p), a, b, name)
    # doubled for (-pi, 0), divided by 2 pi
    return total / math.pi


def _log_cos_delta(spec: CleanQuenchSpec) -> Callable[[float], float]:
    return lambda p: math.log(abs(float(_cos_delta(spec.h0, spec.h, np.asarray(p)))))


def _occupation_entropy(spec: CleanQuenchSpec) -> Callable[[float], float]:
    return lambda p: float(binary_entropy_array(occupation(spec.h0, spec.h, p)))


def semiclassical_correlation(spec: CleanQuenchSpec, d: float, t: float) -> float:
    """Natural log of the clean C^xx(D, t) up to its prefactor (the exponent of the quasiparticle form)"""
    return _light_cone_integral(spec, d, t, _log_cos_delta(spec), "ln|cos Delta|")


def semiclassical_entropy(spec: CleanQuenchSpec, d: float, t: float) -> float:
    """Clean S(D, t) in bits from the quasiparticle picture"""
    return _light_cone_integral(spec, d, t, _occupation_entropy(spec), "H_b(n_p)")


@dataclass(frozen=True)
class GGEResult:
    spec: CleanQuenchSpec
    inverse_xi: float
    """1/xi_eff; 0 when nothing is excited"""
    entropy_density: float
    """S_gge per site in bits, so S(D, oo) = D * entropy_density"""
    entropy_total: Optional[float] = None
    """S_gge of the whole ring in bits when `spec.n_sites` is set"""

    @property
    def xi_eff(self) -> float:
        return math.inf if self.inverse_xi <= 0.0 else 1.0 / self.inverse_xi

    def effective_temperature(self, p: float) -> float:
        """T_eff(p) from omega_p / T_eff(p) = ln((1 - n_p) / n_p); 0 for an unoccupied mode"""
        n = occupation(self.spec.h0, self.spec.h, p)
        if n <= 0.0:
            return 0.0
        if n == 0.5:
            return math.inf
        # negative for population inversion, n_p > 1/2
        return dispersion(self.spec.h, p) / math.log((1.0 - n) / n)

    def long_time_entropy(self, d: float) -> float:
        return d * self.entropy_density


def gge(spec: CleanQuenchSpec) -> GGEResult:
    """
    Generalized Gibbs ensemble of the post-quench state in the thermodynamic limit.  Since
    tanh(omega_p / 2 T_eff(p)) = 1 - 2 n_p = cos Delta_p, the effective correlation length is
    1/xi_eff = -int dp/2pi ln|cos Delta_p|.
    """
    log_cos = _log_cos_delta(spec)
    entropy = _occupation_entropy(spec)
    inverse_xi = -_quad(log_cos, 0.0, math.pi, "ln|cos Delta|") / math.pi
    density = _quad(entropy, 0.0, math.pi, "H_b(n_p)") / math.pi
    total = gge_finite(spec) if spec.n_sites is not None else None
    return GGEResult(spec, max(inverse_xi, 0.0), density, total)


def gge_finite(spec: CleanQuenchSpec) -> float:
    """S_gge in bits of a ring of `spec.n_sites`, summed over the antiperiodic momenta (2k + 1) pi / N"""
    if spec.n_sites is None:
        raise DomainError("n_sites", None, "a finite ring is needed")
    n = spec.n_sites
    momenta = np.pi * (2.0 * np.arange(n) + 1.0) / n
    occupations = (1.0 - _cos_delta(spec.h0, spec.h, momenta)) / 2.0
    return float(np.sum(binary_entropy_array(occupations)))


def thermal_inverse_correlation_length(h: float, temperature: float) -> float:
    """1/xi_T = -int dp/2pi ln tanh(omega_p / 2T) of the Gibbs state at temperature T"""
    if temperature <= 0.0:
        raise DomainError("temperature", temperature, "must be > 0")
    value = _quad(
        lambda p: math.log(math.tanh(dispersion(h, p) / (2.0 * temperature))), 0.0, math.pi, "ln tanh(omega/2T)"
    )
    return -value / math.pi


class Regime(enum.Enum):
    PERIMETER = "perimeter"
    AREA = "area"


@dataclass(frozen=True)
class StaticLaw:
    regime: Regime
    limit_correlator: float
    """Long-distance ground-state <mu^x mu^x>; 0 in the area regime"""
    wilson_coefficient: float
    """alpha in ln W = -alpha D (perimeter); 0 in the area regime"""
    correlation_length: float
    """xi of the exponential decay (area); inf in the perimeter regime"""


def static_laws(coupling: float, h: float) -> StaticLaw:
    """Ground-state Wilson loop law of the toric code with Ising coupling J = `coupling` and field h"""
    if coupling <= 0.0 or h <= 0.0:
        raise DomainError("(J, h)", (coupling, h), "both must be > 0")
    if coupling == h:
        raise DomainError("J/h", 1.0, "critical point J = h has neither law")
    ratio = h / coupling
    if ratio < 1.0:
        remaining = 1.0 - ratio * ratio
        return StaticLaw(Regime.PERIMETER, remaining**0.25, -0.25 * math.log(remaining), math.inf)
    return StaticLaw(Regime.AREA, 0.0, 0.0, 1.0 / (1.0 - coupling / h))


def quench_loop_law(coupling: float, h: float) -> float:
    """Area-law coefficient alpha' of ln W = -alpha' D^2 long after a quench from the pure Ising point"""
    if coupling <= 0.0 or h < 0.0:
        raise DomainError("(J, h)", (coupling, h), "need J > 0 and h >= 0")
    ratio = h / coupling
    if ratio > 1.0:
        return math.log(2.0)
    return -math.log((1.0 + math.sqrt(1.0 - ratio * ratio)) / 2.0)


def revival_period(n_sites: int, h: float) -> float:
    """Quasi-period T_q = N / (2 v_M) of the finite ring"""
    if h > 1.0:
        raise DomainError("h", h, "revival period is only modelled for h <= 1")
    v_max = max_group_velocity(h)
    if v_max == 0.0:
        return math.inf
    return n_sites / (2.0 * v_max)


def linear_dispersion_entropy(d: float, t: float, n_sites: int, velocity: float, density: float) -> float:
    """
    Revival shape for quasiparticles of a single velocity on a ring: linear growth 2vt * density, a plateau at
    D * density, then linear decrease, repeating with period N / 2v.
    """
    phase = math.fmod(2.0 * velocity * t, n_sites)
    return density * min(phase, d, n_sites - phase)
