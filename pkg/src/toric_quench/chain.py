"""
Chain specifications and the disorder ensemble.  All randomness in the package is drawn here.

A chain is one row of the toric code lattice after the duality map, i.e. a periodic transverse-field Ising chain

    H = sum_j [ -J_j mu^x_j mu^x_{j+1} - h_j mu^z_j ],   site N+1 == site 1

restricted to the sector with prod_j mu^z_j = 1.
"""
import enum
from dataclasses import dataclass
from typing import Iterable
from typing import List
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np
from numpy.typing import NDArray

from toric_quench.errors import InvalidChainError

__all__ = [
    "Sector",
    "ChainSpec",
    "DisorderModel",
    "sample_chain",
    "sample_couplings_batch",
    "clean_chain",
    "with_fields",
]


class Sector(enum.Enum):
    EVEN_PARITY = "even"
    """The sector with prod_j mu^z_j = 1, which maps to antiperiodic fermions"""


@dataclass(frozen=True)
class ChainSpec:
    """One periodic Ising chain.  Bond `j` (0-based) connects sites j and j+1, the last bond wraps to site 0"""

    couplings: Tuple[float, ...]
    fields: Tuple[float, ...]
    sector: Sector = Sector.EVEN_PARITY

    def __post_init__(self) -> None:
        # accept any sequence but store tuples so the spec stays hashable and immutable
        object.__setattr__(self, "couplings", tuple(float(j) for j in self.couplings))
        object.__setattr__(self, "fields", tuple(float(h) for h in self.fields))
        n = len(self.couplings)
        if n < 2:
            raise InvalidChainError("n_sites", n, "a chain needs at least 2 sites")
        if len(self.fields) != n:
            raise InvalidChainError("fields", len(self.fields), f"expected {n} entries to match couplings")
        if not all(np.isfinite(self.couplings)) or min(self.couplings) <= 0.0:
            raise InvalidChainError("couplings", min(self.couplings), "all couplings must be finite and > 0")
        if not all(np.isfinite(self.fields)) or min(self.fields) < 0.0:
            raise InvalidChainError("fields", min(self.fields), "all fields must be finite and >= 0")

    @property
    def n_sites(self) -> int:
        return len(self.couplings)

    @property
    def coupling_array(self) -> NDArray[np.float64]:
        return np.asarray(self.couplings, dtype=np.float64)

    @property
    def field_array(self) -> NDArray[np.float64]:
        return np.asarray(self.fields, dtype=np.float64)


@dataclass(frozen=True)
class DisorderModel:
    """
    Couplings J_j = 1 + epsilon * eta_j with eta_j i.i.d. uniform on [-1, 1]; uniform transverse field `base_field`.

    Each realization draws from its own generator seeded by (master_seed, realization), so sweeps give the same
    chains no matter how realizations are scheduled across workers.
    """

    epsilon: float
    base_field: float
    n_sites: int
    master_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon < 1.0:
            raise InvalidChainError("epsilon", self.epsilon, "disorder strength must lie in [0, 1) to keep J_j > 0")
        if self.base_field < 0.0:
            raise InvalidChainError("base_field", self.base_field, "transverse field must be >= 0")
        if self.n_sites < 2:
            raise InvalidChainError("n_sites", self.n_sites, "a chain needs at least 2 sites")
        if not 0 <= self.master_seed < 2**64:
            raise InvalidChainError("master_seed", self.master_seed, "seed must be an unsigned 64-bit integer")

    def generator(self, realization: int) -> np.random.Generator:
        """The realization-specific random stream"""
        if realization < 0:
            raise InvalidChainError("realization", realization, "realization index must be >= 0")
        return np.random.default_rng(np.random.SeedSequence([self.master_seed, realization]))


def sample_chain(model: DisorderModel, realization: int) -> ChainSpec:
    rng = model.generator(realization)
    # always draw, even when epsilon == 0, so a stream position never depends on epsilon
    eta = rng.uniform(-1.0, 1.0, size=model.n_sites)
    couplings = 1.0 + model.epsilon * eta
    return ChainSpec(tuple(couplings), (model.base_field,) * model.n_sites)


def sample_couplings_batch(model: DisorderModel, realizations: Iterable[int]) -> List[ChainSpec]:
    return [sample_chain(model, r) for r in realizations]


def clean_chain(n_sites: int, h: float, coupling: float = 1.0) -> ChainSpec:
    return ChainSpec((coupling,) * n_sites, (h,) * n_sites)


def with_fields(spec: ChainSpec, h: Union[float, Sequence[float]]) -> ChainSpec:
    """Same couplings, new transverse fields.  Builds the pre-quench Hamiltonian of a realization"""
    fields = (float(h),) * spec.n_sites if isinstance(h, (int, float)) else tuple(h)
    return ChainSpec(spec.couplings, fields, spec.sector)
