from typing import Callable

import pytest

from toric_quench.chain import ChainSpec
from toric_quench.chain import DisorderModel
from toric_quench.chain import sample_chain
from toric_quench.chain import with_fields
from toric_quench.freefermion import Quench
from toric_quench.freefermion import build_quadratic
from toric_quench.freefermion import diagonalize

QuenchFactory = Callable[[ChainSpec, float], Quench]
ChainFactory = Callable[[int, int], ChainSpec]


def quench_from(chain: ChainSpec, h0: float) -> Quench:
    """Quench from the ground state of `chain` with all fields set to `h0`, evolved by `chain`"""
    return Quench(diagonalize(build_quadratic(with_fields(chain, h0))), diagonalize(build_quadratic(chain)))


@pytest.fixture
def make_quench() -> QuenchFactory:
    return quench_from


@pytest.fixture
def random_chain() -> ChainFactory:
    """A disordered chain (epsilon = 0.5, h = 0.5) of the given size and realization"""

    def make(n_sites: int, realization: int = 0) -> ChainSpec:
        return sample_chain(DisorderModel(0.5, 0.5, n_sites, master_seed=1234), realization)

    return make
