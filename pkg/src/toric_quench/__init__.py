try:
    from ._version import version as __version__
except ImportError:  # source checkout that was never built
    from importlib.metadata import PackageNotFoundError
    from importlib.metadata import version

    try:
        __version__ = version("toric-quench")
    except PackageNotFoundError:
        __version__ = "0.0.0"

__all__ = [
    "__version__",
    "ChainSpec",
    "DisorderModel",
    "sample_chain",
    "build_quadratic",
    "diagonalize",
    "quench_propagator",
    "correlation_xx",
    "entanglement_entropy",
    "ToricQuenchError",
]

from .chain import ChainSpec
from .chain import DisorderModel
from .chain import sample_chain
from .errors import ToricQuenchError
from .freefermion import build_quadratic
from .freefermion import diagonalize
from .freefermion import quench_propagator
from .observables import correlation_xx
from .observables import entanglement_entropy
