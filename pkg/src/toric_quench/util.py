import itertools
from dataclasses import dataclass
from dataclasses import field
from functools import cached_property
from typing import Any
from typing import Callable
from typing import Generic
from typing import Iterator
from typing import List
from typing import Mapping
from typing import MutableMapping
from typing import Optional
from typing import Set
from typing import Tuple
from typing import TypeVar

import more_itertools
import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray

__all__ = ["DictStack", "not_optional", "jackknife", "format_number"]

_KT = TypeVar("_KT")
_VT = TypeVar("_VT")
_T = TypeVar("_T")

FloatArray = NDArray[np.float64]


def not_optional(val: Optional[_T]) -> _T:
    """Raise TypeError if the given value is None"""
    if val is None:
        raise TypeError("Value cannot be None")
    return val


def format_number(x: float) -> str:
    """Render a number for CSV output with 12 significant digits, so regression diffs are meaningful"""
    return f"{float(x):.12g}"


def _mean_over_first_axis(x: FloatArray) -> FloatArray:
    return np.asarray(np.mean(x, axis=0), dtype=np.float64)


def jackknife(
    samples: ArrayLike, statistic: Callable[[FloatArray], FloatArray] = _mean_over_first_axis
) -> Tuple[FloatArray, FloatArray]:
    """
    Leave-one-out jackknife over the first axis of `samples` (one entry per disorder realization).

    Returns the statistic evaluated on the full sample and its jackknife standard error.  With a single realization
    the error is undefined and reported as NaN.
    """
    data = np.asarray(samples, dtype=np.float64)
    n = data.shape[0]
    full = np.asarray(statistic(data), dtype=np.float64)
    if n < 2:
        return full, np.full_like(full, np.nan)

    total = data.sum(axis=0)
    if statistic is _mean_over_first_axis:
        # closed form of the leave-one-out means
        replicas = (total[np.newaxis, ...] - data) / (n - 1)
    else:
        replicas = np.stack([statistic(np.delete(data, i, axis=0)) for i in range(n)])

    spread = replicas - replicas.mean(axis=0)
    error = np.sqrt((n - 1) / n * np.sum(spread**2, axis=0))
    return full, np.asarray(error, dtype=np.float64)


@dataclass
class DictStack(Mapping[_KT, _VT], Generic[_KT, _VT]):
    """
    A type of mapping where lookups are performed against a stack of named dictionaries, so that values pushed at top
    override those below.  Configuration is resolved this way: defaults, then the config file, then command line
    overrides.  Each layer has a name so diagnostics can say where a value came from.
    """

    mapping_stack: List[Tuple[str, MutableMapping[_KT, _VT]]] = field(default_factory=list)
    """
    Stack of (layer name, dictionary) where the topmost will be the _first_ dictionary consulted for lookups (ie,
    overrides others)
    """

    @cached_property
    def _key_set(self) -> Set[_KT]:
        return set(itertools.chain.from_iterable(d for _, d in self.mapping_stack))

    def _clear_key_set(self) -> None:
        """Clears the cached property so it will be recalculated on next access"""
        if "_key_set" in self.__dict__:
            del self.__dict__["_key_set"]

    def __len__(self) -> int:
        return more_itertools.ilen(self.__iter__())

    def __iter__(self) -> Iterator[_KT]:
        return iter(self._key_set)

    def push(self, name: str, d: MutableMapping[_KT, _VT]) -> None:
        self._clear_key_set()
        self.mapping_stack.append((name, d))

    def pop(self) -> Tuple[str, MutableMapping[_KT, _VT]]:
        self._clear_key_set()
        return self.mapping_stack.pop()

    def layer_of(self, key: _KT) -> str:
        """Name of the topmost layer defining `key`. Raises KeyError if not found"""
        for name, d in reversed(self.mapping_stack):
            if key in d:
                return name
        raise KeyError(key)

    def __getitem__(self, item: _KT) -> _VT:
        for _, d in reversed(self.mapping_stack):
            try:
                return d[item]
            except KeyError:
                pass
        raise KeyError(item)

    def __contains__(self, item: object) -> bool:
        return item in self._key_set

    def flattened(self) -> Mapping[_KT, Any]:
        """A plain dict snapshot of the resolved values"""
        return {k: self[k] for k in sorted(self._key_set, key=str)}
