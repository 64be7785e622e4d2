import math

import numpy as np
import pytest

from toric_quench.util import DictStack
from toric_quench.util import format_number
from toric_quench.util import jackknife
from toric_quench.util import not_optional


def test_dict_stack() -> None:
    d1: DictStack[str, int] = DictStack()
    d1.push("defaults", {"a": 1, "b": 2})
    d1.push("file", {"a": 3, "c": 4})
    assert set(d1) == {"a", "b", "c"}
    assert len(d1) == 3
    assert d1["a"] == 3
    assert d1["b"] == 2
    assert d1["c"] == 4
    assert d1.layer_of("a") == "file"
    assert d1.layer_of("b") == "defaults"
    assert d1.flattened() == {"a": 3, "b": 2, "c": 4}
    name, layer = d1.pop()
    assert (name, layer) == ("file", {"a": 3, "c": 4})
    assert d1["a"] == 1
    assert d1["b"] == 2
    with pytest.raises(KeyError):
        _ = d1["c"]
    with pytest.raises(KeyError):
        d1.layer_of("c")
    assert len(d1) == 2
    assert set(d1) == {"a", "b"}
    d1.pop()
    with pytest.raises(KeyError):
        _ = d1["a"]
    assert len(d1) == 0


def test_jackknife_mean_matches_standard_error() -> None:
    samples = np.array([[1.0, 4.0], [2.0, 4.0], [4.0, 4.0], [7.0, 4.0]])
    mean, error = jackknife(samples)
    np.testing.assert_allclose(mean, [3.5, 4.0])
    np.testing.assert_allclose(error, [np.std(samples[:, 0], ddof=1) / 2.0, 0.0], atol=1e-12)


def test_jackknife_single_sample() -> None:
    mean, error = jackknife([[0.3, 0.4]])
    np.testing.assert_array_equal(mean, [0.3, 0.4])
    assert np.all(np.isnan(error))


def test_jackknife_custom_statistic() -> None:
    samples = np.array([0.2, 0.4, 0.6, 0.8])
    full, error = jackknife(samples, lambda x: np.asarray(np.log(np.mean(x))))
    assert float(full) == pytest.approx(math.log(0.5))
    replicas = np.log([(2.0 - s) / 3.0 for s in samples])
    expected = math.sqrt(0.75 * np.sum((replicas - replicas.mean()) ** 2))
    assert float(error) == pytest.approx(expected)


@pytest.mark.parametrize(
    "value, text",
    [(0.0, "0"), (1.0, "1"), (0.1 + 0.2, "0.3"), (1.0 / 3.0, "0.333333333333"), (math.nan, "nan"), (1e-20, "1e-20")],
)
def test_format_number(value: float, text: str) -> None:
    assert format_number(value) == text


def test_not_optional() -> None:
    assert not_optional(0) == 0
    with pytest.raises(TypeError):
        not_optional(None)
