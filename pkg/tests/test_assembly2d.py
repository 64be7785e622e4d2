import logging
import math
from typing import List

import numpy as np
import pytest

from tests.conftest import quench_from
from toric_quench.assembly2d import TOPOLOGICAL_DEFICIT
from toric_quench.assembly2d import TopologicalSector
from toric_quench.assembly2d import assemble_entropy
from toric_quench.assembly2d import fit_loop_law
from toric_quench.assembly2d import wilson_loop
from toric_quench.chain import clean_chain
from toric_quench.cleantheory import quench_loop_law
from toric_quench.errors import DomainError
from toric_quench.errors import FitError
from toric_quench.freefermion import QuenchPropagator
from toric_quench.observables import correlation_profile


def test_deconfined_loop() -> None:
    result = wilson_loop([1.0] * 5)
    assert result.log_value == 0.0
    assert result.value == 1.0
    assert result.d == 5
    assert not result.vanished


@pytest.mark.parametrize("c, d", [(0.9, 1), (0.5, 4), (0.93, 32)])
def test_identical_rows(c: float, d: int) -> None:
    result = wilson_loop([c] * d)
    assert result.log_value == pytest.approx(d * math.log(c), abs=1e-10)
    assert result.per_row_factors == (c,) * d


def test_loop_of_independent_rows() -> None:
    factors = [0.9, 0.8, 0.7]
    assert wilson_loop(factors).log_value == pytest.approx(math.log(0.9 * 0.8 * 0.7), abs=1e-12)


def test_vanishing_row_is_flagged() -> None:
    result = wilson_loop([0.9, 0.0, 0.8])
    assert result.vanished
    assert result.log_value == -math.inf
    assert result.value == 0.0


def test_empty_loop_rejected() -> None:
    with pytest.raises(DomainError):
        wilson_loop([])


@pytest.mark.parametrize("m_rows", [1, 2, 8])
def test_ghz_rows_show_topological_deficit(m_rows: int) -> None:
    rows = [1.0] * (2 * m_rows)
    z = assemble_entropy(rows, TopologicalSector.Z_SECTOR)
    assert z.total_bits == 2 * m_rows - 1
    assert z.gamma_topo == TOPOLOGICAL_DEFICIT == 1.0
    assert z.m_rows == m_rows
    assert not z.convention_dependent

    x = assemble_entropy(rows, TopologicalSector.X_SECTOR)
    assert x.total_bits == 2 * m_rows
    assert x.gamma_topo == 0.0
    assert x.convention_dependent


def test_x_sector_convention_is_logged(caplog: pytest.LogCaptureFixture) -> None:
    with caplog.at_level(logging.INFO, logger="toric_quench.assembly2d"):
        assemble_entropy([0.3, 0.4], TopologicalSector.X_SECTOR)
    assert "convention" in caplog.text


def test_bounded_rows_give_boundary_law() -> None:
    alpha = 0.37
    rows = np.random.default_rng(1).uniform(0.0, alpha, size=12)
    result = assemble_entropy(rows, TopologicalSector.X_SECTOR)
    assert result.total_bits <= 2 * alpha * result.m_rows


@pytest.mark.parametrize("rows", [[], [1.0], [1.0, 1.0, 1.0], [1.0, -0.5], [1.0, float("nan")]])
def test_assemble_entropy_rejects(rows: List[float]) -> None:
    with pytest.raises(DomainError):
        assemble_entropy(rows, TopologicalSector.Z_SECTOR)


def test_fit_recovers_perimeter_and_area_terms() -> None:
    d = np.array([2.0, 4.0, 8.0, 16.0, 32.0])
    fit = fit_loop_law(d, -0.3 * d - 0.05 * d**2)
    assert fit.a == pytest.approx(0.3, abs=1e-10)
    assert fit.b == pytest.approx(0.05, abs=1e-10)
    assert fit.residual == pytest.approx(0.0, abs=1e-10)
    assert fit.is_area_law


def test_fit_perimeter_law() -> None:
    d = np.arange(1.0, 9.0)
    fit = fit_loop_law(d, -0.07 * d)
    assert fit.b == pytest.approx(0.0, abs=1e-10)
    assert not fit.is_area_law


def test_fit_area_law_after_clean_quench() -> None:
    # ln W -> -D^2 ln 2 for h/J > 1
    d = np.arange(1.0, 7.0)
    fit = fit_loop_law(d, -math.log(2.0) * d**2)
    assert fit.b == pytest.approx(math.log(2.0), abs=1e-10)
    assert fit.is_area_law


@pytest.mark.parametrize(
    "d, values",
    [
        ([4.0], [-0.1]),
        ([4.0, 8.0], [-0.1]),
        ([4.0, 8.0, 16.0], [-0.1, -math.inf, -0.5]),
    ],
)
def test_fit_rejects(d: List[float], values: List[float]) -> None:
    with pytest.raises(FitError):
        fit_loop_law(d, values)


def _log_loops(prop: QuenchPropagator, sizes: List[int]) -> List[float]:
    rows = correlation_profile(prop, sizes)
    return [wilson_loop([row.magnitude] * row.d).log_value for row in rows]


@pytest.mark.slow
def test_loop_law_separates_quenched_from_static_rows() -> None:
    sizes = [8, 16, 24, 32]
    chain = clean_chain(512, 0.5)
    quenched = fit_loop_law(sizes, _log_loops(quench_from(chain, 0.0).at(200.0), sizes))
    static = fit_loop_law(sizes, _log_loops(quench_from(chain, 0.5).at(200.0), sizes))
    assert quenched.is_area_law
    assert quenched.b == pytest.approx(quench_loop_law(1.0, 0.5), rel=0.05)
    assert not static.is_area_law
    assert static.a == pytest.approx(-0.25 * math.log(0.75), rel=0.02)
