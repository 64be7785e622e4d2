"""
Experiment sweeps.  Each experiment is a function filling a `RunResult` with CSV tables and JSON documents; `run`
writes them out together with a manifest, marking it partial when the sweep stopped on an error.

Every CSV shares one column layout (`CSV_COLUMNS`).  Realizations are independent work units handed to a `mapper`
(the builtin `map`, or the ordered `imap` of a process pool); reductions always run in realization order, so the
output does not depend on the number of workers.
"""
import csv
import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass
from dataclasses import field
from datetime import datetime
from datetime import timezone
from pathlib import Path
from typing import Any
from typing import Callable
from typing import Dict
from typing import Iterable
from typing import List
from typing import Mapping
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from numpy.typing import NDArray

from toric_quench import __version__
from toric_quench.assembly2d import TopologicalSector
from toric_quench.assembly2d import assemble_entropy
from toric_quench.assembly2d import fit_loop_law
from toric_quench.assembly2d import wilson_loop
from toric_quench.chain import ChainSpec
from toric_quench.chain import DisorderModel
from toric_quench.chain import sample_chain
from toric_quench.chain import with_fields
from toric_quench.cleantheory import CleanQuenchSpec
from toric_quench.cleantheory import gge
from toric_quench.cleantheory import max_group_velocity
from toric_quench.cleantheory import quench_loop_law
from toric_quench.cleantheory import revival_period
from toric_quench.cleantheory import semiclassical_correlation
from toric_quench.cleantheory import semiclassical_entropy
from toric_quench.cleantheory import static_laws
from toric_quench.config import EntropyBase
from toric_quench.config import Experiment
from toric_quench.config import ExperimentConfig
from toric_quench.errors import ConfigError
from toric_quench.errors import ToricQuenchError
from toric_quench.freefermion import Quench
from toric_quench.freefermion import build_quadratic
from toric_quench.freefermion import diagonalize
from toric_quench.localization import MIN_FIT_SAMPLES
from toric_quench.localization import DecayFit
from toric_quench.localization import LocalizationProfile
from toric_quench.localization import default_time_grid
from toric_quench.localization import fit_decay
from toric_quench.localization import fit_decay_stability
from toric_quench.localization import sup_norm_profile
from toric_quench.observables import correlation_profile
from toric_quench.observables import correlation_xx
from toric_quench.observables import entanglement_entropy
from toric_quench.observables import entropy_profile
from toric_quench.oracle import DenseIsingChain
from toric_quench.oracle import dense_correlation
from toric_quench.oracle import dense_entropy
from toric_quench.util import format_number
from toric_quench.util import jackknife

__all__ = [
    "CSV_COLUMNS",
    "Row",
    "RunResult",
    "quench_observables",
    "run",
    "write_csv",
    "write_manifest",
    "ORACLE_CORRELATION_TOLERANCE",
    "ORACLE_ENTROPY_TOLERANCE",
]

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("epsilon", "realization_count", "t", "D_or_L", "mean", "std_error")

ORACLE_CORRELATION_TOLERANCE = 1e-8
ORACLE_ENTROPY_TOLERANCE = 1e-7

FloatArray = NDArray[np.float64]
Mapper = Callable[[Callable[[int], Any], Iterable[int]], Iterable[Any]]


@dataclass(frozen=True)
class Row:
    epsilon: float
    realization_count: int
    t: float
    d_or_l: int
    mean: float
    std_error: float

    def as_record(self) -> List[str]:
        return [
            format_number(self.epsilon),
            str(self.realization_count),
            format_number(self.t),
            str(self.d_or_l),
            format_number(self.mean),
            format_number(self.std_error),
        ]


@dataclass
class RunResult:
    config: ExperimentConfig
    tables: Dict[str, List[Row]] = field(default_factory=dict)
    """CSV file name -> rows"""
    documents: Dict[str, Any] = field(default_factory=dict)
    """JSON file name -> content"""
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    passed: bool = True
    """False when a pass/fail check ran and failed"""

    def add_rows(self, name: str, rows: Iterable[Row]) -> None:
        self.tables.setdefault(name, []).extend(rows)

    def note_determinant(self, value: float) -> None:
        self.diagnostics["min_determinant"] = min(self.diagnostics.get("min_determinant", math.inf), value)


def quench_observables(
    chain: ChainSpec, h0: float, times: Sequence[float], distances: Sequence[int]
) -> Tuple[FloatArray, FloatArray, float]:
    """
    Quench from the ground state of `chain` with fields `h0` to `chain` itself.  Returns |C^xx(1, 1 + D)| and the
    entropy of sites 1..L for L = D, both shaped (times, distances), and the smallest det Gamma met.
    """
    initial = diagonalize(build_quadratic(with_fields(chain, h0)))
    final = diagonalize(build_quadratic(chain))
    quench = Quench(initial, final)
    correlations = np.empty((len(times), len(distances)))
    entropies = np.empty((len(times), len(distances)))
    min_det = math.inf
    for i, t in enumerate(times):
        prop = quench.at(t)
        corr = correlation_profile(prop, distances, first=1)
        correlations[i] = [c.magnitude for c in corr]
        entropies[i] = [e.bits for e in entropy_profile(prop, distances, first=1)]
        min_det = min(min_det, min(c.determinant for c in corr))
    return correlations, entropies, min_det


@dataclass(frozen=True)
class _QuenchTask:
    """One disorder realization of a quench sweep, picklable for worker pools"""

    model: DisorderModel
    h0: float
    times: Tuple[float, ...]
    distances: Tuple[int, ...]

    def __call__(self, realization: int) -> Tuple[FloatArray, FloatArray, float]:
        return quench_observables(sample_chain(self.model, realization), self.h0, self.times, self.distances)


def _entropy_scale(config: ExperimentConfig) -> float:
    return math.log(2.0) if config.entropy_base is EntropyBase.NATS else 1.0


def _check_quench_distances(config: ExperimentConfig) -> None:
    if min(config.d_list) < 1 or max(config.d_list) >= config.n_sites:
        raise ConfigError("d_list", f"distances must lie in 1..{config.n_sites - 1}", config.origins.get("d_list"))


def _quench_samples(
    config: ExperimentConfig, epsilon: float, result: RunResult, mapper: Mapper
) -> Tuple[FloatArray, FloatArray]:
    """(realizations, times, distances) stacks of correlations and entropies for one disorder strength"""
    _check_quench_distances(config)
    model = DisorderModel(epsilon, config.h, config.n_sites, config.master_seed)
    task = _QuenchTask(model, config.h0, config.times, config.d_list)
    logger.info("epsilon=%g: %d realization(s) of N=%d", epsilon, config.realizations, config.n_sites)
    outputs = list(mapper(task, range(config.realizations)))
    for _, _, min_det in outputs:
        result.note_determinant(min_det)
    return np.stack([o[0] for o in outputs]), np.stack([o[1] for o in outputs])


def _rows(
    epsilon: float, count: int, times: Sequence[float], distances: Sequence[int], mean: FloatArray, err: FloatArray
) -> List[Row]:
    return [
        Row(epsilon, count, t, d, float(mean[i, k]), float(err[i, k]))
        for i, t in enumerate(times)
        for k, d in enumerate(distances)
    ]


def _run_disorder_sweep(config: ExperimentConfig, result: RunResult, mapper: Mapper) -> None:
    scale = _entropy_scale(config)
    for epsilon in config.epsilon_list:
        correlations, entropies = _quench_samples(config, epsilon, result, mapper)
        count = correlations.shape[0]
        mean, err = jackknife(correlations)
        result.add_rows("correlation.csv", _rows(epsilon, count, config.times, config.d_list, mean, err))
        mean, err = jackknife(entropies)
        result.add_rows("entropy.csv", _rows(epsilon, count, config.times, config.d_list, mean * scale, err * scale))


def _run_quench_clean(config: ExperimentConfig, result: RunResult, mapper: Mapper) -> None:
    # the clean chain is the single epsilon = 0 realization
    clean = dataclasses.replace(config, realizations=1, epsilon_list=(0.0,))
    scale = _entropy_scale(config)
    correlations, entropies = _quench_samples(clean, 0.0, result, mapper)
    nan = np.full(correlations.shape[1:], np.nan)
    result.add_rows("correlation.csv", _rows(0.0, 1, config.times, config.d_list, correlations[0], nan))
    result.add_rows("entropy.csv", _rows(0.0, 1, config.times, config.d_list, entropies[0] * scale, nan))


def _run_wilson_loop(config: ExperimentConfig, result: RunResult, mapper: Mapper) -> None:
    """Rows are independent, so the disorder-averaged loop is the product of D averaged row correlators"""
    fits = []
    for epsilon in config.epsilon_list:
        correlations, _ = _quench_samples(config, epsilon, result, mapper)
        count = correlations.shape[0]
        log_w = np.empty(correlations.shape[1:])
        err = np.empty_like(log_w)
        for i in range(log_w.shape[0]):
            for k, d in enumerate(config.d_list):

                def statistic(x: FloatArray, d: int = d) -> FloatArray:
                    return np.asarray(wilson_loop([float(np.mean(x))] * d).log_value)

                full, error = jackknife(correlations[:, i, k], statistic)
                log_w[i, k], err[i, k] = float(full), float(error)
        result.add_rows("wilson_loop.csv", _rows(epsilon, count, config.times, config.d_list, log_w, err))

        for i, t in enumerate(config.times):
            if len(config.d_list) < 2 or not np.all(np.isfinite(log_w[i])):
                logger.warning("skipping loop-law fit at epsilon=%g, t=%g", epsilon, t)
                continue
            law = fit_loop_law(config.d_list, log_w[i])
            fits.append(
                {
                    "epsilon": epsilon,
                    "t": t,
                    "a": law.a,
                    "b": law.b,
                    "residual": law.residual,
                    "area_law": law.is_area_law,
                }
            )
    result.documents["loop_law.json"] = fits


def _run_entropy_2d(config: ExperimentConfig, result: RunResult, mapper: Mapper) -> None:
    """Cylinder cut through 2M independent rows; the deficit depends on the topological sector"""
    scale = _entropy_scale(config)
    rows_2m = 2 * config.m_rows
    sectors = []
    for epsilon in config.epsilon_list:
        _, entropies = _quench_samples(config, epsilon, result, mapper)
        count = entropies.shape[0]
        mean, err = jackknife(entropies)
        for sector in TopologicalSector:
            # the deficit is fixed by the sector, so one cut at the first grid point reports it
            reference = assemble_entropy([float(mean[0, 0])] * rows_2m, sector)
            totals = np.empty_like(mean)
            for i in range(mean.shape[0]):
                for k in range(mean.shape[1]):
                    totals[i, k] = assemble_entropy([float(mean[i, k])] * rows_2m, sector).total_bits
            result.add_rows(
                f"entropy2d_{sector.value}.csv",
                _rows(epsilon, count, config.times, config.d_list, totals * scale, err * rows_2m * scale),
            )
            sectors.append(
                {
                    "epsilon": epsilon,
                    "sector": sector.value,
                    "m_rows": config.m_rows,
                    "gamma_topo": reference.gamma_topo,
                    "convention_dependent": reference.convention_dependent,
                }
            )
    result.documents["topological.json"] = sectors


def _fit_summary(fit: DecayFit) -> Dict[str, Any]:
    return {
        "c": fit.c_fit,
        "eta": fit.eta_fit,
        "zeta": fit.zeta_fit,
        "residual": fit.residual,
        "exponential": {
            "c": fit.exponential.c_fit,
            "eta": fit.exponential.eta_fit,
            "eta_stderr": fit.exponential.eta_stderr,
            "decades": fit.exponential.decades,
            "residual": fit.exponential.residual,
            "localized": fit.exponential.is_localized,
        },
    }


def _run_localization_probe(config: ExperimentConfig, result: RunResult, mapper: Mapper) -> None:
    fits = []
    for epsilon in config.epsilon_list:
        model = DisorderModel(epsilon, config.h, config.n_sites, config.master_seed)
        grid = default_time_grid(model, config.d_list, config.t_max)
        profile = sup_norm_profile(model, grid, config.d_list, config.realizations, config.sources, mapper)
        result.add_rows("sup_norm.csv", _profile_rows(profile))

        if len(config.d_list) < MIN_FIT_SAMPLES or np.any(profile.mean <= 0.0):
            logger.warning("epsilon=%g: not enough positive samples for a decay fit", epsilon)
            continue
        entry: Dict[str, Any] = {"epsilon": epsilon, "t_max": profile.t_max}
        entry.update(_fit_summary(fit_decay(profile.samples(), config.zeta_min)))
        if config.stability_check:
            doubled_grid = default_time_grid(model, config.d_list, 2.0 * profile.t_max)
            doubled = sup_norm_profile(model, doubled_grid, config.d_list, config.realizations, config.sources, mapper)
            result.add_rows("sup_norm_doubled.csv", _profile_rows(doubled))
            stability = fit_decay_stability(profile, doubled)
            entry["stability"] = {"relative_eta_change": stability.relative_eta_change, "stable": stability.stable}
        fits.append(entry)
    result.documents["decay_fits.json"] = fits


def _profile_rows(profile: LocalizationProfile) -> List[Row]:
    return [
        Row(profile.epsilon, profile.n_realizations, profile.t_max, d, float(m), float(e))
        for d, m, e in zip(profile.distances, profile.mean, profile.stderr)
    ]


@dataclass(frozen=True)
class _OracleTask:
    """Free-fermion vs dense evolution for one random chain; returns the worst deviations per time"""

    epsilon: float
    h: float
    h0: float
    master_seed: int
    sizes: Tuple[int, ...]
    times: Tuple[float, ...]

    def __call__(self, realization: int) -> Tuple[FloatArray, FloatArray]:
        n = self.sizes[realization % len(self.sizes)]
        chain = sample_chain(DisorderModel(self.epsilon, self.h, n, self.master_seed), realization)
        quench = Quench(diagonalize(build_quadratic(with_fields(chain, self.h0))), diagonalize(build_quadratic(chain)))
        initial = DenseIsingChain(with_fields(chain, self.h0)).ground_state()
        evolution = DenseIsingChain(chain)

        corr_dev = np.empty(len(self.times))
        entropy_dev = np.empty(len(self.times))
        for i, t in enumerate(self.times):
            prop = quench.at(t)
            state = evolution.evolve(initial, t)
            corr_dev[i] = max(
                abs(correlation_xx(prop, 1, site).magnitude - abs(dense_correlation(state, 1, site)))
                for site in range(2, n + 1)
            )
            entropy_dev[i] = max(
                abs(entanglement_entropy(prop, 1, length).bits - dense_entropy(state, 1, length))
                for length in range(1, n)
            )
        return corr_dev, entropy_dev


def _run_oracle_check(config: ExperimentConfig, result: RunResult, mapper: Mapper) -> None:
    summary = []
    for epsilon in config.epsilon_list:
        task = _OracleTask(epsilon, config.h, config.h0, config.master_seed, config.oracle_sizes, config.times)
        outputs = list(mapper(task, range(config.realizations)))
        corr_dev = np.stack([o[0] for o in outputs])
        entropy_dev = np.stack([o[1] for o in outputs])
        count = corr_dev.shape[0]
        # D_or_L = 0: deviations are maximized over every separation and arc
        for name, deviations in (("oracle_correlation.csv", corr_dev), ("oracle_entropy.csv", entropy_dev)):
            mean, err = jackknife(deviations)
            rows = [Row(epsilon, count, t, 0, float(m), float(e)) for t, m, e in zip(config.times, mean, err)]
            result.add_rows(name, rows)
        passed = bool(corr_dev.max() <= ORACLE_CORRELATION_TOLERANCE and entropy_dev.max() <= ORACLE_ENTROPY_TOLERANCE)
        result.passed = result.passed and passed
        summary.append(
            {
                "epsilon": epsilon,
                "instances": count,
                "sizes": list(config.oracle_sizes),
                "max_correlation_deviation": float(corr_dev.max()),
                "max_entropy_deviation": float(entropy_dev.max()),
                "correlation_tolerance": ORACLE_CORRELATION_TOLERANCE,
                "entropy_tolerance": ORACLE_ENTROPY_TOLERANCE,
                "passed": passed,
            }
        )
        logger.info("oracle check at epsilon=%g: %s", epsilon, "passed" if passed else "FAILED")
    result.documents["summary.json"] = {"passed": result.passed, "checks": summary}


def _run_clean_analytics(config: ExperimentConfig, result: RunResult, mapper: Mapper) -> None:
    _ = mapper
    scale = _entropy_scale(config)
    spec = CleanQuenchSpec(config.h0, config.h, config.n_sites)
    entropy_rows = []
    correlation_rows = []
    for t in config.times:
        for d in config.d_list:
            entropy_rows.append(Row(0.0, 1, t, d, semiclassical_entropy(spec, d, t) * scale, 0.0))
            correlation_rows.append(Row(0.0, 1, t, d, semiclassical_correlation(spec, d, t), 0.0))
    result.add_rows("semiclassical.csv", entropy_rows)
    result.add_rows("semiclassical_correlation.csv", correlation_rows)

    ensemble = gge(spec)
    document: Dict[str, Any] = {
        "h0": config.h0,
        "h": config.h,
        "n_sites": config.n_sites,
        "inverse_xi_eff": ensemble.inverse_xi,
        "xi_eff": ensemble.xi_eff,
        "entropy_density": ensemble.entropy_density * scale,
        "entropy_total_finite_ring": (ensemble.entropy_total or 0.0) * scale,
        "max_group_velocity": max_group_velocity(config.h),
        "quench_loop_coefficient": quench_loop_law(1.0, config.h),
        "entropy_base": config.entropy_base.value,
    }
    if config.h <= 1.0:
        document["revival_period"] = revival_period(config.n_sites, config.h)
    if 0.0 < config.h != 1.0:
        law = static_laws(1.0, config.h)
        document["static_law"] = {
            "regime": law.regime.value,
            "limit_correlator": law.limit_correlator,
            "wilson_coefficient": law.wilson_coefficient,
            "correlation_length": law.correlation_length,
        }
    result.documents["gge.json"] = document


_RUNNERS: Mapping[Experiment, Callable[[ExperimentConfig, RunResult, Mapper], None]] = {
    Experiment.QUENCH_CLEAN: _run_quench_clean,
    Experiment.DISORDER_SWEEP: _run_disorder_sweep,
    Experiment.WILSON_LOOP: _run_wilson_loop,
    Experiment.ENTROPY_2D: _run_entropy_2d,
    Experiment.LOCALIZATION_PROBE: _run_localization_probe,
    Experiment.ORACLE_CHECK: _run_oracle_check,
    Experiment.CLEAN_ANALYTICS: _run_clean_analytics,
}


def _jsonable(value: Any) -> Any:
    """Non-finite floats become strings so the output is strict JSON"""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, Mapping):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def write_csv(path: Path, rows: Iterable[Row]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.as_record())


def _write_json(path: Path, content: Any) -> None:
    path.write_text(json.dumps(_jsonable(content), indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_manifest(
    path: Path,
    config: ExperimentConfig,
    status: str,
    wall_time: float,
    outputs: Sequence[str],
    diagnostics: Optional[Mapping[str, Any]] = None,
    error: Optional[str] = None,
) -> None:
    manifest = {
        "status": status,
        "config": config.to_dict(),
        "config_sources": dict(config.origins),
        "master_seed": config.master_seed,
        "version": __version__,
        "wall_time_seconds": wall_time,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "outputs": list(outputs),
        "diagnostics": dict(diagnostics or {}),
    }
    if error is not None:
        manifest["error"] = error
    _write_json(path, manifest)


def _write_outputs(result: RunResult, out_dir: Path) -> List[str]:
    written = []
    for name, rows in result.tables.items():
        write_csv(out_dir / name, rows)
        written.append(name)
    for name, content in result.documents.items():
        _write_json(out_dir / name, content)
        written.append(name)
    return written


def run(config: ExperimentConfig, mapper: Mapper = map) -> RunResult:
    """Run the configured experiment and write its tables, documents and `manifest.json` into `output_path`"""
    out_dir = config.output_path
    out_dir.mkdir(parents=True, exist_ok=True)
    result = RunResult(config)
    start = time.perf_counter()
    try:
        _RUNNERS[config.experiment](config, result, mapper)
    except ToricQuenchError as e:
        written = _write_outputs(result, out_dir)
        wall_time = time.perf_counter() - start
        write_manifest(out_dir / "manifest.json", config, "partial", wall_time, written, result.diagnostics, str(e))
        logger.error("run stopped early; partial results in %s", out_dir)
        raise
    written = _write_outputs(result, out_dir)
    wall_time = time.perf_counter() - start
    write_manifest(out_dir / "manifest.json", config, "complete", wall_time, written, result.diagnostics)
    logger.info("wrote %s to %s in %.1f s", ", ".join(written), out_dir, wall_time)
    return result
