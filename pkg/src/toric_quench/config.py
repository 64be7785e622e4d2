"""
Experiment configuration.

A config file is a flat list of ``key = value`` lines.  ``#`` starts a comment, blank lines are ignored, list values
are comma separated, and a line indented deeper than the key line it follows continues that key's value::

    experiment   = DisorderSweep
    n_sites      = 256
    epsilon_list = 0.0, 0.25,
                   0.5

Values are resolved through a stack of layers: built-in defaults, the config file, ``--set key=value`` overrides, the
``TORIC_QUENCH_THREADS`` environment variable (threads only), then dedicated command line flags.
"""
import enum
import os
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any
from typing import Callable
from typing import Dict
from typing import Mapping
from typing import MutableMapping
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
from more_itertools import peekable

from toric_quench.errors import ConfigError
from toric_quench.util import DictStack

__all__ = [
    "Experiment",
    "EntropyBase",
    "ConfigEntry",
    "ExperimentConfig",
    "parse_config_text",
    "parse_overrides",
    "load_config",
    "THREADS_ENV_VAR",
]

THREADS_ENV_VAR = "TORIC_QUENCH_THREADS"


class Experiment(enum.Enum):
    QUENCH_CLEAN = "QuenchClean"
    DISORDER_SWEEP = "DisorderSweep"
    WILSON_LOOP = "WilsonLoop"
    ENTROPY_2D = "Entropy2D"
    LOCALIZATION_PROBE = "LocalizationProbe"
    ORACLE_CHECK = "OracleCheck"
    CLEAN_ANALYTICS = "CleanAnalytics"


class EntropyBase(enum.Enum):
    BITS = "bits"
    NATS = "nats"


def _case_insensitive(enum_type: Any) -> Callable[[str], Any]:
    def convert(raw: str) -> Any:
        for member in enum_type:
            if member.value.lower() == raw.strip().lower():
                return member
        raise ValueError(f"expected one of {', '.join(m.value for m in enum_type)}")

    return convert


def _list_of(item: Callable[[str], Any]) -> Callable[[str], Tuple[Any, ...]]:
    def convert(raw: str) -> Tuple[Any, ...]:
        return tuple(item(part.strip()) for part in raw.split(",") if part.strip())

    return convert


def _boolean(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean (true/false)")


_SCHEMA: Dict[str, Callable[[str], Any]] = {
    "experiment": _case_insensitive(Experiment),
    "n_sites": int,
    "h": float,
    "h0": float,
    "epsilon_list": _list_of(float),
    "t_list": _list_of(float),
    "t_max": float,
    "t_step": float,
    "d_list": _list_of(int),
    "realizations": int,
    "master_seed": int,
    "output_path": Path,
    "entropy_base": _case_insensitive(EntropyBase),
    "m_rows": int,
    "zeta_min": float,
    "sources": int,
    "threads": int,
    "oracle_sizes": _list_of(int),
    "stability_check": _boolean,
}
"""Every accepted key with the converter applied to its text value"""

DEFAULTS: Mapping[str, Any] = {
    "n_sites": 256,
    "h": 0.5,
    "h0": 0.0,
    "epsilon_list": (0.0,),
    "t_list": None,
    "t_max": None,
    "t_step": None,
    "d_list": (16,),
    "realizations": 1,
    "master_seed": 0,
    "output_path": Path("results"),
    "entropy_base": EntropyBase.BITS,
    "m_rows": 4,
    "zeta_min": 0.1,
    "sources": 8,
    "threads": 1,
    "oracle_sizes": (6, 8, 10),
    "stability_check": False,
}


@dataclass
class ConfigEntry:
    """One ``key = value`` assignment, possibly spread over continuation lines"""

    key: str
    value: str
    start: int
    end: int
    indent: int

    def incorporate_continuation_line(self, line_no: int, line: str) -> bool:
        """Append `line` to the value if it directly follows this entry and is indented deeper than the key"""
        if line_no != self.end + 1:
            return False
        content = _strip_comment(line)
        if not content.strip() or _indent_of(line) <= self.indent:
            return False
        self.value = f"{self.value} {content.strip()}"
        self.end = line_no
        return True

    @classmethod
    def parse_from(cls, it: "peekable[Tuple[int, str]]", source: str) -> Optional["ConfigEntry"]:
        """
        Parse an entry starting at the next line and advance the iterator past it and its continuation lines.
        Returns None without advancing for blank and comment lines.
        """
        try:
            line_no, line = it.peek()
        except StopIteration:
            return None
        content = _strip_comment(line)
        if not content.strip():
            return None
        key, sep, value = content.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(content.strip(), "expected 'key = value'", source, line_no)
        _ = next(it)
        entry = cls(key, value.strip(), line_no, line_no, _indent_of(line))
        while True:
            try:
                line_no, line = it.peek()
            except StopIteration:
                return entry
            if not entry.incorporate_continuation_line(line_no, line):
                return entry
            _ = next(it)


def _strip_comment(line: str) -> str:
    return line.partition("#")[0].rstrip()


def _indent_of(line: str) -> int:
    return len(line) - len(line.lstrip(" \t"))


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, ConfigEntry]:
    line_it: "peekable[Tuple[int, str]]" = peekable(enumerate(text.splitlines(), start=1))
    entries: Dict[str, ConfigEntry] = {}
    while True:
        try:
            entry = ConfigEntry.parse_from(line_it, source)
            if entry is None:
                _ = next(line_it)
                continue
        except StopIteration:
            break
        if entry.key not in _SCHEMA:
            raise ConfigError(entry.key, "unknown key", source, entry.start)
        if entry.key in entries:
            first_line = entries[entry.key].start
            raise ConfigError(entry.key, f"duplicate key (first set on line {first_line})", source, entry.start)
        entries[entry.key] = entry
    return entries


def parse_overrides(overrides: Sequence[str]) -> Dict[str, str]:
    """``key=value`` strings from the command line"""
    result: Dict[str, str] = {}
    for item in overrides:
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(item, "override must look like key=value", "--set")
        if key not in _SCHEMA:
            raise ConfigError(key, "unknown key", "--set")
        result[key] = value.strip()
    return result


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    n_sites: int
    h: float
    h0: float
    epsilon_list: Tuple[float, ...]
    t_list: Optional[Tuple[float, ...]]
    t_max: Optional[float]
    t_step: Optional[float]
    d_list: Tuple[int, ...]
    realizations: int
    master_seed: int
    output_path: Path
    entropy_base: EntropyBase
    m_rows: int
    zeta_min: float
    sources: int
    threads: int
    oracle_sizes: Tuple[int, ...]
    stability_check: bool
    origins: Mapping[str, str] = field(default_factory=dict, compare=False, repr=False)
    """Name of the layer that supplied each key"""

    def __post_init__(self) -> None:
        for key in ("epsilon_list", "d_list", "oracle_sizes"):
            if not getattr(self, key):
                self._fail(key, "list must not be empty")
        if self.t_list is not None and not self.t_list:
            self._fail("t_list", "list must not be empty")
        if self.realizations < 1:
            self._fail("realizations", "need at least one realization")
        if self.n_sites < 2:
            self._fail("n_sites", "a chain needs at least 2 sites")
        if self.threads < 1:
            self._fail("threads", "need at least one worker")
        if any(not 0.0 <= eps < 1.0 for eps in self.epsilon_list):
            self._fail("epsilon_list", "disorder strengths must lie in [0, 1)")
        if self.h < 0.0 or self.h0 < 0.0:
            self._fail("h" if self.h < 0.0 else "h0", "fields must be >= 0")
        if any(d < 0 for d in self.d_list):
            self._fail("d_list", "distances must be >= 0")
        if self.t_step is not None and self.t_step <= 0.0:
            self._fail("t_step", "must be > 0")
        needs_times = self.experiment is not Experiment.LOCALIZATION_PROBE
        if needs_times and self.t_list is None and self.t_max is None:
            self._fail("t_list", "set t_list, or t_max (with optional t_step)")

    def _fail(self, key: str, reason: str) -> None:
        raise ConfigError(key, reason, self.origins.get(key))

    @property
    def times(self) -> Tuple[float, ...]:
        if self.t_list is not None:
            return self.t_list
        if self.t_max is None:
            return ()
        if self.t_step is None:
            return (self.t_max,)
        n_steps = int(np.floor(self.t_max / self.t_step + 1e-9))
        return tuple(float(k * self.t_step) for k in range(n_steps + 1))

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly echo of every setting"""
        echo: Dict[str, Any] = {}
        for key in _SCHEMA:
            value = getattr(self, key)
            if isinstance(value, enum.Enum):
                value = value.value
            elif isinstance(value, Path):
                value = str(value)
            elif isinstance(value, tuple):
                value = list(value)
            echo[key] = value
        return echo


def _convert(stack: DictStack[str, Any], key: str, line_numbers: Mapping[str, int]) -> Any:
    raw = stack[key]
    if not isinstance(raw, str):
        return raw
    layer = stack.layer_of(key)
    try:
        return _SCHEMA[key](raw)
    except ValueError as e:
        raise ConfigError(key, f"cannot parse {raw!r}: {e}", layer, line_numbers.get(key)) from e


def load_config(
    path: Optional[Path],
    overrides: Sequence[str] = (),
    flags: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> ExperimentConfig:
    """Resolve an ExperimentConfig from defaults, a config file, overrides, the environment and flags"""
    stack: DictStack[str, Any] = DictStack()
    stack.push("defaults", dict(DEFAULTS))

    line_numbers: Dict[str, int] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError("<file>", f"cannot read config: {e}", str(path)) from e
        entries = parse_config_text(text, str(path))
        stack.push(str(path), {key: entry.value for key, entry in entries.items()})
        line_numbers = {key: entry.start for key, entry in entries.items()}

    stack.push("--set", dict(parse_overrides(overrides)))

    env = os.environ if environ is None else environ
    environment: MutableMapping[str, Any] = {}
    if env.get(THREADS_ENV_VAR):
        environment["threads"] = env[THREADS_ENV_VAR]
    stack.push(THREADS_ENV_VAR, environment)

    stack.push("flags", {key: value for key, value in (flags or {}).items() if value is not None})

    if "experiment" not in stack:
        raise ConfigError("experiment", "no experiment given", str(path) if path is not None else None)

    values = {key: _convert(stack, key, line_numbers) for key in _SCHEMA}
    origins = {key: stack.layer_of(key) for key in _SCHEMA if key in stack}
    return ExperimentConfig(**values, origins=origins)
