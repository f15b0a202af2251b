"""Line-oriented run configuration: [section] headers and key = value pairs.

Sections are run, engine, disorder and grid.  Unknown sections or keys are
hard errors, and every error names the offending key and line.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .disorder import MODES, DisorderDistribution
from .engine import VARIANTS, EngineSpec

EXPERIMENTS = (
    "cycle",
    "sweep-time",
    "limit-cycle",
    "transverse",
    "aux",
    "disorder",
    "ts-search",
)

_SECTION_KEYS = {
    "run": {
        "experiment",
        "output",
        "cycles",
        "cycle",
        "max_cycles",
        "audit",
        "jobs",
        "seed",
        "ts_tolerance",
        "ts_grid_step",
        "ts_max_time",
    },
    "engine": {
        "omega1",
        "omega2",
        "temp_hot",
        "temp_cold",
        "coupling_hot",
        "coupling_cold",
        "stroke_time",
        "variant",
        "transverse_lambda",
        "n",
        "initial_temperature",
        "dt",
        "dephasing",
    },
    "disorder": {"delta", "p", "mode"},
    "grid": {"t_tilde", "lambda", "n", "delta"},
}

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class GridRange:
    """Inclusive arithmetic range start:stop:step."""

    start: float
    stop: float
    step: float

    def values(self) -> np.ndarray:
        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)


@dataclass(frozen=True)
class RunConfig:
    """Validated experiment description parsed from a config file."""

    experiment: str
    engine: EngineSpec
    disorder: DisorderDistribution | None = None
    grids: dict = field(default_factory=dict)
    output: str = "."
    cycles: int = 1
    cycle: int | None = None
    max_cycles: int = 200
    audit: bool = False
    jobs: int = 1
    seed: int | None = None
    ts_tolerance: float = 2.5e-4
    ts_grid_step: float = 0.05
    ts_max_time: float = 100.0

    def echo(self) -> str:
        """Canonical text form of the configuration, for the run manifest.

        Unset optional keys are omitted so the echo re-parses to the same
        configuration.
        """
        lines = ["[run]", f"experiment = {self.experiment}", f"output = {self.output}"]
        lines += [
            f"cycles = {self.cycles}",
            f"max_cycles = {self.max_cycles}",
            f"audit = {str(self.audit).lower()}",
            f"jobs = {self.jobs}",
            f"ts_tolerance = {self.ts_tolerance:.17g}",
            f"ts_grid_step = {self.ts_grid_step:.17g}",
            f"ts_max_time = {self.ts_max_time:.17g}",
        ]
        if self.cycle is not None:
            lines.append(f"cycle = {self.cycle}")
        if self.seed is not None:
            lines.append(f"seed = {self.seed}")
        lines += ["", "[engine]"]
        e = self.engine
        lines += [
            f"omega1 = {e.omega1:.17g}",
            f"omega2 = {e.omega2:.17g}",
            f"temp_hot = {e.temp_hot:.17g}",
            f"temp_cold = {e.temp_cold:.17g}",
            f"coupling_hot = {e.coupling_hot:.17g}",
            f"coupling_cold = {e.coupling_cold:.17g}",
            f"stroke_time = {e.stroke_time:.17g}",
            f"variant = {e.variant}",
            f"dt = {e.dt:.17g}",
            f"dephasing = {str(e.dephasing).lower()}",
        ]
        if e.transverse_lambda is not None:
            lines.append(f"transverse_lambda = {e.transverse_lambda:.17g}")
        if e.aux_n is not None:
            lines.append(f"n = {e.aux_n:.17g}")
        if e.initial_temperature is not None:
            lines.append(f"initial_temperature = {e.initial_temperature:.17g}")
        if self.disorder is not None:
            d = self.disorder
            lines += [
                "",
                "[disorder]",
                f"delta = {d.delta:.17g}",
                f"p = {d.p:.17g}",
                f"mode = {d.mode}",
            ]
        if self.grids:
            lines += ["", "[grid]"]
            for name, rng in self.grids.items():
                lines.append(f"{name} = {rng.start:.17g}:{rng.stop:.17g}:{rng.step:.17g}")
        return "\n".join(lines) + "\n"


class _RawConfig:
    """Key/value pairs with line numbers, keyed by (section, key)."""

    def __init__(self):
        self.items: dict[tuple[str, str], tuple[str, int]] = {}

    def get(self, section: str, key: str) -> tuple[str, int] | None:
        return self.items.get((section, key))

    def take(self, section, key, parse, required=False, default=None):
        found = self.get(section, key)
        if found is None:
            if required:
                raise ConfigError(f"missing required key '{key}' in section [{section}]")
            return default
        text, line = found
        try:
            return parse(text)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {line}: {section}.{key}: {exc}") from None


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    return int(text, 10)


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ValueError(f"expected a boolean (true/false/on/off), got {text!r}")


def _parse_range(text: str) -> GridRange:
    parts = [p.strip() for p in text.split(":")]
    if len(parts) != 3:
        raise ValueError(f"expected start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise ValueError(f"range step must be positive, got {step:g}")
    if stop < start:
        raise ValueError(f"range stop {stop:g} is below start {start:g}")
    return GridRange(start, stop, step)


def _scan(text: str) -> _RawConfig:
    raw = _RawConfig()
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip().lower()
            if section not in _SECTION_KEYS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside of any [section]")
        key, _, value = stripped.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key not in _SECTION_KEYS[section]:
            raise ConfigError(f"line {lineno}: unknown key '{key}' in section [{section}]")
        if (section, key) in raw.items:
            raise ConfigError(f"line {lineno}: duplicate key '{key}' in section [{section}]")
        raw.items[(section, key)] = (value, lineno)
    return raw


def _line_of(raw: _RawConfig, section: str, key: str) -> int:
    found = raw.get(section, key)
    return found[1] if found is not None else 0


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document into a RunConfig."""
    raw = _scan(text)

    experiment = raw.take("run", "experiment", str, required=True)
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"line {_line_of(raw, 'run', 'experiment')}: run.experiment must be one of "
            f"{', '.join(EXPERIMENTS)}; got {experiment!r}"
        )

    omega1 = raw.take("engine", "omega1", _parse_float, required=True)
    omega2 = raw.take("engine", "omega2", _parse_float, required=True)
    if omega2 >= omega1:
        raise ConfigError(
            f"line {_line_of(raw, 'engine', 'omega2')}: engine.omega2 = {omega2:g} "
            f"must be smaller than engine.omega1 = {omega1:g}"
        )
    variant = raw.take("engine", "variant", str, default="baseline")
    if variant not in VARIANTS:
        raise ConfigError(
            f"line {_line_of(raw, 'engine', 'variant')}: engine.variant must be one of "
            f"{', '.join(VARIANTS)}; got {variant!r}"
        )
    aux_n = raw.take("engine", "n", _parse_float)
    if variant == "aux" and aux_n is not None and not 0.0 <= aux_n <= 1.0:
        raise ConfigError(
            f"line {_line_of(raw, 'engine', 'n')}: engine.n = {aux_n:g} violates the "
            "coupling bound 0 <= n <= 1.0"
        )
    spec_kwargs = dict(
        omega1=omega1,
        omega2=omega2,
        temp_hot=raw.take("engine", "temp_hot", _parse_float, required=True),
        temp_cold=raw.take("engine", "temp_cold", _parse_float, required=True),
        coupling_hot=raw.take("engine", "coupling_hot", _parse_float, default=0.1),
        coupling_cold=raw.take("engine", "coupling_cold", _parse_float, default=0.1),
        stroke_time=raw.take("engine", "stroke_time", _parse_float, default=1.0),
        variant=variant,
        transverse_lambda=raw.take("engine", "transverse_lambda", _parse_float),
        aux_n=aux_n,
        initial_temperature=raw.take("engine", "initial_temperature", _parse_float),
        dt=raw.take("engine", "dt", _parse_float, default=1e-3),
        dephasing=raw.take("engine", "dephasing", _parse_bool, default=True),
    )
    grids = {}
    for name in ("t_tilde", "lambda", "n", "delta"):
        rng = raw.take("grid", name, _parse_range)
        if rng is not None:
            grids[name] = rng

    # Variant-parameter placeholders when the experiment sweeps them.
    if experiment == "transverse":
        spec_kwargs["variant"] = "transverse"
        if spec_kwargs["transverse_lambda"] is None:
            if "lambda" not in grids:
                raise ConfigError(
                    "transverse experiment needs engine.transverse_lambda or a grid.lambda range"
                )
            spec_kwargs["transverse_lambda"] = float(grids["lambda"].values()[0])
    if experiment == "aux":
        spec_kwargs["variant"] = "aux"
        if spec_kwargs["aux_n"] is None:
            if "n" not in grids:
                raise ConfigError("aux experiment needs engine.n or a grid.n range")
            spec_kwargs["aux_n"] = float(grids["n"].values()[0])

    try:
        engine = EngineSpec(**spec_kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid [engine] section: {exc}") from None

    disorder = None
    if any(raw.get("disorder", key) for key in _SECTION_KEYS["disorder"]):
        try:
            disorder = DisorderDistribution(
                delta=raw.take("disorder", "delta", _parse_float, default=0.0),
                p=raw.take("disorder", "p", _parse_float, required=True),
                mode=raw.take("disorder", "mode", str, default="shared"),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid [disorder] section: {exc}") from None
        if disorder.mode not in MODES:
            raise ConfigError(
                f"line {_line_of(raw, 'disorder', 'mode')}: disorder.mode must be one of "
                f"{', '.join(MODES)}"
            )

    config = RunConfig(
        experiment=experiment,
        engine=engine,
        disorder=disorder,
        grids=grids,
        output=raw.take("run", "output", str, default="."),
        cycles=raw.take("run", "cycles", _parse_int, default=1),
        cycle=raw.take("run", "cycle", _parse_int),
        max_cycles=raw.take("run", "max_cycles", _parse_int, default=200),
        audit=raw.take("run", "audit", _parse_bool, default=False),
        jobs=raw.take("run", "jobs", _parse_int, default=1),
        seed=raw.take("run", "seed", _parse_int),
        ts_tolerance=raw.take("run", "ts_tolerance", _parse_float, default=2.5e-4),
        ts_grid_step=raw.take("run", "ts_grid_step", _parse_float, default=0.05),
        ts_max_time=raw.take("run", "ts_max_time", _parse_float, default=100.0),
    )
    _validate_experiment(config, raw)
    return config


def _validate_experiment(config: RunConfig, raw: _RawConfig) -> None:
    need_grid = {
        "sweep-time": "t_tilde",
        "limit-cycle": "t_tilde",
        "transverse": "lambda",
        "aux": "n",
        "disorder": "delta",
        "ts-search": "delta",
    }
    grid = need_grid.get(config.experiment)
    if grid is not None and grid not in config.grids:
        raise ConfigError(
            f"experiment '{config.experiment}' requires a grid.{grid} range"
        )
    if config.experiment in ("disorder", "ts-search") and config.disorder is None:
        raise ConfigError(
            f"experiment '{config.experiment}' requires a [disorder] section (at least p)"
        )
    if config.cycles < 1:
        raise ConfigError(f"line {_line_of(raw, 'run', 'cycles')}: run.cycles must be >= 1")
    if config.cycle is not None and config.cycle < 1:
        raise ConfigError(f"line {_line_of(raw, 'run', 'cycle')}: run.cycle must be >= 1")
    if config.max_cycles < 1:
        raise ConfigError(
            f"line {_line_of(raw, 'run', 'max_cycles')}: run.max_cycles must be >= 1"
        )
    if config.jobs < 1:
        raise ConfigError(f"line {_line_of(raw, 'run', 'jobs')}: run.jobs must be >= 1")
    for name, value in (
        ("ts_tolerance", config.ts_tolerance),
        ("ts_grid_step", config.ts_grid_step),
        ("ts_max_time", config.ts_max_time),
    ):
        if value <= 0:
            raise ConfigError(f"line {_line_of(raw, 'run', name)}: run.{name} must be positive")


def parse_config_file(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
