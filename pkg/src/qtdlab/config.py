"""Run configuration: a ``key = value`` document with ``#`` comments.

Example::

    # default setup with a fitted pair rate
    delta_T = 5e-9
    pair_rate = fit
    g_grid = log 0.01 1000 50
    emit = fig3, fig4, crossover
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .noise import ExperimentParams

__all__ = ["ConfigError", "GridSpec", "RunConfig", "parse_config", "EMIT_TARGETS"]

EMIT_TARGETS = ("fig3", "fig4", "crossover", "mc_validation")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class GridSpec:
    start: float = 0.01
    stop: float = 1000.0
    count: int = 50
    scale: str = "log"

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("grid count must be >= 1")
        if self.scale not in ("log", "linear"):
            raise ValueError(f"grid scale must be 'log' or 'linear', got {self.scale!r}")
        if self.start < 0 or self.stop < 0:
            raise ValueError("grid bounds must be non-negative")
        if self.scale == "log" and (self.start <= 0 or self.stop <= 0):
            raise ValueError("log grid bounds must be positive")

    def values(self) -> list[float]:
        if self.scale == "log":
            pts = np.geomspace(self.start, self.stop, self.count)
        else:
            pts = np.linspace(self.start, self.stop, self.count)
        return [float(v) for v in pts]

    def __str__(self):
        return f"{self.scale} {self.start!r} {self.stop!r} {self.count}"


@dataclass(frozen=True)
class RunConfig:
    """Experiment parameters plus sweep, Monte Carlo and output settings.

    ``pair_rate = None`` means "fit it so the 5 ns crossover sits at
    ``fit_target_g_star``".
    """

    S_A: float = 1000.0
    S_B: float = 1000.0
    eps_A: float = 1.0
    eps_B: float = 1.0
    delta_T: float = 5e-9
    pair_rate: float | None = None
    V: float = 0.9
    prior_present: float = 0.5
    jitter_sigma: float = 50e-12
    fit_target_g_star: float = 40.0
    g_grid: GridSpec = field(default_factory=GridSpec)
    crossover_range: tuple[float, float] = (1e-3, 1e5)
    windows: tuple[float, ...] = (5e-9, 1e-10)
    mc_g_values: tuple[float, ...] = (0.0, 1.0, 10.0, 100.0)
    mc_seeds: int = 40
    mc_min_coincidences: float = 1e4
    master_seed: int = 0
    output_dir: str = "results"
    emit: frozenset[str] = frozenset({"fig3", "fig4", "crossover"})
    workers: int = 1

    def __post_init__(self):
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be >= 0")
        if self.mc_seeds < 1:
            raise ValueError("mc_seeds must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 <= self.crossover_range[0] < self.crossover_range[1]:
            raise ValueError("crossover_range must be increasing and non-negative")
        if any(not w > 0 for w in self.windows):
            raise ValueError("windows must be positive")
        if any(g < 0 for g in self.mc_g_values):
            raise ValueError("mc_g_values must be non-negative")
        unknown = set(self.emit) - set(EMIT_TARGETS)
        if unknown:
            raise ValueError(f"unknown emit targets {sorted(unknown)}")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        # parameter invariants live in ExperimentParams
        self.params(pair_rate=self.pair_rate if self.pair_rate is not None else 0.0)

    def params(self, pair_rate: float | None = None, g: float = 0.0) -> ExperimentParams:
        rate = self.pair_rate if pair_rate is None else pair_rate
        if rate is None:
            raise ValueError("pair_rate has not been fitted")
        return ExperimentParams(
            S_A=self.S_A,
            S_B=self.S_B,
            g=g,
            eps_A=self.eps_A,
            eps_B=self.eps_B,
            delta_T=self.delta_T,
            pair_rate=rate,
            V=self.V,
            prior_present=self.prior_present,
        )

    def snapshot(self) -> dict:
        """JSON-ready, deterministic view of the configuration.

        ``output_dir`` is left out so a manifest does not depend on where it
        was written.
        """
        out = asdict(self)
        del out["output_dir"]
        out["g_grid"] = str(self.g_grid)
        out["emit"] = sorted(self.emit)
        for key in ("crossover_range", "windows", "mc_g_values"):
            out[key] = list(out[key])
        return out


def _float(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise ValueError("NaN is not allowed")
    return value


def _floats(text: str) -> tuple[float, ...]:
    parts = text.replace(",", " ").split()
    if not parts:
        raise ValueError("expected at least one number")
    return tuple(_float(p) for p in parts)


def _grid(text: str) -> GridSpec:
    parts = text.split()
    if len(parts) != 4:
        raise ValueError("expected '<log|linear> <start> <stop> <count>'")
    scale, start, stop, count = parts
    return GridSpec(_float(start), _float(stop), int(count), scale)


def _pair_rate(text: str) -> float | None:
    return None if text.strip().lower() == "fit" else _float(text)


def _range(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise ValueError("expected two numbers")
    return vals


def _emit(text: str) -> frozenset[str]:
    return frozenset(p for p in text.replace(",", " ").split())


_PARSERS = {
    "g_grid": _grid,
    "pair_rate": _pair_rate,
    "crossover_range": _range,
    "windows": _floats,
    "mc_g_values": _floats,
    "emit": _emit,
    "output_dir": str.strip,
}


def _parser_for(name: str):
    if name in _PARSERS:
        return _PARSERS[name]
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    return int if kind == "int" else _float


def parse_config(text: str) -> RunConfig:
    """Parse a ``key = value`` document into a validated :class:`RunConfig`."""
    known = {f.name for f in fields(RunConfig)}
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            values[key] = _parser_for(key)(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
        lines[key] = lineno
    try:
        return RunConfig(**values)
    except ValueError as exc:
        msg = str(exc)
        # point at the offending key when the message names one
        culprit = next((k for k in lines if msg.startswith(k) or f" {k} " in f" {msg} "), None)
        raise ConfigError(msg, lines.get(culprit)) from None


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())
