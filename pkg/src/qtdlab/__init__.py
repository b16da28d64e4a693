"""Quantum target detection with entangled photon pairs and linear optics."""

__version__ = "0.1.0"

from .info import (  # noqa: E402
    advantage_curve,
    find_crossover,
    fit_pair_rate,
    mutual_information,
    window_sweep,
)
from .noise import ExperimentParams, Hypothesis, Strategy, conditional_table, counts  # noqa: E402

__all__ = [
    "__version__",
    "ExperimentParams",
    "Hypothesis",
    "Strategy",
    "advantage_curve",
    "conditional_table",
    "counts",
    "find_crossover",
    "fit_pair_rate",
    "mutual_information",
    "window_sweep",
]
