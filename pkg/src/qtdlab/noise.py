"""Closed-form coincidence model for the classical and quantum strategies.

Everything here works in rates (per second).  Multiply by
``ExperimentParams.duration`` to get expected counts.

Split rules for noise coincidences between the "phi" result (projection onto
the source state) and the orthogonal result:

* classical: unpolarized background splits 1/2 : 1/2 between the H and V
  projections; idler/stray-signal accidentals are all H, so they land in phi.
* quantum: every uncorrelated two-photon event is unpolarized, so it lands on
  the phi+ detector pairs with probability 1/4 and elsewhere with 3/4.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

__all__ = [
    "Strategy",
    "Hypothesis",
    "ExperimentParams",
    "SinglesRates",
    "CountsTable",
    "ConditionalTable",
    "DegenerateCountsError",
    "NOISE_PHI_FRACTION",
    "accidental_rate",
    "classical_counts",
    "quantum_counts",
    "counts",
    "conditional_probabilities",
    "apply_visibility",
    "conditional_table",
]


class Strategy(str, enum.Enum):
    CLASSICAL = "classical"
    QUANTUM = "quantum"


class Hypothesis(enum.IntEnum):
    PRESENT = 0
    ABSENT = 1


# Fraction of uncorrelated (unpolarized) coincidences landing in the phi result.
NOISE_PHI_FRACTION = {Strategy.CLASSICAL: 0.5, Strategy.QUANTUM: 0.25}


class DegenerateCountsError(ValueError):
    """No coincidences at all, so the conditional probabilities are 0/0."""


def _check_unit(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class ExperimentParams:
    """All physical inputs of the model in one validated record.

    Give exactly one of ``N`` (background photons/s) and ``g`` (= N / S_B);
    the other is filled in.  With ``S_B == 0`` only ``N`` is meaningful.

    ``pair_rate`` is the true-pair coincidence base rate before detection
    efficiencies.  It is not reported for the experiment and is usually fitted
    (see :func:`qtdlab.info.fit_pair_rate`).
    """

    S_A: float = 1000.0
    S_B: float = 1000.0
    N: float | None = None
    g: float | None = None
    eps_A: float = 1.0
    eps_B: float = 1.0
    delta_T: float = 5e-9
    pair_rate: float = 100.0
    V: float = 0.9
    prior_present: float = 0.5
    duration: float = 1.0

    def __post_init__(self):
        N, g = self.N, self.g
        if N is None and g is None:
            N, g = 0.0, 0.0
        elif N is None:
            if g < 0:
                raise ValueError(f"g must be >= 0, got {g}")
            N = g * self.S_B
        elif g is None:
            g = N / self.S_B if self.S_B > 0 else (math.inf if N > 0 else 0.0)
        elif self.S_B > 0 and abs(g - N / self.S_B) >= 1e-9 * max(1.0, g):
            raise ValueError(f"inconsistent noise: g={g} but N/S_B={N / self.S_B}")
        object.__setattr__(self, "N", float(N))
        object.__setattr__(self, "g", float(g))

        for name in ("S_A", "S_B", "N", "pair_rate", "duration"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("eps_A", "eps_B", "V", "prior_present"):
            _check_unit(name, getattr(self, name))
        if not self.delta_T > 0:
            raise ValueError(f"delta_T must be > 0, got {self.delta_T}")

    def with_noise(self, *, g: float | None = None, N: float | None = None) -> "ExperimentParams":
        """Copy with a new background level, keeping S_B fixed."""
        if (g is None) == (N is None):
            raise TypeError("give exactly one of g and N")
        return replace(self, g=g, N=N)

    def updated(self, **changes) -> "ExperimentParams":
        """``dataclasses.replace`` that re-derives g from N unless g is given."""
        if "g" not in changes and "N" not in changes:
            changes["g"] = None
            changes["N"] = self.N
        elif "g" in changes and "N" not in changes:
            changes["N"] = None
        elif "N" in changes and "g" not in changes:
            changes["g"] = None
        return replace(self, **changes)


@dataclass(frozen=True)
class SinglesRates:
    c_A: float
    c_B: float

    def __post_init__(self):
        if self.c_A < 0 or self.c_B < 0:
            raise ValueError("count rates must be non-negative")


def accidental_rate(singles: SinglesRates, delta_T: float) -> float:
    """Accidental coincidence rate ``c_A * c_B * delta_T`` of two uncorrelated detectors."""
    if delta_T < 0:
        raise ValueError("delta_T must be non-negative")
    return singles.c_A * singles.c_B * delta_T


@dataclass(frozen=True)
class CountsTable:
    """Coincidence rates (or counts) for one strategy and hypothesis.

    ``C_phi = SC_phi + NC_phi`` and ``C_perp = NC_perp``.  ``visibility``
    records the correction already folded in (1.0 means none).
    """

    strategy: Strategy
    x: Hypothesis | None
    SC_phi: float
    NC_phi: float
    NC_perp: float
    visibility: float = 1.0

    def __post_init__(self):
        for name in ("SC_phi", "NC_phi", "NC_perp"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def C_phi(self) -> float:
        return self.SC_phi + self.NC_phi

    @property
    def C_perp(self) -> float:
        return self.NC_perp

    @property
    def total(self) -> float:
        return self.C_phi + self.C_perp

    def scaled(self, factor: float) -> "CountsTable":
        """Rates to counts (or back) by a common factor such as the duration."""
        return replace(
            self,
            SC_phi=self.SC_phi * factor,
            NC_phi=self.NC_phi * factor,
            NC_perp=self.NC_perp * factor,
        )


def classical_counts(params: ExperimentParams, x: Hypothesis | int) -> CountsTable:
    """Product-state strategy with a local H projection on the signal arm.

    Present: idler/signal and idler/noise accidentals plus true pairs.
    Absent: the signal arm is blocked, leaving only idler/noise accidentals,
    split evenly between H and V.
    """
    x = Hypothesis(x)
    eff = params.eps_A * params.eps_B
    half_noise = eff * params.S_A * (params.N / 2) * params.delta_T
    if x is Hypothesis.PRESENT:
        stray = eff * params.S_A * params.S_B * params.delta_T
        return CountsTable(Strategy.CLASSICAL, x, eff * params.pair_rate, stray + half_noise, half_noise)
    return CountsTable(Strategy.CLASSICAL, x, 0.0, half_noise, half_noise)


def quantum_counts(params: ExperimentParams, x: Hypothesis | int) -> CountsTable:
    """Entangled strategy with the linear-optics Bell-state analyzer.

    All photons meet at the central PBS, so accidentals scale with the square
    of the total incident rate; the phi+ detector pairs see 1/8 of it.
    """
    x = Hypothesis(x)
    eff = params.eps_A * params.eps_B
    s_b = params.S_B if x is Hypothesis.PRESENT else 0.0
    nc_phi = eff / 8 * (params.S_A + s_b + params.N) ** 2 * params.delta_T
    sc = eff * params.pair_rate if x is Hypothesis.PRESENT else 0.0
    return CountsTable(Strategy.QUANTUM, x, sc, nc_phi, 3 * nc_phi)


def counts(params: ExperimentParams, strategy: Strategy | str, x: Hypothesis | int) -> CountsTable:
    """Model counts for either strategy; quantum tables get ``params.V`` applied."""
    strategy = Strategy(strategy)
    if strategy is Strategy.CLASSICAL:
        return classical_counts(params, x)
    return apply_visibility(quantum_counts(params, x), params.V)


def apply_visibility(table: CountsTable, V: float) -> CountsTable:
    """Degrade the Bell-state measurement of true pairs.

    With probability ``V`` a pair is identified correctly; otherwise it is
    analyzed like unpolarized light and lands in phi with probability 1/4.
    """
    if table.strategy is not Strategy.QUANTUM:
        raise ValueError("visibility only applies to the two-photon interference of the quantum strategy")
    _check_unit("V", V)
    if table.visibility != 1.0:
        raise ValueError("visibility already applied to this table")
    sc = table.SC_phi
    return replace(
        table,
        SC_phi=V * sc + (1 - V) * sc / 4,
        NC_perp=table.NC_perp + (1 - V) * sc * 3 / 4,
        visibility=V,
    )


def conditional_probabilities(table: CountsTable) -> tuple[float, float]:
    """``(p(0|x), p(1|x))`` from phi and orthogonal coincidences."""
    total = table.C_phi + table.C_perp
    if not total > 0:
        raise DegenerateCountsError(f"no coincidences for {table.strategy.value}, x={table.x}")
    p0 = table.C_phi / total
    return p0, 1.0 - p0


@dataclass(frozen=True)
class ConditionalTable:
    """p(r|x) for r, x in {0, 1}, stored as p(0|x); optional standard errors."""

    p0_given_present: float
    p0_given_absent: float
    se_present: float | None = None
    se_absent: float | None = None

    def __post_init__(self):
        _check_unit("p(0|0)", self.p0_given_present)
        _check_unit("p(0|1)", self.p0_given_absent)

    def p(self, r: int, x: int) -> float:
        p0 = self.p0_given_present if x == 0 else self.p0_given_absent
        return p0 if r == 0 else 1.0 - p0

    def row(self, x: int) -> tuple[float, float]:
        return self.p(0, x), self.p(1, x)

    def as_matrix(self) -> list[list[float]]:
        """Rows indexed by x, columns by r."""
        return [list(self.row(0)), list(self.row(1))]


def conditional_table(params: ExperimentParams, strategy: Strategy | str) -> ConditionalTable:
    """Model conditional probabilities for both hypotheses.

    When the object is absent, every coincidence is uncorrelated and follows
    the strategy's fixed noise split, so an empty absent table falls back to
    that split (the limit as the background vanishes).  An empty present
    table is still an error.
    """
    strategy = Strategy(strategy)
    p0_present, _ = conditional_probabilities(counts(params, strategy, Hypothesis.PRESENT))
    try:
        p0_absent, _ = conditional_probabilities(counts(params, strategy, Hypothesis.ABSENT))
    except DegenerateCountsError:
        p0_absent = NOISE_PHI_FRACTION[strategy]
    return ConditionalTable(p0_present, p0_absent)
