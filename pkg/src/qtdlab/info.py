"""Mutual information of the target-detection measurement and the
quantum/classical crossover.

All entropies are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .noise import ConditionalTable, ExperimentParams, Strategy, conditional_table

__all__ = [
    "AdvantagePoint",
    "CrossoverResult",
    "binary_entropy",
    "mutual_information",
    "model_tables",
    "information_gap",
    "advantage_curve",
    "find_crossover",
    "window_sweep",
    "fit_pair_rate",
    "DEFAULT_G_RANGE",
]

DEFAULT_G_RANGE = (1e-3, 1e5)
G_RTOL = 1e-4

TablePair = tuple[ConditionalTable, ConditionalTable]


def binary_entropy(p: float) -> float:
    """Shannon entropy of a Bernoulli(p) variable, with 0 log 0 = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def mutual_information(cond: ConditionalTable, prior_present: float = 0.5) -> float:
    """I(r:x) = H(x) - H(x|r) for the binary channel x -> r.

    The posterior p(x|r) comes from Bayes' rule; outcomes with p(r) = 0
    carry no weight and are skipped.
    """
    if not 0.0 <= prior_present <= 1.0:
        raise ValueError(f"prior must lie in [0, 1], got {prior_present}")
    prior = (prior_present, 1.0 - prior_present)
    h_x_given_r = 0.0
    for r in (0, 1):
        joint = [prior[x] * cond.p(r, x) for x in (0, 1)]
        p_r = joint[0] + joint[1]
        if p_r <= 0.0:
            continue
        for p_xr in joint:
            if p_xr > 0.0:
                h_x_given_r -= p_xr * math.log2(p_xr / p_r)
    return max(0.0, binary_entropy(prior_present) - h_x_given_r)


def model_tables(params: ExperimentParams) -> TablePair:
    """Classical and quantum conditional tables from the analytic model."""
    return conditional_table(params, Strategy.CLASSICAL), conditional_table(params, Strategy.QUANTUM)


@dataclass(frozen=True)
class AdvantagePoint:
    g: float
    I_classical: float
    I_quantum: float

    @property
    def advantage(self) -> float:
        return self.I_quantum - self.I_classical


def advantage_curve(params: ExperimentParams, g_grid: Iterable[float]) -> list[AdvantagePoint]:
    """Mutual information of both strategies along a grid of noise ratios.

    The background rate changes with g while the signal rate stays fixed.
    """
    g_grid = list(g_grid)
    if not g_grid:
        raise ValueError("g grid is empty")
    points = []
    for g in g_grid:
        if g < 0:
            raise ValueError(f"g must be non-negative, got {g}")
        classical, quantum = model_tables(params.with_noise(g=g))
        points.append(
            AdvantagePoint(
                g=float(g),
                I_classical=mutual_information(classical, params.prior_present),
                I_quantum=mutual_information(quantum, params.prior_present),
            )
        )
    return points


def information_gap(
    params: ExperimentParams, g: float, tables: Callable[[ExperimentParams], TablePair] = model_tables
) -> float:
    """I_quantum - I_classical at noise ratio ``g``."""
    classical, quantum = tables(params.with_noise(g=g))
    prior = params.prior_present
    return mutual_information(quantum, prior) - mutual_information(classical, prior)


@dataclass(frozen=True)
class CrossoverResult:
    """Noise ratio where both strategies carry the same information.

    ``g_star`` is None when the information gap does not change sign on the
    searched range; ``bracket`` is then the range itself.
    """

    g_star: float | None
    bracket: tuple[float, float]
    delta_T: float
    params: ExperimentParams

    @property
    def found(self) -> bool:
        return self.g_star is not None


def find_crossover(
    params: ExperimentParams,
    g_range: tuple[float, float] = DEFAULT_G_RANGE,
    tables: Callable[[ExperimentParams], TablePair] = model_tables,
    rtol: float = G_RTOL,
) -> CrossoverResult:
    """Bisect the information gap to a relative tolerance ``rtol`` in g.

    Bisection runs in log g when the lower end is positive.
    """
    lo, hi = map(float, g_range)
    if not 0 <= lo < hi:
        raise ValueError(f"invalid g range {g_range}")
    f_lo = information_gap(params, lo, tables)
    f_hi = information_gap(params, hi, tables)
    if not f_lo * f_hi < 0:
        return CrossoverResult(None, (lo, hi), params.delta_T, params)
    while hi - lo > rtol * lo or lo == 0:
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * hi
        f_mid = information_gap(params, mid, tables)
        if f_mid == 0:
            lo = hi = mid
            break
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    g_star = math.sqrt(lo * hi)
    if lo == hi:
        # exact root; widen to a bracket that keeps g_low < g_star < g_high
        lo, hi = g_star * (1 - rtol / 2), g_star * (1 + rtol / 2)
    return CrossoverResult(g_star, (lo, hi), params.delta_T, params)


def window_sweep(
    params: ExperimentParams,
    windows: Sequence[float],
    g_range: tuple[float, float] = DEFAULT_G_RANGE,
) -> list[CrossoverResult]:
    """Crossover for each coincidence window, in input order."""
    results = []
    for w in windows:
        if not w > 0:
            raise ValueError(f"coincidence window must be positive, got {w}")
        results.append(find_crossover(params.updated(delta_T=float(w)), g_range))
    return results


def fit_pair_rate(
    params: ExperimentParams,
    target_g_star: float = 40.0,
    g_range: tuple[float, float] = DEFAULT_G_RANGE,
    bounds: tuple[float, float] = (1e-3, 1e6),
    rtol: float = 1e-9,
) -> float:
    """Pair rate that places the crossover at ``target_g_star``.

    The crossover moves to larger g as the pair rate grows, so this is a
    bisection in log pair rate.  A pair rate with no crossover at all counts
    as "too small".
    """

    def excess(pair_rate: float) -> float:
        res = find_crossover(params.updated(pair_rate=pair_rate), g_range)
        if not res.found:
            return -math.inf
        return res.g_star - target_g_star

    lo, hi = bounds
    if excess(lo) >= 0 or excess(hi) <= 0:
        raise ValueError(f"target crossover g={target_g_star} not reachable for pair rates in {bounds}")
    while hi - lo > rtol * lo:
        mid = math.sqrt(lo * hi)
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)
