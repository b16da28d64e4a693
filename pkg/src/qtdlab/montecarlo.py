"""Event-level photon simulator and coincidence counter.

Two generators share one coincidence counter:

``generate_stream``
    Materializes every detection in ``[0, duration]``.  Straightforward,
    but the cost grows with the singles rate times the duration.

``generate_sparse_stream``
    Emits only detections that can take part in a coincidence.  Background
    and stray photons form one Poisson process; walking its gap sequence
    (exponential gaps are memoryless, so runs of "close" and "far" gaps are
    geometric) yields every cluster of photons lying within reach of each
    other without generating the isolated ones.  Photons near a true pair
    are sampled separately on the union of pair windows.  The coincidence
    statistics match the full stream up to boundary terms of order
    (singles rate * reach)^2 per pair.

The coincidence window ``delta_T`` is the full width: two detections
coincide when ``|t_i - t_j| <= delta_T / 2``, which makes the accidental
rate of two uncorrelated detectors ``c_A c_B delta_T``.

Trial seeds derive from a master seed with :func:`trial_seed`; every trial
owns its generator, so campaigns can run in any order or in parallel.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Sequence

import numba
import numpy as np

from . import optics
from .noise import (
    ConditionalTable,
    CountsTable,
    DegenerateCountsError,
    ExperimentParams,
    Hypothesis,
    Strategy,
    counts as model_counts,
)

__all__ = [
    "Origin",
    "Layout",
    "CLASSICAL_LAYOUT",
    "QUANTUM_LAYOUT",
    "layout_for",
    "PhotonEvent",
    "EventStream",
    "JitterModel",
    "TrialRecord",
    "generate_stream",
    "generate_sparse_stream",
    "match_coincidences",
    "count_coincidences",
    "run_trial",
    "trial_seed",
    "duration_for",
    "estimate_conditionals",
    "Estimate",
    "simulate_conditional",
    "agreement_z",
]

JITTER_REACH_SIGMAS = 10.0


class Origin(enum.IntEnum):
    PAIR = 0
    BACKGROUND = 1
    STRAY_SIGNAL = 2

    @property
    def label(self) -> str:
        return self.name.lower()


# ---------------------------------------------------------------------------
# Detector layouts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Layout:
    """Detectors of one strategy and which detector pairs form each result.

    ``phi`` and ``perp`` hold unordered pairs of detector names; a pair may
    repeat a detector (two photons in one number-resolving detector).
    """

    strategy: Strategy
    detectors: tuple[str, ...]
    phi: frozenset[tuple[str, str]]
    perp: frozenset[tuple[str, str]]

    def index(self, name: str) -> int:
        return self.detectors.index(name)

    @functools.cached_property
    def channel_matrix(self) -> np.ndarray:
        """``m[i, j]`` = 0 for phi, 1 for orthogonal, -1 for not counted."""
        n = len(self.detectors)
        m = np.full((n, n), -1, dtype=np.int8)
        for code, pairs in ((0, self.phi), (1, self.perp)):
            for a, b in pairs:
                i, j = self.index(a), self.index(b)
                m[i, j] = m[j, i] = code
        return m

    @property
    def allowed(self) -> np.ndarray:
        return self.channel_matrix >= 0


CLASSICAL_LAYOUT = Layout(
    Strategy.CLASSICAL,
    ("D_A", "D_B", "D_B_perp"),
    phi=frozenset({("D_A", "D_B")}),
    perp=frozenset({("D_A", "D_B_perp")}),
)


def _quantum_layout() -> Layout:
    phi = {o.detectors for o in optics.PHI_OUTCOMES}
    perp = {o.detectors for o in optics.DetectorOutcome if o not in optics.PHI_OUTCOMES}
    return Layout(Strategy.QUANTUM, optics.DETECTOR_MODES, frozenset(phi), frozenset(perp))


QUANTUM_LAYOUT = _quantum_layout()


def layout_for(strategy: Strategy | str) -> Layout:
    return CLASSICAL_LAYOUT if Strategy(strategy) is Strategy.CLASSICAL else QUANTUM_LAYOUT


# ---------------------------------------------------------------------------
# Events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhotonEvent:
    time: float
    detector: str
    origin: str


@dataclass(frozen=True)
class JitterModel:
    """Independent Gaussian timing spread per detection (seconds)."""

    sigma: float = 50e-12

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("jitter sigma must be non-negative")


@dataclass
class EventStream:
    """Time-sorted detections as parallel arrays.

    ``n_singles`` counts every detection per detector over the full
    duration; for a sparse stream it exceeds the number of stored events.
    """

    times: np.ndarray
    detectors: np.ndarray
    origins: np.ndarray
    layout: Layout
    duration: float
    n_singles: dict[str, int] = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def __iter__(self) -> Iterator[PhotonEvent]:
        names = self.layout.detectors
        for t, d, o in zip(self.times.tolist(), self.detectors.tolist(), self.origins.tolist()):
            yield PhotonEvent(t, names[d], Origin(o).label)

    def dump(self, fh: IO[str]) -> None:
        """Write one ``time_seconds detector origin`` line per event."""
        for ev in self:
            fh.write(f"{ev.time!r} {ev.detector} {ev.origin}\n")

    @classmethod
    def from_events(cls, events: Iterable[PhotonEvent], layout: Layout, duration: float | None = None):
        events = list(events)
        times = np.array([e.time for e in events], dtype=np.float64)
        dets = np.array([layout.index(e.detector) for e in events], dtype=np.int8)
        origins = np.array([Origin[e.origin.upper()] for e in events], dtype=np.int8)
        if duration is None:
            duration = float(times.max()) if len(times) else 0.0
        return cls(times, dets, origins, layout, duration)


# ---------------------------------------------------------------------------
# Routing derived from the optics model
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _quantum_single_routing(spatial: str) -> tuple[float, ...]:
    """Detector distribution of one unpolarized photon entering mode a or b."""
    probs = np.zeros(4)
    for pol in "HV":
        state = optics.single_photon(f"{spatial}_{pol}")
        for occ, p in optics.detector_probabilities(state).items():
            probs[occ.index(1)] += 0.5 * p
    return tuple(probs)


@functools.lru_cache(maxsize=None)
def _quantum_pair_routing(V: float) -> tuple[tuple[tuple[int, int], ...], tuple[float, ...]]:
    """Detector-pair distribution of a source pair at visibility ``V``.

    A fraction V is analyzed as phi+, the rest as the maximally mixed
    two-photon polarization state.
    """
    ideal = optics.bsa_outcome_distribution(optics.make_bell(optics.BellKind.PHI_PLUS))
    mixed = dict.fromkeys(optics.DetectorOutcome, 0.0)
    for w, state in optics.unpolarized_pair_mixture():
        for o, p in optics.bsa_outcome_distribution(state).items():
            mixed[o] += w * p
    outcomes, probs = [], []
    for o in optics.DetectorOutcome:
        p = V * ideal[o] + (1 - V) * mixed[o]
        if p > 1e-15:
            a, b = o.detectors
            outcomes.append((QUANTUM_LAYOUT.index(a), QUANTUM_LAYOUT.index(b)))
            probs.append(p)
    probs = np.array(probs)
    return tuple(outcomes), tuple(probs / probs.sum())


@dataclass(frozen=True)
class _Sources:
    """Poisson rates per (origin, detector) for singles, plus the pair model."""

    single_rates: np.ndarray  # shape (n_origins, n_detectors), detected photons/s
    pair_rate: float
    pair_outcomes: tuple[tuple[int, int], ...]
    pair_probs: tuple[float, ...]
    efficiency: np.ndarray  # per detector

    @property
    def singles_total(self) -> float:
        return float(self.single_rates.sum())


def _sources(params: ExperimentParams, strategy: Strategy, x: Hypothesis) -> _Sources:
    present = x is Hypothesis.PRESENT
    P = params.pair_rate if present else 0.0
    if present and P > min(params.S_A, params.S_B):
        raise ValueError("pair_rate cannot exceed the idler or signal photon rate")
    idler = params.S_A - P
    stray = params.S_B - P if present else 0.0
    noise = params.N
    layout = layout_for(strategy)
    rates = np.zeros((len(Origin), len(layout.detectors)))
    if strategy is Strategy.CLASSICAL:
        eff = np.array([params.eps_A, params.eps_B, params.eps_B])
        rates[Origin.STRAY_SIGNAL, 0] += idler
        rates[Origin.STRAY_SIGNAL, 1] += stray  # signal photons are H
        rates[Origin.BACKGROUND, 1] += noise / 2
        rates[Origin.BACKGROUND, 2] += noise / 2
        outcomes, probs = ((0, 1),), (1.0,)
    else:
        eff = np.array([params.eps_A, params.eps_A, params.eps_B, params.eps_B])
        route_a = np.array(_quantum_single_routing("a"))
        route_b = np.array(_quantum_single_routing("b"))
        rates[Origin.STRAY_SIGNAL] += idler * route_a + stray * route_b
        rates[Origin.BACKGROUND] += noise * route_b
        outcomes, probs = _quantum_pair_routing(float(params.V))
    return _Sources(rates * eff, P, outcomes, probs, eff)


# ---------------------------------------------------------------------------
# Stream generation
# ---------------------------------------------------------------------------


def _sample_marks(rng: np.random.Generator, rates: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    flat = rates.ravel()
    idx = rng.choice(flat.size, size=n, p=flat / flat.sum())
    origins, dets = np.divmod(idx, rates.shape[1])
    return origins.astype(np.int8), dets.astype(np.int8)


def _pair_detections(rng, src: _Sources, emit: np.ndarray):
    """Detections of true pairs emitted at times ``emit`` (before jitter)."""
    n = len(emit)
    if n == 0:
        empty = np.empty(0)
        return empty, np.empty(0, np.int8)
    pick = rng.choice(len(src.pair_outcomes), size=n, p=np.asarray(src.pair_probs))
    pairs = np.asarray(src.pair_outcomes, dtype=np.int8)[pick]
    times = np.repeat(emit, 2)
    dets = pairs.ravel()
    keep = rng.random(2 * n) < src.efficiency[dets]
    return times[keep], dets[keep]


def _finish(rng, times, dets, origins, jitter: JitterModel, duration: float, layout: Layout, n_singles):
    if jitter.sigma > 0 and len(times):
        times = times + rng.normal(0.0, jitter.sigma, size=len(times))
    times = np.clip(times, 0.0, duration)
    order = np.argsort(times, kind="stable")
    counts = np.bincount(dets, minlength=len(layout.detectors)) if n_singles is None else n_singles
    return EventStream(
        times[order],
        dets[order],
        origins[order],
        layout,
        duration,
        {name: int(c) for name, c in zip(layout.detectors, counts)},
    )


def generate_stream(
    params: ExperimentParams,
    strategy: Strategy | str,
    x: Hypothesis | int,
    seed,
    jitter: JitterModel = JitterModel(),
) -> EventStream:
    """Every detection over ``params.duration`` seconds.

    Background photons are unpolarized and Poissonian; each photon survives
    with the efficiency of the detector it reaches.
    """
    strategy, x = Strategy(strategy), Hypothesis(x)
    if not params.duration > 0:
        raise ValueError("duration must be positive")
    rng = np.random.default_rng(seed)
    src = _sources(params, strategy, x)
    T = params.duration

    n = rng.poisson(src.singles_total * T) if src.singles_total > 0 else 0
    s_times = rng.uniform(0.0, T, size=n)
    s_orig, s_dets = _sample_marks(rng, src.single_rates, n) if n else (np.empty(0, np.int8),) * 2

    n_pairs = rng.poisson(src.pair_rate * T) if src.pair_rate > 0 else 0
    p_times, p_dets = _pair_detections(rng, src, rng.uniform(0.0, T, size=n_pairs))

    times = np.concatenate([s_times, p_times])
    dets = np.concatenate([s_dets, p_dets]).astype(np.int8)
    origins = np.concatenate([s_orig, np.full(len(p_times), Origin.PAIR, np.int8)]).astype(np.int8)
    return _finish(rng, times, dets, origins, jitter, T, layout_for(strategy), None)


def _truncated_exponential(rng, rate: float, upper: float, size: int) -> np.ndarray:
    """Exponential(rate) conditioned on being <= upper, by inversion."""
    u = rng.random(size)
    return -np.log1p(u * np.expm1(-rate * upper)) / rate


def _walk_clusters(rng, rate: float, reach: float, T: float):
    """Points of a Poisson process that have a neighbour within ``reach``.

    Returns the clustered point times in ``[0, T]`` and (approximately, for
    the last stretch) the number of isolated points skipped over.
    """
    if rate <= 0:
        return np.empty(0), 0
    q = -math.expm1(-rate * reach)  # P(gap <= reach)
    if q <= 0:
        return np.empty(0), int(rng.poisson(rate * T))
    chunks, isolated = [], 0
    t = rng.exponential(1 / rate)  # first point of the current stretch
    batch = max(64, int(1.2 * rate * T * q) + 16)
    while t <= T:
        # per cycle: far gaps before the next close gap (the current point and
        # the ones in between are isolated), a run of close gaps forming the
        # cluster, then the far gap that ends it
        far = rng.geometric(q, size=batch) - 1
        close = rng.geometric(1 - q, size=batch)
        far_time = far * reach + np.where(far > 0, rng.gamma(np.maximum(far, 1), 1 / rate), 0.0)
        exit_gap = reach + rng.exponential(1 / rate, size=batch)

        sizes = close + 1
        first = np.cumsum(sizes) - sizes
        gaps = np.zeros(int(sizes.sum()))
        inner = np.ones(len(gaps), dtype=bool)
        inner[first] = False
        gaps[inner] = _truncated_exponential(rng, rate, reach, int(close.sum()))
        cum = np.cumsum(gaps)
        offsets = cum - np.repeat(cum[first], sizes)
        span = offsets[first + sizes - 1]

        step = far_time + span + exit_gap
        starts = t + far_time + np.concatenate(([0.0], np.cumsum(step)[:-1]))
        beyond = np.flatnonzero(starts > T)
        n = int(beyond[0]) if len(beyond) else batch
        isolated += int(far[:n].sum())
        chunks.append(np.repeat(starts[:n], sizes[:n]) + offsets[: int(sizes[:n].sum())])
        if n < batch:
            prev = starts[n - 1] + span[n - 1] + exit_gap[n - 1] if n else t
            if prev <= T:
                isolated += 1 + int(rng.poisson(rate * (T - prev)))
            break
        t = starts[-1] + span[-1] + exit_gap[-1]
    times = np.concatenate(chunks) if chunks else np.empty(0)
    return times[times <= T], isolated


def _merge_windows(centres: np.ndarray, reach: float, T: float) -> np.ndarray:
    """Union of ``[c - reach, c + reach]`` clipped to ``[0, T]`` as (k, 2) intervals."""
    if len(centres) == 0:
        return np.empty((0, 2))
    c = np.sort(centres)
    lo, hi = np.clip(c - reach, 0, T), np.clip(c + reach, 0, T)
    new = np.concatenate(([True], lo[1:] > hi[:-1]))
    starts = lo[new]
    group = np.cumsum(new) - 1
    ends = np.zeros(len(starts))
    np.maximum.at(ends, group, hi)
    return np.column_stack([starts, ends])


def generate_sparse_stream(
    params: ExperimentParams,
    strategy: Strategy | str,
    x: Hypothesis | int,
    seed,
    window: float | None = None,
    jitter: JitterModel = JitterModel(),
) -> EventStream:
    """Detections that can form a coincidence with half-width ``window``.

    ``window`` defaults to ``params.delta_T / 2``.  Isolated single photons
    are only counted in ``n_singles``.
    """
    strategy, x = Strategy(strategy), Hypothesis(x)
    if not params.duration > 0:
        raise ValueError("duration must be positive")
    window = params.delta_T / 2 if window is None else window
    rng = np.random.default_rng(seed)
    src = _sources(params, strategy, x)
    T = params.duration
    lam = src.singles_total
    reach = window + JITTER_REACH_SIGMAS * math.sqrt(2) * jitter.sigma

    n_pairs = rng.poisson(src.pair_rate * T) if src.pair_rate > 0 else 0
    emit = rng.uniform(0.0, T, size=n_pairs)
    p_times, p_dets = _pair_detections(rng, src, emit)

    # singles near pairs: Poisson on the union of pair windows
    spans = _merge_windows(emit, reach, T)
    lengths = spans[:, 1] - spans[:, 0]
    near_n = rng.poisson(lam * lengths) if lam > 0 else np.zeros(len(spans), int)
    near_times = np.repeat(spans[:, 0], near_n) + rng.random(int(near_n.sum())) * np.repeat(lengths, near_n)

    # singles clustered among themselves, outside the pair windows
    walk_times, isolated = _walk_clusters(rng, lam, reach, T)
    if len(spans) and len(walk_times):
        k = np.searchsorted(spans[:, 0], walk_times, side="right") - 1
        inside = (k >= 0) & (walk_times <= spans[np.maximum(k, 0), 1])
        walk_times = walk_times[~inside]

    s_times = np.concatenate([near_times, walk_times])
    if len(s_times):
        s_orig, s_dets = _sample_marks(rng, src.single_rates, len(s_times))
    else:
        s_orig = s_dets = np.empty(0, np.int8)

    n_singles = np.bincount(s_dets, minlength=len(src.efficiency)) + np.bincount(
        p_dets, minlength=len(src.efficiency)
    )
    if isolated and lam > 0:
        n_singles = n_singles + rng.multinomial(isolated, src.single_rates.sum(axis=0) / lam)

    times = np.concatenate([s_times, p_times])
    dets = np.concatenate([s_dets, p_dets]).astype(np.int8)
    origins = np.concatenate([s_orig, np.full(len(p_times), Origin.PAIR, np.int8)]).astype(np.int8)
    return _finish(rng, times, dets, origins, jitter, T, layout_for(strategy), n_singles)


# ---------------------------------------------------------------------------
# Coincidence counting
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _greedy_match(times, dets, window, allowed):
    n = times.shape[0]
    used = np.zeros(n, dtype=np.bool_)
    first = np.empty(n // 2 + 1, dtype=np.int64)
    second = np.empty(n // 2 + 1, dtype=np.int64)
    m = 0
    for i in range(n):
        if used[i]:
            continue
        ti = times[i]
        di = dets[i]
        for j in range(i + 1, n):
            if times[j] - ti > window:
                break
            if not used[j] and allowed[di, dets[j]]:
                used[i] = True
                used[j] = True
                first[m] = i
                second[m] = j
                m += 1
                break
    return first[:m], second[:m]


def match_coincidences(
    times: np.ndarray, detectors: np.ndarray, window: float, allowed: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Greedy earliest-first, one-use pairing of time-sorted events.

    Each unused event, in time order, pairs with the earliest later unused
    event within ``window`` on an allowed detector pair.  Returns the index
    arrays of the two partners.
    """
    times = np.ascontiguousarray(times, dtype=np.float64)
    detectors = np.ascontiguousarray(detectors, dtype=np.int64)
    if len(times) > 1 and np.any(np.diff(times) < 0):
        raise ValueError("events must be sorted by time")
    if window < 0:
        raise ValueError("window must be non-negative")
    return _greedy_match(times, detectors, float(window), np.ascontiguousarray(allowed, dtype=np.bool_))


def count_coincidences(
    events: EventStream | Sequence[PhotonEvent],
    window: float,
    pairing: Layout,
    x: Hypothesis | int | None = None,
) -> CountsTable:
    """Coincidence counts per result for a time-sorted event stream.

    ``window`` is the half-width: ``|t_i - t_j| <= window``.  Phi
    coincidences between two pair photons are reported as SC_phi.
    """
    if not isinstance(events, EventStream):
        events = EventStream.from_events(events, pairing)
    elif events.layout != pairing:
        raise ValueError("event stream was generated for a different layout")
    i, j = match_coincidences(events.times, events.detectors, window, pairing.allowed)
    channel = pairing.channel_matrix[events.detectors[i], events.detectors[j]]
    both_pair = (events.origins[i] == Origin.PAIR) & (events.origins[j] == Origin.PAIR)
    phi = channel == 0
    return CountsTable(
        pairing.strategy,
        None if x is None else Hypothesis(x),
        SC_phi=int(np.count_nonzero(phi & both_pair)),
        NC_phi=int(np.count_nonzero(phi & ~both_pair)),
        NC_perp=int(np.count_nonzero(channel == 1)),
    )


# ---------------------------------------------------------------------------
# Trials and estimates
# ---------------------------------------------------------------------------


def trial_seed(master_seed: int, *key: int) -> int:
    """Seed for the trial labelled by integer ``key`` under ``master_seed``.

    Uses ``SeedSequence(master_seed, spawn_key=key)``, so the seed depends
    only on the labels and never on execution order.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


@dataclass(frozen=True)
class TrialRecord:
    params: ExperimentParams
    strategy: Strategy
    x: Hypothesis
    seed: int
    counts: CountsTable
    n_events: dict[str, int]
    method: str = "sparse"


def run_trial(
    params: ExperimentParams,
    strategy: Strategy | str,
    x: Hypothesis | int,
    seed: int,
    jitter: JitterModel = JitterModel(),
    method: str = "sparse",
) -> TrialRecord:
    """Simulate one acquisition of ``params.duration`` seconds and count coincidences."""
    strategy, x = Strategy(strategy), Hypothesis(x)
    if method == "sparse":
        stream = generate_sparse_stream(params, strategy, x, seed, jitter=jitter)
    elif method == "full":
        stream = generate_stream(params, strategy, x, seed, jitter=jitter)
    else:
        raise ValueError(f"unknown method {method!r}")
    table = count_coincidences(stream, params.delta_T / 2, layout_for(strategy), x)
    return TrialRecord(params, strategy, x, seed, table, stream.n_singles, method)


def duration_for(
    params: ExperimentParams, strategy: Strategy | str, x: Hypothesis | int, coincidences: float
) -> float:
    """Acquisition time whose expected coincidence total is ``coincidences``.

    Returns ``inf`` when the model predicts no coincidences at all.
    """
    rate = model_counts(params, strategy, x).total
    return coincidences / rate if rate > 0 else math.inf


def estimate_conditionals(trials: Iterable[TrialRecord]) -> ConditionalTable:
    """Pool trials of one strategy and estimate p(r|x) with binomial errors."""
    trials = list(trials)
    strategies = {t.strategy for t in trials}
    if len(strategies) != 1:
        raise ValueError("trials must share one strategy")
    pooled = {}
    for x in Hypothesis:
        phi = sum(t.counts.C_phi for t in trials if t.x is x)
        perp = sum(t.counts.C_perp for t in trials if t.x is x)
        if not any(t.x is x for t in trials):
            raise ValueError(f"no trials for x={int(x)}")
        n = phi + perp
        if n == 0:
            raise DegenerateCountsError(f"no coincidences for x={int(x)}")
        p = phi / n
        pooled[x] = (p, math.sqrt(p * (1 - p) / n))
    (p0, se0), (p1, se1) = pooled[Hypothesis.PRESENT], pooled[Hypothesis.ABSENT]
    return ConditionalTable(p0, p1, se0, se1)


@dataclass(frozen=True)
class Estimate:
    """p(0|x) from one simulated acquisition."""

    p0: float
    se: float
    n: int
    duration: float


def simulate_conditional(
    params: ExperimentParams,
    strategy: Strategy | str,
    x: Hypothesis | int,
    seed: int,
    min_coincidences: float = 1e4,
    jitter: JitterModel = JitterModel(),
    headroom: float = 1.2,
) -> Estimate | None:
    """Run one trial long enough for ``min_coincidences`` and estimate p(0|x).

    The acquisition time is sized from the model's expected coincidence rate
    (times ``headroom``); only the duration depends on the model.  Returns
    None when the model predicts no coincidences at all.
    """
    T = duration_for(params, strategy, x, headroom * min_coincidences)
    if not math.isfinite(T):
        return None
    rec = run_trial(params.updated(duration=T), strategy, x, seed, jitter)
    n = int(rec.counts.total)
    if n == 0:
        raise DegenerateCountsError("trial produced no coincidences")
    p = rec.counts.C_phi / n
    return Estimate(p, math.sqrt(p * (1 - p) / n), n, T)


def agreement_z(p_hat: float, n: int, p_model: float) -> float:
    """Deviation of an estimate from the model in binomial standard errors.

    The standard error is taken at the model probability, which stays
    finite when the estimate sits at 0 or 1 with few counts.
    """
    se = math.sqrt(p_model * (1 - p_model) / n)
    diff = p_hat - p_model
    if se == 0:
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return diff / se
