"""Acceptance suite: one or more tests per criterion, each printing a verdict line.

The terminal summary collects the verdicts into one PASS/FAIL line per
criterion.
"""

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest
from oracles import exhaustive_one_use_pairs, random_stream

from qtdlab import optics
from qtdlab.cli import main, run
from qtdlab.config import RunConfig
from qtdlab.info import find_crossover, mutual_information, window_sweep
from qtdlab.montecarlo import (
    QUANTUM_LAYOUT,
    EventStream,
    Origin,
    agreement_z,
    count_coincidences,
    simulate_conditional,
    trial_seed,
)
from qtdlab.noise import ConditionalTable, ExperimentParams, Hypothesis, Strategy, conditional_table, counts
from qtdlab.optics import BellKind, DetectorOutcome, FockState


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


# --- 1: operator algebra ------------------------------------------------------


def test_c01_phi_plus_analyzer(criterion):
    with Timer() as t:
        dist = optics.bsa_outcome_distribution(optics.make_bell(BellKind.PHI_PLUS))
        pp = optics.joint_detection_expansion("A+", "B+")
        mm = optics.joint_detection_expansion("A-", "B-")
    # d_{A+} d_{B+} = 1/2 (aH bH + aV bV + aH aV + bH bV); d_{A-} d_{B-} flips the last two signs
    expected_pp = {("a_H", "b_H"): 0.5, ("a_V", "b_V"): 0.5, ("a_H", "a_V"): 0.5, ("b_H", "b_V"): 0.5}
    expected_mm = {("a_H", "b_H"): 0.5, ("a_V", "b_V"): 0.5, ("a_H", "a_V"): -0.5, ("b_H", "b_V"): -0.5}

    def same(got, want):
        return got.keys() == want.keys() and all(abs(got[k] - want[k]) < 1e-12 for k in want)

    ok = (
        abs(dist[DetectorOutcome.PP] - 0.5) < 1e-12
        and abs(dist[DetectorOutcome.MM] - 0.5) < 1e-12
        and dist[DetectorOutcome.PM] < 1e-12
        and dist[DetectorOutcome.MP] < 1e-12
        and same(pp, expected_pp)
        and same(mm, expected_mm)
        and t.elapsed < 1
    )
    criterion(
        1,
        ok,
        f"phi+ -> A+B+ {dist[DetectorOutcome.PP]:.3g}, A-B- {dist[DetectorOutcome.MM]:.3g}, "
        f"A+B- {dist[DetectorOutcome.PM]:.1e}; expansion exact={same(pp, expected_pp) and same(mm, expected_mm)}; "
        f"{t.elapsed * 1e3:.0f} ms",
    )


# --- 2: two background photons ------------------------------------------------


def _mode_transform_oracle(occ_in, u):
    """Two-photon amplitudes from the permanent of the transfer matrix."""
    cols = [j for j, n in enumerate(occ_in) for _ in range(n)]
    norm_in = math.prod(math.factorial(n) for n in occ_in)
    probs = {}
    for k1 in range(4):
        for k2 in range(k1, 4):
            sub = u[np.ix_([k1, k2], cols)]
            perm = sub[0, 0] * sub[1, 1] + sub[0, 1] * sub[1, 0]
            norm_out = 2 if k1 == k2 else 1
            amp = perm / math.sqrt(norm_in * norm_out)
            det = DetectorOutcome.from_detectors(optics.DETECTOR_MODES[k1], optics.DETECTOR_MODES[k2])
            probs[det] = abs(amp) ** 2
    return probs


def test_c02_two_photons_in_signal_arm(criterion):
    with Timer() as t:
        occ = (0, 0, 1, 1)  # |0>_A |H, V>_B
        dist = optics.bsa_outcome_distribution(FockState({occ: 1.0}))
        oracle = _mode_transform_oracle(occ, optics.analyzer_matrix())
    matches = all(abs(dist[o] - oracle[o]) < 1e-12 for o in DetectorOutcome)
    phi = [dist[o] for o in sorted(optics.PHI_OUTCOMES)]
    ok = matches and all(abs(p - 0.25) < 1e-12 for p in phi) and t.elapsed < 1
    criterion(2, ok, f"phi+ pairs get {phi[0]:.4g} and {phi[1]:.4g}; oracle match={matches}; {t.elapsed * 1e3:.0f} ms")


# --- 3: stated limits ---------------------------------------------------------


def test_c03_exact_absent_limits(criterion, fitted_params):
    with Timer() as t:
        worst = 0.0
        for g in (0.01, 1, 100, 1e4):
            p = fitted_params.with_noise(g=g)
            c, q = conditional_table(p, Strategy.CLASSICAL), conditional_table(p, Strategy.QUANTUM)
            worst = max(
                worst,
                abs(c.p(0, 1) - 0.5),
                abs(c.p(1, 1) - 0.5),
                abs(q.p(0, 1) - 0.25),
                abs(q.p(1, 1) - 0.75),
            )
    criterion(3, worst == 0.0 and t.elapsed < 1, f"absent rows exact (max deviation {worst:.1e})")


def test_c03_quantum_asymptote(criterion, fitted_params):
    q = conditional_table(fitted_params.with_noise(g=1e6), Strategy.QUANTUM)
    dev = abs(q.p(0, 0) - 0.25)
    criterion(3, dev < 1e-3, f"p_q(0|0) at g=1e6 = {q.p(0, 0):.6f}")


def test_c03_classical_asymptote(criterion, fitted_params):
    # evaluated at the fitted pair rate; see the decisions ledger for why this misses
    c = conditional_table(fitted_params.with_noise(g=1e6), Strategy.CLASSICAL)
    dev = abs(c.p(0, 0) - 0.5)
    criterion(
        3,
        dev < 1e-3,
        f"p_c(0|0) at g=1e6 = {c.p(0, 0):.6f} (pair_rate {fitted_params.pair_rate:.4g}/s, |dev| {dev:.2e})",
    )


# --- 4: noise scaling ---------------------------------------------------------


def test_c04_noise_scaling(criterion):
    with Timer() as t:
        Ns = np.geomspace(1e6, 1e8, 9)
        slopes = {}
        for s in Strategy:
            nc = [
                (lambda tab: tab.NC_phi + tab.NC_perp)(counts(ExperimentParams(N=N), s, Hypothesis.PRESENT))
                for N in Ns
            ]
            slopes[s] = np.polyfit(np.log(Ns), np.log(nc), 1)[0]
    ok = abs(slopes[Strategy.CLASSICAL] - 1) <= 0.05 and abs(slopes[Strategy.QUANTUM] - 2) <= 0.05 and t.elapsed < 1
    criterion(
        4,
        ok,
        f"log-log slopes classical {slopes[Strategy.CLASSICAL]:.4f}, quantum {slopes[Strategy.QUANTUM]:.4f}",
    )


# --- 5: Monte Carlo against the model -----------------------------------------

MC_SEEDS = 40
MC_MIN = 1e4


def _mc_job(args):
    params, strategy, x, seed = args
    return simulate_conditional(params, strategy, x, seed, MC_MIN)


def test_c05_monte_carlo_agreement(criterion, fitted_params):
    base = fitted_params.updated(eps_A=1.0, eps_B=1.0, S_A=1000.0, S_B=1000.0, delta_T=5e-9, V=0.9)
    cells, jobs = [], []
    for gi, g in enumerate((0.0, 1.0, 10.0, 100.0)):
        p = base.with_noise(g=g)
        for si, s in enumerate(Strategy):
            table = conditional_table(p, s)
            for x in Hypothesis:
                cells.append((g, s, x, table.p(0, x), len(jobs)))
                jobs += [(p, s, x, trial_seed(2024, gi, si, int(x), k)) for k in range(MC_SEEDS)]
    with Timer() as t:
        workers = min(8, os.cpu_count() or 1)
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                results = list(pool.map(_mc_job, jobs, chunksize=4))
        else:
            results = [_mc_job(j) for j in jobs]

    failures, skipped, fractions = [], [], []
    for g, s, x, p_model, off in cells:
        ests = results[off : off + MC_SEEDS]
        if all(e is None for e in ests):
            # the model has zero coincidences here, and so does every trial
            skipped.append(f"{s.value} x={int(x)} g={g:g}")
            continue
        if min(e.n for e in ests) < MC_MIN:
            failures.append(f"{s.value} x={int(x)} g={g:g}: trial below {MC_MIN:g} coincidences")
            continue
        frac = sum(abs(agreement_z(e.p0, e.n, p_model)) <= 3 for e in ests) / MC_SEEDS
        fractions.append(frac)
        if frac < 0.95:
            failures.append(f"{s.value} x={int(x)} g={g:g}: {frac:.0%} within 3 SE")
    ok = not failures and t.elapsed < 300
    detail = (
        f"{len(fractions)} cells, worst {min(fractions):.0%} of {MC_SEEDS} seeds within 3 SE"
        f"; skipped (0/0 in model and MC): {', '.join(skipped) or 'none'}; {t.elapsed:.0f} s"
    )
    if failures:
        detail += "; failing: " + ", ".join(failures)
    criterion(5, ok, detail)


# --- 6, 7: crossover and window claim -------------------------------------------


def test_c06_crossover(criterion, tmp_path):
    with Timer() as t:
        manifest = run(RunConfig(output_dir=str(tmp_path), emit=frozenset({"crossover"})))
    fitted = manifest.fitted
    base = ExperimentParams(pair_rate=fitted["pair_rate"])
    g_star = find_crossover(base).g_star
    ok = g_star is not None and 20 <= g_star <= 80 and "pair_rate" in fitted and t.elapsed < 10
    criterion(6, ok, f"g* = {g_star:.3f} with fitted pair_rate {fitted['pair_rate']:.4f}/s (in manifest); {t.elapsed:.1f} s")


def test_c07_window_claim(criterion, fitted_params):
    with Timer() as t:
        wide, narrow = window_sweep(fitted_params, [5e-9, 100e-12])
    ratio = narrow.g_star / wide.g_star
    ok = 5 <= ratio <= 20 and t.elapsed < 10
    criterion(7, ok, f"g* {wide.g_star:.2f} -> {narrow.g_star:.2f} (x{ratio:.2f}); {t.elapsed:.1f} s")


# --- 8: information bounds ------------------------------------------------------


def test_c08_information(criterion):
    rng = np.random.default_rng(8)
    in_bounds = all(
        0.0 <= mutual_information(ConditionalTable(*rng.random(2)), rng.random()) <= 1.0 for _ in range(2000)
    )
    zero = abs(mutual_information(ConditionalTable(0.37, 0.37))) < 1e-12
    one = abs(mutual_information(ConditionalTable(1.0, 0.0)) - 1) < 1e-12
    derived = mutual_information(ConditionalTable(1.0, 0.5))
    ok = in_bounds and zero and one and abs(derived - 0.311278) < 1e-6
    criterion(8, ok, f"bounds={in_bounds}, identical->0 {zero}, perfect->1 {one}, derived {derived:.6f}")


# --- 9: coincidence counter -----------------------------------------------------


def _oracle_counts(times, dets, origins, window):
    names = optics.DETECTOR_MODES
    allowed = [[True] * 4 for _ in range(4)]
    sc = nc_phi = nc_perp = 0
    for i, j in exhaustive_one_use_pairs(times, dets, window, allowed):
        outcome = DetectorOutcome.from_detectors(names[dets[i]], names[dets[j]])
        if outcome in optics.PHI_OUTCOMES:
            if origins[i] == Origin.PAIR and origins[j] == Origin.PAIR:
                sc += 1
            else:
                nc_phi += 1
        else:
            nc_perp += 1
    return sc, nc_phi, nc_perp


def test_c09_counter_matches_oracle(criterion):
    rng = np.random.default_rng(9)
    mismatches = 0
    with Timer() as t:
        for _ in range(100):
            times, dets = random_stream(rng, n=1000)
            origins = rng.integers(0, 3, size=len(times)).astype(np.int8)
            stream = EventStream(times, dets.astype(np.int8), origins, QUANTUM_LAYOUT, float(times[-1]))
            got = count_coincidences(stream, 2.5e-9, QUANTUM_LAYOUT)
            if (got.SC_phi, got.NC_phi, got.NC_perp) != _oracle_counts(times, dets, origins, 2.5e-9):
                mismatches += 1
    ok = mismatches == 0 and t.elapsed < 30
    criterion(9, ok, f"{100 - mismatches}/100 streams of 1000 events match the O(n^2) oracle; {t.elapsed:.1f} s")


# --- 10: reproducibility ----------------------------------------------------------


@pytest.mark.parametrize("target", ["fig3", "fig4"])
def test_c10_reproducible(criterion, tmp_path, target):
    with Timer() as t:
        for run_dir in ("a", "b"):
            assert main(["reproduce", target, "--seed", "17", "--out", str(tmp_path / run_dir)]) == 0
    a = (tmp_path / "a" / f"{target}.csv").read_bytes()
    b = (tmp_path / "b" / f"{target}.csv").read_bytes()
    ok = a == b and len(a) > 0 and t.elapsed < 60
    criterion(10, ok, f"{target}.csv byte-identical across runs ({len(a)} bytes)")
