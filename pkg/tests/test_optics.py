import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtdlab import optics
from qtdlab.optics import (
    PBS,
    HWP,
    BellKind,
    CapExceededError,
    DetectorOutcome,
    DiagonalPBS,
    FockState,
    analyzer_matrix,
    analyze,
    apply_element,
    bell_weights,
    bsa_outcome_distribution,
    joint_detection_expansion,
    make_bell,
    phi_channel,
    product_state,
    unpolarized_pair_mixture,
)


# --- brute-force oracle -----------------------------------------------------


def permanent(m: np.ndarray) -> complex:
    n = m.shape[0]
    if n == 0:
        return 1.0
    return sum(
        math.prod(m[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n))
    )


def oracle_transform(state: FockState, u: np.ndarray) -> dict:
    """<m|U|n> = Perm(U[rows(m), cols(n)]) / sqrt(prod n! prod m!)."""
    out = {}
    for occ, amp in state.amplitudes.items():
        cols = [j for j, n in enumerate(occ) for _ in range(n)]
        total = sum(occ)
        for target in itertools.product(range(total + 1), repeat=len(occ)):
            if sum(target) != total:
                continue
            rows = [k for k, n in enumerate(target) for _ in range(n)]
            sub = u[np.ix_(rows, cols)]
            norm = math.sqrt(
                math.prod(math.factorial(n) for n in occ) * math.prod(math.factorial(n) for n in target)
            )
            out[target] = out.get(target, 0) + amp * permanent(sub) / norm
    return {k: v for k, v in out.items() if abs(v) > 1e-12}


def random_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


two_photon_occ = [o for o in itertools.product(range(3), repeat=4) if sum(o) == 2]
one_photon_occ = [o for o in itertools.product(range(2), repeat=4) if sum(o) == 1]


@st.composite
def small_states(draw):
    basis = two_photon_occ if draw(st.booleans()) else one_photon_occ
    picks = draw(st.lists(st.sampled_from(basis), min_size=1, max_size=4, unique=True))
    amps = draw(
        st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False), min_size=len(picks), max_size=len(picks))
    )
    return FockState(dict(zip(picks, amps)))


def assert_amplitudes_close(actual: FockState, expected: dict):
    keys = set(actual.amplitudes) | set(expected)
    for k in keys:
        assert actual.amplitudes.get(k, 0) == pytest.approx(expected.get(k, 0), abs=1e-10), k


@settings(max_examples=60, deadline=None)
@given(small_states(), st.integers(0, 2**32 - 1))
def test_transform_matches_permanent_oracle(state, seed):
    u = random_unitary(np.random.default_rng(seed), 4)
    assert_amplitudes_close(optics._transform(state, u), oracle_transform(state, u))


@pytest.mark.parametrize("r", [1.0, -1.0, 1j])
def test_analyzer_matches_oracle_on_bell_states(r):
    u = analyzer_matrix(r)
    for kind in BellKind:
        state = make_bell(kind)
        assert_amplitudes_close(analyze(state, r).relabel(optics.INPUT_MODES), oracle_transform(state, u))


# --- elements ---------------------------------------------------------------


@pytest.mark.parametrize("element", [PBS(), PBS(-1.0), PBS(1j), HWP(0.3), HWP(math.pi / 8), DiagonalPBS()])
def test_elements_are_unitary(element):
    m = element.matrix()
    np.testing.assert_allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=1e-12)


def test_analyzer_preserves_norm():
    for kind in BellKind:
        assert analyze(make_bell(kind)).norm == pytest.approx(1.0, abs=1e-12)


def test_pbs_transmits_h_and_reflects_v():
    # H stays in its spatial mode, V crosses over
    s = FockState({(1, 0, 0, 0): 1})
    assert apply_element(s, PBS(), (0, 1, 2, 3)).amplitudes == {(1, 0, 0, 0): 1}
    s = FockState({(0, 1, 0, 0): 1})
    assert set(apply_element(s, PBS(), (0, 1, 2, 3)).amplitudes) == {(0, 0, 0, 1)}


def test_hwp_at_pi_over_8_makes_diagonal_split():
    out = apply_element(FockState({(1, 0, 0, 0): 1}), HWP(math.pi / 8), (0, 1))
    probs = sorted(abs(a) ** 2 for a in out.amplitudes.values())
    assert probs == pytest.approx([0.5, 0.5])


# --- states -----------------------------------------------------------------


def test_cap_exceeded():
    with pytest.raises(CapExceededError):
        FockState({(2, 1, 0, 0): 1})
    assert FockState({(2, 1, 0, 0): 1}, cap=3).norm == 1


def test_wrong_mode_count_rejected():
    with pytest.raises(ValueError):
        FockState({(1, 0): 1})


def test_bell_states_orthonormal():
    states = [make_bell(k) for k in BellKind]
    for a, b in itertools.product(states, repeat=2):
        expected = 1.0 if a is b else 0.0
        assert abs(optics.inner_product(a, b)) == pytest.approx(expected, abs=1e-12)


def test_unpolarized_mixture_is_uniform_over_bell_states():
    weights = bell_weights(unpolarized_pair_mixture())
    assert all(w == pytest.approx(0.25, abs=1e-12) for w in weights.values())


def test_outcome_distribution_requires_two_photons():
    with pytest.raises(ValueError):
        bsa_outcome_distribution(optics.single_photon("a_H"))


# --- analyzer behaviour -----------------------------------------------------


def test_phi_plus_lands_on_phi_pairs_only():
    dist = bsa_outcome_distribution(make_bell(BellKind.PHI_PLUS))
    assert dist[DetectorOutcome.PP] == pytest.approx(0.5, abs=1e-12)
    assert dist[DetectorOutcome.MM] == pytest.approx(0.5, abs=1e-12)
    assert dist[DetectorOutcome.PM] < 1e-12
    assert dist[DetectorOutcome.MP] < 1e-12
    assert sum(dist.values()) == pytest.approx(1.0)


def test_phi_minus_lands_on_cross_pairs():
    dist = bsa_outcome_distribution(make_bell(BellKind.PHI_MINUS))
    assert dist[DetectorOutcome.PM] == pytest.approx(0.5)
    assert dist[DetectorOutcome.MP] == pytest.approx(0.5)


@pytest.mark.parametrize("kind", [BellKind.PSI_PLUS, BellKind.PSI_MINUS])
def test_psi_states_never_fire_both_arms(kind):
    dist = bsa_outcome_distribution(make_bell(kind))
    both_arms = {DetectorOutcome.PP, DetectorOutcome.MM, DetectorOutcome.PM, DetectorOutcome.MP}
    assert sum(dist[o] for o in both_arms) < 1e-12


def test_two_photons_in_one_input_mimic_phi():
    # |0>_A |H,V>_B: two orthogonal photons, nothing from the idler arm
    state = FockState({(0, 0, 1, 1): 1})
    dist = bsa_outcome_distribution(state)
    for o in (DetectorOutcome.PP, DetectorOutcome.MM, DetectorOutcome.PM, DetectorOutcome.MP):
        assert dist[o] == pytest.approx(0.25, abs=1e-12)
    u = analyzer_matrix()
    oracle = oracle_transform(state, u)
    for occ, amp in oracle.items():
        assert dist[DetectorOutcome.from_occupation(occ)] == pytest.approx(abs(amp) ** 2, abs=1e-12)


def test_detection_operator_expansion():
    half = 0.5
    pp = joint_detection_expansion("A+", "B+")
    assert pp.keys() == {("a_H", "b_H"), ("a_V", "b_V"), ("a_H", "a_V"), ("b_H", "b_V")}
    assert all(abs(abs(c) - half) < 1e-12 for c in pp.values())
    mm = joint_detection_expansion("A-", "B-")
    assert mm.keys() == pp.keys()
    # the product-pair terms carry the same sign in both, so phi+ adds up
    for key in (("a_H", "b_H"), ("a_V", "b_V")):
        assert pp[key] == pytest.approx(mm[key], abs=1e-12)


@pytest.mark.parametrize("r", [1.0, -1.0, 1j, -1j])
def test_phase_convention_only_relabels_phi_channel(r):
    channel = phi_channel(r)
    assert len(channel) == 2
    dist = bsa_outcome_distribution(make_bell(BellKind.PHI_PLUS), r)
    assert sum(dist[o] for o in channel) == pytest.approx(1.0)
    # unpolarized light hits the calibrated channel with 1/4 whatever the phase
    total = 0.0
    for w, s in unpolarized_pair_mixture():
        d = bsa_outcome_distribution(s, r)
        total += w * sum(d[o] for o in channel)
    assert total == pytest.approx(0.25, abs=1e-12)


def test_detector_outcome_roundtrip():
    for o in DetectorOutcome:
        assert DetectorOutcome.from_detectors(*reversed(o.detectors)) is o
