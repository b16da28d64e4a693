"""Exact Fock-space model of the three-PBS partial Bell-state analyzer.

States live on four optical modes and carry at most two photons.  Optical
elements are linear mode transforms; their action on multi-photon states is
computed by expanding products of creation operators, so bosonic factors
(two photons in one mode) come out right.

Geometry (fixed throughout the package)::

    input modes      a_H  a_V  b_H  b_V
    central PBS      a_H -> arm A (H)    a_V -> arm B (V)
                     b_H -> arm B (H)    b_V -> arm A (V)
    diagonal PBS     arm H/V -> detectors (+, -) via a half-wave plate at pi/8

With this convention the joint detection operators expand as

    d_A+ d_B+ = 1/2 (a_H b_H + a_V b_V + a_H a_V + b_H b_V)
    d_A- d_B- = 1/2 (a_H b_H + a_V b_V - a_H a_V - b_H b_V)
"""

from __future__ import annotations

import enum
import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "INPUT_MODES",
    "DETECTOR_MODES",
    "PHI_OUTCOMES",
    "FockState",
    "BellKind",
    "DetectorOutcome",
    "PBS",
    "HWP",
    "DiagonalPBS",
    "CapExceededError",
    "make_bell",
    "product_state",
    "single_photon",
    "inner_product",
    "apply_element",
    "analyzer_matrix",
    "analyze",
    "detector_probabilities",
    "bsa_outcome_distribution",
    "phi_channel",
    "joint_detection_expansion",
    "bell_weights",
    "unpolarized_pair_mixture",
]

INPUT_MODES = ("a_H", "a_V", "b_H", "b_V")
ARM_MODES = ("A_H", "A_V", "B_H", "B_V")
DETECTOR_MODES = ("A+", "A-", "B+", "B-")

_ATOL = 1e-12


class CapExceededError(ValueError):
    """An occupation vector would exceed the photon cap."""


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FockState:
    """Superposition of occupation vectors over four optical modes.

    ``amplitudes`` maps occupation tuples ``(n0, n1, n2, n3)`` to complex
    amplitudes.  Zero amplitudes are dropped on construction.
    """

    amplitudes: Mapping[tuple[int, ...], complex]
    modes: tuple[str, ...] = INPUT_MODES
    cap: int = 2

    def __post_init__(self):
        clean = {}
        for occ, amp in self.amplitudes.items():
            occ = tuple(int(n) for n in occ)
            if len(occ) != len(self.modes):
                raise ValueError(f"occupation {occ} does not match modes {self.modes}")
            if any(n < 0 for n in occ):
                raise ValueError(f"negative occupation {occ}")
            if sum(occ) > self.cap:
                raise CapExceededError(f"occupation {occ} exceeds photon cap {self.cap}")
            amp = complex(amp)
            if amp != 0:
                clean[occ] = clean.get(occ, 0) + amp
        object.__setattr__(self, "amplitudes", clean)

    @property
    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def photon_numbers(self) -> set[int]:
        return {sum(occ) for occ in self.amplitudes}

    def normalized(self) -> "FockState":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return FockState({k: v / n for k, v in self.amplitudes.items()}, self.modes, self.cap)

    def relabel(self, modes: Sequence[str]) -> "FockState":
        return FockState(self.amplitudes, tuple(modes), self.cap)

    def __str__(self):
        if not self.amplitudes:
            return "0"
        lines = []
        for occ in sorted(self.amplitudes, reverse=True):
            amp = self.amplitudes[occ]
            ket = ",".join(str(n) for n in occ)
            lines.append(f"|{ket}>  {amp.real:+.6f}{amp.imag:+.6f}j")
        header = "modes: " + " ".join(self.modes)
        return "\n".join([header, *lines])


def inner_product(left: FockState, right: FockState) -> complex:
    """<left|right>."""
    return sum(
        amp.conjugate() * right.amplitudes.get(occ, 0) for occ, amp in left.amplitudes.items()
    )


def product_state(pol_a: str | None, pol_b: str | None) -> FockState:
    """One photon per spatial mode with the given polarizations ("H"/"V").

    ``None`` leaves that spatial mode empty.
    """
    occ = [0, 0, 0, 0]
    for offset, pol in ((0, pol_a), (2, pol_b)):
        if pol is None:
            continue
        occ[offset + {"H": 0, "V": 1}[pol]] += 1
    return FockState({tuple(occ): 1.0})


def single_photon(mode: str | int, modes: Sequence[str] = INPUT_MODES) -> FockState:
    idx = modes.index(mode) if isinstance(mode, str) else mode
    occ = [0] * len(modes)
    occ[idx] = 1
    return FockState({tuple(occ): 1.0}, tuple(modes))


class BellKind(enum.Enum):
    PHI_PLUS = "phi_plus"
    PHI_MINUS = "phi_minus"
    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"


def make_bell(kind: BellKind | str) -> FockState:
    """Bell state with one photon in each spatial mode.

    phi+- = (|HH> +- |VV>)/sqrt2 and psi+- = (|HV> +- |VH>)/sqrt2.
    """
    kind = BellKind(kind)
    s = 1 / math.sqrt(2)
    if kind in (BellKind.PHI_PLUS, BellKind.PHI_MINUS):
        first, second = (1, 0, 1, 0), (0, 1, 0, 1)
    else:
        first, second = (1, 0, 0, 1), (0, 1, 1, 0)
    sign = 1 if kind in (BellKind.PHI_PLUS, BellKind.PSI_PLUS) else -1
    return FockState({first: s, second: sign * s})


def unpolarized_pair_mixture() -> list[tuple[float, FockState]]:
    """Maximally mixed two-photon polarization state, one photon per spatial mode."""
    return [(0.25, product_state(pa, pb)) for pa in "HV" for pb in "HV"]


# ---------------------------------------------------------------------------
# Optical elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PBS:
    """Polarizing beam splitter: transmits H, reflects V, two spatial ports.

    Binds four modes ``(in1_H, in1_V, in2_H, in2_V)``.  The output keeps the
    same ordering by port: port 1 carries in1_H and the reflected in2_V.
    """

    reflection_phase: complex = 1.0

    n_modes = 4

    def matrix(self) -> np.ndarray:
        r = complex(self.reflection_phase)
        u = np.zeros((4, 4), dtype=complex)
        u[0, 0] = 1.0  # in1_H -> out1_H
        u[3, 1] = r  # in1_V -> out2_V
        u[2, 2] = 1.0  # in2_H -> out2_H
        u[1, 3] = r  # in2_V -> out1_V
        return u


@dataclass(frozen=True)
class HWP:
    """Half-wave plate on one spatial port; binds ``(H, V)``."""

    angle: float

    n_modes = 2

    def matrix(self) -> np.ndarray:
        c, s = math.cos(2 * self.angle), math.sin(2 * self.angle)
        return np.array([[c, s], [s, -c]], dtype=complex)


@dataclass(frozen=True)
class DiagonalPBS:
    """HWP at pi/8 followed by an H/V PBS; binds ``(H, V)`` and outputs ``(+, -)``.

    The trailing PBS only separates the rotated H and V components into two
    detectors, so the mode transform is that of the wave plate.
    """

    n_modes = 2

    def matrix(self) -> np.ndarray:
        return HWP(math.pi / 8).matrix()


OpticalElement = PBS | HWP | DiagonalPBS


def _embed(element, binding: Sequence[int], n_modes: int) -> np.ndarray:
    if len(binding) != element.n_modes or len(set(binding)) != len(binding):
        raise ValueError(f"{type(element).__name__} needs {element.n_modes} distinct modes")
    full = np.eye(n_modes, dtype=complex)
    sub = element.matrix()
    for i, oi in enumerate(binding):
        for j, oj in enumerate(binding):
            full[oi, oj] = sub[i, j]
    return full


def _transform(state: FockState, u: np.ndarray) -> FockState:
    """Apply mode transform ``a_j^dag -> sum_k u[k, j] a_k^dag`` to every component."""
    n = len(state.modes)
    out: dict[tuple[int, ...], complex] = defaultdict(complex)
    for occ, amp in state.amplitudes.items():
        # |n> = prod_j (a_j^dag)^{n_j} / sqrt(n_j!) |0>
        creators = [j for j, nj in enumerate(occ) for _ in range(nj)]
        pref = amp / math.sqrt(math.prod(math.factorial(nj) for nj in occ))
        for targets in itertools.product(range(n), repeat=len(creators)):
            coeff = pref
            for j, k in zip(creators, targets):
                coeff *= u[k, j]
                if coeff == 0:
                    break
            if coeff == 0:
                continue
            new = [0] * n
            for k in targets:
                new[k] += 1
            out[tuple(new)] += coeff
    result = {}
    for occ, coeff in out.items():
        # (a_k^dag)^m |0> = sqrt(m!) |m>
        val = coeff * math.sqrt(math.prod(math.factorial(m) for m in occ))
        if abs(val) > _ATOL * 1e-3:
            if sum(occ) > state.cap:
                raise CapExceededError(f"occupation {occ} exceeds photon cap {state.cap}")
            result[occ] = val
    return FockState(result, state.modes, state.cap)


def apply_element(
    state: FockState, element: OpticalElement, binding: Sequence[int | str]
) -> FockState:
    """Send ``state`` through ``element`` acting on the modes named in ``binding``."""
    idx = [state.modes.index(b) if isinstance(b, str) else int(b) for b in binding]
    return _transform(state, _embed(element, idx, len(state.modes)))


# ---------------------------------------------------------------------------
# Bell-state analyzer
# ---------------------------------------------------------------------------


def _analyzer_steps(reflection_phase: complex):
    return [
        (PBS(reflection_phase), (0, 1, 2, 3)),
        (DiagonalPBS(), (0, 1)),
        (DiagonalPBS(), (2, 3)),
    ]


def analyzer_matrix(reflection_phase: complex = 1.0) -> np.ndarray:
    """Total mode transform, rows indexed by detector, columns by input mode."""
    u = np.eye(4, dtype=complex)
    for element, binding in _analyzer_steps(reflection_phase):
        u = _embed(element, binding, 4) @ u
    return u


def analyze(state: FockState, reflection_phase: complex = 1.0) -> FockState:
    """Propagate an input-mode state to the four detector modes."""
    if state.modes != INPUT_MODES:
        raise ValueError(f"analyzer expects modes {INPUT_MODES}, got {state.modes}")
    for element, binding in _analyzer_steps(reflection_phase):
        state = apply_element(state, element, binding)
    return state.relabel(DETECTOR_MODES)


def detector_probabilities(
    state: FockState, reflection_phase: complex = 1.0
) -> dict[tuple[int, ...], float]:
    """Probability of each detector occupation pattern (ideal, number-resolving)."""
    out = analyze(state, reflection_phase)
    norm2 = state.norm**2
    return {occ: abs(a) ** 2 / norm2 for occ, a in out.amplitudes.items()}


class DetectorOutcome(str, enum.Enum):
    """Unordered detector pair that fired for a two-photon input."""

    PP = "A+B+"
    MM = "A-B-"
    PM = "A+B-"
    MP = "A-B+"
    AA = "A+A-"
    BB = "B+B-"
    A2P = "A+A+"
    A2M = "A-A-"
    B2P = "B+B+"
    B2M = "B-B-"

    @classmethod
    def from_detectors(cls, d1: str, d2: str) -> "DetectorOutcome":
        order = {d: i for i, d in enumerate(DETECTOR_MODES)}
        d1, d2 = sorted((d1, d2), key=order.__getitem__)
        return cls(d1 + d2)

    @property
    def detectors(self) -> tuple[str, str]:
        return self.value[:2], self.value[2:]

    @classmethod
    def from_occupation(cls, occ: Sequence[int]) -> "DetectorOutcome":
        fired = [DETECTOR_MODES[i] for i, n in enumerate(occ) for _ in range(n)]
        if len(fired) != 2:
            raise ValueError(f"not a two-photon pattern: {occ}")
        return cls.from_detectors(*fired)


PHI_OUTCOMES = frozenset({DetectorOutcome.PP, DetectorOutcome.MM})


def bsa_outcome_distribution(
    state: FockState, reflection_phase: complex = 1.0
) -> dict[DetectorOutcome, float]:
    """Outcome distribution of the analyzer for a two-photon input.

    Every outcome is present in the result, including zero-probability ones.
    """
    if state.photon_numbers() != {2}:
        raise ValueError(f"expected exactly two photons, got {sorted(state.photon_numbers())}")
    dist = {o: 0.0 for o in DetectorOutcome}
    for occ, p in detector_probabilities(state, reflection_phase).items():
        dist[DetectorOutcome.from_occupation(occ)] += p
    return dist


def phi_channel(reflection_phase: complex = 1.0) -> frozenset[DetectorOutcome]:
    """Outcomes that phi+ triggers under a given PBS phase convention.

    This is how a real analyzer is calibrated: the detector pairs that click
    for the source state define the "projection onto phi" result.
    """
    dist = bsa_outcome_distribution(make_bell(BellKind.PHI_PLUS), reflection_phase)
    return frozenset(o for o, p in dist.items() if p > _ATOL)


def joint_detection_expansion(
    det1: str, det2: str, reflection_phase: complex = 1.0
) -> dict[tuple[str, str], complex]:
    """Expand ``d_det1 d_det2`` as a quadratic form in input annihilation operators.

    Keys are unordered input-mode pairs in ``INPUT_MODES`` order; zero
    coefficients are omitted.
    """
    m = analyzer_matrix(reflection_phase)
    k1, k2 = DETECTOR_MODES.index(det1), DETECTOR_MODES.index(det2)
    terms = {}
    for j in range(4):
        for l in range(j, 4):
            if j == l:
                c = m[k1, j] * m[k2, j]
            else:
                c = m[k1, j] * m[k2, l] + m[k1, l] * m[k2, j]
            if abs(c) > _ATOL:
                terms[(INPUT_MODES[j], INPUT_MODES[l])] = complex(c)
    return terms


def bell_weights(mixture: Iterable[tuple[float, FockState]]) -> dict[BellKind, float]:
    """Weights of a two-photon mixture on the four Bell states.

    Every component must lie in the one-photon-per-spatial-mode subspace.
    """
    mixture = list(mixture)
    total = sum(p for p, _ in mixture)
    if abs(total - 1) > _ATOL:
        raise ValueError(f"mixture probabilities sum to {total}, not 1")
    bells = {k: make_bell(k) for k in BellKind}
    weights = dict.fromkeys(BellKind, 0.0)
    for p, state in mixture:
        for occ, amp in state.amplitudes.items():
            if (occ[0] + occ[1], occ[2] + occ[3]) != (1, 1) and abs(amp) > _ATOL:
                raise ValueError(f"component has weight outside the 1A1B subspace: {occ}")
        norm2 = state.norm**2
        for kind, bell in bells.items():
            weights[kind] += p * abs(inner_product(bell, state)) ** 2 / norm2
    return weights


