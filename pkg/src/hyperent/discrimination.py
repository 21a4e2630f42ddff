"""Deterministic readout of the 16 frequency-spatial entangled single-photon states.

Stage one routes every spatial mode into four frequency paths, reads a
cross-Kerr phase that identifies the group ``i`` (which frequency sits in which
mode), erases frequency and merges back to four paths. Stage two is a small
beam-splitter network that, together with one more phase readout, resolves
the sign pattern ``j``.

Every stage acts on one photon of a one- or two-photon state, so the same code
serves a lone photon and either party's photon inside an entangled pair.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

import numpy as np

from .errors import UsageError
from .optics import (
    BeamSplitterSpec,
    PhaseAssignment,
    beam_splitter,
    demultiplex,
    erase_frequency,
    kerr_phase_branches,
    kerr_tag,
    multiplex,
    polarization_branches,
)
from .state import (
    ERASED,
    PHOTON_FREQS,
    Branch,
    PhotonLabel,
    PureState,
    choose,
    measurement_branches,
    photon_index,
)

SPATIAL = ("11", "12", "21", "22")
HADAMARD_ROWS = ((1, 1, 1, 1), (1, -1, -1, 1), (1, -1, 1, -1), (1, 1, -1, -1))
PAIR_SWAP = {1: 2, 2: 1, 4: 8, 8: 4}
GROUP_PHASES = tuple(Fraction(n, 16) for n in (1, 2, 3, 4))
PHI_PHASES = GROUP_PHASES[:2]
ERASED_TO = 8


class DiscriminationOutcome(NamedTuple):
    i: int
    j: int

    @property
    def index(self) -> int:
        """0..15, with ``i`` in the high two bits."""
        return 4 * (self.i - 1) + (self.j - 1)


def _check_side(side: str) -> str:
    side = side.upper()
    if side not in ("A", "B"):
        raise UsageError(f"side must be 'A' or 'B', got {side!r}")
    return side


def spatial_modes(side: str) -> tuple[str, ...]:
    x = _check_side(side).lower()
    return tuple(f"{x}{s}" for s in SPATIAL)


def freq_slot(side: str, freq: int) -> int:
    """Column of the sign pattern that a given frequency occupies.

    Photon B carries the pair-swapped frequency in each slot.
    """
    f = freq if _check_side(side) == "A" else PAIR_SWAP[freq]
    return PHOTON_FREQS.index(f)


def basis_state(side: str, i: int, j: int) -> PureState:
    """``|psi_ij>`` on photon ``side``: slot ``s`` pairs frequency ``s`` with mode ``s + i - 1``."""
    if i not in range(1, 5) or j not in range(1, 5):
        raise UsageError(f"indices must lie in 1..4, got ({i}, {j})")
    side = _check_side(side)
    modes = spatial_modes(side)
    amps = {}
    for slot, f in enumerate(PHOTON_FREQS):
        freq = f if side == "A" else PAIR_SWAP[f]
        amps[(PhotonLabel(ERASED, freq, modes[(slot + i - 1) % 4]),)] = 0.5 * HADAMARD_ROWS[j - 1][slot]
    return PureState(amps)


def phi_state(j: int, side: str = "A") -> PureState:
    """Spatial-only state with sign pattern ``j``, frequency already erased."""
    modes = spatial_modes(side)
    return PureState(
        {(PhotonLabel(ERASED, ERASED_TO, m),): 0.5 * s for m, s in zip(modes, HADAMARD_ROWS[j - 1])}
    )


def _path(mode: str, freq: int) -> str:
    return f"{mode}@{freq}"


def group_of(side: str, mode: str, freq: int) -> int:
    """Group index of a (mode, frequency) path."""
    return (spatial_modes(side).index(mode) - freq_slot(side, freq)) % 4 + 1


def infer_side(state: PureState, photon: int) -> str:
    letters = {lab.mode[0] for lab in state.support(photon)}
    if letters == {"a"}:
        return "A"
    if letters == {"b"}:
        return "B"
    raise UsageError(f"cannot tell which side photon {photon} belongs to from modes {sorted(letters)}")


def _check_support(state: PureState, photon: int, side: str) -> None:
    allowed = set(spatial_modes(side))
    for lab in state.support(photon):
        if lab.mode not in allowed or lab.freq not in PHOTON_FREQS:
            raise UsageError(f"label {lab} is outside the 4x4 frequency-spatial space of side {side}")


def _arm(photon: int) -> str:
    return "upper" if photon == 0 else "lower"


def _tag(state: PureState, photon: int, phases: dict) -> object:
    a = PhaseAssignment(phases)
    return kerr_tag(state, upper=a) if photon == 0 else kerr_tag(state, lower=a)


def demultiplex_all(state: PureState, side: str, photon: int = 0) -> PureState:
    """Split each of the four spatial modes into four frequency paths."""
    for m in spatial_modes(side):
        state = demultiplex(state, m, {f: _path(m, f) for f in PHOTON_FREQS}, photon)
    return state


def group_branches(state: PureState, side: str | None = None, photon: int | str = 0) -> list[Branch]:
    """Stage-one outcomes ``(i, collapsed demultiplexed state, probability)``."""
    photon = photon_index(photon)
    side = infer_side(state, photon) if side is None else _check_side(side)
    _check_support(state, photon, side)
    routed = demultiplex_all(state, side, photon)
    phases = {
        _path(m, f): GROUP_PHASES[group_of(side, m, f) - 1] for m in spatial_modes(side) for f in PHOTON_FREQS
    }
    tagged = _tag(routed, photon, phases)
    return [(n + 1, s, p) for n, s, p in kerr_phase_branches(tagged, GROUP_PHASES, _arm(photon))]


def classify_group(
    state: PureState, rng: np.random.Generator, side: str | None = None, photon: int | str = 0
) -> Branch:
    """Read the group index; deterministic on any basis state."""
    return choose(group_branches(state, side, photon), rng)


def freq_erase_to_phi(collapsed: PureState, i: int, side: str | None = None, photon: int | str = 0) -> PureState:
    """Erase frequency and merge the 16 paths back to four.

    Paths are merged by frequency slot, so ``|psi_ij>`` becomes ``phi_j``.
    """
    photon = photon_index(photon)
    if side is None:
        side = infer_side(collapsed, photon)
    modes = spatial_modes(side)
    for lab in collapsed.support(photon):
        mode, _, freq = lab.mode.partition("@")
        if not freq or group_of(side, mode, int(freq)) != i:
            raise UsageError(f"path {lab.mode} does not belong to group {i}")
    # frequency values are only kept in the path names from here on
    state = erase_frequency(collapsed, photon, ERASED_TO)
    for f in PHOTON_FREQS:
        slot = freq_slot(side, f)
        state = multiplex(state, [_path(m, f) for m in modes], modes[slot], photon)
    return state


# Second stage: (x11, x12) and (x21, x22) each meet on a splitter.
def _stage_two_modes(side: str):
    x = _check_side(side).lower()
    m11, m12, m21, m22 = spatial_modes(side)
    T1, B1, T2, B2, u, d = (f"{x}{n}" for n in ("T1", "B1", "T2", "B2", "u", "d"))
    return (m11, m12, m21, m22), (T1, B1, T2, B2), (u, d)


PHI_FROM_READOUT = {(1, "u"): 1, (1, "d"): 4, (2, "u"): 3, (2, "d"): 2}


def phi_class_branches(phi: PureState, side: str | None = None, photon: int | str = 0) -> list[Branch]:
    """Two splitters then a phase readout: class 1 is {phi1, phi4}, class 2 is {phi2, phi3}."""
    photon = photon_index(photon)
    side = infer_side(phi, photon) if side is None else _check_side(side)
    (m11, m12, m21, m22), (T1, B1, T2, B2), _ = _stage_two_modes(side)
    allowed = {m11, m12, m21, m22}
    if any(lab.mode not in allowed for lab in phi.support(photon)):
        raise UsageError("phi discrimination needs a state on the four spatial modes")
    s = beam_splitter(phi, BeamSplitterSpec(m11, m12, T1, B1), photon)
    s = beam_splitter(s, BeamSplitterSpec(m21, m22, T2, B2), photon)
    phases = {T1: PHI_PHASES[0], T2: PHI_PHASES[0], B1: PHI_PHASES[1], B2: PHI_PHASES[1]}
    tagged = _tag(s, photon, phases)
    return [(n + 1, st, p) for n, st, p in kerr_phase_branches(tagged, PHI_PHASES, _arm(photon))]


def detector_branches(state: PureState, side: str, photon: int = 0) -> list[Branch]:
    """Merge the splitter outputs pairwise into u and d, interfere, and detect."""
    _, (T1, B1, T2, B2), (u, d) = _stage_two_modes(side)
    s = multiplex(state, [T1, B1], u, photon)
    s = multiplex(s, [T2, B2], d, photon)
    s = beam_splitter(s, BeamSplitterSpec(u, d), photon)
    return measurement_branches(s, lambda k: k[photon].mode[1:])


def phi_discriminate(
    phi: PureState, rng: np.random.Generator, side: str | None = None, photon: int | str = 0
) -> int:
    """Identify ``j`` from a ``phi_j`` input."""
    return _phi_stage(phi, rng, side, photon)[0]


def _phi_stage(phi, rng, side, photon):
    photon = photon_index(photon)
    side = infer_side(phi, photon) if side is None else _check_side(side)
    cls, s, p1 = choose(phi_class_branches(phi, side, photon), rng)
    port, s, p2 = choose(detector_branches(s, side, photon), rng)
    return PHI_FROM_READOUT[(cls, port)], s, p1 * p2


def measure_photon(
    state: PureState, rng: np.random.Generator, side: str | None = None, photon: int | str = 0
) -> tuple[DiscriminationOutcome, PureState, float]:
    """Run the whole apparatus on one photon.

    Returns the outcome, the post-measurement state (the measured photon ends
    at a detector port, any partner photon is left in its conditional state)
    and the probability of this outcome path.
    """
    photon = photon_index(photon)
    side = infer_side(state, photon) if side is None else _check_side(side)
    i, collapsed, p1 = classify_group(state, rng, side, photon)
    phi = freq_erase_to_phi(collapsed, i, side, photon)
    j, final, p2 = _phi_stage(phi, rng, side, photon)
    return DiscriminationOutcome(i, j), final, p1 * p2


def discriminate(
    state: PureState, rng: np.random.Generator, side: str | None = None, photon: int | str = 0
) -> DiscriminationOutcome:
    return measure_photon(state, rng, side, photon)[0]


def outcome_tree(state: PureState, side: str | None = None, photon: int | str = 0):
    """Enumerate every apparatus path: yields ``(outcome, probability)`` pairs."""
    photon = photon_index(photon)
    side = infer_side(state, photon) if side is None else _check_side(side)
    for i, collapsed, p1 in group_branches(state, side, photon):
        phi = freq_erase_to_phi(collapsed, i, side, photon)
        for cls, s, p2 in phi_class_branches(phi, side, photon):
            for port, _, p3 in detector_branches(s, side, photon):
                yield DiscriminationOutcome(i, PHI_FROM_READOUT[(cls, port)]), p1 * p2 * p3


def outcome_probabilities(state: PureState, side: str | None = None, photon: int | str = 0) -> dict:
    probs: dict[DiscriminationOutcome, float] = {}
    for outcome, p in outcome_tree(state, side, photon):
        probs[outcome] = probs.get(outcome, 0.0) + p
    return probs


def _split(rng: np.random.Generator, trials: int, branches: list[Branch]) -> Iterable[tuple[Branch, int]]:
    counts = rng.multinomial(trials, [b[2] for b in branches]) if trials else [0] * len(branches)
    return ((b, int(n)) for b, n in zip(branches, counts) if n)


def discriminate_counts(
    state: PureState, trials: int, rng: np.random.Generator, side: str | None = None, photon: int | str = 0
) -> Counter:
    """Outcome histogram of ``trials`` independent runs on copies of ``state``.

    Runs are pooled at each readout: the number of runs landing on each
    branch is drawn multinomially and only distinct branches are propagated.
    This has the same distribution as running the trials one at a time.
    """
    photon = photon_index(photon)
    side = infer_side(state, photon) if side is None else _check_side(side)
    counts: Counter = Counter()
    for (i, collapsed, _), n1 in _split(rng, trials, group_branches(state, side, photon)):
        phi = freq_erase_to_phi(collapsed, i, side, photon)
        for (cls, s, _), n2 in _split(rng, n1, phi_class_branches(phi, side, photon)):
            for (port, _, _), n3 in _split(rng, n2, detector_branches(s, side, photon)):
                counts[DiscriminationOutcome(i, PHI_FROM_READOUT[(cls, port)])] += n3
    return counts


@dataclass(frozen=True)
class HyperOutcome:
    mode: str
    freq: int
    pol: str


def measure_hyper(state: PureState, rng: np.random.Generator) -> tuple[tuple[HyperOutcome, ...], PureState]:
    """Spatial detection, then frequency demultiplexing, then H/V analysis, on every photon."""
    for photon in range(state.arity):
        _, state, _ = choose(measurement_branches(state, lambda k, p=photon: k[p].mode), rng)
    for photon in range(state.arity):
        _, state, _ = choose(measurement_branches(state, lambda k, p=photon: k[p].freq), rng)
    for photon in range(state.arity):
        _, state, _ = choose(polarization_branches(state, photon), rng)
    (key,) = state
    return tuple(HyperOutcome(lab.mode, lab.freq, lab.pol) for lab in key), state
