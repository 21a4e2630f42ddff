"""Optical elements as transforms on :class:`~hyperent.state.PureState`.

Phases are exact :class:`~fractions.Fraction` multiples of pi so that branch
comparisons in the cross-Kerr elements are exact.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import PostSelectionError, UsageError
from .state import (
    ERASED,
    STANDARD,
    Branch,
    Key,
    PhotonLabel,
    PureState,
    Registry,
    apply_mode_unitary,
    choose,
    measurement_branches,
    normalize,
    photon_index,
)

# (|T> + |B>)/sqrt2 -> |T>, (|T> - |B>)/sqrt2 -> |B>; columns are images of T and B.
BS_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)

THETA = Fraction(1, 8)
"""Base cross-Kerr phase shift, in units of pi."""


def _photons(photon):
    return None if photon is None else photon_index(photon)


@dataclass(frozen=True)
class BeamSplitterSpec:
    """A 50:50 beam splitter. Outputs default to the input modes (in place)."""

    in_T: str
    in_B: str
    out_T: str | None = None
    out_B: str | None = None

    @property
    def outputs(self) -> tuple[str, str]:
        return (self.out_T or self.in_T, self.out_B or self.in_B)


def beam_splitter(state: PureState, spec: BeamSplitterSpec, photon: int | str | None = None) -> PureState:
    """Apply the beam splitter to every photon (or just ``photon``)."""
    out_T, out_B = spec.outputs
    for m in (spec.in_T, spec.in_B, out_T, out_B):
        if not state.registry.has_mode(m):
            raise UsageError(f"unregistered mode {m!r}")
    if len({spec.in_T, spec.in_B}) != 2 or len({out_T, out_B}) != 2:
        raise UsageError("beam splitter ports must be distinct")
    p = _photons(photon)
    photons = range(state.arity) if p is None else (p,)
    inputs = {spec.in_T, spec.in_B}
    for q in photons:
        stray = {lab.mode for lab in state.support(q)} & ({out_T, out_B} - inputs)
        if stray:
            raise UsageError(f"output ports {sorted(stray)} already occupied")
    route = {spec.in_T: out_T, spec.in_B: out_B}
    if (out_T, out_B) != (spec.in_T, spec.in_B):
        state = state.relabel(p, lambda lab: lab._replace(mode=route.get(lab.mode, lab.mode)))
    return apply_mode_unitary(state, p, "mode", BS_MATRIX, (out_T, out_B))


def phase_shift(state: PureState, phases: Mapping[str, Fraction], photon: int | str | None = None) -> PureState:
    """Diagonal phase ``exp(i pi phi)`` on the listed modes."""
    factors = {m: cmath.exp(1j * math.pi * float(ph)) for m, ph in phases.items()}
    for m in factors:
        if not state.registry.has_mode(m):
            raise UsageError(f"unregistered mode {m!r}")

    def act(lab: PhotonLabel):
        return ((lab, factors.get(lab.mode, 1.0)),)

    return state.map_photon(_photons(photon), act)


def frequency_multiplier(state: PureState, mode: str, photon: int | str | None = None) -> PureState:
    """Double the frequency of everything travelling in ``mode``."""

    def act(lab: PhotonLabel) -> PhotonLabel:
        if lab.mode != mode or lab.freq == ERASED:
            return lab
        doubled = lab.freq * 2
        if doubled not in state.registry.freqs:
            raise UsageError(f"doubled frequency {doubled} is not registered")
        return lab._replace(freq=doubled)

    return state.relabel(_photons(photon), act)


SPDC_SPLITS = {3: (1, 2), 12: (4, 8)}


def spdc_pair(pump_freq: int, mode_a: str, mode_b: str, registry: Registry = STANDARD) -> PureState:
    """Photon pair from the double type-II crystal for one pump frequency.

    Polarization is ``HV + VH`` and the two crystals contribute both orderings
    of the signal/idler frequency split.
    """
    if pump_freq not in SPDC_SPLITS:
        raise UsageError(f"pump frequency must be one of {sorted(SPDC_SPLITS)}, got {pump_freq}")
    lo, hi = SPDC_SPLITS[pump_freq]
    amps = {}
    for pa, pb in (("H", "V"), ("V", "H")):
        for fa, fb in ((lo, hi), (hi, lo)):
            amps[(PhotonLabel(pa, fa, mode_a), PhotonLabel(pb, fb, mode_b))] = 0.5
    return PureState(amps, registry=registry)


def down_convert(pump: PureState, mode_a: str, mode_b: str) -> PureState:
    """Coherently down-convert every branch of a single-beam pump state."""
    if pump.arity != 1:
        raise UsageError("pump must be a single-beam state")
    out = None
    for (lab,), amp in pump.items():
        pair = amp * spdc_pair(lab.freq, mode_a, mode_b, pump.registry)
        out = pair if out is None else out + pair
    if out is None:
        raise UsageError("empty pump state")
    return out


@dataclass(frozen=True)
class PhaseAssignment:
    """Cross-Kerr phase imprinted on one probe arm per signal mode (units of pi)."""

    phases: Mapping[str, Fraction]
    registry: Registry = STANDARD

    def __post_init__(self):
        fixed = {}
        for m, ph in self.phases.items():
            if not self.registry.has_mode(m):
                raise UsageError(f"unregistered mode {m!r}")
            ph = Fraction(ph)
            if not 0 <= ph < 2:
                raise UsageError(f"phase {ph}pi outside [0, 2pi)")
            fixed[m] = ph
        object.__setattr__(self, "phases", fixed)

    def __getitem__(self, mode: str) -> Fraction:
        try:
            return self.phases[mode]
        except KeyError:
            raise UsageError(f"phase assignment does not cover mode {mode!r}") from None


Tag = tuple  # (upper phase or None, lower phase or None)


@dataclass(frozen=True)
class KerrProbe:
    """Branch-resolved phases on the upper and lower coherent-probe arms."""

    tags: Mapping[Key, Tag]
    alpha_mag: float = 1.0


@dataclass(frozen=True)
class TaggedState:
    state: PureState
    probe: KerrProbe = field(repr=False)


def _assignment(a) -> PhaseAssignment | None:
    if a is None or isinstance(a, PhaseAssignment):
        return a
    return PhaseAssignment(a)


def kerr_tag(
    state: PureState,
    upper: PhaseAssignment | Mapping[str, Fraction] | None = None,
    lower: PhaseAssignment | Mapping[str, Fraction] | None = None,
    alpha_mag: float = 1.0,
) -> TaggedState:
    """Record the probe phase picked up in each branch.

    The upper arm couples to photon A's mode, the lower arm to photon B's.
    """
    upper, lower = _assignment(upper), _assignment(lower)
    if lower is not None and state.arity < 2:
        raise UsageError("lower probe arm needs a photon B")
    if alpha_mag <= 0:
        raise UsageError("coherent amplitude must be positive")
    tags = {}
    for key in state:
        tags[key] = (
            upper[key[0].mode] if upper is not None else None,
            lower[key[1].mode] if lower is not None else None,
        )
    return TaggedState(state, KerrProbe(tags, alpha_mag))


def kerr_compare_postselect(tagged: TaggedState) -> tuple[PureState, float]:
    """Interfere the two probe arms and keep the vacuum outcome on the compared arm.

    In the ideal model that outcome occurs exactly on branches whose two arm
    phases agree. Returns the renormalized surviving state and its probability.
    """
    state, tags = tagged.state, tagged.probe.tags
    if any(None in tags[k] for k in state):
        raise UsageError("both probe arms must be tagged before comparison")
    kept = state.filter(lambda k: tags[k][0] == tags[k][1])
    if len(kept) == 0:
        raise PostSelectionError("no branch has matching probe phases")
    p = kept.weight() / state.weight()
    return normalize(kept)[0], p


def _arm(arm: str) -> int:
    try:
        return {"upper": 0, "lower": 1}[arm]
    except KeyError:
        raise UsageError(f"unknown probe arm {arm!r}") from None


def kerr_phase_branches(tagged: TaggedState, phase_classes: Sequence[Fraction], arm: str = "upper") -> list[Branch]:
    """All readout outcomes ``(class index, collapsed state, probability)`` of one probe arm."""
    a = _arm(arm)
    index = {Fraction(ph): n for n, ph in enumerate(phase_classes)}
    tags = tagged.probe.tags

    def cls(key):
        ph = tags[key][a]
        if ph not in index:
            raise UsageError(f"probe phase {ph} is outside every class")
        return index[ph]

    return measurement_branches(tagged.state, cls)


def kerr_phase_readout(
    tagged: TaggedState, phase_classes: Sequence[Fraction], rng: np.random.Generator, arm: str = "upper"
) -> Branch:
    """Sample which phase class the probe arm shows and collapse onto it."""
    return choose(kerr_phase_branches(tagged, phase_classes, arm), rng)


def demultiplex(
    state: PureState, mode: str, routing: Mapping[int, str], photon: int | str | None = None
) -> PureState:
    """Route the light in ``mode`` into separate paths by frequency."""

    def act(lab: PhotonLabel) -> PhotonLabel:
        if lab.mode != mode:
            return lab
        if lab.freq not in routing:
            raise UsageError(f"no route for frequency {lab.freq} on {mode}")
        return lab._replace(mode=routing[lab.freq])

    return state.relabel(_photons(photon), act)


def multiplex(state: PureState, modes: Iterable[str], target: str, photon: int | str | None = None) -> PureState:
    """Merge several paths into ``target``.

    Only legal when the merged labels stay distinguishable; a collision means
    which-path information was still present.
    """
    modes = set(modes)
    try:
        return state.relabel(
            _photons(photon), lambda lab: lab._replace(mode=target) if lab.mode in modes else lab
        )
    except UsageError as exc:
        raise UsageError(f"cannot multiplex {sorted(modes)} into {target}: {exc}") from None


def erase_frequency(state: PureState, photon: int | str, target_freq: int) -> PureState:
    """Shift every frequency on ``photon`` to ``target_freq``."""
    if target_freq not in state.registry.freqs:
        raise UsageError(f"unregistered frequency {target_freq}")
    try:
        return state.relabel(photon_index(photon), lambda lab: lab._replace(freq=target_freq))
    except UsageError as exc:
        raise UsageError(f"frequency erasure would merge labels: {exc}") from None


def polarization_branches(state: PureState, photon: int | str) -> list[Branch]:
    p = photon_index(photon)
    return measurement_branches(state, lambda k: k[p].pol)


def polarization_measure(state: PureState, photon: int | str, rng: np.random.Generator) -> Branch:
    """H/V analysis of one photon: ``(outcome, collapsed state, probability)``."""
    return choose(polarization_branches(state, photon), rng)
