"""The 2x4x4 hyperentangled-state source, stage by stage.

pump build -> double-crystal SPDC with mirror second pass -> beam-splitter
split into eight paths -> cross-Kerr parity post-selection.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .expr import state_from_expr
from .optics import (
    THETA,
    BeamSplitterSpec,
    beam_splitter,
    down_convert,
    frequency_multiplier,
    kerr_compare_postselect,
    kerr_tag,
    multiplex,
    phase_shift,
)
from .state import ERASED, PhotonLabel, PureState, fidelity

PUMP_EXPR = "w1 p + w2 p"
TWO_PATH_EXPR = "(H V + V H)(w11 w12 + w12 w11 + w21 w22 + w22 w21)(a1 b1 + a2 b2)"
EIGHT_PATH_EXPR = (
    "(H V + V H)(w11 w12 + w12 w11 + w21 w22 + w22 w21)"
    "((a11 + a12)(b11 + b12) + (a21 + a22)(b21 + b22))"
)
TARGET_EXPR = (
    "(H V + V H)(w11 w12 + w12 w11 + w21 w22 + w22 w21)"
    "(a11 b11 + a12 b12 + a21 b21 + a22 b22)"
)

# a-paths enter the T port of their splitter, b-paths the B port (mirror layout).
SPLITTERS = (
    BeamSplitterSpec("a1", "a1_v", "a11", "a12"),
    BeamSplitterSpec("a2", "a2_v", "a21", "a22"),
    BeamSplitterSpec("b1_v", "b1", "b11", "b12"),
    BeamSplitterSpec("b2_v", "b2", "b21", "b22"),
)
# B-port inputs leave with a relative minus sign on the B output.
PHASE_FIXUP = {"b12": Fraction(1), "b22": Fraction(1)}

KERR_UPPER = {"a11": THETA, "a21": THETA, "a12": 2 * THETA, "a22": 2 * THETA}
KERR_LOWER = {"b11": THETA, "b21": THETA, "b12": 2 * THETA, "b22": 2 * THETA}


@dataclass(frozen=True)
class PipelineCheckpoint:
    stage: str
    state: PureState
    reference: PureState
    fidelity: float


def pump_stages() -> dict[str, PureState]:
    """Intermediate pump states: ``input``, ``split``, ``multiplied``, ``merged``."""
    stages = {"input": PureState.basis(PhotonLabel(ERASED, 3, "p"))}
    s = beam_splitter(stages["input"], BeamSplitterSpec("p", "p_v", "pu", "pl"))
    stages["split"] = s
    s = frequency_multiplier(frequency_multiplier(s, "pu"), "pu")
    stages["multiplied"] = s
    # the two paths now carry different frequencies, so the combiner is lossless
    stages["merged"] = multiplex(s, ["pu", "pl"], "p")
    return stages


def build_pump() -> PureState:
    """Single-beam pump in an equal superposition of frequencies 3 and 12."""
    return pump_stages()["merged"]


def generate_two_path(pump: PureState | None = None) -> PureState:
    """Polarization x frequency x two-path spatial hyperentangled state."""
    pump = build_pump() if pump is None else pump
    first = down_convert(pump, "a1", "b1")
    second = down_convert(pump, "a2", "b2")
    return (first + second) * (2**-0.5)


def split_spatial(state: PureState) -> PureState:
    """Split each of a1, a2, b1, b2 on a beam splitter and fix relative phases."""
    for spec in SPLITTERS:
        state = beam_splitter(state, spec)
    return phase_shift(state, PHASE_FIXUP)


def kerr_parity_filter(state: PureState) -> tuple[PureState, float]:
    tagged = kerr_tag(state, KERR_UPPER, KERR_LOWER)
    return kerr_compare_postselect(tagged)


def run_pipeline() -> tuple[list[PipelineCheckpoint], float]:
    """Run every stage and compare it with the symbolic reference.

    Returns the checkpoints and the Kerr post-selection success probability.
    """
    checkpoints = []

    def check(stage, state, expr):
        ref = state_from_expr(expr)
        checkpoints.append(PipelineCheckpoint(stage, state, ref, fidelity(state, ref)))

    pump = build_pump()
    check("pump", pump, PUMP_EXPR)
    two_path = generate_two_path(pump)
    check("two_path", two_path, TWO_PATH_EXPR)
    eight = split_spatial(two_path)
    check("eight_path", eight, EIGHT_PATH_EXPR)
    final, p = kerr_parity_filter(eight)
    check("final", final, TARGET_EXPR)
    return checkpoints, p


def generate_hyperentangled() -> tuple[PureState, float]:
    """Final 2x4x4 state and the post-selection success probability."""
    state, p = kerr_parity_filter(split_spatial(generate_two_path()))
    return state, p


def target_reference() -> PureState:
    return state_from_expr(TARGET_EXPR)
