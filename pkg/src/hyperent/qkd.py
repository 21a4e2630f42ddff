"""Key distribution by hyperentanglement swapping between frequency and spatial mode.

Alice applies one of 16 spatial-mode operations to her photon, both parties
read their photon with the 16-outcome apparatus, and Alice announces her
outcome. The (Alice, Bob) outcome pair pins down the operation, which gives
four determinate key bits; Alice's outcome gives four more.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy import stats as _stats

from .discrimination import (
    HADAMARD_ROWS,
    DiscriminationOutcome,
    basis_state,
    measure_photon,
    spatial_modes,
)
from .errors import ProtocolError, UsageError
from .expr import state_from_expr
from .rng import stream
from .state import (
    PureState,
    apply_mode_unitary,
    fidelity,
    is_unitary,
    measure,
    normalize,
    project_photon,
    tensor,
)

SOURCE_EXPR = "(w11 w12 + w12 w11 + w21 w22 + w22 w21)(a11 b11 + a12 b12 + a21 b21 + a22 b22)"
PSI_S_EXPR = "a11 b11 + a12 b12 + a21 b21 + a22 b22"

# Spatial state after each local operation on photon A.
SIGMA_TARGETS = {
    1: "a11 b11 + a12 b12 + a21 b21 + a22 b22",
    2: "a11 b11 - a12 b12 - a21 b21 + a22 b22",
    3: "a11 b11 - a12 b12 + a21 b21 - a22 b22",
    4: "a11 b11 + a12 b12 - a21 b21 - a22 b22",
    5: "a11 b12 + a12 b21 + a21 b22 + a22 b11",
    6: "a11 b12 - a12 b21 - a21 b22 + a22 b11",
    7: "a11 b12 - a12 b21 + a21 b22 - a22 b11",
    8: "a11 b12 + a12 b21 - a21 b22 - a22 b11",
    9: "a11 b21 + a12 b22 + a21 b11 + a22 b12",
    10: "a11 b21 - a12 b22 - a21 b11 + a22 b12",
    11: "a11 b21 - a12 b22 + a21 b11 - a22 b12",
    12: "a11 b21 + a12 b22 - a21 b11 - a22 b12",
    13: "a11 b22 + a12 b11 + a21 b12 + a22 b21",
    14: "a11 b22 - a12 b11 - a21 b12 + a22 b21",
    15: "a11 b22 - a12 b11 + a21 b12 - a22 b21",
    16: "a11 b22 + a12 b11 - a21 b12 - a22 b21",
}

OUTCOMES = tuple(DiscriminationOutcome(i, j) for i in range(1, 5) for j in range(1, 5))
EVE_BASES = ("product", "discrimination")


@lru_cache(maxsize=None)
def source_state() -> PureState:
    """Normalized frequency x spatial two-photon state (polarization ignored)."""
    return state_from_expr(SOURCE_EXPR)


def _spatial_matrix(state: PureState) -> np.ndarray:
    """``C[n, m]`` = amplitude of ``|a_n>|b_m>`` in a spatial-only state."""
    a, b = spatial_modes("A"), spatial_modes("B")
    c = np.zeros((4, 4), dtype=complex)
    for (la, lb), amp in state.items():
        c[a.index(la.mode), b.index(lb.mode)] += amp
    return c


@dataclass(frozen=True)
class SigmaOp:
    k: int
    u: np.ndarray = field(repr=False)
    bits: str


def _check_k(k: int) -> None:
    if k not in SIGMA_TARGETS:
        raise UsageError(f"operation index must lie in 1..16, got {k}")


@lru_cache(maxsize=None)
def sigma_unitary(k: int) -> SigmaOp:
    """Solve ``(u ⊗ I)|psi_S> = |psi_k>_S`` for ``u``.

    ``|psi_S>`` is maximally entangled, so its coefficient matrix is invertible
    and ``u`` is unique.
    """
    _check_k(k)
    c_s = _spatial_matrix(state_from_expr(PSI_S_EXPR, normalized=False))
    c_k = _spatial_matrix(state_from_expr(SIGMA_TARGETS[k], normalized=False))
    u = c_k @ np.linalg.inv(c_s)
    if not is_unitary(u):
        raise ProtocolError(f"sigma_{k} is not unitary")
    u.setflags(write=False)
    return SigmaOp(k, u, encoding(k))


def cyclic_shift(m: int = 1) -> np.ndarray:
    """``|x_s> -> |x_{s-m}>`` over the ordering (11, 12, 21, 22)."""
    p = np.zeros((4, 4))
    for s in range(4):
        p[(s - m) % 4, s] = 1
    return p


def sign_pattern(n: int) -> np.ndarray:
    return np.diag(HADAMARD_ROWS[n - 1]).astype(float)


def _same_up_to_phase(u: np.ndarray, v: np.ndarray, atol: float = 1e-12) -> bool:
    return abs(abs(np.vdot(u, v)) / len(u) - 1) <= atol


def decompose_sigma(k: int) -> tuple[int, int]:
    """Find ``(m, n)`` with ``u(k) = sign_pattern(n) @ cyclic_shift(m)`` up to phase.

    Signs applied after the shift give ``k = 4m + n``.
    """
    u = sigma_unitary(k).u
    hits = [
        (m, n)
        for m in range(4)
        for n in range(1, 5)
        if _same_up_to_phase(sign_pattern(n) @ cyclic_shift(m), u)
    ]
    if len(hits) != 1:
        raise ProtocolError(f"sigma_{k} has {len(hits)} shift x sign factorizations")
    return hits[0]


def encoding(k: int) -> str:
    _check_k(k)
    return format(k - 1, "04b")


def decoding(bits: str) -> int:
    if len(bits) != 4 or set(bits) - {"0", "1"}:
        raise UsageError(f"expected four bits, got {bits!r}")
    return int(bits, 2) + 1


def apply_sigma(state: PureState, k: int, photon: int = 0) -> PureState:
    side = "AB"[photon]
    return apply_mode_unitary(state, photon, "mode", sigma_unitary(k).u, spatial_modes(side))


def product_basis(outcome: DiscriminationOutcome) -> PureState:
    return tensor(basis_state("A", *outcome), basis_state("B", *outcome))


def decompose_products(state: PureState) -> dict[DiscriminationOutcome, complex]:
    """Coefficients on the 16 diagonal products ``|psi_ij>_A |psi_ij>_B``."""
    out = {}
    for o in OUTCOMES:
        ket = product_basis(o)
        out[o] = sum(ket[key].conjugate() * amp for key, amp in state.items())
    return out


def reconstruct_products(coeffs: Mapping[DiscriminationOutcome, complex]) -> PureState:
    total = None
    for o, c in coeffs.items():
        term = c * product_basis(o)
        total = term if total is None else total + term
    return total


def product_prefactor() -> complex:
    """Constant ``c`` with unit-coefficient state (3) = ``c * sum_ij |psi_ij>_A |psi_ij>_B``."""
    unit = state_from_expr(SOURCE_EXPR, normalized=False)
    ssum = reconstruct_products({o: 1.0 for o in OUTCOMES})
    return sum(ssum[k].conjugate() * a for k, a in unit.items()) / ssum.weight()


@dataclass(frozen=True)
class CorrelationTable:
    """Bob's outcome for every (operation, Alice outcome)."""

    entries: Mapping[tuple[int, DiscriminationOutcome], DiscriminationOutcome]
    _inverse: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        inv = {(a, b): k for (k, a), b in self.entries.items()}
        object.__setattr__(self, "_inverse", inv)

    def __getitem__(self, key):
        return self.entries[key]

    def is_injective(self) -> bool:
        return all(len({self.entries[(k, a)] for k in SIGMA_TARGETS}) == 16 for a in OUTCOMES)

    def infer(self, alice: DiscriminationOutcome, bob: DiscriminationOutcome) -> int:
        try:
            return self._inverse[(alice, bob)]
        except KeyError:
            raise ProtocolError(f"no operation explains outcomes {tuple(alice)} / {tuple(bob)}") from None


def identify(state: PureState, side: str, atol: float = 1e-12) -> DiscriminationOutcome:
    """The basis state that ``state`` equals up to phase; raises if there is none."""
    hits = [o for o in OUTCOMES if fidelity(state, basis_state(side, *o)) >= 1 - atol]
    if len(hits) != 1:
        raise ProtocolError("conditional state is not a single basis state")
    return hits[0]


@lru_cache(maxsize=None)
def correlation_table() -> CorrelationTable:
    """Project photon A on each outcome after each operation and read off Bob's state."""
    entries = {}
    for k in SIGMA_TARGETS:
        after = apply_sigma(source_state(), k)
        for a in OUTCOMES:
            cond = project_photon(after, 0, basis_state("A", *a))
            entries[(k, a)] = identify(normalize(cond)[0], "B")
    table = CorrelationTable(entries)
    if not table.is_injective():
        raise ProtocolError("correlation table is not injective")
    return table


@dataclass(frozen=True)
class ClassicalMessage:
    round_id: int
    outcome: DiscriminationOutcome

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise UsageError(f"outcome {self.outcome} out of range")


@dataclass(frozen=True)
class AliceRound:
    state: PureState
    outcome: DiscriminationOutcome
    message: ClassicalMessage


@dataclass(frozen=True)
class BobRound:
    outcome: DiscriminationOutcome
    inferred_k: int
    determinate_bits: str
    random_bits: str


def random_bits(outcome: DiscriminationOutcome) -> str:
    """``i - 1`` and ``j - 1`` as two bits each."""
    return format(outcome.index, "04b")


def alice_round(rng: np.random.Generator, k: int, state: PureState | None = None, round_id: int = 0) -> AliceRound:
    """Apply ``sigma_k`` to photon A and measure it."""
    state = apply_sigma(source_state() if state is None else state, k)
    outcome, after, _ = measure_photon(state, rng, "A", 0)
    return AliceRound(after, outcome, ClassicalMessage(round_id, outcome))


def bob_round(
    state: PureState, message: ClassicalMessage, rng: np.random.Generator, table: CorrelationTable | None = None
) -> BobRound:
    """Measure photon B and infer Alice's operation from both outcomes."""
    table = correlation_table() if table is None else table
    outcome, _, _ = measure_photon(state, rng, "B", 1)
    k = table.infer(message.outcome, outcome)
    return BobRound(outcome, k, encoding(k), random_bits(message.outcome))


def eve_intercept_resend(state: PureState, rng: np.random.Generator, basis: str = "product") -> PureState:
    """Measure photon B in transit and forward the state that outcome leaves behind.

    ``basis="product"`` reads frequency and spatial mode separately (the
    hyperentanglement readout) and resends that product state.
    ``basis="discrimination"`` uses Bob's own 16-outcome apparatus and
    re-prepares the detected basis state; it commutes with Bob's measurement
    and therefore never causes an error.
    """
    if basis == "product":
        _, collapsed, _ = measure(state, lambda key: (key[1].freq, key[1].mode), rng)
        return collapsed
    if basis == "discrimination":
        outcome, _, _ = measure_photon(state, rng, "B", 1)
        resent = basis_state("B", *outcome)
        partner = normalize(project_photon(state, 1, resent))[0]
        return tensor(partner, resent)
    raise UsageError(f"unknown eavesdropper basis {basis!r}")


@dataclass(frozen=True)
class RoundRecord:
    round_id: int
    k: int
    alice: DiscriminationOutcome
    bob: DiscriminationOutcome
    inferred_k: int
    determinate_bits: str
    random_bits: str
    eve: bool

    @property
    def error(self) -> bool:
        return self.inferred_k != self.k

    def as_dict(self) -> dict:
        return {
            "round": self.round_id,
            "k": self.k,
            "bitsDeterminate": self.determinate_bits,
            "bitsRandom": self.random_bits,
            "aliceI": self.alice.i,
            "aliceJ": self.alice.j,
            "bobI": self.bob.i,
            "bobJ": self.bob.j,
            "inferredK": self.inferred_k,
            "eve": self.eve,
            "error": self.error,
        }


@dataclass(frozen=True)
class KeyStream:
    """Bob's accumulated key material, one 4-bit block of each kind per round."""

    determinate: tuple[str, ...]
    random: tuple[str, ...]

    def __len__(self) -> int:
        return 4 * (len(self.determinate) + len(self.random))

    def bits(self) -> str:
        return "".join(d + r for d, r in zip(self.determinate, self.random))


@dataclass(frozen=True)
class SessionStats:
    seed: int
    rounds: int
    eve_probability: float
    eve_basis: str
    records: tuple[RoundRecord, ...] = field(repr=False)
    key_bits: int
    errors: int
    eve_rounds: int
    per_k: tuple[int, ...]
    random_histogram: tuple[int, ...]
    chi_square: float
    chi_square_threshold: float

    @property
    def error_rate(self) -> float:
        return self.errors / self.rounds

    @property
    def key_rate(self) -> float:
        return self.key_bits / self.rounds

    def summary(self) -> dict:
        return {
            "rounds": self.rounds,
            "keyBits": self.key_bits,
            "keyRate": self.key_rate,
            "errors": self.errors,
            "errorRate": self.error_rate,
            "eveRounds": self.eve_rounds,
            "perK": list(self.per_k),
            "randomKeyHistogram": list(self.random_histogram),
            "chiSquare": self.chi_square,
            "chiSquare99": self.chi_square_threshold,
        }


CHI2_99_DF15 = float(_stats.chi2.ppf(0.99, 15))


def run_round(seed: int, round_id: int, eve_probability: float = 0.0, eve_basis: str = "product") -> RoundRecord:
    """One protocol round on its own random substream."""
    rng = stream(seed, round_id)
    k = int(rng.integers(1, 17))
    eve = bool(rng.random() < eve_probability)
    alice = alice_round(rng, k, round_id=round_id)
    state = eve_intercept_resend(alice.state, rng, eve_basis) if eve else alice.state
    bob = bob_round(state, alice.message, rng)
    return RoundRecord(round_id, k, alice.outcome, bob.outcome, bob.inferred_k, bob.determinate_bits, bob.random_bits, eve)


def run_session(
    rounds: int, seed: int, eve_probability: float = 0.0, eve_basis: str = "product"
) -> tuple[KeyStream, SessionStats]:
    """Run ``rounds`` independent rounds; fully determined by ``seed``."""
    if rounds < 1:
        raise UsageError("need at least one round")
    if not 0 <= eve_probability <= 1:
        raise UsageError("eve_probability must lie in [0, 1]")
    if eve_basis not in EVE_BASES:
        raise UsageError(f"unknown eavesdropper basis {eve_basis!r}")
    records = tuple(run_round(seed, r, eve_probability, eve_basis) for r in range(rounds))
    key = KeyStream(tuple(r.determinate_bits for r in records), tuple(r.random_bits for r in records))
    per_k = Counter(r.k for r in records)
    hist = Counter(int(r.random_bits, 2) for r in records)
    observed = np.array([hist[v] for v in range(16)], dtype=float)
    expected = rounds / 16
    stats = SessionStats(
        seed=seed,
        rounds=rounds,
        eve_probability=eve_probability,
        eve_basis=eve_basis,
        records=records,
        key_bits=len(key),
        errors=sum(r.error for r in records),
        eve_rounds=sum(r.eve for r in records),
        per_k=tuple(per_k[k] for k in range(1, 17)),
        random_histogram=tuple(int(x) for x in observed),
        chi_square=float(((observed - expected) ** 2 / expected).sum()),
        chi_square_threshold=CHI2_99_DF15,
    )
    return key, stats


TRANSCRIPT_SCHEMA = "hyperent.qkd-transcript/1"


def transcript(stats: SessionStats) -> str:
    """JSON-lines transcript: header, one record per round, summary."""
    lines = [
        json.dumps(
            {
                "schema": TRANSCRIPT_SCHEMA,
                "seed": stats.seed,
                "rounds": stats.rounds,
                "eve": stats.eve_probability,
                "eveBasis": stats.eve_basis,
            }
        )
    ]
    lines += [json.dumps(r.as_dict()) for r in stats.records]
    lines.append(json.dumps({"summary": stats.summary()}))
    return "\n".join(lines) + "\n"
