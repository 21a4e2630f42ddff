import numpy as np
import pytest

import dense_oracle
from hyperent import PhotonLabel, PureState, UsageError, fidelity, inner_product, normalize, tensor
from hyperent.cli import random_single_photon
from hyperent.discrimination import (
    DiscriminationOutcome,
    basis_state,
    classify_group,
    discriminate,
    discriminate_counts,
    freq_erase_to_phi,
    group_branches,
    measure_hyper,
    measure_photon,
    outcome_probabilities,
    phi_discriminate,
    phi_state,
)
from hyperent.pipeline import generate_hyperentangled
from hyperent.rng import stream
from hyperent.state import ERASED, PHOTON_FREQS, project_photon

SIDES = ("A", "B")
PAIRS = [(i, j) for i in range(1, 5) for j in range(1, 5)]
FREQ_OF = {"w11": 1, "w12": 2, "w21": 4, "w22": 8}


def from_text(text):
    """Build a single-photon state from a literal ``w.. x..`` term list."""
    amps = {}
    for sign, term in zip(["+"] + text.split()[2::3], [text.split()[n : n + 2] for n in range(0, 12, 3)]):
        f, m = term
        amps[(PhotonLabel(ERASED, FREQ_OF[f], m),)] = 0.5 * (-1 if sign == "-" else 1)
    return PureState(amps)


@pytest.mark.parametrize("side, i, j", [(s, i, j) for s in SIDES for i, j in PAIRS])
def test_basis_state_matches_literal_table(side, i, j):
    expected = from_text(dense_oracle.BASIS_TEXT[(side, i, j)])
    assert basis_state(side, i, j).allclose(expected, atol=1e-15)


def test_worked_examples():
    r = 0.5
    a24 = basis_state("A", 2, 4)
    assert a24[(PhotonLabel(ERASED, 1, "a12"),)] == r
    assert a24[(PhotonLabel(ERASED, 4, "a22"),)] == -r
    assert a24[(PhotonLabel(ERASED, 8, "a11"),)] == -r
    b11 = basis_state("B", 1, 1)
    assert b11[(PhotonLabel(ERASED, 2, "b11"),)] == r
    assert b11[(PhotonLabel(ERASED, 4, "b22"),)] == r


@pytest.mark.parametrize("side", SIDES)
def test_gram_is_identity(side):
    states = [basis_state(side, i, j) for i, j in PAIRS]
    gram = np.array([[inner_product(a, b) for b in states] for a in states])
    np.testing.assert_allclose(gram, np.eye(16), atol=1e-12)


def test_basis_index_range():
    with pytest.raises(UsageError):
        basis_state("A", 0, 1)
    with pytest.raises(UsageError):
        basis_state("C", 1, 1)


class TestStageOne:
    @pytest.mark.parametrize("j", [1, 2, 3, 4])
    @pytest.mark.parametrize("i", [1, 2, 3, 4])
    def test_group_is_deterministic(self, i, j):
        branches = group_branches(basis_state("A", i, j))
        assert [(g, round(p, 12)) for g, _, p in branches] == [(i, 1.0)]

    def test_superposition_across_groups(self):
        s = normalize(basis_state("A", 1, 1) + basis_state("A", 2, 1))[0]
        probs = {g: p for g, _, p in group_branches(s)}
        assert probs == pytest.approx({1: 0.5, 2: 0.5})

    def test_collapse_keeps_relative_amplitudes(self):
        s = normalize(basis_state("B", 3, 1) * 0.6 + basis_state("B", 3, 2) * 0.8j + basis_state("B", 1, 4))[0]
        (g3,) = [b for b in group_branches(s) if b[0] == 3]
        phi = freq_erase_to_phi(g3[1], 3)
        expected = normalize(phi_state(1, "B") * 0.6 + phi_state(2, "B") * 0.8j)[0]
        assert fidelity(phi, expected) == pytest.approx(1, abs=1e-12)

    @pytest.mark.parametrize("i, j", [(1, 1), (2, 2), (3, 4)])
    def test_erasure_gives_phi(self, i, j):
        g, collapsed, _ = classify_group(basis_state("A", i, j), stream(0))
        assert fidelity(freq_erase_to_phi(collapsed, g), phi_state(j)) == pytest.approx(1, abs=1e-12)

    def test_rejects_outside_space(self):
        with pytest.raises(UsageError):
            group_branches(PureState.basis(PhotonLabel(ERASED, 1, "a1")))


@pytest.mark.parametrize("side", SIDES)
@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_phi_stage(side, j):
    rng = stream(j)
    assert phi_discriminate(phi_state(j, side), rng, side) == j


@pytest.mark.parametrize("side, i, j", [(s, i, j) for s in SIDES for i, j in PAIRS])
def test_all_basis_states_identified(side, i, j):
    outcome, final, p = measure_photon(basis_state(side, i, j), stream(i, j), side)
    assert outcome == DiscriminationOutcome(i, j)
    assert p == pytest.approx(1, abs=1e-12)
    assert len(final) == 1


def test_side_inferred_from_modes():
    assert discriminate(basis_state("B", 4, 3), stream(0)) == (4, 3)


@pytest.mark.parametrize("seed", range(100))
def test_complete_against_projection_oracle(seed):
    side = "AB"[seed % 2]
    state = random_single_photon(stream(seed, 99), side)
    rows = dense_oracle.basis_matrix(side)
    modes = [f"{side.lower()}{s}" for s in ("11", "12", "21", "22")]
    vec = np.array([state[(PhotonLabel(ERASED, f, m),)] for f in PHOTON_FREQS for m in modes])
    oracle = np.abs(rows @ vec) ** 2
    probs = outcome_probabilities(state, side)
    got = np.array([probs.get(DiscriminationOutcome(i, j), 0.0) for i, j in PAIRS])
    assert np.abs(got - oracle).max() <= 1e-10


def test_counts_are_reproducible_and_sum():
    state = random_single_photon(stream(5), "A")
    a = discriminate_counts(state, 500, stream(1))
    b = discriminate_counts(state, 500, stream(1))
    assert a == b and sum(a.values()) == 500


def test_partner_collapses_with_measured_photon():
    pair = normalize(
        tensor(basis_state("A", 1, 1), basis_state("B", 2, 2)) + tensor(basis_state("A", 3, 4), basis_state("B", 4, 1))
    )[0]
    outcome, after, _ = measure_photon(pair, stream(3), "A", 0)
    partner = {(1, 1): (2, 2), (3, 4): (4, 1)}[tuple(outcome)]
    cond = normalize(project_photon(pair, 0, basis_state("A", *outcome)))[0]
    assert fidelity(cond, basis_state("B", *partner)) == pytest.approx(1)
    assert discriminate(after, stream(4), "B", 1) == partner


class TestHyperReadout:
    @pytest.mark.parametrize("seed", range(20))
    def test_correlations(self, seed):
        state, _ = generate_hyperentangled()
        (a, b), _ = measure_hyper(state, stream(seed))
        assert a.mode[1:] == b.mode[1:]
        assert {a.pol, b.pol} == {"H", "V"}
        assert {a.freq, b.freq} in ({1, 2}, {4, 8})

    def test_marginals_are_uniform(self):
        state, _ = generate_hyperentangled()
        rng = stream(42)
        modes = [measure_hyper(state, rng)[0][0].mode for _ in range(2000)]
        for m in ("a11", "a12", "a21", "a22"):
            assert modes.count(m) / 2000 == pytest.approx(0.25, abs=0.04)
