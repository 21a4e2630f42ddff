import json

import numpy as np
import pytest

import dense_oracle
from hyperent import UsageError, fidelity, normalize, state_from_expr, tensor
from hyperent.discrimination import DiscriminationOutcome, basis_state
from hyperent.errors import ProtocolError
from hyperent.qkd import (
    CHI2_99_DF15,
    OUTCOMES,
    PSI_S_EXPR,
    SIGMA_TARGETS,
    ClassicalMessage,
    alice_round,
    apply_sigma,
    bob_round,
    correlation_table,
    cyclic_shift,
    decompose_products,
    decompose_sigma,
    decoding,
    encoding,
    eve_intercept_resend,
    product_prefactor,
    random_bits,
    reconstruct_products,
    run_round,
    run_session,
    sigma_unitary,
    sign_pattern,
    source_state,
    transcript,
)
from hyperent.rng import stream
from hyperent.state import is_unitary

SLOTS = ("11", "12", "21", "22")
KS = list(range(1, 17))


@pytest.mark.parametrize("k", KS)
def test_sigma_unitary_and_target(k):
    u = sigma_unitary(k).u
    assert is_unitary(u, atol=1e-12)
    after = apply_sigma(state_from_expr(PSI_S_EXPR), k)
    assert fidelity(after, state_from_expr(SIGMA_TARGETS[k])) >= 1 - 1e-12


@pytest.mark.parametrize("k", KS)
def test_sigma_matches_literal_spatial_table(k):
    np.testing.assert_allclose(sigma_unitary(k).u, dense_oracle.spatial_matrix(k), atol=1e-12)


def test_sigma_examples():
    np.testing.assert_allclose(sigma_unitary(1).u, np.eye(4), atol=1e-15)
    np.testing.assert_allclose(sigma_unitary(4).u, np.diag([1, 1, -1, -1]), atol=1e-15)
    u5 = sigma_unitary(5).u
    images = {SLOTS[c]: SLOTS[int(np.argmax(abs(u5[:, c])))] for c in range(4)}
    assert images == {"11": "22", "12": "11", "21": "12", "22": "21"}


@pytest.mark.parametrize("k", KS)
def test_decompose_recomposes(k):
    m, n = decompose_sigma(k)
    v = sign_pattern(n) @ cyclic_shift(m)
    assert abs(abs(np.vdot(v, sigma_unitary(k).u)) / 4 - 1) <= 1e-12


def test_decompose_examples():
    assert decompose_sigma(1) == (0, 1)
    m, _ = decompose_sigma(6)
    assert m == 1


@pytest.mark.parametrize("k, bits", [(1, "0000"), (10, "1001"), (16, "1111")])
def test_encoding(k, bits):
    assert encoding(k) == bits
    assert decoding(bits) == k


@pytest.mark.parametrize("bad", ["", "10", "2000", "00000"])
def test_decoding_rejects(bad):
    with pytest.raises(UsageError):
        decoding(bad)


def test_random_bits_mapping():
    assert random_bits(DiscriminationOutcome(1, 1)) == "0000"
    assert random_bits(DiscriminationOutcome(3, 2)) == "1001"
    assert len({random_bits(o) for o in OUTCOMES}) == 16


class TestProducts:
    def test_equal_coefficients(self):
        mags = {round(abs(c), 12) for c in decompose_products(source_state()).values()}
        assert mags == {0.25}

    def test_reconstruction(self):
        rebuilt = normalize(reconstruct_products(decompose_products(source_state())))[0]
        assert fidelity(rebuilt, source_state()) >= 1 - 1e-12

    def test_prefactor_is_one(self):
        assert product_prefactor() == pytest.approx(1, abs=1e-12)

    def test_after_sigma5_permuted_pattern(self):
        after = apply_sigma(source_state(), 5)
        table = correlation_table()
        terms = [tensor(basis_state("A", *a), basis_state("B", *table[(5, a)])) for a in OUTCOMES]
        pattern = normalize(sum(terms[1:], terms[0]))[0]
        assert fidelity(after, pattern) >= 1 - 1e-12


class TestCorrelationTable:
    def test_identity_operation_is_diagonal(self):
        table = correlation_table()
        assert all(table[(1, o)] == o for o in OUTCOMES)

    def test_injective(self):
        assert correlation_table().is_injective()

    def test_matches_dense_oracle(self):
        table = correlation_table()
        dense = dense_oracle.correlation_table()
        assert all(table[(k, a)].index == dense[(k, a.index)] for k in KS for a in OUTCOMES)

    def test_unknown_pair(self):
        table = correlation_table()
        with pytest.raises(ProtocolError):
            table.infer(DiscriminationOutcome(9, 9), DiscriminationOutcome(1, 1))


def test_worked_round():
    rng = stream(0)
    alice = alice_round(rng, 1)
    bob = bob_round(alice.state, alice.message, rng)
    assert bob.outcome == alice.outcome
    assert bob.inferred_k == 1 and bob.determinate_bits == "0000"


def test_message_validation():
    with pytest.raises(UsageError):
        ClassicalMessage(0, DiscriminationOutcome(5, 1))


@pytest.mark.parametrize("k", KS)
def test_noiseless_rounds_recover_k(k):
    rng = stream(k, 7)
    for _ in range(8):
        alice = alice_round(rng, k)
        assert bob_round(alice.state, alice.message, rng).inferred_k == k


class TestEve:
    def test_discrimination_basis_never_detected(self):
        _, stats = run_session(300, 5, eve_probability=1.0, eve_basis="discrimination")
        assert stats.errors == 0 and stats.eve_rounds == 300

    def test_discrimination_basis_oracle_agrees(self):
        assert dense_oracle.eve_error_rate(dense_oracle.basis_matrix("B")) == pytest.approx(0, abs=1e-12)

    def test_product_basis_oracle_is_frozen(self):
        assert dense_oracle.eve_error_rate() == pytest.approx(dense_oracle.EVE_PRODUCT_ERROR_RATE, abs=1e-12)

    def test_product_resend_is_a_product_label(self):
        alice = alice_round(stream(1), 3)
        after = eve_intercept_resend(alice.state, stream(2))
        assert len({(k[1].freq, k[1].mode) for k in after}) == 1

    def test_unknown_basis(self):
        with pytest.raises(UsageError):
            eve_intercept_resend(source_state(), stream(0), "bell")


class TestSession:
    def test_thousand_rounds_noiseless(self):
        key, stats = run_session(1000, 7)
        assert len(key) == 8000 == stats.key_bits
        assert stats.errors == 0
        assert stats.chi_square < CHI2_99_DF15

    def test_determinate_bits_replay_k(self):
        key, stats = run_session(50, 3)
        assert key.determinate == tuple(encoding(r.k) for r in stats.records)

    def test_round_depends_only_on_seed_and_index(self):
        _, stats = run_session(20, 9)
        assert run_round(9, 13) == stats.records[13]

    def test_transcript_schema(self):
        _, stats = run_session(5, 1)
        lines = [json.loads(line) for line in transcript(stats).splitlines()]
        assert lines[0]["schema"] == "hyperent.qkd-transcript/1"
        assert len(lines) == 7 and "summary" in lines[-1]
        assert set(lines[1]) >= {"round", "k", "bitsDeterminate", "bitsRandom", "inferredK", "error"}

    @pytest.mark.parametrize("kwargs", [{"rounds": 0, "seed": 1}, {"rounds": 5, "seed": 1, "eve_probability": 2}])
    def test_bad_arguments(self, kwargs):
        with pytest.raises(UsageError):
            run_session(**kwargs)
