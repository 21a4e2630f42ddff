from fractions import Fraction

import numpy as np
import pytest

from hyperent import PhotonLabel, PureState, UsageError, fidelity, normalize, tensor
from hyperent.errors import PostSelectionError
from hyperent.optics import (
    BS_MATRIX,
    THETA,
    BeamSplitterSpec,
    PhaseAssignment,
    beam_splitter,
    demultiplex,
    down_convert,
    erase_frequency,
    frequency_multiplier,
    kerr_compare_postselect,
    kerr_phase_branches,
    kerr_tag,
    multiplex,
    phase_shift,
    polarization_measure,
    spdc_pair,
)
from hyperent.rng import stream
from hyperent.state import ERASED, is_unitary, marginal_distribution

R2 = 2**-0.5


def photon(mode, freq=ERASED, pol=ERASED):
    return PureState.basis(PhotonLabel(pol, freq, mode))


class TestBeamSplitter:
    def test_matrix_is_unitary_and_hermitian(self):
        assert is_unitary(BS_MATRIX)
        np.testing.assert_allclose(BS_MATRIX, BS_MATRIX.conj().T)

    @pytest.mark.parametrize("port, sign", [("a11", 1), ("a12", -1)])
    def test_single_port_input(self, port, sign):
        out = beam_splitter(photon(port), BeamSplitterSpec("a11", "a12"))
        expected = (photon("a11") + photon("a12") * sign) * R2
        assert out.allclose(expected)

    def test_combines_superposition_back(self):
        s = (photon("a11") + photon("a12")) * R2
        assert beam_splitter(s, BeamSplitterSpec("a11", "a12")).allclose(photon("a11"))

    def test_involution(self):
        s = normalize(photon("a11") * 0.3 + photon("a12") * 0.4j)[0]
        spec = BeamSplitterSpec("a11", "a12")
        assert beam_splitter(beam_splitter(s, spec), spec).allclose(s)

    def test_routes_to_named_outputs(self):
        out = beam_splitter(photon("a1"), BeamSplitterSpec("a1", "a1_v", "a11", "a12"))
        assert {lab.mode for lab in out.support(0)} == {"a11", "a12"}

    def test_occupied_output_rejected(self):
        s = photon("a1") + photon("a11")
        with pytest.raises(UsageError):
            beam_splitter(s, BeamSplitterSpec("a1", "a1_v", "a11", "a12"))

    def test_ports_must_differ(self):
        with pytest.raises(UsageError):
            beam_splitter(photon("a11"), BeamSplitterSpec("a11", "a11"))

    def test_acts_on_chosen_photon_only(self):
        s = tensor(photon("a11"), photon("b11"))
        out = beam_splitter(s, BeamSplitterSpec("b11", "b12"), photon="B")
        assert len(out) == 2 and all(k[0].mode == "a11" for k in out)


def test_phase_shift_pi_flips_sign():
    s = (photon("a11") + photon("a12")) * R2
    out = phase_shift(s, {"a12": Fraction(1)})
    assert out.allclose((photon("a11") - photon("a12")) * R2)


class TestFrequencyMultiplier:
    def test_chain_three_six_twelve(self):
        s = photon("pu", 3)
        s = frequency_multiplier(s, "pu")
        assert next(iter(s))[0].freq == 6
        s = frequency_multiplier(s, "pu")
        assert next(iter(s))[0].freq == 12

    def test_only_named_mode(self):
        s = photon("pl", 3)
        assert frequency_multiplier(s, "pu").allclose(s)

    def test_unregistered_result(self):
        with pytest.raises(UsageError):
            frequency_multiplier(photon("pu", 8), "pu")


class TestSPDC:
    @pytest.mark.parametrize("pump", [3, 12])
    def test_energy_conservation_and_polarization(self, pump):
        pair = spdc_pair(pump, "a1", "b1")
        assert len(pair) == 4 and pair.norm() == pytest.approx(1)
        for a, b in pair:
            assert a.freq + b.freq == pump
            assert {a.pol, b.pol} == {"H", "V"}

    def test_bad_pump(self):
        with pytest.raises(UsageError):
            spdc_pair(6, "a1", "b1")

    def test_coherent_over_pump_branches(self):
        pump = normalize(photon("p", 3) + photon("p", 12))[0]
        pairs = down_convert(pump, "a1", "b1")
        assert len(pairs) == 8 and pairs.norm() == pytest.approx(1)

    def test_needs_one_beam(self):
        with pytest.raises(UsageError):
            down_convert(tensor(photon("p", 3), photon("p", 3)), "a1", "b1")


class TestKerr:
    def _pair(self):
        terms = [tensor(photon(a), photon(b)) for a in ("a11", "a12") for b in ("b11", "b12")]
        return normalize(sum(terms[1:], terms[0]))[0]

    def test_parity_postselection(self):
        s = self._pair()
        tagged = kerr_tag(s, {"a11": THETA, "a12": 2 * THETA}, {"b11": THETA, "b12": 2 * THETA})
        kept, p = kerr_compare_postselect(tagged)
        assert p == pytest.approx(0.5, abs=1e-15)
        assert {(k[0].mode, k[1].mode) for k in kept} == {("a11", "b11"), ("a12", "b12")}

    def test_no_survivor(self):
        s = tensor(photon("a11"), photon("b12"))
        tagged = kerr_tag(s, {"a11": THETA}, {"b12": 2 * THETA})
        with pytest.raises(PostSelectionError):
            kerr_compare_postselect(tagged)

    def test_compare_needs_both_arms(self):
        with pytest.raises(UsageError):
            kerr_compare_postselect(kerr_tag(self._pair(), {"a11": THETA, "a12": THETA}))

    def test_phase_readout_branches(self):
        s = self._pair()
        tagged = kerr_tag(s, {"a11": THETA, "a12": 2 * THETA})
        branches = kerr_phase_branches(tagged, [THETA, 2 * THETA])
        assert [(c, round(p, 12)) for c, _, p in branches] == [(0, 0.5), (1, 0.5)]

    def test_uncovered_mode(self):
        with pytest.raises(UsageError):
            kerr_tag(self._pair(), {"a11": THETA})

    @pytest.mark.parametrize("ph", [Fraction(-1, 8), Fraction(2)])
    def test_phase_range(self, ph):
        with pytest.raises(UsageError):
            PhaseAssignment({"a11": ph})

    def test_lower_arm_needs_photon_b(self):
        with pytest.raises(UsageError):
            kerr_tag(photon("a11"), None, {"b11": THETA})


class TestMultiplexing:
    def test_demultiplex_then_multiplex_is_identity(self):
        s = normalize(photon("a11", 1) + photon("a11", 2) * 1j + photon("a11", 4))[0]
        routed = demultiplex(s, "a11", {1: "a11@1", 2: "a11@2", 4: "a11@4"})
        assert len({lab.mode for lab in routed.support(0)}) == 3
        back = multiplex(routed, ["a11@1", "a11@2", "a11@4"], "a11")
        assert back.allclose(s)

    def test_missing_route(self):
        with pytest.raises(UsageError):
            demultiplex(photon("a11", 8), "a11", {1: "a11@1"})

    def test_multiplex_collision(self):
        s = photon("a11", 1) + photon("a12", 1)
        with pytest.raises(UsageError):
            multiplex(s, ["a11", "a12"], "a11")

    def test_erase_frequency(self):
        s = normalize(photon("a11", 1) + photon("a12", 2))[0]
        out = erase_frequency(s, 0, 8)
        assert marginal_distribution(out, 0, "freq") == {8: pytest.approx(1)}

    def test_erase_collision(self):
        with pytest.raises(UsageError):
            erase_frequency(photon("a11", 1) + photon("a11", 2), 0, 8)


def test_polarization_measure_statistics():
    s = normalize(photon("a11", 1, "H") + photon("a11", 1, "V") * np.sqrt(3))[0]
    rng = stream(11)
    outcomes = [polarization_measure(s, 0, rng)[0] for _ in range(4000)]
    assert outcomes.count("V") / 4000 == pytest.approx(0.75, abs=0.03)


def test_polarization_collapse_keeps_partner():
    a = normalize(photon("a11", 1, "H") + photon("a11", 1, "V"))[0]
    s = tensor(a, photon("b11", 2, "V"))
    outcome, after, p = polarization_measure(s, "A", stream(0))
    assert p == pytest.approx(0.5)
    assert fidelity(after, tensor(photon("a11", 1, outcome), photon("b11", 2, "V"))) == pytest.approx(1)
