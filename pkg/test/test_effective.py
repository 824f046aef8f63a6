"""Tests for effent.effective."""
import math

import numpy as np
import pytest

from effent.errors import DimensionError, ValidationError
from effent.qcore import DensityMatrix, PureState, max_entangled, random_pure_state
from effent.channels import amplitude_damping, complete_dephasing, depolarizing, identity_channel, phase_damping, random_channel
from effent.entanglement import concurrence_wootters, g_concurrence_pure
from effent.effective import BoundKind, Measure, effective_g_concurrence, effective_state, entanglement_breaking_probe, g_concurrence, \
    quality_factor, wiseman_vaccaro


class TestQualityFactor:
    @pytest.mark.parametrize('rate', np.linspace(0, 1, 11))
    def test_damping_closed_forms(self, rate):
        assert quality_factor(amplitude_damping(rate)) == pytest.approx(math.sqrt(1 - rate), abs=1e-9)
        assert quality_factor(phase_damping(rate)) == pytest.approx(math.sqrt(1 - rate), abs=1e-9)

    def test_identity_and_dephasing(self):
        assert quality_factor(identity_channel(2)) == pytest.approx(1.0)
        assert quality_factor(complete_dephasing(2)) == pytest.approx(0.0, abs=1e-12)

    def test_depolarizing(self):
        assert quality_factor(depolarizing(0.2)) == pytest.approx(0.7, abs=1e-12)
        assert quality_factor(depolarizing(0.8)) == pytest.approx(0.0, abs=1e-12)

    def test_qutrit_identity(self):
        assert quality_factor(identity_channel(3)) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            quality_factor(identity_channel(2), 3)
        with pytest.raises(DimensionError):
            quality_factor(random_channel(2, 3, np.random.default_rng(0)))


class TestEffectiveGConcurrence:
    def test_one_sided_is_exact(self):
        result = effective_g_concurrence(max_entangled(2).density(), amplitude_damping(0.36), identity_channel(2))
        assert result.value == pytest.approx(0.8, abs=1e-12)
        assert result.kind == BoundKind.EXACT
        assert result.q_a == pytest.approx(0.8)
        assert result.q_b == pytest.approx(1.0)
        assert result.g == pytest.approx(1.0)

    def test_two_sided_is_upper_bound(self):
        result = effective_g_concurrence(max_entangled(2).density(), amplitude_damping(0.36), phase_damping(0.36))
        assert result.value == pytest.approx(0.64, abs=1e-12)
        assert result.kind == BoundKind.UPPER_BOUND

    def test_mixed_state_is_upper_bound(self):
        rho = DensityMatrix(0.9 * max_entangled(2).density().matrix + 0.1 * np.eye(4) / 4, (2, 2))
        result = effective_g_concurrence(rho, amplitude_damping(0.19), identity_channel(2))
        assert result.kind == BoundKind.UPPER_BOUND
        assert result.value == pytest.approx(0.9 * concurrence_wootters(rho), abs=1e-9)

    def test_one_sided_matches_effective_state(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            psi = random_pure_state((2, 2), rng)
            channel = random_channel(2, 2, rng)
            reduced = effective_state(psi.density(), channel, identity_channel(2))
            assert concurrence_wootters(reduced) == pytest.approx(quality_factor(channel) * g_concurrence_pure(psi), abs=1e-9)

    def test_two_sided_bound_holds(self):
        rng = np.random.default_rng(22)
        for _ in range(5):
            psi = random_pure_state((2, 2), rng)
            channel_a, channel_b = random_channel(2, 2, rng), random_channel(2, 2, rng)
            reduced = effective_state(psi.density(), channel_a, channel_b)
            bound = quality_factor(channel_a) * quality_factor(channel_b) * g_concurrence_pure(psi)
            assert concurrence_wootters(reduced) <= bound + 1e-9

    def test_state_does_not_fit_channels(self):
        with pytest.raises(DimensionError):
            effective_g_concurrence(max_entangled(2).density(), identity_channel(3), identity_channel(2))

    def test_effective_state_dims(self):
        rho = PureState(np.ones(4) / 2).density()
        assert effective_state(rho, phase_damping(0.5), identity_channel(2)).dims == (2, 2)

    def test_g_concurrence_needs_bipartite(self):
        with pytest.raises(DimensionError):
            g_concurrence(DensityMatrix(np.eye(4) / 4))


class TestWisemanVaccaro:
    def test_single_particle_has_no_strict_entanglement(self):
        psi_plus = PureState(np.array([0, 1, 1, 0]) / math.sqrt(2), (2, 2)).density()
        result = wiseman_vaccaro(psi_plus, ([[0], [1]], [[0], [1]]))
        assert result.value == 0.0
        assert result.kind == BoundKind.EXACT
        assert [(term.n_a, term.n_b) for term in result.blocks] == [(0, 1), (1, 0)]
        assert [term.p for term in result.blocks] == pytest.approx([0.5, 0.5])

    def test_entangled_number_sector(self):
        amplitudes = np.zeros(9)
        amplitudes[4] = amplitudes[8] = 1 / math.sqrt(2)
        rho = PureState(amplitudes, (3, 3)).density()
        blocks = ([[0], [1, 2]], [[0], [1, 2]])
        result = wiseman_vaccaro(rho, blocks)
        assert result.value == pytest.approx(1.0, abs=1e-12)
        assert result.measure == Measure.EOF2Q
        assert wiseman_vaccaro(rho, blocks, Measure.GCONC).value == pytest.approx(1.0, abs=1e-12)

    def test_requires_fixed_total(self):
        with pytest.raises(ValidationError):
            wiseman_vaccaro(max_entangled(2).density(), ([[0], [1]], [[0], [1]]))

    def test_blocks_must_partition(self):
        with pytest.raises(ValidationError):
            wiseman_vaccaro(max_entangled(2).density(), ([[0]], [[0], [1]]))

    def test_eof_needs_two_qubit_blocks(self):
        with pytest.raises(ValidationError):
            wiseman_vaccaro(max_entangled(3).density(), ([[0, 1, 2]], [[0, 1, 2]]), Measure.EOF2Q)


class TestBreakingProbe:
    def test_dephasing_breaks_entanglement(self):
        probe = entanglement_breaking_probe(phase_damping(1.0))
        assert probe.q == pytest.approx(0.0, abs=1e-12)
        assert probe.ppt_separable_hint is True

    def test_identity_keeps_entanglement(self):
        probe = entanglement_breaking_probe(identity_channel(2))
        assert probe.q == pytest.approx(1.0)
        assert probe.ppt_separable_hint is False

    def test_no_hint_beyond_qubits(self):
        assert entanglement_breaking_probe(identity_channel(3)).ppt_separable_hint is None
