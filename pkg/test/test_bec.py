"""Tests for effent.bec."""
import math

import numpy as np
import pytest

from effent.errors import DimensionError, ValidationError
from effent.qcore import DensityMatrix, trace_distance
from effent.channels import apply
from effent.effective import quality_factor
from effent.bec import BecParams, PhaseDistribution, bec_reference_state, coherent_state, family_distribution, g_factor, g_factor_quadrature, \
    g_sweep, gamma_channel, limit_map, number_coherence, rotation_x, simulate_bec_exact, ssr_lifting_channel


def fock_cutoff(alpha_sq: float) -> int:
    return int(math.ceil(alpha_sq + 6 * math.sqrt(alpha_sq)))


def exact_distance(alpha_sq: float, theta: float = math.pi / 4) -> float:
    start = DensityMatrix(np.diag([1.0, 0.0]))
    target = limit_map(0.0, theta)
    simulated = simulate_bec_exact(BecParams(alpha_sq, theta), 0.0, fock_cutoff(alpha_sq), start)
    return trace_distance(simulated.state, DensityMatrix(target @ start.matrix @ target.conj().T))


class TestPhaseDistribution:
    def test_invalid_parameters(self):
        with pytest.raises(ValidationError):
            PhaseDistribution.wrapped_normal(0.0, -1.0)
        with pytest.raises(ValidationError):
            PhaseDistribution.double_rect(0.0, 1.0)
        with pytest.raises(ValidationError):
            PhaseDistribution.double_rect(3.0, 1.0)
        with pytest.raises(ValidationError):
            PhaseDistribution.delta_mixture([(0.0, 0.5), (1.0, 0.4)])
        with pytest.raises(ValidationError):
            PhaseDistribution.tabulated([1.0, -1.0, 1.0])

    def test_double_rect_density_is_normalized(self):
        dist = PhaseDistribution.double_rect(0.5, 1.0)
        grid = 2 * math.pi * np.arange(200000) / 200000
        assert float(np.sum(dist.density(grid))) * 2 * math.pi / grid.size == pytest.approx(1.0, abs=1e-3)

    def test_wrapped_normal_density_is_normalized(self):
        dist = PhaseDistribution.wrapped_normal(3.0, 1.5)
        grid = 2 * math.pi * np.arange(4096) / 4096
        assert float(np.sum(dist.density(grid))) * 2 * math.pi / grid.size == pytest.approx(1.0, abs=1e-12)

    def test_atoms(self):
        assert PhaseDistribution.delta(0.3).atoms() == [(0.3, 1.0)]
        assert PhaseDistribution.wrapped_normal(0.2, 0.0).is_discrete
        with pytest.raises(ValidationError):
            PhaseDistribution.uniform().atoms()

    def test_describe(self):
        assert PhaseDistribution.wrapped_normal(0.0, 1.0).describe() == 'wrapped-normal:0,1'
        assert PhaseDistribution.delta_mixture([(0.0, 0.5), (3.0, 0.5)]).describe() == 'delta-mixture:0@0.5,3@0.5'
        assert PhaseDistribution.uniform().describe() == 'uniform'


class TestGFactor:
    @pytest.mark.parametrize('sigma', [0.1, 0.5, 1.0, 2.0])
    def test_wrapped_normal(self, sigma):
        dist = PhaseDistribution.wrapped_normal(0.0, sigma)
        assert abs(g_factor(dist)) == pytest.approx(math.exp(-sigma * sigma / 2), abs=1e-12)
        assert abs(g_factor(dist) - g_factor_quadrature(dist)) < 1e-8

    def test_sharp_phase(self):
        g = g_factor(PhaseDistribution.delta(0.7))
        assert abs(g) == pytest.approx(1.0)
        assert g == pytest.approx(-1j * complex(math.cos(0.7), math.sin(0.7)))

    def test_uniform_and_antipodal(self):
        assert abs(g_factor(PhaseDistribution.uniform())) == 0.0
        assert abs(g_factor_quadrature(PhaseDistribution.uniform())) < 1e-14
        assert abs(g_factor(PhaseDistribution.delta_mixture([(0.3, 0.5), (0.3 + math.pi, 0.5)]))) < 1e-14

    @pytest.mark.parametrize('w, delta', [(0.5, 0.0), (0.5, 1.0), (1.0, 2.0), (0.3, 4.0)])
    def test_double_rect(self, w, delta):
        dist = PhaseDistribution.double_rect(w, delta)
        expected = 2 / w * math.sin(w / 2) * math.cos(delta / 2 + w / 2)
        assert g_factor(dist) == pytest.approx(-1j * expected, abs=1e-12)
        assert abs(g_factor(dist) - g_factor_quadrature(dist)) < 1e-10

    def test_double_rect_covering_circle_is_uniform(self):
        assert abs(g_factor(PhaseDistribution.double_rect(math.pi, 0.0))) < 1e-15

    def test_tabulated(self):
        grid = 2 * math.pi * np.arange(64) / 64
        dist = PhaseDistribution.tabulated(1 + np.cos(grid))
        assert g_factor(dist) == pytest.approx(-0.5j, abs=1e-12)
        assert g_factor_quadrature(dist, 512) == pytest.approx(-0.5j, abs=2e-3)

    def test_too_few_quadrature_points(self):
        with pytest.raises(ValidationError):
            g_factor_quadrature(PhaseDistribution.uniform(), 10)


class TestChannels:
    @pytest.mark.parametrize('sigma', [0.0, 0.3, 1.0, 2.0])
    def test_lifting_quality_is_g(self, sigma):
        dist = PhaseDistribution.wrapped_normal(0.4, sigma)
        for theta in (0.2, math.pi / 4, 1.3):
            assert quality_factor(ssr_lifting_channel(dist, theta)) == pytest.approx(abs(g_factor(dist)), abs=1e-9)

    def test_gamma_channel_damps_coherence(self):
        dist = PhaseDistribution.wrapped_normal(0.0, 1.0)
        theta = 0.6
        plus = DensityMatrix(np.full((2, 2), 0.5))
        r_x = rotation_x(theta)
        rotated = r_x @ plus.matrix @ r_x.conj().T
        out = apply(gamma_channel(dist, theta), plus).matrix
        np.testing.assert_allclose(np.diag(out), np.diag(rotated), atol=1e-12)
        assert out[1, 0] == pytest.approx(rotated[1, 0] * dist.moment(1), abs=1e-12)

    def test_kraus_operators_by_weight(self):
        assert len(gamma_channel(PhaseDistribution.delta(0.0), 0.5).kraus_ops) == 1
        assert len(gamma_channel(PhaseDistribution.uniform(), 0.5).kraus_ops) == 2
        assert len(gamma_channel(PhaseDistribution.wrapped_normal(0.0, 1.0), 0.5).kraus_ops) == 3

    def test_canonicalize_keeps_quality(self):
        dist = PhaseDistribution.wrapped_normal(1.2, 0.5)
        assert quality_factor(ssr_lifting_channel(dist, 0.3, canonicalize=True)) == pytest.approx(abs(g_factor(dist)), abs=1e-9)

    def test_limit_map_is_unitary(self):
        u = limit_map(0.4, 1.1)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-14)


class TestExactSimulation:
    def test_coherent_state(self):
        amplitudes, loss = coherent_state(3.0, 60)
        assert loss < 1e-12
        np.testing.assert_allclose(np.abs(amplitudes[:5]) ** 2, [math.exp(-9) * 9 ** n / math.factorial(n) for n in range(5)], rtol=1e-10)

    def test_vacuum(self):
        amplitudes, loss = coherent_state(0, 3)
        np.testing.assert_array_equal(amplitudes, [1, 0, 0, 0])
        assert loss == 0.0

    def test_approaches_limit_map(self):
        far, near = exact_distance(25.0), exact_distance(100.0)
        assert near < 1e-2
        assert near < far

    @pytest.mark.slow
    def test_large_condensate(self):
        assert exact_distance(400.0) < exact_distance(100.0)

    def test_bosonic_mode_reports_leakage(self):
        simulated = simulate_bec_exact(BecParams(25.0, math.pi / 4), 0.0, fock_cutoff(25.0), DensityMatrix(np.diag([0.0, 1.0])), mode_a_levels=3)
        assert simulated.leakage > 0
        assert np.trace(simulated.state.matrix).real == pytest.approx(1.0)
        assert simulated.norm_loss < 1e-6
        assert simulated.unitarity_defect < 1e-8

    def test_rejects_small_cutoff(self):
        with pytest.raises(ValidationError):
            simulate_bec_exact(BecParams(100.0, 0.5), 0.0, 100, DensityMatrix(np.diag([1.0, 0.0])))

    def test_rejects_non_qubit_input(self):
        with pytest.raises(DimensionError):
            simulate_bec_exact(BecParams(4.0, 0.5), 0.0, 20, DensityMatrix(np.eye(3) / 3))

    def test_rejects_single_level_mode(self):
        with pytest.raises(ValidationError):
            simulate_bec_exact(BecParams(4.0, 0.5), 0.0, 20, DensityMatrix(np.diag([1.0, 0.0])), mode_a_levels=1)

    def test_params(self):
        with pytest.raises(ValidationError):
            BecParams(0.0, 0.5)
        assert BecParams(100.0, 0.5).omega_t_product == pytest.approx(0.1)


class TestReferenceState:
    def test_uniform_phase_has_no_number_coherence(self):
        rho = bec_reference_state(PhaseDistribution.uniform(), 4.0, 30)
        assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-9)
        assert number_coherence(rho) < 1e-15

    def test_sharp_phase_is_coherent(self):
        rho = bec_reference_state(PhaseDistribution.delta(0.0), 4.0, 30)
        assert rho.purity() == pytest.approx(1.0, abs=1e-9)
        assert number_coherence(rho) > 0.1

    def test_antipodal_pair_keeps_number_coherence(self):
        dist = PhaseDistribution.delta_mixture([(0.0, 0.5), (math.pi, 0.5)])
        rho = bec_reference_state(dist, 4.0, 30)
        assert abs(g_factor(dist)) < 1e-14
        assert number_coherence(rho) > 0.1
        assert rho.matrix[0, 2] == pytest.approx(math.exp(-4.0) * 4.0 / math.sqrt(2), rel=1e-9)
        assert abs(rho.matrix[0, 1]) < 1e-15


class TestSweep:
    def test_family_distribution(self):
        assert family_distribution('delta-pair', 0.25).atoms() == [(0.0, 0.25), (math.pi, 0.75)]
        with pytest.raises(ValidationError):
            family_distribution('delta-pair', 1.5)
        with pytest.raises(ValidationError):
            family_distribution('cauchy', 0.5)

    def test_wrapped_normal_rows(self):
        rows = g_sweep('wrapped-normal', [0.0, 1.0, 2.0])
        assert [row.param for row in rows] == [0.0, 1.0, 2.0]
        for row in rows:
            assert row.g_abs == pytest.approx(math.exp(-row.param ** 2 / 2), abs=1e-12)
            assert row.q_factor == pytest.approx(row.g_abs, abs=1e-9)

    def test_parallel_rows_keep_order(self):
        grid = [0.0, 0.25, 0.5, 1.0]
        serial = g_sweep('delta-pair', grid)
        parallel = g_sweep('delta-pair', grid, workers=2)
        assert [row.g_abs for row in serial] == [row.g_abs for row in parallel]
        assert [row.g_abs for row in serial] == pytest.approx([1.0, 0.5, 0.0, 1.0], abs=1e-12)

    def test_empty_grid(self):
        with pytest.raises(ValidationError):
            g_sweep('delta', [])
