"""Tests for effent.entanglement."""
import math

import numpy as np
import pytest

from effent.errors import DimensionError, ValidationError
from effent.qcore import DensityMatrix, PureState, max_entangled, random_density_matrix, random_pure_state, random_unitary
from effent.entanglement import RoofOptions, bipartition, binary_entropy, concurrence_wootters, convex_roof, entanglement_of_formation_2q, \
    eof_from_concurrence, g_concurrence_mixed, g_concurrence_pure, ppt_min_eigenvalue

FAST_ROOF = RoofOptions(restarts=4, max_iters=300)


def werner(p: float) -> DensityMatrix:
    return DensityMatrix(p * max_entangled(2).density().matrix + (1 - p) * np.eye(4) / 4, (2, 2))


class TestPureGConcurrence:
    def test_maximally_entangled(self):
        for d in (2, 3, 4):
            assert g_concurrence_pure(max_entangled(d)) == pytest.approx(1.0, abs=1e-12)

    def test_product_state(self):
        psi = PureState(np.kron([1, 0], [0.6, 0.8]), (2, 2))
        assert g_concurrence_pure(psi) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize('angle', [0.1, 0.4, math.pi / 4])
    def test_two_qubit_is_concurrence(self, angle):
        psi = PureState([math.cos(angle), 0, 0, math.sin(angle)], (2, 2))
        assert g_concurrence_pure(psi) == pytest.approx(abs(math.sin(2 * angle)), abs=1e-12)
        assert concurrence_wootters(psi.density()) == pytest.approx(abs(math.sin(2 * angle)), abs=1e-12)

    def test_schmidt_coefficients(self):
        amplitudes = np.zeros(9)
        amplitudes[0], amplitudes[4], amplitudes[8] = math.sqrt(0.5), math.sqrt(0.3), math.sqrt(0.2)
        expected = 3 * (0.5 * 0.3 * 0.2) ** (1 / 3)
        assert g_concurrence_pure(PureState(amplitudes, (3, 3))) == pytest.approx(expected, abs=1e-12)

    def test_unequal_parties_use_smaller_dimension(self):
        amplitudes = np.zeros(6)
        amplitudes[0] = amplitudes[4] = 1 / math.sqrt(2)
        assert g_concurrence_pure(PureState(amplitudes, (2, 3))) == pytest.approx(1.0, abs=1e-12)

    def test_local_unitary_invariance(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            psi = random_pure_state((3, 3), rng)
            local = np.kron(random_unitary(3, rng), random_unitary(3, rng))
            rotated = PureState(local @ psi.amplitudes, (3, 3), validate=False)
            assert g_concurrence_pure(rotated) == pytest.approx(g_concurrence_pure(psi), abs=1e-10)

    def test_square_split_inferred(self):
        psi = PureState(max_entangled(2).amplitudes)
        assert g_concurrence_pure(psi) == pytest.approx(1.0)

    def test_no_square_split(self):
        with pytest.raises(DimensionError):
            g_concurrence_pure(PureState(np.ones(6) / math.sqrt(6)))


class TestBipartition:
    def test_from_dims(self):
        assert bipartition((2, 3), 6) == (2, 3)

    def test_requested_dimension(self):
        assert bipartition((9,), 9, 3) == (3, 3)
        with pytest.raises(DimensionError):
            bipartition((8,), 8, 3)


class TestTwoQubitClosedForms:
    @pytest.mark.parametrize('p, expected', [(1.0, 1.0), (0.8, 0.7), (0.5, 0.25), (1 / 3, 0.0), (0.1, 0.0)])
    def test_werner_concurrence(self, p, expected):
        assert concurrence_wootters(werner(p)) == pytest.approx(expected, abs=1e-12)

    def test_rejects_other_dimensions(self):
        with pytest.raises(DimensionError):
            concurrence_wootters(max_entangled(3).density())

    def test_convex_on_mixtures(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            first, second = random_density_matrix((2, 2), rng), random_density_matrix((2, 2), rng, rank=1)
            p = float(rng.uniform())
            mixed = DensityMatrix(p * first.matrix + (1 - p) * second.matrix, (2, 2), validate=False)
            bound = p * concurrence_wootters(first) + (1 - p) * concurrence_wootters(second)
            assert concurrence_wootters(mixed) <= bound + 2e-3

    def test_separable_diagonal_noise_does_not_increase(self):
        rng = np.random.default_rng(23)
        noise = np.kron(np.diag([0.7, 0.3]), np.diag([0.4, 0.6]))
        for _ in range(10):
            rho = random_density_matrix((2, 2), rng, rank=1)
            for eps in (0.05, 0.3, 0.8):
                noisy = DensityMatrix((1 - eps) * rho.matrix + eps * noise, (2, 2), validate=False)
                assert concurrence_wootters(noisy) <= concurrence_wootters(rho) + 1e-12

    def test_binary_entropy(self):
        assert binary_entropy(0.5) == pytest.approx(1.0)
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        with pytest.raises(ValidationError):
            binary_entropy(1.5)

    def test_entanglement_of_formation(self):
        assert entanglement_of_formation_2q(max_entangled(2).density()) == pytest.approx(1.0)
        assert entanglement_of_formation_2q(werner(0.2)) == pytest.approx(0.0)
        assert eof_from_concurrence(0.5) == pytest.approx(binary_entropy((1 + math.sqrt(0.75)) / 2))

    def test_ppt(self):
        assert ppt_min_eigenvalue(max_entangled(2).density()) == pytest.approx(-0.5)
        assert ppt_min_eigenvalue(werner(0.2)) >= 0


class TestConvexRoof:
    def test_pure_shortcut(self):
        result = convex_roof(max_entangled(3).density())
        assert result.method == 'pure'
        assert result.value == pytest.approx(1.0)
        assert result.iters == 0

    def test_separable_eigen_decomposition(self):
        rho = DensityMatrix(np.diag([0.6, 0, 0, 0.4]), (2, 2))
        result = convex_roof(rho, opts=FAST_ROOF)
        assert result.method == 'roof'
        assert result.value == pytest.approx(0.0, abs=1e-12)

    def test_never_below_closed_form(self):
        rng = np.random.default_rng(11)
        for rank in (2, 3):
            rho = random_density_matrix((2, 2), rng, rank=rank)
            assert g_concurrence_mixed(rho, opts=FAST_ROOF) >= concurrence_wootters(rho) - 1e-9

    def test_close_to_closed_form(self):
        rho = random_density_matrix((2, 2), np.random.default_rng(5), rank=2)
        value = g_concurrence_mixed(rho, opts=RoofOptions(restarts=8))
        assert value == pytest.approx(concurrence_wootters(rho), abs=1e-2)

    def test_history_non_increasing(self):
        result = convex_roof(werner(0.8), opts=FAST_ROOF)
        assert all(later <= earlier + 1e-15 for earlier, later in zip(result.history, result.history[1:]))
        assert 0 <= result.restart < FAST_ROOF.restarts

    def test_deterministic_for_fixed_seed(self):
        rho = random_density_matrix((2, 2), np.random.default_rng(9), rank=3)
        opts = RoofOptions(restarts=3, max_iters=100, seed=42)
        assert convex_roof(rho, opts=opts).value == convex_roof(rho, opts=opts).value

    def test_parallel_restarts_agree(self):
        rho = random_density_matrix((2, 2), np.random.default_rng(9), rank=2)
        serial = convex_roof(rho, opts=RoofOptions(restarts=3, max_iters=100))
        parallel = convex_roof(rho, opts=RoofOptions(restarts=3, max_iters=100, workers=3))
        assert serial.value == pytest.approx(parallel.value, abs=1e-12)

    def test_qutrit_pure_decomposition(self):
        psi = random_pure_state((3, 3), np.random.default_rng(6))
        rho = DensityMatrix(0.999999 * psi.density().matrix + 1e-6 * np.eye(9) / 9, (3, 3))
        assert g_concurrence_mixed(rho, opts=FAST_ROOF) <= g_concurrence_pure(psi) + 1e-3

    def test_terms_smaller_than_rank(self):
        with pytest.raises(ValidationError):
            convex_roof(werner(0.5), opts=RoofOptions(terms=2))

    @pytest.mark.parametrize('field, value', [('restarts', 0), ('max_iters', 0), ('tol', 0.0), ('terms', 0), ('workers', 0)])
    def test_invalid_options(self, field, value):
        with pytest.raises(ValidationError):
            RoofOptions(**{field: value})

    @pytest.mark.slow
    def test_random_two_qubit_oracle(self):
        rng = np.random.default_rng(0)
        for index in range(20):
            rho = random_density_matrix((2, 2), rng, rank=2 + index % 3)
            exact = concurrence_wootters(rho)
            value = g_concurrence_mixed(rho)
            assert exact - 1e-9 <= value <= exact + 1e-3
