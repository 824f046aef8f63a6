"""Tests for effent.games."""
from dataclasses import replace
import math

import numpy as np
import pytest

from effent.errors import DimensionError, ValidationError
from effent.qcore import DensityMatrix, max_entangled, random_density_matrix, tensor
from effent.channels import PovmSet, identity_channel, phase_damping
from effent.effective import effective_state
from effent.games import SeesawOptions, bell_statistics_game, check_normalization, effective_povm, maximize_payoff, \
    outcome_statistics, payoff, random_povm, restricted_payoff, state_discrimination_game, trivial_povm

FAST_SEESAW = SeesawOptions(restarts=4, rounds=30)


def bell_measurement() -> PovmSet:
    projector = max_entangled(2).density().matrix
    return PovmSet([np.eye(4) - projector, projector], (2, 2))


def trivial_resource() -> DensityMatrix:
    return DensityMatrix(np.ones((1, 1)), (1, 1))


class TestGameSpec:
    def test_question_distribution_must_sum_to_one(self):
        game = bell_statistics_game()
        with pytest.raises(ValidationError):
            replace(game, p=np.full(4, 0.3))

    def test_payoff_shape(self):
        game = bell_statistics_game()
        with pytest.raises(DimensionError):
            replace(game, payoff=np.zeros((3, 4, 2, 2)))
        with pytest.raises(ValidationError):
            replace(game, payoff=np.zeros((4, 4, 2)))

    def test_complex_payoff(self):
        game = bell_statistics_game()
        with pytest.raises(ValidationError):
            replace(game, payoff=np.full((4, 4, 2, 2), 1j))

    def test_question_state_dimensions(self):
        game = bell_statistics_game()
        with pytest.raises(DimensionError):
            replace(game, zeta=game.zeta[:3] + [DensityMatrix(np.eye(3) / 3)])

    def test_sizes(self):
        game = bell_statistics_game()
        assert (game.n_s, game.n_t, game.n_x, game.n_y) == (4, 4, 2, 2)
        assert (game.d_zeta, game.d_eta) == (2, 2)


class TestPayoff:
    def test_constant_payoff(self):
        rng = np.random.default_rng(0)
        game = replace(bell_statistics_game(), payoff=np.full((4, 4, 2, 2), 0.7))
        rho = random_density_matrix((2, 2), rng)
        for _ in range(3):
            value = payoff(game, rho, random_povm(4, 2, rng, (2, 2)), random_povm(4, 2, rng, (2, 2)))
            assert value == pytest.approx(0.7, abs=1e-12)

    def test_statistics_are_normalized(self):
        rng = np.random.default_rng(1)
        game = bell_statistics_game()
        rho = random_density_matrix((2, 2), rng)
        alice, bob = random_povm(4, 2, rng), random_povm(4, 2, rng)
        stats = outcome_statistics(game, rho, alice, bob)
        assert stats.shape == (4, 4, 2, 2)
        assert np.all(stats >= -1e-12)
        assert check_normalization(game, rho, alice, bob) < 1e-12

    def test_bell_measurement_on_maximally_entangled_state(self):
        value = payoff(bell_statistics_game(), max_entangled(2).density(), bell_measurement(), bell_measurement())
        assert value == pytest.approx(0.125, abs=1e-12)

    def test_bell_measurement_on_noise(self):
        value = payoff(bell_statistics_game(), DensityMatrix.maximally_mixed((2, 2)), bell_measurement(), bell_measurement())
        assert value == pytest.approx(-1 / 16, abs=1e-12)

    def test_product_states_never_score(self):
        rng = np.random.default_rng(2)
        game = bell_statistics_game()
        for _ in range(5):
            rho = tensor(random_density_matrix((2,), rng), random_density_matrix((2,), rng))
            assert payoff(game, rho, random_povm(4, 2, rng), random_povm(4, 2, rng)) <= 1e-12

    def test_strategy_dimensions(self):
        game = bell_statistics_game()
        with pytest.raises(DimensionError):
            payoff(game, max_entangled(2).density(), random_povm(2, 2, np.random.default_rng(0)), bell_measurement())
        with pytest.raises(DimensionError):
            payoff(game, max_entangled(2).density(), trivial_povm(4), bell_measurement())


class TestEffectivePovm:
    @pytest.mark.parametrize('position', ['first', 'second'])
    def test_matches_joint_probabilities(self, position):
        rng = np.random.default_rng(3)
        joint = random_povm(6, 3, rng)
        rho1 = random_density_matrix((2,), rng)
        rho2 = random_density_matrix((3,), rng)
        product = tensor(rho1, rho2) if position == 'first' else tensor(rho2, rho1)
        reduced = effective_povm(joint, rho1, position)
        assert reduced.dim == 3
        np.testing.assert_allclose(reduced.probabilities(rho2), joint.probabilities(product.with_dims((6,))), atol=1e-12)

    def test_rejects_bad_position(self):
        with pytest.raises(ValidationError):
            effective_povm(random_povm(4, 2, np.random.default_rng(0)), DensityMatrix(np.eye(2) / 2), 'middle')

    def test_rejects_non_dividing_dimension(self):
        with pytest.raises(DimensionError):
            effective_povm(random_povm(4, 2, np.random.default_rng(0)), DensityMatrix(np.eye(3) / 3))


class TestSeesaw:
    def test_orthogonal_state_discrimination(self):
        game = state_discrimination_game([DensityMatrix(np.diag([1.0, 0.0])), DensityMatrix(np.diag([0.0, 1.0]))])
        result = maximize_payoff(game, trivial_resource(), SeesawOptions(restarts=1))
        assert result.value == pytest.approx(1.0, abs=1e-9)

    def test_helstrom_bound(self):
        plus = np.full((2, 2), 0.5)
        game = state_discrimination_game([DensityMatrix(np.diag([1.0, 0.0])), DensityMatrix(plus)])
        result = maximize_payoff(game, trivial_resource(), SeesawOptions(restarts=2))
        assert result.value == pytest.approx(0.5 * (1 + 1 / math.sqrt(2)), abs=1e-9)

    def test_history_is_monotone(self):
        result = maximize_payoff(bell_statistics_game(), max_entangled(2).density(), FAST_SEESAW)
        assert all(later >= earlier - 1e-12 for earlier, later in zip(result.history, result.history[1:]))
        assert result.restarts_used == FAST_SEESAW.restarts
        assert result.value == pytest.approx(result.history[-1])

    def test_returned_strategy_reproduces_value(self):
        game = bell_statistics_game()
        rho = max_entangled(2).density()
        result = maximize_payoff(game, rho, FAST_SEESAW)
        assert payoff(game, rho, result.alice, result.bob) == pytest.approx(result.value, abs=1e-8)
        assert result.alice.space_dims == (2, 2)
        assert result.bob.space_dims == (2, 2)

    def test_entanglement_helps(self):
        game = bell_statistics_game()
        entangled = maximize_payoff(game, max_entangled(2).density(), FAST_SEESAW)
        noise = maximize_payoff(game, DensityMatrix.maximally_mixed((2, 2)), FAST_SEESAW)
        assert noise.value <= 1e-9
        assert entangled.value > noise.value

    def test_history_tracks_the_returned_strategy(self):
        rng = np.random.default_rng(6)
        game = state_discrimination_game([random_density_matrix((2,), rng) for _ in range(3)])
        result = maximize_payoff(game, trivial_resource(), SeesawOptions(restarts=3, rounds=20))
        assert all(later >= earlier - 1e-12 for earlier, later in zip(result.history, result.history[1:]))
        assert result.history[-1] == pytest.approx(payoff(game, trivial_resource(), result.alice, result.bob), abs=1e-10)

    def test_deterministic_for_fixed_seed(self):
        game = bell_statistics_game()
        rho = random_density_matrix((2, 2), np.random.default_rng(4))
        opts = SeesawOptions(restarts=3, rounds=10, seed=7)
        assert maximize_payoff(game, rho, opts).value == maximize_payoff(game, rho, opts).value

    @pytest.mark.parametrize('field, value', [('rounds', 0), ('inner_iters', 0), ('restarts', 0), ('tol', 0.0), ('workers', 0)])
    def test_invalid_options(self, field, value):
        with pytest.raises(ValidationError):
            SeesawOptions(**{field: value})


class TestRestrictedPayoff:
    def test_complete_dephasing_equals_dephased_state(self):
        game = bell_statistics_game()
        bell = max_entangled(2).density()
        restricted = restricted_payoff(game, bell, phase_damping(1.0), identity_channel(2), FAST_SEESAW)
        dephased = maximize_payoff(game, effective_state(bell, phase_damping(1.0), identity_channel(2)), FAST_SEESAW)
        assert restricted.value == pytest.approx(dephased.value, abs=1e-6)

    def test_restriction_to_separable_does_not_score(self):
        game = bell_statistics_game()
        bell = max_entangled(2).density()
        restricted = restricted_payoff(game, bell, phase_damping(1.0), phase_damping(1.0), FAST_SEESAW)
        assert restricted.value <= 1e-9
        assert restricted.value <= maximize_payoff(game, bell, FAST_SEESAW).value + 2 * FAST_SEESAW.tol

    def test_verify_through_adjoint_channels(self):
        game = bell_statistics_game()
        rho = random_density_matrix((2, 2), np.random.default_rng(5))
        result = restricted_payoff(game, rho, phase_damping(0.3), phase_damping(0.6), SeesawOptions(restarts=2, rounds=5), verify=True)
        assert result.value >= result.history[0]

    def test_state_must_fit_channels(self):
        with pytest.raises(DimensionError):
            restricted_payoff(bell_statistics_game(), max_entangled(2).density(), identity_channel(3), identity_channel(2))
