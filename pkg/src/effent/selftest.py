"""
Module with the acceptance checks behind `effent selftest`.

Every check returns a CheckResult; the quick mode uses reduced sample counts, the full mode the counts
the checks are stated with.
"""
from __future__ import annotations
from typing import TYPE_CHECKING

from dataclasses import dataclass, replace
import logging
import math
import time

import numpy as np

from effent.errors import EffentError
from effent.qcore import DensityMatrix, PureState, max_entangled, random_density_matrix, random_pure_state, trace_distance
from effent.channels import adjoint_apply, amplitude_damping, apply, identity_channel, phase_damping, random_channel
from effent.entanglement import RoofOptions, concurrence_wootters, g_concurrence_mixed, g_concurrence_pure
from effent.effective import effective_state, quality_factor, wiseman_vaccaro
from effent.bec import BecParams, PhaseDistribution, g_factor, g_factor_quadrature, limit_map, simulate_bec_exact, ssr_lifting_channel
from effent.games import SeesawOptions, bell_statistics_game, maximize_payoff, payoff, random_povm, restricted_payoff

if TYPE_CHECKING:
    from typing import Callable, List, Optional, Tuple

LOG: logging.Logger = logging.getLogger("effent.selftest")


@dataclass
class CheckResult:
    """Outcome of one acceptance check."""
    name: str
    passed: bool
    detail: str
    seconds: float


def _fock_cutoff(alpha_sq: float) -> int:
    return int(math.ceil(alpha_sq + 6 * math.sqrt(alpha_sq)))


def check_quality_closed_forms(full: bool, seed: int, roof: RoofOptions) -> Tuple[bool, str]:
    """Q of amplitude and phase damping is sqrt(1 - rate) on the grid 0, 0.1, ..., 1."""
    worst: float = 0.0
    for rate in np.linspace(0, 1, 11):
        worst = max(worst, abs(quality_factor(amplitude_damping(rate), 2) - math.sqrt(1 - rate)))
        worst = max(worst, abs(quality_factor(phase_damping(rate), 2) - math.sqrt(1 - rate)))
    return worst < 1e-9, f'max deviation {worst:.3g}'


def check_duality(full: bool, seed: int, roof: RoofOptions) -> Tuple[bool, str]:
    """Tr($^dagger[P] rho) = Tr(P $[rho]) on random channels, POVM elements and states of dimension 2 to 4."""
    rng: np.random.Generator = np.random.default_rng(seed)
    worst: float = 0.0
    for _ in range(1000 if full else 100):
        d_in, d_out = (int(d) for d in rng.integers(2, 5, size=2))
        channel = random_channel(d_in, d_out, rng, n_kraus=int(rng.integers(1, 5)) if d_in <= d_out else None)
        element: np.ndarray = random_povm(d_out, 2, rng).elements[0]
        rho: DensityMatrix = random_density_matrix((d_in,), rng)
        heisenberg: complex = np.trace(adjoint_apply(channel, element) @ rho.matrix)
        schroedinger: complex = np.trace(element @ apply(channel, rho).matrix)
        worst = max(worst, abs(heisenberg - schroedinger))
    return worst < 1e-12, f'max deviation {worst:.3g}'


def check_roof_oracle(full: bool, seed: int, roof: RoofOptions) -> Tuple[bool, str]:
    """Convex roof of random two-qubit states lies within [C - 1e-9, C + 1e-3] of the closed form C."""
    rng: np.random.Generator = np.random.default_rng(seed)
    worst_low: float = 0.0
    worst_high: float = 0.0
    for index in range(100 if full else 5):
        rho: DensityMatrix = random_density_matrix((2, 2), rng, rank=2 + index % 3)
        exact: float = concurrence_wootters(rho)
        value: float = g_concurrence_mixed(rho, opts=roof)
        worst_low = max(worst_low, exact - value)
        worst_high = max(worst_high, value - exact)
    return worst_low <= 1e-9 and worst_high <= 1e-3, f'below by {worst_low:.3g}, above by {worst_high:.3g}'


def check_one_sided_exactness(full: bool, seed: int, roof: RoofOptions) -> Tuple[bool, str]:
    """C(($ (x) 1)[psi]) = Q($) C(psi) for pure two-qubit psi."""
    rng: np.random.Generator = np.random.default_rng(seed)
    worst: float = 0.0
    for _ in range(50 if full else 10):
        psi: PureState = random_pure_state((2, 2), rng)
        channel = random_channel(2, 2, rng)
        reduced: DensityMatrix = effective_state(psi.density(), channel, identity_channel(2))
        worst = max(worst, abs(concurrence_wootters(reduced) - quality_factor(channel, 2) * g_concurrence_pure(psi)))
    return worst < 1e-9, f'max deviation {worst:.3g}'


def check_two_sided_bound(full: bool, seed: int, roof: RoofOptions) -> Tuple[bool, str]:
    """G(($_A (x) $_B)[psi]) <= Q($_A) Q($_B) G(psi)."""
    rng: np.random.Generator = np.random.default_rng(seed)
    worst: float = -math.inf
    for _ in range(50 if full else 3):
        psi: PureState = random_pure_state((2, 2), rng)
        channel_a, channel_b = random_channel(2, 2, rng), random_channel(2, 2, rng)
        value: float = g_concurrence_mixed(effective_state(psi.density(), channel_a, channel_b), opts=roof)
        bound: float = quality_factor(channel_a, 2) * quality_factor(channel_b, 2) * g_concurrence_pure(psi)
        worst = max(worst, value - bound)
    return worst <= 2e-3, f'largest excess {worst:.3g}'


def check_g_factors(full: bool, seed: int, roof: RoofOptions) -> Tuple[bool, str]:
    """Closed form and quadrature g-factors agree; uniform and antipodal phases give g = 0."""
    worst: float = 0.0
    for sigma in (0.1, 0.5, 1.0, 2.0):
        dist: PhaseDistribution = PhaseDistribution.wrapped_normal(0.0, sigma)
        worst = max(worst, abs(g_factor(dist) - g_factor_quadrature(dist, 2048)), abs(abs(g_factor(dist)) - math.exp(-sigma * sigma / 2)))
    uniform: float = abs(g_factor_quadrature(PhaseDistribution.uniform(), 2048))
    antipodal: float = abs(g_factor(PhaseDistribution.delta_mixture([(0.3, 0.5), (0.3 + math.pi, 0.5)])))
    return worst < 1e-8 and uniform < 1e-14 and antipodal < 1e-14, f'closed form vs quadrature {worst:.3g}, uniform {uniform:.3g}, antipodal {antipodal:.3g}'


def check_lifting_quality(full: bool, seed: int, roof: RoofOptions) -> Tuple[bool, str]:
    """Q of the lifting channel is |g| and does not depend on theta."""
    pairs: List[Tuple[PhaseDistribution, float]] = []
    for sigma in np.linspace(0, 2, 10 if full else 3):
        pairs.append((PhaseDistribution.wrapped_normal(0.2, float(sigma)), 0.3 + float(sigma)))
    for delta in np.linspace(0, 2, 5 if full else 2):
        pairs.append((PhaseDistribution.double_rect(0.5, float(delta)), 1.1))
    for weight in np.linspace(0, 1, 5 if full else 1):
        pairs.append((PhaseDistribution.delta_mixture([(0.0, float(weight)), (math.pi, 1 - float(weight))]), 0.7))
    worst: float = 0.0
    drift: float = 0.0
    for dist, theta in pairs:
        q: float = quality_factor(ssr_lifting_channel(dist, theta), 2)
        worst = max(worst, abs(q - abs(g_factor(dist))))
        drift = max(drift, abs(q - quality_factor(ssr_lifting_channel(dist, theta + 0.9), 2)))
    return worst < 1e-6 and drift < 1e-9, f'{len(pairs)} pairs, max |Q - |g|| {worst:.3g}, theta drift {drift:.3g}'


def check_exact_fock(full: bool, seed: int, roof: RoofOptions) -> Tuple[bool, str]:
    """The exact exchange approaches R_z(phi) R_x(theta) as the condensate grows."""
    theta: float = math.pi / 4
    start: DensityMatrix = DensityMatrix(np.diag([1.0, 0.0]))
    target: np.ndarray = limit_map(0.0, theta)
    limit: DensityMatrix = DensityMatrix(target @ start.matrix @ target.conj().T, validate=False)
    distances: List[float] = []
    for alpha_sq in ((25.0, 100.0, 400.0) if full else (25.0, 100.0)):
        simulated = simulate_bec_exact(BecParams(alpha_sq, theta), 0.0, _fock_cutoff(alpha_sq), start)
        distances.append(trace_distance(simulated.state, limit))
    at_hundred: float = distances[1]
    monotone: bool = all(later < earlier for earlier, later in zip(distances, distances[1:]))
    return at_hundred < 1e-2 and monotone, 'distances ' + ', '.join(f'{d:.3g}' for d in distances)


def check_strict_ssr(full: bool, seed: int, roof: RoofOptions) -> Tuple[bool, str]:
    """A single particle in two modes has no entanglement under a strict superselection rule but C = |g| with a reference."""
    psi_plus: DensityMatrix = PureState(np.array([0, 1, 1, 0]) / math.sqrt(2), (2, 2)).density()
    strict: float = wiseman_vaccaro(psi_plus, ([[0], [1]], [[0], [1]])).value
    worst: float = 0.0
    for sigma in (0.0, 0.5, 1.0, 2.0):
        dist: PhaseDistribution = PhaseDistribution.wrapped_normal(0.0, sigma)
        reduced: DensityMatrix = effective_state(psi_plus, ssr_lifting_channel(dist, math.pi / 4), identity_channel(2))
        worst = max(worst, abs(concurrence_wootters(reduced) - abs(g_factor(dist))))
    return strict == 0.0 and worst < 1e-6, f'strict {strict}, max |C - |g|| {worst:.3g}'


def check_games(full: bool, seed: int, roof: RoofOptions) -> Tuple[bool, str]:
    """Payoff normalization, seesaw monotonicity, entanglement advantage and restriction by complete dephasing."""
    rng: np.random.Generator = np.random.default_rng(seed)
    game = bell_statistics_game()
    constant = replace(game, payoff=np.full(game.payoff.shape, 0.7))
    bell: DensityMatrix = max_entangled(2).density()
    noise: DensityMatrix = DensityMatrix.maximally_mixed((2, 2))
    worst: float = 0.0
    for _ in range(10 if full else 3):
        worst = max(worst, abs(payoff(constant, noise, random_povm(4, 2, rng, (2, 2)), random_povm(4, 2, rng, (2, 2))) - 0.7))
    opts: SeesawOptions = SeesawOptions(seed=seed, restarts=8 if full else 4)
    entangled = maximize_payoff(game, bell, opts)
    mixed = maximize_payoff(game, noise, opts)
    monotone: bool = all(later >= earlier - 1e-12 for earlier, later in zip(entangled.history, entangled.history[1:]))
    restricted = restricted_payoff(game, bell, phase_damping(1.0), identity_channel(2), opts)
    dephased = maximize_payoff(game, effective_state(bell, phase_damping(1.0), identity_channel(2)), opts)
    gap: float = abs(restricted.value - dephased.value)
    passed: bool = worst < 1e-12 and monotone and entangled.value - mixed.value > 0 and gap < 1e-6
    return passed, f'constant {worst:.3g}, entangled {entangled.value:.6g}, mixed {mixed.value:.6g}, restricted gap {gap:.3g}'


CHECKS: Tuple[Tuple[str, Callable[[bool, int, RoofOptions], Tuple[bool, str]]], ...] = (
    ('quality-closed-forms', check_quality_closed_forms),
    ('heisenberg-duality', check_duality),
    ('convex-roof-oracle', check_roof_oracle),
    ('one-sided-exactness', check_one_sided_exactness),
    ('two-sided-bound', check_two_sided_bound),
    ('bec-g-factors', check_g_factors),
    ('ssr-lifting-quality', check_lifting_quality),
    ('exact-fock-convergence', check_exact_fock),
    ('strict-ssr', check_strict_ssr),
    ('game-payoffs', check_games),
)


def run_selftest(full: bool = False, seed: int = 0, roof: Optional[RoofOptions] = None) -> List[CheckResult]:
    """
    Runs every acceptance check; a check raising an effent error counts as failed.
    """
    roof = roof or RoofOptions(seed=seed)
    results: List[CheckResult] = []
    for name, check in CHECKS:
        started: float = time.perf_counter()
        try:
            passed, detail = check(full, seed, roof)
        except EffentError as err:
            passed, detail = False, f'{type(err).__name__}: {err}'
        results.append(CheckResult(name=name, passed=passed, detail=detail, seconds=time.perf_counter() - started))
        LOG.info('Selftest %s: %s (%s)', name, 'passed' if passed else 'FAILED', detail)
    return results
