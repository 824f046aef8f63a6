"""
Module for semiquantum nonlocal games.

A referee sends question states zeta^s to Alice and eta^t to Bob, who answer x and y after a joint
measurement of the question and their share of rho. The tensor ordering of every joint space is
(question_A, rho_A, rho_B, question_B): Alice measures (question_A, rho_A), Bob measures (rho_B, question_B).
"""
from __future__ import annotations
from typing import TYPE_CHECKING

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from effent.errors import ValidationError, DimensionError, NumericalError
from effent.qcore import DensityMatrix, max_entangled, random_unitary, random_isometry, resolve_tol
from effent.channels import KrausChannel, PovmSet, adjoint_povm, identity_channel, tensor_channels
from effent.effective import effective_state

if TYPE_CHECKING:
    from typing import List, Optional, Sequence, Tuple

LOG: logging.Logger = logging.getLogger("effent.games")

SHIPPED_COMPOSITE_LIMIT: int = 256
VERIFY_TOL: float = 1e-10
POVM_TOL: float = 1e-8


@dataclass(frozen=True)
class SeesawOptions:
    """
    Budget of the seesaw payoff maximization.

    Attributes:
    -----------
    rounds : int
        Maximum number of alternations Alice -> Bob per restart.
    inner_iters : int
        Maximum fixed-point iterations of one party's update.
    restarts : int
        Number of starting points; restart 0 uses identity-split POVMs, the others random projective ones.
    seed : int
        Restart k draws its starting point from seed + k.
    tol : float
        Rounds stop once the payoff improves by less than tol.
    workers : int
        Number of threads running restarts concurrently.
    """
    rounds: int = 50
    inner_iters: int = 200
    restarts: int = 8
    seed: int = 0
    tol: float = 1e-10
    workers: int = 1

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValidationError(f'seesaw.rounds must be at least 1, got {self.rounds}')
        if self.inner_iters < 1:
            raise ValidationError(f'seesaw.inner_iters must be at least 1, got {self.inner_iters}')
        if self.restarts < 1:
            raise ValidationError(f'seesaw.restarts must be at least 1, got {self.restarts}')
        if not self.tol > 0:
            raise ValidationError(f'seesaw.tol must be positive, got {self.tol}')
        if self.workers < 1:
            raise ValidationError(f'seesaw.workers must be at least 1, got {self.workers}')


@dataclass
class GameSpec:
    """
    A semiquantum nonlocal game.

    Attributes:
    -----------
    p : np.ndarray
        Distribution of Alice's question index s.
    q : np.ndarray
        Distribution of Bob's question index t.
    zeta : List[DensityMatrix]
        Alice's question states, one per s.
    eta : List[DensityMatrix]
        Bob's question states, one per t.
    payoff : np.ndarray
        Real payoff tensor of shape (n_s, n_t, n_x, n_y).
    name : str
        Label used in logs and results.
    """
    p: np.ndarray
    q: np.ndarray
    zeta: List[DensityMatrix]
    eta: List[DensityMatrix]
    payoff: np.ndarray
    name: str = 'game'

    def __post_init__(self) -> None:
        self.p = _distribution(self.p, 'p')
        self.q = _distribution(self.q, 'q')
        table: np.ndarray = np.asarray(self.payoff)
        if np.iscomplexobj(table):
            if np.max(np.abs(table.imag), initial=0.0) > 0:
                raise ValidationError('Payoff tensor must be real')
            table = table.real
        self.payoff = table.astype(float)
        if self.payoff.ndim != 4:
            raise ValidationError(f'Payoff tensor must have four indices (s, t, x, y), got {self.payoff.ndim}')
        if self.payoff.shape[:2] != (self.p.size, self.q.size):
            raise DimensionError(f'Payoff tensor shape {self.payoff.shape} does not match {self.p.size} x {self.q.size} questions')
        if len(self.zeta) != self.p.size or len(self.eta) != self.q.size:
            raise DimensionError('Need one question state per question index')
        for name, states in (('zeta', self.zeta), ('eta', self.eta)):
            if len({state.dim for state in states}) != 1:
                raise DimensionError(f'All {name} question states must have the same dimension')

    @property
    def n_s(self) -> int:
        """Number of Alice's questions."""
        return self.p.size

    @property
    def n_t(self) -> int:
        """Number of Bob's questions."""
        return self.q.size

    @property
    def n_x(self) -> int:
        """Number of Alice's answers."""
        return self.payoff.shape[2]

    @property
    def n_y(self) -> int:
        """Number of Bob's answers."""
        return self.payoff.shape[3]

    @property
    def d_zeta(self) -> int:
        """Dimension of Alice's question states."""
        return self.zeta[0].dim

    @property
    def d_eta(self) -> int:
        """Dimension of Bob's question states."""
        return self.eta[0].dim


@dataclass
class SeesawResult:
    """
    Best strategy found by the seesaw, a lower bound on the optimal payoff.

    Attributes:
    -----------
    value : float
        Payoff of the returned strategy.
    alice : PovmSet
        Alice's POVM on (question_A, rho_A).
    bob : PovmSet
        Bob's POVM on (rho_B, question_B).
    rounds : int
        Rounds used by the best restart.
    history : List[float]
        Payoff before the first and after every round of the best restart, non-decreasing.
    restarts_used : int
        Number of restarts run.
    restart : int
        Index of the best restart.
    """
    value: float
    alice: PovmSet
    bob: PovmSet
    rounds: int
    history: List[float] = field(default_factory=list)
    restarts_used: int = 0
    restart: int = 0


def _distribution(values: Sequence[float], name: str) -> np.ndarray:
    array: np.ndarray = np.asarray(values, dtype=float).reshape(-1)
    if array.size == 0:
        raise ValidationError(f'Question distribution {name} is empty')
    if np.any(array < 0):
        raise ValidationError(f'Question distribution {name} has negative entries')
    if abs(float(np.sum(array)) - 1) > 1e-12:
        raise ValidationError(f'Question distribution {name} does not sum to 1 (sum {float(np.sum(array)):.15g})')
    return array


def _party_dims(game: GameSpec, rho: DensityMatrix) -> Tuple[int, int]:
    if len(rho.dims) != 2:
        raise DimensionError(f'Game resource must be a bipartite state, got dims {list(rho.dims)}')
    d_a, d_b = rho.dims
    return game.d_zeta * d_a, d_b * game.d_eta


def _check_strategy(game: GameSpec, rho: DensityMatrix, alice: PovmSet, bob: PovmSet) -> None:
    dim_a, dim_b = _party_dims(game, rho)
    if alice.dim != dim_a or bob.dim != dim_b:
        raise DimensionError(f'POVMs act on {alice.dim} and {bob.dim}, the game needs {dim_a} (question_A, rho_A) and {dim_b} (rho_B, question_B)')
    if alice.n_outcomes != game.n_x or bob.n_outcomes != game.n_y:
        raise DimensionError(f'POVMs have {alice.n_outcomes} and {bob.n_outcomes} outcomes, the game has {game.n_x} and {game.n_y} answers')


def _joint_inputs(game: GameSpec, rho: DensityMatrix) -> np.ndarray:
    """zeta^s (x) rho (x) eta^t for every (s, t), as (s, t, a, b, a', b') tensors over Alice x Bob."""
    dim_a, dim_b = _party_dims(game, rho)
    if dim_a * dim_b > SHIPPED_COMPOSITE_LIMIT:
        LOG.warning('Game composite dimension %d exceeds %d, this will be slow', dim_a * dim_b, SHIPPED_COMPOSITE_LIMIT)
    inputs: np.ndarray = np.empty((game.n_s, game.n_t, dim_a, dim_b, dim_a, dim_b), dtype=np.complex128)
    for s, zeta in enumerate(game.zeta):
        left: np.ndarray = np.kron(zeta.matrix, rho.matrix)
        for t, eta in enumerate(game.eta):
            inputs[s, t] = np.kron(left, eta.matrix).reshape(dim_a, dim_b, dim_a, dim_b)
    return inputs


def _payoff_operator(game: GameSpec, rho: DensityMatrix) -> np.ndarray:
    """K[x, y] = sum_st p(s) q(t) payoff(s, t, x, y) zeta^s (x) rho (x) eta^t, payoff = Tr[(P_x (x) Q_y) K[x, y]]."""
    return np.einsum('s,t,stxy,stabcd->xyabcd', game.p, game.q, game.payoff, _joint_inputs(game, rho), optimize=True)


def outcome_statistics(game: GameSpec, rho: DensityMatrix, alice: PovmSet, bob: PovmSet) -> np.ndarray:
    """
    Conditional answer distribution mu(x, y | s, t) = Tr[(P_x (x) Q_y)(zeta^s (x) rho (x) eta^t)].

    Returns:
        np.ndarray: Real array of shape (n_s, n_t, n_x, n_y).
    """
    _check_strategy(game, rho, alice, bob)
    stats: np.ndarray = np.einsum('xca,ydb,stabcd->stxy', alice.stacked(), bob.stacked(), _joint_inputs(game, rho), optimize=True)
    return np.real(stats)


def payoff(game: GameSpec, rho: DensityMatrix, alice: PovmSet, bob: PovmSet) -> float:
    """
    Average payoff sum_{s,t,x,y} p(s) q(t) payoff(s, t, x, y) mu(x, y | s, t).

    Args:
        game (GameSpec): The game.
        rho (DensityMatrix): Resource state on (rho_A, rho_B).
        alice (PovmSet): Alice's POVM on (question_A, rho_A) with n_x outcomes.
        bob (PovmSet): Bob's POVM on (rho_B, question_B) with n_y outcomes.

    Returns:
        float: The expected payoff.
    """
    stats: np.ndarray = outcome_statistics(game, rho, alice, bob)
    return float(np.einsum('s,t,stxy,stxy->', game.p, game.q, game.payoff, stats))


def effective_povm(joint: PovmSet, rho1: DensityMatrix, position: str = 'first') -> PovmSet:
    """
    Effective POVM E_k = Tr_1[P_k (rho_1 (x) I)] on the remaining factor of a two factor space.

    Args:
        joint (PovmSet): POVM on sys1 (x) sys2 (or sys2 (x) sys1 for position='second').
        rho1 (DensityMatrix): State fed into sys1.
        position (str): Whether sys1 is the 'first' or the 'second' factor.

    Returns:
        PovmSet: POVM on the other factor.
    """
    if position not in ('first', 'second'):
        raise ValidationError(f"position must be 'first' or 'second', got {position!r}")
    d_1: int = rho1.dim
    if joint.dim % d_1 != 0:
        raise DimensionError(f'POVM of dimension {joint.dim} cannot contain a factor of dimension {d_1}')
    d_2: int = joint.dim // d_1
    if position == 'first':
        tensors: np.ndarray = joint.stacked().reshape(-1, d_1, d_2, d_1, d_2)
        elements: np.ndarray = np.einsum('kabcd,ca->kbd', tensors, rho1.matrix)
    else:
        tensors = joint.stacked().reshape(-1, d_2, d_1, d_2, d_1)
        elements = np.einsum('kabcd,db->kac', tensors, rho1.matrix)
    return PovmSet(list((elements + elements.conj().transpose(0, 2, 1)) / 2), (d_2,), tol=POVM_TOL)


def random_povm(dim: int, n_outcomes: int, rng: np.random.Generator, space_dims: Optional[Sequence[int]] = None) -> PovmSet:
    """
    Random POVM E_k = V_k^dagger V_k from the blocks V_k of a random isometry.
    """
    isometry: np.ndarray = random_isometry(n_outcomes * dim, dim, rng)
    blocks: List[np.ndarray] = [isometry[k * dim:(k + 1) * dim, :] for k in range(n_outcomes)]
    return PovmSet([block.conj().T @ block for block in blocks], space_dims, tol=POVM_TOL)


def _identity_split(dim: int, n_outcomes: int) -> np.ndarray:
    return np.stack([np.eye(dim, dtype=np.complex128) / n_outcomes] * n_outcomes)


def _random_projective(dim: int, n_outcomes: int, rng: np.random.Generator) -> np.ndarray:
    basis: np.ndarray = random_unitary(dim, rng)
    elements: np.ndarray = np.zeros((n_outcomes, dim, dim), dtype=np.complex128)
    for column in range(dim):
        elements[column % n_outcomes] += np.outer(basis[:, column], basis[:, column].conj())
    return elements


def _linear_value(elements: np.ndarray, coefficients: np.ndarray) -> float:
    return float(np.real(np.einsum('kca,kac->', elements, coefficients)))


def _normalized(grown: np.ndarray) -> np.ndarray:
    total: np.ndarray = np.sum(grown, axis=0)
    values, vectors = np.linalg.eigh((total + total.conj().T) / 2)
    support: np.ndarray = values > 1e-14 * max(float(values[-1]), 1e-300)
    inv_sqrt: np.ndarray = (vectors[:, support] / np.sqrt(values[support])) @ vectors[:, support].conj().T
    complement: np.ndarray = vectors[:, ~support] @ vectors[:, ~support].conj().T
    elements: np.ndarray = inv_sqrt @ grown @ inv_sqrt + complement / grown.shape[0]
    return (elements + elements.conj().transpose(0, 2, 1)) / 2


def _spectral_response(coefficients: np.ndarray) -> np.ndarray:
    """Exact best two-outcome POVM: P_1 projects onto the positive part of C_1 - C_0."""
    difference: np.ndarray = coefficients[1] - coefficients[0]
    values, vectors = np.linalg.eigh((difference + difference.conj().T) / 2)
    positive: np.ndarray = vectors[:, values > 0]
    second: np.ndarray = positive @ positive.conj().T
    return np.stack([np.eye(difference.shape[0]) - second, second])


def _best_response(elements: np.ndarray, coefficients: np.ndarray, opts: SeesawOptions) -> Tuple[np.ndarray, float]:
    """
    Improves sum_k Tr(P_k C_k) over POVMs by the fixed-point map P_k <- R_k P_k R_k, normalized to sum to the
    identity, with R_k = C_k shifted to be positive. Only improving steps are taken.
    """
    coefficients = (coefficients + coefficients.conj().transpose(0, 2, 1)) / 2
    value: float = _linear_value(elements, coefficients)
    if elements.shape[0] == 1:
        return elements, value
    if elements.shape[0] == 2:
        candidate: np.ndarray = _spectral_response(coefficients)
        candidate_value: float = _linear_value(candidate, coefficients)
        if candidate_value > value:
            elements, value = candidate, candidate_value
    smallest: float = min(float(np.linalg.eigvalsh(c)[0]) for c in coefficients)
    shifted: np.ndarray = coefficients + max(0.0, -smallest) * np.eye(coefficients.shape[1])
    for _ in range(opts.inner_iters):
        candidate = _normalized(shifted @ elements @ shifted)
        candidate_value = _linear_value(candidate, coefficients)
        if candidate_value <= value:
            break
        improvement: float = candidate_value - value
        elements, value = candidate, candidate_value
        if improvement < opts.tol:
            break
    return elements, value


def _seesaw_restart(operator: np.ndarray, dims: Tuple[int, int], outcomes: Tuple[int, int], restart: int,
                    opts: SeesawOptions) -> Tuple[float, np.ndarray, np.ndarray, int, List[float]]:
    dim_a, dim_b = dims
    n_x, n_y = outcomes
    if restart == 0:
        alice: np.ndarray = _identity_split(dim_a, n_x)
        bob: np.ndarray = _identity_split(dim_b, n_y)
    else:
        rng: np.random.Generator = np.random.default_rng(opts.seed + restart)
        alice = _random_projective(dim_a, n_x, rng)
        bob = _random_projective(dim_b, n_y, rng)
    value: float = float(np.real(np.einsum('xyabcd,xca,ydb->', operator, alice, bob, optimize=True)))
    history: List[float] = [value]
    rounds: int = 0
    for _ in range(opts.rounds):
        rounds += 1
        alice, _ = _best_response(alice, np.einsum('xyabcd,ydb->xac', operator, bob, optimize=True), opts)
        bob, new_value = _best_response(bob, np.einsum('xyabcd,xca->ybd', operator, alice, optimize=True), opts)
        history.append(new_value)
        improvement: float = new_value - value
        value = new_value
        if improvement < opts.tol:
            break
    LOG.debug('Seesaw restart %d reached %.12g after %d rounds', restart, value, rounds)
    return value, alice, bob, rounds, history


def maximize_payoff(game: GameSpec, rho: DensityMatrix, opts: Optional[SeesawOptions] = None) -> SeesawResult:
    """
    Seesaw maximization of the payoff over both parties' POVMs.

    The value is a lower bound on the optimal payoff; the best restart wins, ties going to the lower index.

    Args:
        game (GameSpec): The game.
        rho (DensityMatrix): Bipartite resource state.
        opts (Optional[SeesawOptions]): Budget and seed.

    Returns:
        SeesawResult: Value, strategy and convergence record.
    """
    opts = opts or SeesawOptions()
    dims: Tuple[int, int] = _party_dims(game, rho)
    operator: np.ndarray = _payoff_operator(game, rho)
    outcomes: Tuple[int, int] = (game.n_x, game.n_y)

    def run(restart: int) -> Tuple[float, np.ndarray, np.ndarray, int, List[float]]:
        return _seesaw_restart(operator, dims, outcomes, restart, opts)

    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as executor:
            results: List[Tuple[float, np.ndarray, np.ndarray, int, List[float]]] = list(executor.map(run, range(opts.restarts)))
    else:
        results = [run(restart) for restart in range(opts.restarts)]
    best: int = max(range(len(results)), key=lambda index: (results[index][0], -index))
    value, alice, bob, rounds, history = results[best]
    if rounds >= opts.rounds:
        LOG.warning('Seesaw stopped on its round budget (%d) for %s', opts.rounds, game.name)
    d_a, d_b = rho.dims
    return SeesawResult(value=value,
                        alice=PovmSet(list(alice), (game.d_zeta, d_a), tol=POVM_TOL),
                        bob=PovmSet(list(bob), (d_b, game.d_eta), tol=POVM_TOL),
                        rounds=rounds, history=history, restarts_used=len(results), restart=best)


def restricted_povms(game: GameSpec, ch_a: KrausChannel, ch_b: KrausChannel, alice: PovmSet, bob: PovmSet) -> Tuple[PovmSet, PovmSet]:
    """
    Heisenberg images (1_zeta (x) $_A)^dagger[P_x] and ($_B (x) 1_eta)^dagger[Q_y] of a strategy on the effective state.
    """
    lifted_a: KrausChannel = tensor_channels(identity_channel(game.d_zeta), ch_a)
    lifted_b: KrausChannel = tensor_channels(ch_b, identity_channel(game.d_eta))
    return adjoint_povm(lifted_a, alice), adjoint_povm(lifted_b, bob)


def restricted_payoff(game: GameSpec, rho: DensityMatrix, ch_a: KrausChannel, ch_b: KrausChannel, opts: Optional[SeesawOptions] = None,
                      verify: bool = False) -> SeesawResult:
    """
    Best payoff when measurements are restricted by local channels, played as unrestricted measurements on the
    effective state ($_A (x) $_B)[rho].

    Args:
        game (GameSpec): The game.
        rho (DensityMatrix): Bipartite resource state.
        ch_a (KrausChannel): Restriction of Alice's share (identity on her question).
        ch_b (KrausChannel): Restriction of Bob's share (identity on his question).
        opts (Optional[SeesawOptions]): Budget and seed.
        verify (bool): Recompute the payoff of the found strategy and of a random strategy through the adjoint
            channels on rho, raising NumericalError on a mismatch above 1e-10.

    Returns:
        SeesawResult: The seesaw result on the effective state.
    """
    opts = opts or SeesawOptions()
    if len(rho.dims) != 2 or rho.dims != (ch_a.d_in, ch_b.d_in):
        raise DimensionError(f'State of dims {list(rho.dims)} does not fit channels on {ch_a.d_in} and {ch_b.d_in}')
    reduced: DensityMatrix = effective_state(rho, ch_a, ch_b)
    result: SeesawResult = maximize_payoff(game, reduced, opts)
    if verify:
        rng: np.random.Generator = np.random.default_rng(opts.seed)
        dim_a, dim_b = _party_dims(game, reduced)
        sampled: Tuple[PovmSet, PovmSet] = (random_povm(dim_a, game.n_x, rng), random_povm(dim_b, game.n_y, rng))
        for alice, bob in ((result.alice, result.bob), sampled):
            direct: float = payoff(game, reduced, alice, bob)
            lifted_a, lifted_b = restricted_povms(game, ch_a, ch_b, alice, bob)
            through: float = payoff(game, rho, lifted_a, lifted_b)
            if abs(direct - through) > VERIFY_TOL:
                raise NumericalError(f'Restricted payoff {through:.15g} disagrees with the effective state payoff {direct:.15g}')
        LOG.info('Restricted payoff verified through the adjoint channels')
    return result


def state_discrimination_game(states: Sequence[DensityMatrix], priors: Optional[Sequence[float]] = None) -> GameSpec:
    """
    Single party game: Alice is rewarded with 1 for naming the index of the question state she received.
    Bob gets a trivial one dimensional question and has a single answer; use a (d, 1) or (1, 1) resource.
    """
    n: int = len(states)
    if n < 1:
        raise ValidationError('State discrimination needs at least one state')
    table: np.ndarray = np.zeros((n, 1, n, 1))
    for s in range(n):
        table[s, 0, s, 0] = 1
    return GameSpec(p=np.full(n, 1 / n) if priors is None else np.asarray(priors, dtype=float), q=np.ones(1), zeta=list(states),
                    eta=[DensityMatrix(np.ones((1, 1)))], payoff=table, name='state-discrimination')


def bell_statistics_game() -> GameSpec:
    """
    Two-qubit game whose payoff is -1/4 Tr(W rho) for a Bell-measurement strategy, W = I/2 - |phi_2><phi_2|.

    Questions are |0>, |1>, |+>, |+i> for both parties with uniform priors; only the joint answer (1, 1) is
    scored, with payoff -beta_st / (p(s) q(t)) where sum_st beta_st tau_s (x) tau_t = W. Separable resources never
    score above 0, the maximally entangled state reaches 1/8.
    """
    kets: List[np.ndarray] = [np.array([1, 0]), np.array([0, 1]), np.array([1, 1]) / math.sqrt(2), np.array([1, 1j]) / math.sqrt(2)]
    taus: List[np.ndarray] = [np.outer(k, k.conj()) for k in kets]
    phi: np.ndarray = max_entangled(2).amplitudes
    witness: np.ndarray = np.eye(4) / 2 - np.outer(phi, phi.conj())
    basis: np.ndarray = np.stack([np.kron(a, b).reshape(-1) for a in taus for b in taus], axis=1)
    system: np.ndarray = np.vstack([basis.real, basis.imag])
    target: np.ndarray = np.concatenate([witness.reshape(-1).real, witness.reshape(-1).imag])
    beta, _, _, _ = np.linalg.lstsq(system, target, rcond=None)
    priors: np.ndarray = np.full(4, 0.25)
    table: np.ndarray = np.zeros((4, 4, 2, 2))
    table[:, :, 1, 1] = -beta.reshape(4, 4) / np.outer(priors, priors)
    questions: List[DensityMatrix] = [DensityMatrix(tau) for tau in taus]
    return GameSpec(p=priors, q=priors, zeta=questions, eta=list(questions), payoff=table, name='bell-statistics')


def trivial_povm(dim: int, space_dims: Optional[Sequence[int]] = None) -> PovmSet:
    """Single outcome POVM {I}."""
    return PovmSet([np.eye(dim)], space_dims)


def check_normalization(game: GameSpec, rho: DensityMatrix, alice: PovmSet, bob: PovmSet, tol: Optional[float] = None) -> float:
    """
    Largest deviation of sum_{x,y} mu(x, y | s, t) from 1 over all questions.
    """
    deviation: float = float(np.max(np.abs(np.sum(outcome_statistics(game, rho, alice, bob), axis=(2, 3)) - 1)))
    if deviation > resolve_tol(tol):
        LOG.warning('Answer distribution is not normalized (deviation %.3g)', deviation)
    return deviation
