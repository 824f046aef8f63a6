"""
Module for the entanglement measures used by effent: G-concurrence of pure states, its convex roof
for mixed states, the two-qubit concurrence closed form and the two-qubit entanglement of formation.
"""
from __future__ import annotations
from typing import TYPE_CHECKING

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import math

import numpy as np
from scipy.special import entr

from effent.errors import ValidationError, DimensionError
from effent.qcore import DensityMatrix, PureState, coefficient_matrix, eig_hermitian, partial_transpose, random_isometry

if TYPE_CHECKING:
    from typing import List, Optional, Tuple

LOG: logging.Logger = logging.getLogger("effent.entanglement")

SIGMA_Y: np.ndarray = np.array([[0, -1j], [1j, 0]])

# Smoothing schedule of the nonsmooth roof objective, the last stage is close to the true objective.
SMOOTHING_STAGES: Tuple[float, ...] = (1e-2, 1e-4, 1e-6, 1e-8, 1e-10)

RANK_CUTOFF: float = 1e-13


@dataclass(frozen=True)
class RoofOptions:
    """
    Budget of the convex roof optimizer.

    Attributes:
    -----------
    restarts : int
        Number of local descents; restart 0 starts from the eigen-decomposition.
    max_iters : int
        Iteration budget per restart.
    tol : float
        Relative objective change below which a smoothing stage stops.
    seed : int
        Seed of the random starting points, restart k uses seed + k.
    terms : Optional[int]
        Number of decomposition terms m, default twice the rank.
    workers : int
        Number of threads running restarts concurrently.
    """
    restarts: int = 16
    max_iters: int = 500
    tol: float = 1e-8
    seed: int = 0
    terms: Optional[int] = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise ValidationError(f'roof.restarts must be at least 1, got {self.restarts}')
        if self.max_iters < 1:
            raise ValidationError(f'roof.max_iters must be at least 1, got {self.max_iters}')
        if not self.tol > 0:
            raise ValidationError(f'roof.tol must be positive, got {self.tol}')
        if self.terms is not None and self.terms < 1:
            raise ValidationError(f'roof.terms must be at least 1, got {self.terms}')
        if self.workers < 1:
            raise ValidationError(f'roof.workers must be at least 1, got {self.workers}')


@dataclass
class RoofResult:
    """
    Outcome of a convex roof evaluation.

    Attributes:
    -----------
    value : float
        Upper bound on the convex roof (exact for pure states).
    method : str
        'pure' or 'roof'.
    iters : int
        Iterations used by the best restart.
    restart : int
        Index of the best restart.
    history : List[float]
        Best objective so far after every iteration of the best restart (non-increasing).
    """
    value: float
    method: str
    iters: int = 0
    restart: int = 0
    history: List[float] = field(default_factory=list)


def bipartition(rho_dims: Tuple[int, ...], dim: int, d: Optional[int] = None) -> Tuple[int, int]:
    """
    Resolves the two local dimensions of a bipartite state.

    Args:
        rho_dims (Tuple[int, ...]): Subsystem dimensions attached to the state.
        dim (int): Total dimension.
        d (Optional[int]): Requested local dimension, for states without a two-party split.

    Returns:
        Tuple[int, int]: (d_a, d_b).
    """
    if len(rho_dims) == 2:
        d_a, d_b = rho_dims
        if d is not None and d != min(d_a, d_b):
            raise DimensionError(f'Requested d={d} does not match the state dims {list(rho_dims)}')
        return d_a, d_b
    if d is None:
        root: int = math.isqrt(dim)
        if root * root != dim:
            raise DimensionError(f'Cannot split a state of dimension {dim} into two equal parties, pass dims or d')
        return root, root
    if d * d != dim:
        raise DimensionError(f'Requested d={d} does not match the state dimension {dim}')
    return d, d


def g_concurrence_pure(psi: PureState, d_a: Optional[int] = None, d_b: Optional[int] = None) -> float:
    """
    G-concurrence d * det(A^dagger A)^(1/d) of a pure bipartite state with coefficient matrix A.

    For d_a != d_b the smaller Gram matrix is used, d = min(d_a, d_b).

    Args:
        psi (PureState): The state.
        d_a (Optional[int]): Dimension of the first party, taken from psi.dims if omitted.
        d_b (Optional[int]): Dimension of the second party, taken from psi.dims if omitted.

    Returns:
        float: Value in [0, 1].
    """
    if d_a is None or d_b is None:
        d_a, d_b = bipartition(psi.dims, psi.dim)
    singular: np.ndarray = np.linalg.svd(coefficient_matrix(psi, d_a, d_b), compute_uv=False)
    d: int = min(d_a, d_b)
    value: float = d * float(np.prod(singular[:d] ** 2)) ** (1 / d)
    return min(max(value, 0.0), 1.0)


def _check_two_qubit(rho: DensityMatrix) -> None:
    if rho.dim != 4 or rho.dims not in ((4,), (2, 2)):
        raise DimensionError(f'Two-qubit state expected, got dims {list(rho.dims)}')


def concurrence_wootters(rho: DensityMatrix) -> float:
    """
    Two-qubit concurrence max(0, l1 - l2 - l3 - l4), the l_i being the decreasing square roots of the
    eigenvalues of rho (sigma_y x sigma_y) rho^* (sigma_y x sigma_y).

    The l_i are obtained as singular values of W^T (sigma_y x sigma_y) W with rho = W W^dagger.
    """
    _check_two_qubit(rho)
    values, vectors = eig_hermitian(rho.matrix, tol=np.inf)
    w: np.ndarray = vectors * np.sqrt(np.clip(values, 0, None))
    flip: np.ndarray = np.kron(SIGMA_Y, SIGMA_Y)
    lambdas: np.ndarray = np.linalg.svd(w.T @ flip @ w, compute_uv=False)
    return min(max(float(lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]), 0.0), 1.0)


def binary_entropy(x: float) -> float:
    """Binary entropy h(x) in bits."""
    if not 0 <= x <= 1:
        raise ValidationError(f'Binary entropy argument must be in [0, 1], got {x}')
    return float((entr(x) + entr(1 - x)) / math.log(2))


def eof_from_concurrence(c: float) -> float:
    """Entanglement of formation h((1 + sqrt(1 - C^2)) / 2) of a two-qubit concurrence C."""
    c = min(max(c, 0.0), 1.0)
    return binary_entropy((1 + math.sqrt(1 - c * c)) / 2)


def entanglement_of_formation_2q(rho: DensityMatrix) -> float:
    """
    Entanglement of formation of a two-qubit state, in ebits.
    """
    return eof_from_concurrence(concurrence_wootters(rho))


def ppt_min_eigenvalue(rho: DensityMatrix, subsystem: int = 1) -> float:
    """
    Smallest eigenvalue of the partial transpose of a bipartite state.
    """
    transposed: np.ndarray = partial_transpose(rho, [subsystem])
    return float(np.linalg.eigvalsh((transposed + transposed.conj().T) / 2)[0])


class _RoofProblem():
    """
    Smoothed convex roof objective over decompositions Psi = W V^T with V an m x r isometry.

    Term i contributes d * (det(A_i^dagger A_i) + eps^2)^(1/d), A_i being the (unnormalized) coefficient
    matrix of column i of Psi. With eps = 0 this is the weighted average G-concurrence of the decomposition.
    """
    def __init__(self, w: np.ndarray, d_a: int, d_b: int) -> None:
        self.w: np.ndarray = w
        self.d_a: int = d_a
        self.d_b: int = d_b
        self.d: int = min(d_a, d_b)
        self.transposed: bool = d_a < d_b

    def _blocks(self, v: np.ndarray) -> np.ndarray:
        psi: np.ndarray = self.w @ v.T
        blocks: np.ndarray = psi.T.reshape(-1, self.d_a, self.d_b)
        if self.transposed:
            blocks = blocks.transpose(0, 2, 1)
        return blocks

    def gram_dets(self, v: np.ndarray) -> np.ndarray:
        """det(A_i^dagger A_i) for every term, via singular values."""
        singular: np.ndarray = np.linalg.svd(self._blocks(v), compute_uv=False)
        return np.prod(singular ** 2, axis=1)

    def objective(self, v: np.ndarray, eps: float = 0.0) -> float:
        """Smoothed objective, the true objective for eps = 0."""
        dets: np.ndarray = self.gram_dets(v)
        return float(self.d * np.sum((dets + eps * eps) ** (1 / self.d)))

    def gradient(self, v: np.ndarray, eps: float) -> np.ndarray:
        """Wirtinger gradient d f / d conj(V) of the smoothed objective."""
        blocks: np.ndarray = self._blocks(v)
        gram: np.ndarray = np.einsum('kji,kjl->kil', blocks.conj(), blocks)
        values, vectors = np.linalg.eigh(gram)
        values = np.clip(values, 0, None)
        cofactors: np.ndarray = np.empty_like(values)
        for index in range(self.d):
            cofactors[:, index] = np.prod(np.delete(values, index, axis=1), axis=1)
        adjugate: np.ndarray = np.einsum('kij,kj,klj->kil', vectors, cofactors, vectors.conj())
        dets: np.ndarray = np.prod(values, axis=1)
        scale: np.ndarray = (dets + eps * eps) ** (1 / self.d - 1)
        grad_blocks: np.ndarray = scale[:, None, None] * (blocks @ adjugate)
        if self.transposed:
            grad_blocks = grad_blocks.transpose(0, 2, 1)
        grad_psi: np.ndarray = grad_blocks.reshape(grad_blocks.shape[0], -1).T
        return grad_psi.T @ self.w.conj()


def _retract(v: np.ndarray) -> np.ndarray:
    left, _, right = np.linalg.svd(v, full_matrices=False)
    return left @ right


def _tangent(v: np.ndarray, grad: np.ndarray) -> np.ndarray:
    inner: np.ndarray = v.conj().T @ grad
    return grad - v @ ((inner + inner.conj().T) / 2)


def _descend(problem: _RoofProblem, start: np.ndarray, opts: RoofOptions) -> Tuple[float, int, List[float]]:
    v: np.ndarray = start
    best: float = problem.objective(v)
    history: List[float] = [best]
    iters: int = 0
    per_stage: int = max(1, opts.max_iters // len(SMOOTHING_STAGES))
    for stage, eps in enumerate(SMOOTHING_STAGES):
        budget: int = per_stage if stage < len(SMOOTHING_STAGES) - 1 else max(1, opts.max_iters - per_stage * stage)
        current: float = problem.objective(v, eps)
        step: float = 1.0
        for _ in range(budget):
            direction: np.ndarray = _tangent(v, problem.gradient(v, eps))
            slope: float = float(np.real(np.vdot(direction, direction)))
            if slope < 1e-30:
                break
            accepted: bool = False
            candidate: np.ndarray = v
            value: float = current
            while step > 1e-14:
                candidate = _retract(v - step * direction)
                value = problem.objective(candidate, eps)
                if value <= current - 1e-4 * step * slope:
                    accepted = True
                    break
                step /= 2
            iters += 1
            if not accepted:
                history.append(best)
                break
            change: float = current - value
            v, current = candidate, value
            step = min(step * 2, 1.0)
            best = min(best, problem.objective(v))
            history.append(best)
            if change < opts.tol * max(1.0, abs(current)):
                break
    return best, iters, history


def convex_roof(rho: DensityMatrix, d: Optional[int] = None, opts: Optional[RoofOptions] = None) -> RoofResult:
    """
    Upper bound on the convex roof of the G-concurrence by local descent over decompositions.

    Args:
        rho (DensityMatrix): Bipartite state.
        d (Optional[int]): Local dimension if rho carries no two-party split.
        opts (Optional[RoofOptions]): Optimizer budget.

    Returns:
        RoofResult: Best value over the restarts (ties go to the lower restart index).
    """
    opts = opts or RoofOptions()
    d_a, d_b = bipartition(rho.dims, rho.dim, d)
    values, vectors = eig_hermitian(rho.matrix, tol=np.inf)
    rank: int = int(np.sum(values > RANK_CUTOFF * max(values[0], 1.0)))
    if rank <= 1:
        LOG.info('State is pure, using the closed form')
        value: float = g_concurrence_pure(PureState.normalized(vectors[:, 0], (d_a, d_b)), d_a, d_b)
        return RoofResult(value=value, method='pure', history=[value])
    w: np.ndarray = vectors[:, :rank] * np.sqrt(values[:rank])
    terms: int = opts.terms if opts.terms is not None else 2 * rank
    if terms < rank:
        raise ValidationError(f'roof.terms={terms} is smaller than the rank {rank} of the state')
    problem: _RoofProblem = _RoofProblem(w, d_a, d_b)

    def run(restart: int) -> Tuple[float, int, List[float]]:
        if restart == 0:
            start: np.ndarray = np.zeros((terms, rank), dtype=np.complex128)
            start[:rank, :rank] = np.eye(rank)
        else:
            start = random_isometry(terms, rank, np.random.default_rng(opts.seed + restart))
        outcome: Tuple[float, int, List[float]] = _descend(problem, start, opts)
        LOG.debug('Roof restart %d finished at %.12g after %d iterations', restart, outcome[0], outcome[1])
        return outcome

    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as executor:
            outcomes: List[Tuple[float, int, List[float]]] = list(executor.map(run, range(opts.restarts)))
    else:
        outcomes = [run(restart) for restart in range(opts.restarts)]
    best_index: int = min(range(len(outcomes)), key=lambda index: (outcomes[index][0], index))
    best_value, iters, history = outcomes[best_index]
    if iters >= opts.max_iters:
        LOG.warning('Convex roof optimizer stopped on its iteration budget (%d)', opts.max_iters)
    return RoofResult(value=min(max(best_value, 0.0), 1.0), method='roof', iters=iters, restart=best_index, history=history)


def g_concurrence_mixed(rho: DensityMatrix, d: Optional[int] = None, opts: Optional[RoofOptions] = None) -> float:
    """
    Upper bound on the G-concurrence of a mixed state (its convex roof), deterministic for a fixed seed.
    """
    return convex_roof(rho, d, opts).value
