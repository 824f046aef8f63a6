"""
Module for effective entanglement: quality factors of channels, the effective state of a bipartite state
seen through restricted measurements, and the superselection rule restricted measure.
"""
from __future__ import annotations
from typing import TYPE_CHECKING

from dataclasses import dataclass, field
from enum import Enum
import logging

import numpy as np

from effent.errors import ValidationError, DimensionError
from effent.qcore import DensityMatrix, resolve_tol
from effent.channels import KrausChannel, apply, choi_state, is_identity, tensor_channels
from effent.entanglement import RoofOptions, concurrence_wootters, entanglement_of_formation_2q, g_concurrence_mixed, g_concurrence_pure, \
    ppt_min_eigenvalue

if TYPE_CHECKING:
    from typing import List, Optional, Sequence, Tuple

LOG: logging.Logger = logging.getLogger("effent.effective")

PROBABILITY_CUTOFF: float = 1e-12


class BoundKind(Enum):
    """
    Whether a reported value is the exact effective entanglement or an upper bound on it.
    """
    EXACT = 'exact'
    UPPER_BOUND = 'upper_bound'

    def __str__(self) -> str:
        return self.value


class Measure(Enum):
    """
    Entanglement measure applied to the number blocks of the superselection rule restricted measure.
    """
    AUTO = 'auto'
    EOF2Q = 'eof2q'
    GCONC = 'gconc'

    def __str__(self) -> str:
        return self.value


@dataclass
class EffectiveResult:
    """
    Effective G-concurrence together with its ingredients.
    """
    value: float
    kind: BoundKind
    q_a: float
    q_b: float
    g: float


@dataclass
class BlockTerm:
    """One local number sector (n_a, n_b) with its weight and entanglement."""
    n_a: int
    n_b: int
    p: float
    e: float


@dataclass
class WisemanVaccaroResult:
    """
    Superselection rule restricted entanglement sum_n p_n E(rho_n).
    """
    value: float
    kind: BoundKind
    measure: Measure
    blocks: List[BlockTerm] = field(default_factory=list)


@dataclass
class BreakingProbe:
    """
    Quality factor of a channel and, for qubits, whether its Choi state has a positive partial transpose.
    """
    q: float
    ppt_separable_hint: Optional[bool]


def _local_dims(rho: DensityMatrix, ch_a: KrausChannel, ch_b: KrausChannel) -> Tuple[int, int]:
    if len(rho.dims) == 2:
        d_a, d_b = rho.dims
    elif rho.dim == ch_a.d_in * ch_b.d_in:
        d_a, d_b = ch_a.d_in, ch_b.d_in
    else:
        raise DimensionError(f'State of dims {list(rho.dims)} does not fit channels on {ch_a.d_in} and {ch_b.d_in}')
    if (d_a, d_b) != (ch_a.d_in, ch_b.d_in):
        raise DimensionError(f'State of dims {[d_a, d_b]} does not fit channels on {ch_a.d_in} and {ch_b.d_in}')
    return d_a, d_b


def quality_factor(ch: KrausChannel, d: Optional[int] = None, opts: Optional[RoofOptions] = None) -> float:
    """
    Quality factor Q = G_d of the Choi state ($ (x) 1)|phi_d><phi_d| of a channel.

    For qubits the two-qubit concurrence closed form is used and the value is exact; for d >= 3 it comes
    from the convex roof optimizer and is an upper estimate.

    Args:
        ch (KrausChannel): Square CPTP channel.
        d (Optional[int]): Dimension, defaults to the channel dimension.
        opts (Optional[RoofOptions]): Optimizer budget for d >= 3.

    Returns:
        float: Q in [0, 1].
    """
    d = ch.d_in if d is None else d
    if ch.d_in != d or ch.d_out != d:
        raise DimensionError(f'Quality factor on dimension {d} needs a channel {d} -> {d}, got {ch.d_in} -> {ch.d_out}')
    if d < 2:
        raise DimensionError(f'Quality factor needs d >= 2, got {d}')
    choi: DensityMatrix = choi_state(ch, side='first')
    if d == 2:
        return concurrence_wootters(choi)
    LOG.info('Quality factor of %s from the convex roof optimizer', ch.name)
    return g_concurrence_mixed(choi, d, opts)


def effective_state(rho: DensityMatrix, ch_a: KrausChannel, ch_b: KrausChannel) -> DensityMatrix:
    """
    Effective state ($_A (x) $_B)[rho].
    """
    _local_dims(rho, ch_a, ch_b)
    output: DensityMatrix = apply(tensor_channels(ch_a, ch_b), rho.with_dims((ch_a.d_in, ch_b.d_in)))
    return output.with_dims((ch_a.d_out, ch_b.d_out))


def g_concurrence(rho: DensityMatrix, opts: Optional[RoofOptions] = None, tol: Optional[float] = None) -> float:
    """
    G-concurrence of a bipartite state: closed forms for pure states and two qubits, the convex roof otherwise.
    """
    if len(rho.dims) != 2:
        raise DimensionError(f'Bipartite state expected, got dims {list(rho.dims)}')
    if rho.is_pure(tol):
        return g_concurrence_pure(rho.to_pure(), *rho.dims)
    if rho.dims == (2, 2):
        return concurrence_wootters(rho)
    return g_concurrence_mixed(rho, opts=opts)


def effective_g_concurrence(rho: DensityMatrix, ch_a: KrausChannel, ch_b: KrausChannel, d: Optional[int] = None,
                            opts: Optional[RoofOptions] = None, tol: Optional[float] = None) -> EffectiveResult:
    """
    Effective G-concurrence Q($_A) Q($_B) G_d(rho).

    The value is exact when rho is pure and at most one of the channels acts nontrivially, otherwise it is
    an upper bound on the effective entanglement.

    Args:
        rho (DensityMatrix): Bipartite state on d x d.
        ch_a (KrausChannel): Channel restricting the first party.
        ch_b (KrausChannel): Channel restricting the second party.
        d (Optional[int]): Local dimension, taken from the state if omitted.
        opts (Optional[RoofOptions]): Optimizer budget for mixed states and d >= 3 quality factors.
        tol (Optional[float]): Purity and identity tolerance.

    Returns:
        EffectiveResult: value, kind, both quality factors and G_d(rho).
    """
    d_a, d_b = _local_dims(rho, ch_a, ch_b)
    if d is not None and (d_a, d_b) != (d, d):
        raise DimensionError(f'Requested d={d} does not match the state dims {[d_a, d_b]}')
    state: DensityMatrix = rho.with_dims((d_a, d_b))
    q_a: float = quality_factor(ch_a, d_a, opts)
    q_b: float = quality_factor(ch_b, d_b, opts)
    g: float = g_concurrence(state, opts, tol)
    nontrivial: int = int(not is_identity(ch_a, tol)) + int(not is_identity(ch_b, tol))
    kind: BoundKind = BoundKind.EXACT if state.is_pure(tol) and nontrivial <= 1 else BoundKind.UPPER_BOUND
    return EffectiveResult(value=q_a * q_b * g, kind=kind, q_a=q_a, q_b=q_b, g=g)


def _check_partition(blocks: Sequence[Sequence[int]], d: int, party: str) -> List[List[int]]:
    checked: List[List[int]] = [sorted(int(i) for i in block) for block in blocks]
    if sorted(i for block in checked for i in block) != list(range(d)):
        raise ValidationError(f'Number blocks of party {party} {checked} do not partition the basis of dimension {d}')
    return checked


def _block_entanglement(block: DensityMatrix, measure: Measure, opts: Optional[RoofOptions], tol: Optional[float]) -> float:
    k_a, k_b = block.dims
    if min(k_a, k_b) == 1:
        return 0.0
    if measure == Measure.EOF2Q:
        if (k_a, k_b) != (2, 2):
            raise ValidationError(f'Entanglement of formation needs two-qubit blocks, got a {k_a} x {k_b} block')
        return entanglement_of_formation_2q(block)
    return g_concurrence(block, opts, tol)


def wiseman_vaccaro(rho: DensityMatrix, local_number_blocks: Tuple[Sequence[Sequence[int]], Sequence[Sequence[int]]],
                    measure: Measure = Measure.AUTO, opts: Optional[RoofOptions] = None, tol: Optional[float] = None) -> WisemanVaccaroResult:
    """
    Entanglement under a strict superselection rule, sum_n p_n E(rho_n / p_n) over local number sectors.

    Args:
        rho (DensityMatrix): Bipartite state with a fixed total particle number.
        local_number_blocks (Tuple[Sequence[Sequence[int]], Sequence[Sequence[int]]]): For each party the basis
            indices of every particle number sector, the position in the list being the particle number.
        measure (Measure): Entanglement of formation for 2 x 2 blocks or G-concurrence, AUTO picks the
            former for two-qubit blocks and the latter otherwise.
        opts (Optional[RoofOptions]): Optimizer budget for mixed blocks beyond two qubits.
        tol (Optional[float]): Tolerance of the purity and fixed total number checks.

    Returns:
        WisemanVaccaroResult: The value, flagged as an upper bound for mixed rho, and the per-sector table.
    """
    if len(rho.dims) != 2:
        raise DimensionError(f'Bipartite state expected, got dims {list(rho.dims)}')
    if len(local_number_blocks) != 2:
        raise ValidationError('Number blocks are needed for exactly two parties')
    d_a, d_b = rho.dims
    blocks_a: List[List[int]] = _check_partition(local_number_blocks[0], d_a, 'A')
    blocks_b: List[List[int]] = _check_partition(local_number_blocks[1], d_b, 'B')
    tol = resolve_tol(tol)
    tensor4: np.ndarray = rho.matrix.reshape(d_a, d_b, d_a, d_b)
    totals: dict = {}
    sectors: List[Tuple[int, int, float]] = []
    for n_a, indices_a in enumerate(blocks_a):
        for n_b, indices_b in enumerate(blocks_b):
            if len(indices_a) == 0 or len(indices_b) == 0:
                continue
            sub: np.ndarray = tensor4[np.ix_(indices_a, indices_b, indices_a, indices_b)]
            weight: float = float(np.real(np.einsum('ijij->', sub)))
            sectors.append((n_a, n_b, weight))
            totals[n_a + n_b] = totals.get(n_a + n_b, 0.0) + weight
    populated: List[int] = [total for total, weight in totals.items() if weight > tol]
    if len(populated) > 1:
        raise ValidationError(f'State is not supported on a fixed total particle number, populated totals {sorted(populated)}')
    chosen: Measure = measure
    terms: List[BlockTerm] = []
    value: float = 0.0
    for n_a, n_b, weight in sectors:
        if weight < PROBABILITY_CUTOFF:
            continue
        k_a, k_b = len(blocks_a[n_a]), len(blocks_b[n_b])
        sub = tensor4[np.ix_(blocks_a[n_a], blocks_b[n_b], blocks_a[n_a], blocks_b[n_b])].reshape(k_a * k_b, k_a * k_b) / weight
        block: DensityMatrix = DensityMatrix(sub, (k_a, k_b), validate=False)
        block_measure: Measure = measure
        if measure == Measure.AUTO:
            block_measure = Measure.EOF2Q if (k_a, k_b) == (2, 2) else Measure.GCONC
            chosen = block_measure if min(k_a, k_b) > 1 else chosen
        entanglement: float = _block_entanglement(block, block_measure, opts, tol)
        LOG.debug('Number sector (%d, %d): p=%.12g E=%.12g', n_a, n_b, weight, entanglement)
        terms.append(BlockTerm(n_a=n_a, n_b=n_b, p=weight, e=entanglement))
        value += weight * entanglement
    kind: BoundKind = BoundKind.EXACT if rho.is_pure(tol) else BoundKind.UPPER_BOUND
    return WisemanVaccaroResult(value=value, kind=kind, measure=chosen, blocks=terms)


def entanglement_breaking_probe(ch: KrausChannel, d: Optional[int] = None, opts: Optional[RoofOptions] = None,
                                tol: Optional[float] = None) -> BreakingProbe:
    """
    Quality factor of a channel plus, for qubit channels, the exact separability test of its Choi state
    (positive partial transpose).
    """
    q: float = quality_factor(ch, d, opts)
    hint: Optional[bool] = None
    if ch.d_in == 2:
        hint = ppt_min_eigenvalue(choi_state(ch)) >= -resolve_tol(tol)
    return BreakingProbe(q=q, ppt_separable_hint=hint)
