"""
Module for completely positive maps in Kraus form and for POVMs.

A channel acts as rho -> sum_j K_j rho K_j^dagger (Schroedinger picture) and its adjoint as
P -> sum_j K_j^dagger P K_j (Heisenberg picture). Channels are only stored in Kraus form,
the Choi state is computed on demand.
"""
from __future__ import annotations
from typing import TYPE_CHECKING

import logging
import math

import numpy as np

from effent.errors import ValidationError, DimensionError
from effent.qcore import DensityMatrix, as_matrix, hermiticity_defect, max_entangled, min_eigenvalue, random_isometry, resolve_tol

if TYPE_CHECKING:
    from typing import Iterable, List, Optional, Sequence, Tuple

LOG: logging.Logger = logging.getLogger("effent.channels")


class KrausChannel():
    """
    A completely positive map given by its Kraus operators.

    Attributes:
    -----------
    kraus_ops : Tuple[np.ndarray, ...]
        Kraus operators, each d_out x d_in.
    dims_in : Tuple[int, ...]
        Subsystem split of the input space.
    dims_out : Tuple[int, ...]
        Subsystem split of the output space.
    cptp : bool
        Whether the map is declared (and was checked to be) trace preserving.
    name : str
        Human readable description used in logs and results.
    """
    def __init__(self, kraus_ops: Sequence, dims_in: Optional[Sequence[int]] = None, dims_out: Optional[Sequence[int]] = None,
                 cptp: bool = True, name: Optional[str] = None, tol: Optional[float] = None) -> None:
        if len(kraus_ops) == 0:
            raise ValidationError('A channel needs at least one Kraus operator')
        operators: List[np.ndarray] = [as_matrix(op, name=f'Kraus operator {index}') for index, op in enumerate(kraus_ops)]
        shape: Tuple[int, int] = operators[0].shape
        for index, op in enumerate(operators):
            if op.shape != shape:
                raise DimensionError(f'Kraus operator {index} has shape {op.shape}, expected {shape}')
        d_out, d_in = shape
        self.dims_in: Tuple[int, ...] = _split(dims_in, d_in, 'dims_in')
        self.dims_out: Tuple[int, ...] = _split(dims_out, d_out, 'dims_out')
        self.kraus_ops: Tuple[np.ndarray, ...] = tuple(operators)
        self.cptp: bool = cptp
        self.name: str = name or f'kraus[{len(operators)}]'
        if cptp:
            defect: float = self.completeness_defect()
            if defect > resolve_tol(tol):
                raise ValidationError(f'Channel {self.name} is declared CPTP but max |sum K^dagger K - I| = {defect:.3g}')

    @property
    def d_in(self) -> int:
        """Input dimension."""
        return self.kraus_ops[0].shape[1]

    @property
    def d_out(self) -> int:
        """Output dimension."""
        return self.kraus_ops[0].shape[0]

    def stacked(self) -> np.ndarray:
        """Kraus operators as one (k, d_out, d_in) array."""
        return np.stack(self.kraus_ops)

    def completeness_defect(self) -> float:
        """Returns max |sum_j K_j^dagger K_j - I| entrywise."""
        stacked: np.ndarray = self.stacked()
        total: np.ndarray = np.einsum('kji,kjl->il', stacked.conj(), stacked)
        return float(np.max(np.abs(total - np.eye(self.d_in))))

    def __repr__(self) -> str:
        return f'KrausChannel({self.name}, d_in={self.d_in}, d_out={self.d_out}, kraus={len(self.kraus_ops)})'


def _split(dims: Optional[Sequence[int]], size: int, name: str) -> Tuple[int, ...]:
    if dims is None:
        return (size,)
    checked: Tuple[int, ...] = tuple(int(d) for d in dims)
    if any(d < 1 for d in checked) or math.prod(checked) != size:
        raise DimensionError(f'{name} {list(checked)} does not match dimension {size}')
    return checked


class PovmSet():
    """
    A finite POVM {P_k} on a declared (composite) space.
    """
    def __init__(self, elements: Sequence, space_dims: Optional[Sequence[int]] = None, tol: Optional[float] = None) -> None:
        if len(elements) == 0:
            raise ValidationError('A POVM needs at least one element')
        tol = resolve_tol(tol)
        checked: List[np.ndarray] = [as_matrix(element, name=f'POVM element {index}') for index, element in enumerate(elements)]
        dim: int = checked[0].shape[0]
        for index, element in enumerate(checked):
            if element.shape != (dim, dim):
                raise DimensionError(f'POVM element {index} has shape {element.shape}, expected {(dim, dim)}')
            if hermiticity_defect(element) > tol:
                raise ValidationError(f'POVM element {index} is not hermitian')
            if min_eigenvalue(element) < -tol:
                raise ValidationError(f'POVM element {index} is not positive semidefinite')
        defect: float = float(np.max(np.abs(sum(checked) - np.eye(dim))))
        if defect > tol:
            raise ValidationError(f'POVM elements do not sum to the identity (max deviation {defect:.3g})')
        self.elements: Tuple[np.ndarray, ...] = tuple(checked)
        self.space_dims: Tuple[int, ...] = _split(space_dims, dim, 'space_dims')

    @property
    def dim(self) -> int:
        """Dimension of the space the POVM acts on."""
        return self.elements[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        """Number of outcomes."""
        return len(self.elements)

    def stacked(self) -> np.ndarray:
        """Elements as one (n, d, d) array."""
        return np.stack(self.elements)

    def probabilities(self, rho: DensityMatrix) -> np.ndarray:
        """
        Outcome probabilities Tr(P_k rho).
        """
        if rho.dim != self.dim:
            raise DimensionError(f'POVM on dimension {self.dim} applied to a state of dimension {rho.dim}')
        return np.real(np.einsum('kij,ji->k', self.stacked(), rho.matrix))

    def __repr__(self) -> str:
        return f'PovmSet(outcomes={self.n_outcomes}, space_dims={list(self.space_dims)})'


def apply(ch: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """
    Applies the channel to a state, sum_j K_j rho K_j^dagger.

    Args:
        ch (KrausChannel): The channel.
        rho (DensityMatrix): Input state of dimension ch.d_in.

    Returns:
        DensityMatrix: The output state. Its dims are ch.dims_out, unless the channel does not change
        the dimension and rho has a finer split, which is then kept.
    """
    if rho.dim != ch.d_in:
        raise DimensionError(f'Channel {ch.name} takes dimension {ch.d_in}, state has dimension {rho.dim}')
    stacked: np.ndarray = ch.stacked()
    output: np.ndarray = np.einsum('kij,jl,kml->im', stacked, rho.matrix, stacked.conj())
    dims: Tuple[int, ...] = ch.dims_out
    if ch.d_in == ch.d_out and ch.dims_in != rho.dims and len(ch.dims_in) == 1:
        dims = rho.dims
    return DensityMatrix(output, dims, validate=False)


def adjoint_apply(ch: KrausChannel, p: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """
    Heisenberg picture action sum_j K_j^dagger P K_j.

    Args:
        ch (KrausChannel): The channel.
        p (np.ndarray): Hermitian operator on the output space.
        tol (Optional[float]): Tolerance of the hermiticity check.

    Returns:
        np.ndarray: Hermitian operator on the input space.
    """
    operator: np.ndarray = np.asarray(p, dtype=np.complex128)
    if operator.shape != (ch.d_out, ch.d_out):
        raise DimensionError(f'Channel {ch.name} has output dimension {ch.d_out}, operator has shape {operator.shape}')
    if hermiticity_defect(operator) > resolve_tol(tol):
        raise ValidationError('adjoint_apply needs a hermitian operator')
    stacked: np.ndarray = ch.stacked()
    return np.einsum('kji,jl,klm->im', stacked.conj(), operator, stacked)


def adjoint_povm(ch: KrausChannel, povm: PovmSet) -> PovmSet:
    """Maps every POVM element through the adjoint channel."""
    return PovmSet([adjoint_apply(ch, element) for element in povm.elements], ch.dims_in)


def tensor_channels(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    """
    Tensor product channel with Kraus operators K_i (x) L_j.
    """
    operators: List[np.ndarray] = [np.kron(k, l) for k in a.kraus_ops for l in b.kraus_ops]
    return KrausChannel(operators, a.dims_in + b.dims_in, a.dims_out + b.dims_out, cptp=a.cptp and b.cptp, name=f'{a.name} x {b.name}')


def compose(first: KrausChannel, second: KrausChannel) -> KrausChannel:
    """
    Sequential composition, first applied first.
    """
    if first.d_out != second.d_in:
        raise DimensionError(f'Cannot compose {first.name} (d_out={first.d_out}) with {second.name} (d_in={second.d_in})')
    operators: List[np.ndarray] = [l @ k for k in first.kraus_ops for l in second.kraus_ops]
    return KrausChannel(operators, first.dims_in, second.dims_out, cptp=first.cptp and second.cptp, name=f'{second.name} o {first.name}')


def apply_to_subsystem(ch: KrausChannel, rho: DensityMatrix, index: int) -> DensityMatrix:
    """
    Applies a channel to one tensor factor of rho, identity elsewhere.

    Args:
        ch (KrausChannel): Channel with d_in == d_out == rho.dims[index].
        rho (DensityMatrix): The state.
        index (int): Subsystem index.

    Returns:
        DensityMatrix: The state after the channel, dims unchanged.
    """
    if not 0 <= index < len(rho.dims):
        raise DimensionError(f'Subsystem index {index} is out of range for dims {list(rho.dims)}')
    if ch.d_in != rho.dims[index] or ch.d_out != ch.d_in:
        raise DimensionError(f'Channel {ch.name} does not fit subsystem {index} of dimension {rho.dims[index]}')
    before: int = math.prod(rho.dims[:index])
    after: int = math.prod(rho.dims[index + 1:])
    embedded: List[np.ndarray] = [np.kron(np.kron(np.eye(before), k), np.eye(after)) for k in ch.kraus_ops]
    return apply(KrausChannel(embedded, rho.dims, rho.dims, cptp=False, name=ch.name), rho)


def choi_state(ch: KrausChannel, side: str = 'second') -> DensityMatrix:
    """
    Choi state of a square CPTP channel.

    Args:
        ch (KrausChannel): Channel with d_in == d_out == d.
        side (str): 'second' for (1 (x) $)|phi_d><phi_d|, 'first' for ($ (x) 1)|phi_d><phi_d|.

    Returns:
        DensityMatrix: The Choi state on dims (d, d).
    """
    if ch.d_in != ch.d_out:
        raise DimensionError(f'Choi state needs a square channel, {ch.name} maps {ch.d_in} to {ch.d_out}')
    if not ch.cptp:
        raise ValidationError(f'Choi state needs a CPTP channel, {ch.name} is not declared CPTP')
    if side not in ('first', 'second'):
        raise ValidationError(f"side must be 'first' or 'second', got {side!r}")
    d: int = ch.d_in
    phi: np.ndarray = max_entangled(d).amplitudes if d >= 2 else np.ones(1, dtype=np.complex128)
    identity: np.ndarray = np.eye(d)
    vectors: List[np.ndarray] = [(np.kron(identity, k) if side == 'second' else np.kron(k, identity)) @ phi for k in ch.kraus_ops]
    matrix: np.ndarray = sum(np.outer(v, v.conj()) for v in vectors)
    return DensityMatrix(matrix, (d, d), validate=False)


def is_identity(ch: KrausChannel, tol: Optional[float] = None) -> bool:
    """
    Checks whether a channel is the identity map, via its entanglement fidelity sum_j |Tr K_j|^2 / d^2.
    """
    if ch.d_in != ch.d_out or not ch.cptp:
        return False
    fidelity: float = sum(abs(np.trace(k)) ** 2 for k in ch.kraus_ops) / ch.d_in ** 2
    return abs(fidelity - 1) <= resolve_tol(tol)


def _check_rate(value: float, name: str) -> float:
    if not 0 <= value <= 1:
        raise ValidationError(f'{name} must be in [0, 1], got {value}')
    return float(value)


def identity_channel(d: int = 2) -> KrausChannel:
    """Identity channel on dimension d."""
    return KrausChannel([np.eye(d)], name='identity')


def amplitude_damping(gamma: float) -> KrausChannel:
    """
    Qubit amplitude damping with loss rate gamma:
    E_0 = |0><0| + sqrt(1-gamma)|1><1|, E_1 = sqrt(gamma)|0><1|.
    """
    gamma = _check_rate(gamma, 'amplitude damping rate gamma')
    e_0: np.ndarray = np.array([[1, 0], [0, math.sqrt(1 - gamma)]])
    e_1: np.ndarray = np.array([[0, math.sqrt(gamma)], [0, 0]])
    return KrausChannel([e_0, e_1], name=f'amplitude-damping({gamma:g})')


def phase_damping(lam: float) -> KrausChannel:
    """
    Qubit phase damping with rate lambda:
    E_0 = |0><0| + sqrt(1-lambda)|1><1|, E_1 = sqrt(lambda)|1><1|.
    """
    lam = _check_rate(lam, 'phase damping rate lambda')
    e_0: np.ndarray = np.array([[1, 0], [0, math.sqrt(1 - lam)]])
    e_1: np.ndarray = np.array([[0, 0], [0, math.sqrt(lam)]])
    return KrausChannel([e_0, e_1], name=f'phase-damping({lam:g})')


def ssr_dephasing(number_blocks: Sequence[Iterable[int]], d: Optional[int] = None) -> KrausChannel:
    """
    Dephasing between blocks of basis states, Kraus operators are the block projectors Pi_n.

    Args:
        number_blocks (Sequence[Iterable[int]]): Basis index sets, one per particle number sector.
            They must partition range(d).
        d (Optional[int]): Dimension, defaults to the largest index plus one.

    Returns:
        KrausChannel: The block dephasing channel.
    """
    blocks: List[List[int]] = [sorted(int(i) for i in block) for block in number_blocks]
    indices: List[int] = sorted(i for block in blocks for i in block)
    if len(indices) == 0:
        raise ValidationError('SSR dephasing needs at least one non-empty block')
    d = indices[-1] + 1 if d is None else d
    if indices != list(range(d)) or any(len(block) == 0 for block in blocks):
        raise ValidationError(f'Number blocks {blocks} do not partition the basis of dimension {d}')
    projectors: List[np.ndarray] = []
    for block in blocks:
        diagonal: np.ndarray = np.zeros(d)
        diagonal[block] = 1
        projectors.append(np.diag(diagonal))
    return KrausChannel(projectors, name=f'ssr{blocks}')


def complete_dephasing(d: int = 2) -> KrausChannel:
    """Dephasing in the computational basis."""
    return ssr_dephasing([[i] for i in range(d)], d)


def unitary_channel(u: np.ndarray, tol: Optional[float] = None) -> KrausChannel:
    """
    Channel rho -> U rho U^dagger.
    """
    matrix: np.ndarray = as_matrix(u, name='unitary')
    if matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f'Unitary must be square, got shape {matrix.shape}')
    defect: float = float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0]))))
    if defect > resolve_tol(tol):
        raise ValidationError(f'Matrix is not unitary (max |U^dagger U - I| = {defect:.3g})')
    return KrausChannel([matrix], name='unitary', tol=tol)


def depolarizing(p: float, d: int = 2) -> KrausChannel:
    """
    Depolarizing channel rho -> (1-p) rho + p I/d, Kraus operators from the Weyl (shift and clock) basis.
    """
    p = _check_rate(p, 'depolarizing probability p')
    if d < 2:
        raise ValidationError(f'Depolarizing channel needs d >= 2, got {d}')
    shift: np.ndarray = np.roll(np.eye(d), 1, axis=0)
    clock: np.ndarray = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    operators: List[np.ndarray] = []
    for a in range(d):
        for b in range(d):
            weight: float = p / d ** 2 + (1 - p if a == 0 and b == 0 else 0)
            if weight > 0:
                operators.append(math.sqrt(weight) * np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
    return KrausChannel(operators, name=f'depolarizing({p:g})')


def random_channel(d_in: int, d_out: int, rng: np.random.Generator, n_kraus: Optional[int] = None) -> KrausChannel:
    """
    Random CPTP channel from a Haar random isometry split into Kraus blocks.
    """
    n_kraus = d_in * d_out if n_kraus is None else n_kraus
    if n_kraus < 1 or n_kraus * d_out < d_in:
        raise ValidationError(f'Cannot build a CPTP channel {d_in} -> {d_out} with {n_kraus} Kraus operators')
    isometry: np.ndarray = random_isometry(n_kraus * d_out, d_in, rng)
    operators: List[np.ndarray] = [isometry[j * d_out:(j + 1) * d_out, :] for j in range(n_kraus)]
    return KrausChannel(operators, name=f'random({d_in}->{d_out})')
