"""
Module with the dense complex linear algebra everything else in effent builds on.

Operators are plain ``numpy.ndarray`` objects of dtype ``complex128``. States carry their
subsystem dimensions explicitly (``dims``), the first entry being the slowest varying
tensor factor. All objects are read-only after construction.
"""
from __future__ import annotations
from typing import TYPE_CHECKING

import logging
import math

import numpy as np

from effent.errors import ValidationError, DimensionError

if TYPE_CHECKING:
    from typing import Iterable, Optional, Sequence, Tuple, Union

LOG: logging.Logger = logging.getLogger("effent.qcore")

DEFAULT_TOL: float = 1e-9


def resolve_tol(tol: Optional[float]) -> float:
    """
    Returns the tolerance to use for a validity check.

    Args:
        tol (Optional[float]): Tolerance passed by the caller, None for the default.

    Returns:
        float: The tolerance.
    """
    if tol is None:
        return DEFAULT_TOL
    if tol < 0:
        raise ValidationError(f'Tolerance must not be negative, got {tol}')
    return tol


def set_default_tol(tol: float) -> None:
    """
    Replaces the tolerance used by every check that is not given an explicit one.
    """
    global DEFAULT_TOL  # pylint: disable=global-statement
    if tol < 0:
        raise ValidationError(f'Tolerance must not be negative, got {tol}')
    DEFAULT_TOL = tol


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _check_dims(dims: Sequence[int], size: int, name: str) -> Tuple[int, ...]:
    checked: Tuple[int, ...] = tuple(int(d) for d in dims)
    if len(checked) == 0 or any(d < 1 for d in checked):
        raise DimensionError(f'{name}: subsystem dimensions must be positive, got {list(dims)}')
    if math.prod(checked) != size:
        raise DimensionError(f'{name}: product of dims {list(checked)} does not match dimension {size}')
    return checked


def as_matrix(data: Union[np.ndarray, Sequence], name: str = 'matrix') -> np.ndarray:
    """
    Converts array-like input into a read-only two dimensional complex matrix.

    Args:
        data: Array-like input.
        name (str): Name used in error messages.

    Returns:
        np.ndarray: Complex matrix (copy of the input).
    """
    matrix: np.ndarray = np.array(data, dtype=np.complex128)
    if matrix.ndim != 2:
        raise DimensionError(f'{name} must be two dimensional, got shape {matrix.shape}')
    return _frozen(matrix)


def hermiticity_defect(matrix: np.ndarray) -> float:
    """Returns max |M - M^dagger| entrywise."""
    if matrix.shape[0] != matrix.shape[1]:
        return math.inf
    return float(np.max(np.abs(matrix - matrix.conj().T), initial=0.0))


def is_hermitian(matrix: np.ndarray, tol: Optional[float] = None) -> bool:
    """Checks hermiticity within an absolute tolerance."""
    return hermiticity_defect(matrix) <= resolve_tol(tol)


def min_eigenvalue(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of the hermitian part of a square matrix."""
    hermitian_part: np.ndarray = (matrix + matrix.conj().T) / 2
    return float(np.linalg.eigvalsh(hermitian_part)[0])


def is_psd(matrix: np.ndarray, tol: Optional[float] = None) -> bool:
    """Checks that a matrix is hermitian and positive semidefinite within tolerance."""
    tol = resolve_tol(tol)
    return is_hermitian(matrix, tol) and min_eigenvalue(matrix) >= -tol


def allclose(a: np.ndarray, b: np.ndarray, atol: float) -> bool:
    """
    Entrywise comparison with an explicit absolute tolerance.

    Args:
        a (np.ndarray): First matrix.
        b (np.ndarray): Second matrix.
        atol (float): Absolute tolerance, no relative tolerance is applied.

    Returns:
        bool: True if shapes agree and max |a - b| <= atol.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    return bool(np.max(np.abs(a - b), initial=0.0) <= atol)


class DensityMatrix():
    """
    A density matrix together with the dimensions of its tensor factors.

    Attributes:
    -----------
    matrix : np.ndarray
        Square complex matrix, hermitian, positive semidefinite and of unit trace.
    dims : Tuple[int, ...]
        Subsystem dimensions, their product is the matrix dimension.
    """
    def __init__(self, matrix: Union[np.ndarray, Sequence], dims: Optional[Sequence[int]] = None, tol: Optional[float] = None,
                 validate: bool = True) -> None:
        array: np.ndarray = np.array(matrix, dtype=np.complex128)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise DimensionError(f'Density matrix must be square, got shape {array.shape}')
        self.dims: Tuple[int, ...] = _check_dims(dims if dims is not None else (array.shape[0],), array.shape[0], 'density matrix')
        if validate:
            tol = resolve_tol(tol)
            defect: float = hermiticity_defect(array)
            if defect > tol:
                raise ValidationError(f'Density matrix is not hermitian (max |M - M^dagger| = {defect:.3g})')
            smallest: float = min_eigenvalue(array)
            if smallest < -tol:
                raise ValidationError(f'Density matrix is not positive semidefinite (min eigenvalue {smallest:.3g})')
            trace: complex = np.trace(array)
            if abs(trace - 1) > tol:
                raise ValidationError(f'Density matrix does not have unit trace (trace {trace.real:.12g})')
        self.matrix: np.ndarray = _frozen(array)

    @property
    def dim(self) -> int:
        """Total dimension."""
        return self.matrix.shape[0]

    def purity(self) -> float:
        """Returns Tr(rho^2)."""
        return float(np.real(np.vdot(self.matrix.conj().T, self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in descending order."""
        return np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)[::-1]

    def is_pure(self, tol: Optional[float] = None) -> bool:
        """
        Checks whether the state is pure within tolerance.

        Args:
            tol (Optional[float]): Tolerance on the largest eigenvalue being one.

        Returns:
            bool: True if the largest eigenvalue is at least 1 - tol.
        """
        return bool(self.eigenvalues()[0] >= 1 - resolve_tol(tol))

    def to_pure(self) -> PureState:
        """
        Returns the dominant eigenvector as a pure state (meaningful if the state is pure).
        """
        _, vectors = np.linalg.eigh((self.matrix + self.matrix.conj().T) / 2)
        return PureState(vectors[:, -1], self.dims, validate=False)

    def with_dims(self, dims: Sequence[int]) -> DensityMatrix:
        """Returns the same matrix with a different subsystem split."""
        return DensityMatrix(self.matrix, dims, validate=False)

    @classmethod
    def from_pure(cls, state: PureState) -> DensityMatrix:
        """Builds |psi><psi| from a pure state."""
        return cls(np.outer(state.amplitudes, state.amplitudes.conj()), state.dims, validate=False)

    @classmethod
    def maximally_mixed(cls, dims: Sequence[int]) -> DensityMatrix:
        """Returns I/d on the given subsystem dimensions."""
        dim: int = math.prod(dims)
        return cls(np.eye(dim) / dim, dims, validate=False)

    def __repr__(self) -> str:
        return f'DensityMatrix(dims={list(self.dims)})'


class PureState():
    """
    A normalized state vector together with the dimensions of its tensor factors.
    """
    def __init__(self, amplitudes: Union[np.ndarray, Sequence], dims: Optional[Sequence[int]] = None, tol: Optional[float] = None,
                 validate: bool = True) -> None:
        vector: np.ndarray = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        self.dims: Tuple[int, ...] = _check_dims(dims if dims is not None else (vector.shape[0],), vector.shape[0], 'pure state')
        if validate:
            norm: float = float(np.linalg.norm(vector))
            if abs(norm - 1) > resolve_tol(tol):
                raise ValidationError(f'Pure state is not normalized (norm {norm:.12g})')
        self.amplitudes: np.ndarray = _frozen(vector)

    @classmethod
    def normalized(cls, amplitudes: Union[np.ndarray, Sequence], dims: Optional[Sequence[int]] = None) -> PureState:
        """
        Builds a pure state from unnormalized amplitudes.
        """
        vector: np.ndarray = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        norm: float = float(np.linalg.norm(vector))
        if norm == 0:
            raise ValidationError('Cannot normalize the zero vector')
        return cls(vector / norm, dims, validate=False)

    @property
    def dim(self) -> int:
        """Total dimension."""
        return self.amplitudes.shape[0]

    def density(self) -> DensityMatrix:
        """Returns the projector |psi><psi| as a density matrix."""
        return DensityMatrix.from_pure(self)

    def __repr__(self) -> str:
        return f'PureState(dims={list(self.dims)})'


def tensor(a, b):
    """
    Kronecker product, the first argument being the slower varying block index.

    Matrices give matrices; two density matrices give a density matrix and two pure states a
    pure state, with the subsystem dimensions concatenated.

    Args:
        a: First factor (np.ndarray, DensityMatrix or PureState).
        b: Second factor, same kind as a.

    Returns:
        The tensor product of the same kind as the inputs.
    """
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.matrix, b.matrix), a.dims + b.dims, validate=False)
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes), a.dims + b.dims, validate=False)
    if isinstance(a, (DensityMatrix, PureState)) or isinstance(b, (DensityMatrix, PureState)):
        raise ValidationError(f'Cannot form tensor product of {type(a).__name__} and {type(b).__name__}')
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def tensor_all(factors: Iterable):
    """Tensor product of several factors, left to right."""
    result = None
    for factor in factors:
        result = factor if result is None else tensor(result, factor)
    if result is None:
        raise ValidationError('Tensor product of an empty list')
    return result


def _check_subsystems(indices: Iterable[int], dims: Tuple[int, ...]) -> Tuple[int, ...]:
    checked = tuple(sorted(set(int(i) for i in indices)))
    for index in checked:
        if index < 0 or index >= len(dims):
            raise DimensionError(f'Subsystem index {index} is out of range for dims {list(dims)}')
    return checked


def partial_trace(m: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """
    Traces out all subsystems not listed in keep.

    Args:
        m (DensityMatrix): State with at least one subsystem.
        keep (Iterable[int]): Indices of the subsystems that remain. The kept subsystems
            are returned in ascending index order.

    Returns:
        DensityMatrix: Reduced state on the kept subsystems.
    """
    kept: Tuple[int, ...] = _check_subsystems(keep, m.dims)
    if len(kept) == 0:
        raise DimensionError('partial_trace needs at least one subsystem to keep')
    count: int = len(m.dims)
    reshaped: np.ndarray = m.matrix.reshape(m.dims + m.dims)
    for index in sorted(set(range(count)) - set(kept), reverse=True):
        remaining: int = reshaped.ndim // 2
        reshaped = np.trace(reshaped, axis1=index, axis2=index + remaining)
    kept_dims: Tuple[int, ...] = tuple(m.dims[i] for i in kept)
    dim: int = math.prod(kept_dims)
    return DensityMatrix(reshaped.reshape(dim, dim), kept_dims, validate=False)


def partial_transpose(m: DensityMatrix, subsystems: Iterable[int]) -> np.ndarray:
    """
    Partial transpose on the given subsystems.

    Args:
        m (DensityMatrix): The state.
        subsystems (Iterable[int]): Subsystems to transpose.

    Returns:
        np.ndarray: The partially transposed matrix (in general not a state).
    """
    transposed: Tuple[int, ...] = _check_subsystems(subsystems, m.dims)
    count: int = len(m.dims)
    axes = list(range(2 * count))
    for index in transposed:
        axes[index], axes[index + count] = axes[index + count], axes[index]
    return m.matrix.reshape(m.dims + m.dims).transpose(axes).reshape(m.dim, m.dim)


def max_entangled(d: int) -> PureState:
    """
    Maximally entangled state sum_k |kk> / sqrt(d).

    Args:
        d (int): Local dimension, at least 2.

    Returns:
        PureState: The state on dims (d, d).
    """
    if d < 2:
        raise ValidationError(f'Maximally entangled state needs d >= 2, got {d}')
    return PureState(np.eye(d).reshape(-1) / math.sqrt(d), (d, d), validate=False)


def eig_hermitian(m: np.ndarray, tol: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition of a hermitian matrix.

    Args:
        m (np.ndarray): Hermitian matrix.
        tol (Optional[float]): Tolerance of the hermiticity check.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Eigenvalues in descending order and the matching orthonormal
        eigenvectors as columns.
    """
    matrix: np.ndarray = np.asarray(m, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f'eig_hermitian needs a square matrix, got shape {matrix.shape}')
    defect: float = hermiticity_defect(matrix)
    if defect > resolve_tol(tol):
        raise ValidationError(f'Matrix is not hermitian (max |M - M^dagger| = {defect:.3g})')
    values, vectors = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    return values[::-1].copy(), vectors[:, ::-1].copy()


def coefficient_matrix(psi: PureState, d_a: int, d_b: int) -> np.ndarray:
    """
    Coefficient matrix A of psi = sum_ij A_ij |i>|j>.

    Args:
        psi (PureState): Bipartite state.
        d_a (int): Dimension of the first party.
        d_b (int): Dimension of the second party.

    Returns:
        np.ndarray: The d_a x d_b matrix of amplitudes.
    """
    if d_a * d_b != psi.dim:
        raise DimensionError(f'Cannot split a state of dimension {psi.dim} into {d_a} x {d_b}')
    return psi.amplitudes.reshape(d_a, d_b).copy()


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """
    Trace distance 1/2 ||rho - sigma||_1.
    """
    if rho.dim != sigma.dim:
        raise DimensionError(f'Trace distance between dimensions {rho.dim} and {sigma.dim}')
    difference: np.ndarray = rho.matrix - sigma.matrix
    value: float = 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((difference + difference.conj().T) / 2))))
    return min(max(value, 0.0), 1.0)


def ket(index: int, dim: int) -> np.ndarray:
    """Computational basis vector |index> in dimension dim."""
    if not 0 <= index < dim:
        raise DimensionError(f'Basis index {index} out of range for dimension {dim}')
    vector: np.ndarray = np.zeros(dim, dtype=np.complex128)
    vector[index] = 1
    return vector


def projector(indices: Iterable[int], dim: int) -> np.ndarray:
    """Diagonal projector onto the span of the given basis vectors."""
    diagonal: np.ndarray = np.zeros(dim)
    for index in indices:
        if not 0 <= index < dim:
            raise DimensionError(f'Basis index {index} out of range for dimension {dim}')
        diagonal[index] = 1
    return np.diag(diagonal).astype(np.complex128)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """
    Haar random unitary from the QR decomposition of a complex Ginibre matrix.
    """
    ginibre: np.ndarray = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(ginibre)
    phases: np.ndarray = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Random rows x cols matrix with orthonormal columns (rows >= cols)."""
    if rows < cols:
        raise DimensionError(f'Isometry needs rows >= cols, got {rows} x {cols}')
    return random_unitary(rows, rng)[:, :cols]


def random_pure_state(dims: Sequence[int], rng: np.random.Generator) -> PureState:
    """Haar random pure state on the given subsystem dimensions."""
    dim: int = math.prod(dims)
    vector: np.ndarray = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState.normalized(vector, dims)


def random_density_matrix(dims: Sequence[int], rng: np.random.Generator, rank: Optional[int] = None) -> DensityMatrix:
    """
    Hilbert-Schmidt random density matrix (normalized G G^dagger with Ginibre G).

    Args:
        dims (Sequence[int]): Subsystem dimensions.
        rng (np.random.Generator): Source of randomness.
        rank (Optional[int]): Rank of the state, full rank by default.

    Returns:
        DensityMatrix: The random state.
    """
    dim: int = math.prod(dims)
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValidationError(f'Rank must be between 1 and {dim}, got {rank}')
    ginibre: np.ndarray = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    matrix: np.ndarray = ginibre @ ginibre.conj().T
    return DensityMatrix(matrix / np.trace(matrix).real, dims, validate=False)
