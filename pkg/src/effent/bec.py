"""
Module for a Bose-Einstein condensate used as a phase reference.

A condensate in the coherent state |sqrt(N) e^{i phi}> with an uncertain phase phi ~ p(phi) turns a
number conserving exchange with a two level system into the qubit rotation R_z(phi) R_x(theta).
Averaging over p(phi) damps the coherences by g = -i * int p(phi) e^{i phi} dphi, which is what
partially lifts a particle number superselection rule.
"""
from __future__ import annotations
from typing import TYPE_CHECKING

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
import cmath
import logging
import math

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln
from scipy.stats import norm

from effent.errors import ValidationError, DimensionError, NumericalError
from effent.qcore import DensityMatrix
from effent.channels import KrausChannel
from effent.effective import quality_factor

if TYPE_CHECKING:
    from typing import Dict, List, Optional, Sequence, Tuple

LOG: logging.Logger = logging.getLogger("effent.bec")

TWO_PI: float = 2 * math.pi
DEFAULT_QUADRATURE_POINTS: int = 2048
MIN_QUADRATURE_POINTS: int = 64
WRAPS: int = 6
WEIGHT_TOL: float = 1e-12
MAX_NORM_LOSS: float = 1e-6
MAX_UNITARITY_DEFECT: float = 1e-8


class DistributionKind(Enum):
    """
    Shipped families of circular phase distributions.
    """
    DELTA = 'delta'
    UNIFORM = 'uniform'
    WRAPPED_NORMAL = 'wrapped-normal'
    DOUBLE_RECT = 'double-rect'
    DELTA_MIXTURE = 'delta-mixture'
    TABULATED = 'tabulated'

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PhaseDistribution:
    """
    A probability distribution of the condensate phase on [0, 2 pi).

    Use the constructors (delta, uniform, wrapped_normal, double_rect, delta_mixture, tabulated), they validate
    the parameters.

    Attributes:
    -----------
    kind : DistributionKind
        The family.
    params : Tuple[float, ...]
        (phi0,) for delta, (mu, sigma) for wrapped normal, (w, delta) for the double rectangle.
    points : Tuple[Tuple[float, float], ...]
        (phi_i, weight_i) of a delta mixture.
    table : Tuple[float, ...]
        Normalized density values on the uniform grid 2 pi j / n of a tabulated distribution.
    """
    kind: DistributionKind
    params: Tuple[float, ...] = ()
    points: Tuple[Tuple[float, float], ...] = ()
    table: Tuple[float, ...] = ()

    @classmethod
    def delta(cls, phi0: float) -> PhaseDistribution:
        """Sharp phase phi0."""
        return cls(DistributionKind.DELTA, (float(phi0),))

    @classmethod
    def uniform(cls) -> PhaseDistribution:
        """Completely uncertain phase."""
        return cls(DistributionKind.UNIFORM)

    @classmethod
    def wrapped_normal(cls, mu: float, sigma: float) -> PhaseDistribution:
        """Normal distribution N(mu, sigma^2) wrapped onto the circle."""
        if sigma < 0:
            raise ValidationError(f'Wrapped normal sigma must not be negative, got {sigma}')
        return cls(DistributionKind.WRAPPED_NORMAL, (float(mu), float(sigma)))

    @classmethod
    def double_rect(cls, w: float, delta: float) -> PhaseDistribution:
        """
        Two blocks of width w and density 1/(2w), [delta/2, delta/2 + w] and [2 pi - delta/2 - w, 2 pi - delta/2].
        """
        if w <= 0:
            raise ValidationError(f'Double rectangle width w must be positive, got {w}')
        if delta < 0:
            raise ValidationError(f'Double rectangle gap delta must not be negative, got {delta}')
        if delta + 2 * w > TWO_PI + WEIGHT_TOL:
            raise ValidationError(f'Double rectangle blocks overlap on the circle (delta + 2w = {delta + 2 * w:.6g} > 2 pi)')
        return cls(DistributionKind.DOUBLE_RECT, (float(w), float(delta)))

    @classmethod
    def delta_mixture(cls, points: Sequence[Tuple[float, float]]) -> PhaseDistribution:
        """Finite mixture of sharp phases given as (phi_i, weight_i)."""
        if len(points) == 0:
            raise ValidationError('A delta mixture needs at least one point')
        checked: Tuple[Tuple[float, float], ...] = tuple((float(phi), float(weight)) for phi, weight in points)
        if any(weight < 0 for _, weight in checked):
            raise ValidationError('Delta mixture weights must not be negative')
        total: float = sum(weight for _, weight in checked)
        if abs(total - 1) > WEIGHT_TOL:
            raise ValidationError(f'Delta mixture weights must sum to 1, got {total:.15g}')
        return cls(DistributionKind.DELTA_MIXTURE, points=checked)

    @classmethod
    def tabulated(cls, values: Sequence[float]) -> PhaseDistribution:
        """
        Density tabulated on the uniform grid 2 pi j / n, j = 0..n-1; normalized on construction.
        """
        density: np.ndarray = np.asarray(values, dtype=float).reshape(-1)
        if density.size < 2:
            raise ValidationError('A tabulated density needs at least two values')
        if np.any(density < 0) or not np.all(np.isfinite(density)):
            raise ValidationError('Tabulated density values must be finite and not negative')
        mass: float = float(np.sum(density)) * TWO_PI / density.size
        if mass <= 0:
            raise ValidationError('Tabulated density has zero mass')
        return cls(DistributionKind.TABULATED, table=tuple(float(v) for v in density / mass))

    @property
    def is_discrete(self) -> bool:
        """True for sharp phases and their mixtures."""
        return self.kind in (DistributionKind.DELTA, DistributionKind.DELTA_MIXTURE) \
            or (self.kind == DistributionKind.WRAPPED_NORMAL and self.params[1] == 0)

    def atoms(self) -> List[Tuple[float, float]]:
        """(phi_i, weight_i) of a discrete distribution."""
        if self.kind == DistributionKind.DELTA_MIXTURE:
            return list(self.points)
        if self.is_discrete:
            return [(self.params[0], 1.0)]
        raise ValidationError(f'{self.kind} distribution has no atoms')

    def density(self, phi: np.ndarray) -> np.ndarray:
        """
        Probability density at the given phases, for the continuous families.
        """
        angles: np.ndarray = np.mod(np.asarray(phi, dtype=float), TWO_PI)
        if self.kind == DistributionKind.UNIFORM:
            return np.full(angles.shape, 1 / TWO_PI)
        if self.kind == DistributionKind.WRAPPED_NORMAL and self.params[1] > 0:
            mu, sigma = self.params
            return sum(norm.pdf(angles + TWO_PI * k, loc=mu, scale=sigma) for k in range(-WRAPS, WRAPS + 1))
        if self.kind == DistributionKind.DOUBLE_RECT:
            w, delta = self.params
            first: np.ndarray = (angles >= delta / 2) & (angles <= delta / 2 + w)
            second: np.ndarray = (angles >= TWO_PI - delta / 2 - w) & (angles <= TWO_PI - delta / 2)
            return np.where(first | second, 1 / (2 * w), 0.0)
        if self.kind == DistributionKind.TABULATED:
            table: np.ndarray = np.asarray(self.table)
            grid: np.ndarray = TWO_PI * np.arange(table.size) / table.size
            return np.interp(angles, grid, table, period=TWO_PI)
        raise ValidationError(f'{self.kind} distribution has no density')

    def moment(self, k: int) -> complex:
        """
        Trigonometric moment int p(phi) e^{i k phi} dphi, in closed form for every family.
        """
        if k == 0:
            return 1.0 + 0j
        if self.kind == DistributionKind.UNIFORM:
            return 0j
        if self.kind == DistributionKind.WRAPPED_NORMAL:
            mu, sigma = self.params
            return cmath.exp(1j * k * mu) * math.exp(-k * k * sigma * sigma / 2)
        if self.kind == DistributionKind.DOUBLE_RECT:
            w, delta = self.params
            return 2 / (k * w) * math.sin(k * w / 2) * math.cos(k * (delta / 2 + w / 2)) + 0j
        if self.kind == DistributionKind.TABULATED:
            table: np.ndarray = np.asarray(self.table)
            grid: np.ndarray = TWO_PI * np.arange(table.size) / table.size
            return complex(np.sum(table * np.exp(1j * k * grid)) * TWO_PI / table.size)
        return complex(sum(weight * cmath.exp(1j * k * phi) for phi, weight in self.atoms()))

    def describe(self) -> str:
        """Short text form, the one accepted by the command line."""
        if self.kind in (DistributionKind.DELTA, DistributionKind.WRAPPED_NORMAL, DistributionKind.DOUBLE_RECT):
            return f'{self.kind}:' + ','.join(f'{value:g}' for value in self.params)
        if self.kind == DistributionKind.DELTA_MIXTURE:
            return f'{self.kind}:' + ','.join(f'{phi:g}@{weight:g}' for phi, weight in self.points)
        if self.kind == DistributionKind.TABULATED:
            return f'{self.kind}[{len(self.table)}]'
        return str(self.kind)


@dataclass(frozen=True)
class BecParams:
    """
    Condensate size and target rotation of the exchange interaction.

    Attributes:
    -----------
    alpha_sq : float
        Mean occupation |alpha|^2 of the condensate.
    theta : float
        Rotation angle omega t, omega = Omega |alpha| / 2.
    """
    alpha_sq: float
    theta: float

    def __post_init__(self) -> None:
        if not self.alpha_sq > 0:
            raise ValidationError(f'alpha_sq must be positive, got {self.alpha_sq}')

    @property
    def omega_t_product(self) -> float:
        """Dimensionless Omega t = 2 theta / |alpha|."""
        return 2 * self.theta / math.sqrt(self.alpha_sq)


@dataclass
class BecSimulation:
    """
    Result of the truncated Fock space evolution.

    Attributes:
    -----------
    state : DensityMatrix
        Qubit state of the two level system, renormalized to the qubit subspace.
    leakage : float
        Population above one particle in the two level system before renormalization.
    norm_loss : float
        Coherent state weight beyond the Fock cutoff.
    unitarity_defect : float
        max |U^dagger U - I| of the truncated propagator.
    """
    state: DensityMatrix
    leakage: float
    norm_loss: float
    unitarity_defect: float


@dataclass
class SweepRow:
    """One row of a g-factor sweep."""
    param: float
    g_abs: float
    q_factor: float


def rotation_x(theta: float) -> np.ndarray:
    """R_x(theta) = exp(-i theta sigma_x)."""
    return np.array([[math.cos(theta), -1j * math.sin(theta)], [-1j * math.sin(theta), math.cos(theta)]])


def rotation_z(phi: float) -> np.ndarray:
    """R_z(phi) = diag(1, e^{i phi})."""
    return np.diag([1, cmath.exp(1j * phi)])


def g_factor(dist: PhaseDistribution) -> complex:
    """
    Reference quality g = -i int p(phi) e^{i phi} dphi, |g| <= 1.
    """
    return -1j * dist.moment(1)


def g_factor_quadrature(dist: PhaseDistribution, n: int = DEFAULT_QUADRATURE_POINTS) -> complex:
    """
    g-factor by numerical integration, independent of the closed forms.

    Smooth densities use the n point periodic trapezoidal rule, the double rectangle uses Gauss-Legendre
    nodes on each block and sharp phases are summed directly.

    Args:
        dist (PhaseDistribution): The distribution.
        n (int): Number of quadrature points, at least 64.

    Returns:
        complex: The g-factor.
    """
    if n < MIN_QUADRATURE_POINTS:
        raise ValidationError(f'Quadrature needs at least {MIN_QUADRATURE_POINTS} points, got {n}')
    if dist.is_discrete:
        return -1j * complex(sum(weight * cmath.exp(1j * phi) for phi, weight in dist.atoms()))
    if dist.kind == DistributionKind.DOUBLE_RECT:
        w, delta = dist.params
        nodes, weights = np.polynomial.legendre.leggauss(max(n // 2, 1))
        total: complex = 0j
        for start in (delta / 2, TWO_PI - delta / 2 - w):
            angles: np.ndarray = start + (nodes + 1) * w / 2
            total += complex(np.sum(weights * np.exp(1j * angles))) * (w / 2) / (2 * w)
        return -1j * total
    grid: np.ndarray = TWO_PI * np.arange(n) / n
    return -1j * complex(np.sum(dist.density(grid) * np.exp(1j * grid)) * TWO_PI / n)


def gamma_channel(dist: PhaseDistribution, theta: float, canonicalize: bool = False) -> KrausChannel:
    """
    Qubit channel of an exchange with a condensate of uncertain phase, int p(phi) R_z(phi) R_x(theta) . R_x^dagger R_z^dagger.

    With c = int p e^{i phi} = i g, the |1><0| coherence of R_x rho R_x^dagger is multiplied by c and the
    populations are unchanged. Kraus operators: sqrt(|g|) R_z(arg c) R_x, sqrt(1-|g|) P_0 R_x, sqrt(1-|g|) P_1 R_x;
    zero weight operators are dropped.

    Args:
        dist (PhaseDistribution): Phase distribution of the condensate.
        theta (float): Rotation angle.
        canonicalize (bool): Strip the deterministic residual R_z(arg c), leaving R_x followed by phase damping.

    Returns:
        KrausChannel: CPTP qubit channel.
    """
    c: complex = dist.moment(1)
    magnitude: float = min(abs(c), 1.0)
    r_x: np.ndarray = rotation_x(theta)
    residual: np.ndarray = np.eye(2) if canonicalize or magnitude == 0 else rotation_z(cmath.phase(c))
    operators: List[np.ndarray] = []
    if magnitude > 0:
        operators.append(math.sqrt(magnitude) * residual @ r_x)
    if magnitude < 1:
        operators.append(math.sqrt(1 - magnitude) * np.diag([1, 0]) @ r_x)
        operators.append(math.sqrt(1 - magnitude) * np.diag([0, 1]) @ r_x)
    return KrausChannel(operators, name=f'gamma({dist.describe()}, {theta:g})')


def ssr_lifting_channel(dist: PhaseDistribution, theta: float, canonicalize: bool = False) -> KrausChannel:
    """
    Channel R_x^dagger(theta) Gamma[.] R_x(theta) that partially lifts the superselection rule; Q = |g|.
    """
    r_x_dagger: np.ndarray = rotation_x(theta).conj().T
    operators: List[np.ndarray] = [r_x_dagger @ op for op in gamma_channel(dist, theta, canonicalize).kraus_ops]
    return KrausChannel(operators, name=f'bec({dist.describe()}, {theta:g})')


def limit_map(phi: float, theta: float) -> np.ndarray:
    """
    Unitary R_z(phi) R_x(theta) the exchange reduces to for a condensate with sharp phase phi and |alpha|^2 >> 1.
    """
    return rotation_z(phi) @ rotation_x(theta)


def coherent_state(alpha: complex, n_trunc: int) -> Tuple[np.ndarray, float]:
    """
    Fock amplitudes of |alpha> up to n_trunc particles.

    Args:
        alpha (complex): Coherent amplitude.
        n_trunc (int): Largest particle number kept.

    Returns:
        Tuple[np.ndarray, float]: The n_trunc + 1 amplitudes and the weight lost to the cutoff.
    """
    if n_trunc < 0:
        raise ValidationError(f'Fock cutoff must not be negative, got {n_trunc}')
    numbers: np.ndarray = np.arange(n_trunc + 1)
    if alpha == 0:
        amplitudes: np.ndarray = np.zeros(n_trunc + 1, dtype=np.complex128)
        amplitudes[0] = 1
        return amplitudes, 0.0
    log_moduli: np.ndarray = -abs(alpha) ** 2 / 2 + numbers * math.log(abs(alpha)) - gammaln(numbers + 1) / 2
    amplitudes = np.exp(log_moduli) * np.exp(1j * cmath.phase(alpha) * numbers)
    return amplitudes, max(0.0, 1 - float(np.sum(np.abs(amplitudes) ** 2)))


def _annihilation(levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, levels)), k=1).astype(np.complex128)


def simulate_bec_exact(params: BecParams, phi: float, n_trunc: int, input_state: DensityMatrix, mode_a_levels: int = 2) -> BecSimulation:
    """
    Exact evolution of a two level system exchanging particles with a condensate |sqrt(N) e^{i phi}>.

    The exchange a^dagger c + c^dagger a acts for Omega t = 2 theta / sqrt(N), the condensate mode c is traced out
    and the system is projected onto its qubit subspace. With the default mode_a_levels = 2 the system is a
    hard-core dot (double occupancy prohibited); larger values give a bosonic mode whose population above one
    particle is reported as leakage.

    Args:
        params (BecParams): Condensate size and rotation angle.
        phi (float): Condensate phase.
        n_trunc (int): Fock cutoff of the condensate, at least N + 6 sqrt(N).
        input_state (DensityMatrix): Qubit input.
        mode_a_levels (int): Fock levels of the system mode.

    Returns:
        BecSimulation: The qubit output with leakage and truncation diagnostics.
    """
    if input_state.dim != 2:
        raise DimensionError(f'Exact simulation takes a qubit input, got dimension {input_state.dim}')
    if mode_a_levels < 2:
        raise ValidationError(f'mode_a_levels must be at least 2, got {mode_a_levels}')
    needed: float = params.alpha_sq + 6 * math.sqrt(params.alpha_sq)
    if n_trunc < needed:
        raise ValidationError(f'Fock cutoff {n_trunc} is too small for alpha_sq={params.alpha_sq:g}, need at least {math.ceil(needed)}')
    coherent, norm_loss = coherent_state(math.sqrt(params.alpha_sq) * cmath.exp(1j * phi), n_trunc)
    if norm_loss > MAX_NORM_LOSS:
        raise NumericalError(f'Coherent state loses {norm_loss:.3g} of its norm at cutoff {n_trunc}')
    a: np.ndarray = _annihilation(mode_a_levels)
    c: np.ndarray = _annihilation(n_trunc + 1)
    exchange: np.ndarray = np.kron(a.conj().T, c) + np.kron(a, c.conj().T)
    propagator: np.ndarray = expm(-0.5j * params.omega_t_product * exchange)
    defect: float = float(np.max(np.abs(propagator.conj().T @ propagator - np.eye(propagator.shape[0]))))
    if defect > MAX_UNITARITY_DEFECT:
        raise NumericalError(f'Truncated propagator is not unitary (defect {defect:.3g})')
    values, vectors = np.linalg.eigh((input_state.matrix + input_state.matrix.conj().T) / 2)
    reduced: np.ndarray = np.zeros((mode_a_levels, mode_a_levels), dtype=np.complex128)
    for weight, vector in zip(values, vectors.T):
        if weight <= 0:
            continue
        embedded: np.ndarray = np.zeros(mode_a_levels, dtype=np.complex128)
        embedded[:2] = vector
        evolved: np.ndarray = (propagator @ np.kron(embedded, coherent)).reshape(mode_a_levels, n_trunc + 1)
        reduced += weight * evolved @ evolved.conj().T
    leakage: float = float(np.real(np.trace(reduced[2:, 2:]))) if mode_a_levels > 2 else 0.0
    qubit: np.ndarray = reduced[:2, :2]
    kept: float = float(np.real(np.trace(qubit)))
    if kept <= 0:
        raise NumericalError('Nothing is left in the qubit subspace after the exchange')
    if leakage > 1e-3:
        LOG.warning('Exact simulation leaks %.3g of the population out of the qubit subspace', leakage)
    LOG.debug('Exact simulation: norm loss %.3g, leakage %.3g, unitarity defect %.3g', norm_loss, leakage, defect)
    return BecSimulation(state=DensityMatrix(qubit / kept, validate=False), leakage=leakage, norm_loss=norm_loss, unitarity_defect=defect)


def bec_reference_state(dist: PhaseDistribution, alpha_sq: float, n_trunc: int) -> DensityMatrix:
    """
    Condensate state int p(phi) |sqrt(N) e^{i phi}><.| dphi in the Fock basis up to n_trunc particles.

    Element (m, n) is e^{-N} N^{(m+n)/2} / sqrt(m! n!) times the trigonometric moment of order m - n.
    """
    if not alpha_sq > 0:
        raise ValidationError(f'alpha_sq must be positive, got {alpha_sq}')
    numbers: np.ndarray = np.arange(n_trunc + 1)
    moduli: np.ndarray = np.exp(-alpha_sq / 2 + numbers * math.log(alpha_sq) / 2 - gammaln(numbers + 1) / 2)
    moments: Dict[int, complex] = {k: dist.moment(k) for k in range(-n_trunc, n_trunc + 1)}
    phases: np.ndarray = np.array([[moments[m - n] for n in numbers] for m in numbers])
    return DensityMatrix(np.outer(moduli, moduli) * phases, validate=False)


def number_coherence(rho: DensityMatrix) -> float:
    """Largest magnitude of an element between different particle numbers."""
    off_diagonal: np.ndarray = rho.matrix - np.diag(np.diag(rho.matrix))
    return float(np.max(np.abs(off_diagonal), initial=0.0))


FAMILIES: Tuple[str, ...] = ('wrapped-normal', 'delta', 'double-rect', 'delta-pair')


def family_distribution(family: str, param: float, mu: float = 0.0, w: float = 0.4) -> PhaseDistribution:
    """
    Member of a one parameter family of distributions.

    Args:
        family (str): 'wrapped-normal' (param sigma, mean mu), 'delta' (param phi0), 'double-rect'
            (param delta, width w) or 'delta-pair' (weight param at 0 and 1 - param at pi).
        param (float): Family parameter.
        mu (float): Mean of the wrapped normal family.
        w (float): Block width of the double rectangle family.

    Returns:
        PhaseDistribution: The distribution.
    """
    if family == 'wrapped-normal':
        return PhaseDistribution.wrapped_normal(mu, param)
    if family == 'delta':
        return PhaseDistribution.delta(param)
    if family == 'double-rect':
        return PhaseDistribution.double_rect(w, param)
    if family == 'delta-pair':
        if not 0 <= param <= 1:
            raise ValidationError(f'delta-pair weight must be in [0, 1], got {param}')
        return PhaseDistribution.delta_mixture([(0.0, param), (math.pi, 1 - param)])
    raise ValidationError(f'Unknown distribution family {family!r}, expected one of {", ".join(FAMILIES)}')


def g_sweep(family: str, grid: Sequence[float], theta: float = math.pi / 4, workers: int = 1, **fixed: float) -> List[SweepRow]:
    """
    |g| and the quality factor of the lifting channel along a parameter grid, rows in grid order.
    """
    if len(grid) == 0:
        raise ValidationError('Sweep grid is empty')

    def row(param: float) -> SweepRow:
        dist: PhaseDistribution = family_distribution(family, param, **fixed)
        return SweepRow(param=float(param), g_abs=abs(g_factor(dist)), q_factor=quality_factor(ssr_lifting_channel(dist, theta), 2))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            rows: List[SweepRow] = list(executor.map(row, grid))
    else:
        rows = [row(param) for param in grid]
    LOG.info('Swept %s over %d points', family, len(rows))
    return rows
