"""Velocity grids, fields on them, the DFT contract and the smooth partitions.

The velocity box [-L, L)^3 is treated as periodic for every Fourier
operation. Meaningful support must stay inside |v| <= L - 2; see
`check_support`.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft

from kinetic.errors import DomainError, GridError

logger = logging.getLogger(__name__)

# Plateau and support radii of the radial bump phi.
PHI_INNER = 3.0 / 4.0
PHI_OUTER = 4.0 / 3.0

# Largest admissible cutoff parameter.
EPS_MAX = np.sqrt(2.0) / 2.0

ALIASING_TOLERANCE = 1e-6
ALIASING_MARGIN = 2.0
ROUND_TRIP_IMAG_TOLERANCE = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class Lattice:
    """Uniform cubic lattice: node k sits at origin + k * spacing on each axis."""
    n: int
    origin: float
    spacing: float

    def index_coordinates(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.origin) / self.spacing


@dataclass(frozen=True)
class VelocityGrid:
    """
    Truncated periodic velocity lattice and its dual frequency lattice.

    Parameters
    ----------
    n_per_axis : int
        Points per axis; even and at least 8.
    half_width : float
        Half width L of the box [-L, L)^3.
    """
    n_per_axis: int
    half_width: float

    def __post_init__(self):
        n = self.n_per_axis
        if int(n) != n or n < 8 or n % 2:
            raise GridError(f'n_per_axis must be an even integer >= 8, got {n!r}')
        if not self.half_width > 0:
            raise GridError(f'half_width must be positive, got {self.half_width!r}')

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing ** 3

    @property
    def shape(self) -> tuple:
        n = self.n_per_axis
        return (n, n, n)

    @property
    def size(self) -> int:
        return self.n_per_axis ** 3

    @property
    def frequency_spacing(self) -> float:
        return np.pi / self.half_width

    @cached_property
    def lattice(self) -> Lattice:
        return Lattice(self.n_per_axis, -self.half_width, self.spacing)

    @cached_property
    def dual_lattice(self) -> Lattice:
        """Centred frequency lattice, node 0 at -(n/2) * pi / L."""
        n = self.n_per_axis
        return Lattice(n, -(n // 2) * self.frequency_spacing, self.frequency_spacing)

    @cached_property
    def axis(self) -> np.ndarray:
        return _frozen(-self.half_width + self.spacing * np.arange(self.n_per_axis))

    @cached_property
    def velocities(self) -> np.ndarray:
        """Node coordinates, shape (n, n, n, 3), row-major."""
        vx, vy, vz = np.meshgrid(self.axis, self.axis, self.axis, indexing='ij')
        return _frozen(np.stack([vx, vy, vz], axis=-1))

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates flattened to (n**3, 3)."""
        return _frozen(self.velocities.reshape(-1, 3).copy())

    @cached_property
    def speed(self) -> np.ndarray:
        return _frozen(np.linalg.norm(self.velocities, axis=-1))

    @cached_property
    def frequency_axis(self) -> np.ndarray:
        """Centred dual axis, (-n/2 .. n/2 - 1) * pi / L."""
        n = self.n_per_axis
        return _frozen((np.arange(n) - n // 2) * self.frequency_spacing)

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Centred dual nodes, shape (n, n, n, 3)."""
        k = self.frequency_axis
        kx, ky, kz = np.meshgrid(k, k, k, indexing='ij')
        return _frozen(np.stack([kx, ky, kz], axis=-1))

    @cached_property
    def fft_frequency_magnitude(self) -> np.ndarray:
        """|xi| in the natural (unshifted) DFT ordering, for multipliers."""
        k = 2.0 * np.pi * fft.fftfreq(self.n_per_axis, d=self.spacing)
        kx, ky, kz = np.meshgrid(k, k, k, indexing='ij')
        return _frozen(np.sqrt(kx ** 2 + ky ** 2 + kz ** 2))

    @cached_property
    def _centred_phase(self) -> np.ndarray:
        # exp(i xi.L(1,1,1)) = (-1)^(kx+ky+kz) on the centred lattice
        n = self.n_per_axis
        k = np.arange(n) - n // 2
        parity = k[:, None, None] + k[None, :, None] + k[None, None, :]
        return _frozen(np.where(parity % 2 == 0, 1.0, -1.0))

    def field(self, values, real: bool = None) -> 'Field':
        values = np.asarray(values)
        if real:
            values = values.real
        return Field(self, values)

    def zeros(self) -> 'Field':
        return Field(self, np.zeros(self.shape))

    def evaluate(self, function) -> 'Field':
        """Sample `function(velocities)` on the nodes."""
        return Field(self, np.asarray(function(self.velocities)))

    def stencil(self, points: np.ndarray, order: int = 3):
        return interpolation_stencil(points, self.lattice, order)


def make_grid(n_per_axis: int, half_width: float) -> VelocityGrid:
    """Build a validated VelocityGrid."""
    grid = VelocityGrid(n_per_axis, float(half_width))
    logger.debug('grid n=%s L=%s h=%s', grid.n_per_axis, grid.half_width, grid.spacing)
    return grid


@dataclass(frozen=True, eq=False)
class Field:
    """Scalar function sampled on a VelocityGrid; `values` has shape (n, n, n)."""
    grid: VelocityGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.size != self.grid.size:
            raise GridError(
                f'field has {values.size} values, grid needs {self.grid.size}')
        object.__setattr__(self, 'values', values.reshape(self.grid.shape))

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def _other(self, other):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise GridError('fields live on different grids')
            return other.values
        return other

    def __add__(self, other):
        return Field(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return Field(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return Field(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Field(self.grid, self.values / self._other(other))

    def __neg__(self):
        return Field(self.grid, -self.values)

    def real(self) -> 'Field':
        return Field(self.grid, self.values.real)

    def inner(self, other: 'Field') -> float:
        """Discrete L2 inner product, real part."""
        g = self._other(other)
        return float(np.real(np.sum(self.values * np.conj(g))) * self.grid.cell_volume)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))


def maxwellian(grid: VelocityGrid):
    """Global Maxwellian mu and its square root sampled on the grid."""
    r2 = grid.speed ** 2
    mu = (2.0 * np.pi) ** -1.5 * np.exp(-r2 / 2.0)
    sqrt_mu = (2.0 * np.pi) ** -0.75 * np.exp(-r2 / 4.0)
    return Field(grid, mu), Field(grid, sqrt_mu)


def maxwellian_at(points: np.ndarray) -> np.ndarray:
    """mu evaluated off the grid."""
    r2 = np.sum(np.asarray(points) ** 2, axis=-1)
    return (2.0 * np.pi) ** -1.5 * np.exp(-r2 / 2.0)


def sqrt_maxwellian_at(points: np.ndarray) -> np.ndarray:
    r2 = np.sum(np.asarray(points) ** 2, axis=-1)
    return (2.0 * np.pi) ** -0.75 * np.exp(-r2 / 4.0)


# --- discrete Fourier transform contract -------------------------------------

def dft(f: Field) -> np.ndarray:
    """Unitary DFT of the node values (natural ordering)."""
    return fft.fftn(f.values, norm='ortho')


def idft(coefficients: np.ndarray, grid: VelocityGrid, real: bool = False) -> Field:
    values = fft.ifftn(coefficients, norm='ortho')
    if real:
        scale = max(np.abs(values).max(), 1.0)
        residual = np.abs(values.imag).max() / scale
        if residual > ROUND_TRIP_IMAG_TOLERANCE:
            logger.warning('real field picked up imaginary part %.3e', residual)
        values = values.real
    return Field(grid, values)


def apply_symbol(f: Field, symbol: np.ndarray) -> Field:
    """Fourier multiplier with `symbol` given in natural DFT ordering."""
    return idft(symbol * dft(f), f.grid, real=f.is_real and np.isrealobj(symbol))


def fourier_transform(f: Field) -> np.ndarray:
    """f_hat(xi) = int exp(-i v.xi) f(v) dv on the centred dual lattice."""
    grid = f.grid
    shifted = fft.fftshift(fft.fftn(f.values))
    return grid.cell_volume * grid._centred_phase * shifted


def inverse_fourier_transform(transform: np.ndarray, grid: VelocityGrid,
                              real: bool = False) -> Field:
    raw = fft.ifftn(fft.ifftshift(transform * grid._centred_phase)) / grid.cell_volume
    return Field(grid, raw.real if real else raw)


# --- interpolation -----------------------------------------------------------

def _axis_weights(t: np.ndarray, order: int):
    if order == 1:
        return (0, 1), np.stack([1.0 - t, t], axis=-1)
    if order == 3:
        # Keys cubic convolution, a = -1/2
        t2 = t * t
        t3 = t2 * t
        weights = np.stack([
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        ], axis=-1)
        return (-1, 0, 1, 2), weights
    raise DomainError(f'interpolation order must be 1 or 3, got {order!r}')


def interpolation_stencil(points: np.ndarray, lattice: Lattice, order: int = 3):
    """
    Separable interpolation stencil on a uniform lattice.

    Nodes outside the lattice get zero weight, so the interpolated
    function is the zero extension of the node values.

    Returns
    -------
    indices : ndarray of int, shape (K, S)
        Flat row-major node indices, S = 8 (order 1) or 64 (order 3).
    weights : ndarray, shape (K, S)
    """
    x = lattice.index_coordinates(np.asarray(points).reshape(-1, 3))
    base = np.floor(x)
    t = x - base
    base = base.astype(np.intp)
    offsets, weights = _axis_weights(t, order)
    nodes = base[..., None] + np.asarray(offsets)
    n = lattice.n
    inside = (nodes >= 0) & (nodes < n)
    weights = np.where(inside, weights, 0.0)
    nodes = np.clip(nodes, 0, n - 1)

    s = len(offsets)
    indices = (nodes[:, 0, :, None, None] * (n * n)
               + nodes[:, 1, None, :, None] * n
               + nodes[:, 2, None, None, :])
    combined = (weights[:, 0, :, None, None]
                * weights[:, 1, None, :, None]
                * weights[:, 2, None, None, :])
    k = x.shape[0]
    return indices.reshape(k, s ** 3), combined.reshape(k, s ** 3)


def interpolate(values: np.ndarray, stencil) -> np.ndarray:
    indices, weights = stencil
    return np.sum(np.asarray(values).reshape(-1)[indices] * weights, axis=-1)


# --- smooth partitions -------------------------------------------------------

def _radius(x, vector: bool) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if vector:
        return np.linalg.norm(x, axis=-1)
    return np.abs(x)


def _eta(u: np.ndarray) -> np.ndarray:
    positive = u > 0
    return np.where(positive, np.exp(-1.0 / np.where(positive, u, 1.0)), 0.0)


def _glue(u: np.ndarray) -> np.ndarray:
    a = _eta(u)
    b = _eta(1.0 - u)
    return a / (a + b)


def _scalar_or_array(value: np.ndarray):
    if np.ndim(value) == 0:
        return float(value)
    return value


def bump_phi(x, vector: bool = False):
    """
    Radial bump: 1 for |x| <= 3/4, 0 for |x| >= 4/3, smooth and monotone between.

    `x` is a radius (or array of radii); pass ``vector=True`` for points
    whose last axis holds the three components.
    """
    r = _radius(x, vector)
    u = np.clip((PHI_OUTER - r) / (PHI_OUTER - PHI_INNER), 0.0, 1.0)
    value = np.where(r <= PHI_INNER, 1.0, np.where(r >= PHI_OUTER, 0.0, _glue(u)))
    return _scalar_or_array(value)


def bump_psi(x, vector: bool = False):
    """psi(x) = phi(x/2) - phi(x), supported in 3/4 <= |x| <= 8/3."""
    r = _radius(x, vector)
    value = np.asarray(bump_phi(r / 2.0)) - np.asarray(bump_phi(r))
    return _scalar_or_array(value)


def dyadic_weight(r, j: int):
    """phi_{-1} = phi, phi_j = psi(2^-j .) for j >= 0."""
    if j < -1:
        raise DomainError(f'dyadic index must be >= -1, got {j}')
    if j == -1:
        return bump_phi(r)
    return bump_psi(np.asarray(r) / 2.0 ** j)


def partition_sum(r, j_max: int):
    """phi(r) + sum_{j=0..j_max} psi(2^-j r); equals 1 for r <= (3/2) 2^j_max."""
    return sum(np.asarray(dyadic_weight(r, j)) for j in range(-1, j_max + 1))


def dyadic_block(f: Field, j: int) -> Field:
    """Littlewood-Paley block P_j f = phi_j(v) f(v)."""
    return f * dyadic_weight(f.grid.speed, j)


def dyadic_blocks(f: Field, j_max: int) -> list:
    return [dyadic_block(f, j) for j in range(-1, j_max + 1)]


def covering_index(grid: VelocityGrid) -> int:
    """Smallest J with 2^J >= 2L, so that blocks -1..J partition the grid."""
    return int(np.ceil(np.log2(2.0 * grid.half_width)))


def validate_eps(eps: float) -> float:
    if not 0.0 < eps <= EPS_MAX + 1e-15:
        raise DomainError(f'eps must lie in (0, sqrt(2)/2], got {eps!r}')
    return float(eps)


def freq_split(f: Field, eps: float):
    """(f_phi, f^phi) = (phi(eps D) f, (1 - phi(eps D)) f)."""
    eps = validate_eps(eps)
    symbol = bump_phi(eps * f.grid.fft_frequency_magnitude)
    low = apply_symbol(f, symbol)
    return low, f - low


def phase_split(f: Field, eps: float):
    """(f^l, f^h) = (phi(eps v) f, (1 - phi(eps v)) f)."""
    eps = validate_eps(eps)
    low = f * bump_phi(eps * f.grid.speed)
    return low, f - low


def boundary_mass_fraction(f: Field, margin: float = ALIASING_MARGIN) -> float:
    """Share of |f|^2 sitting on nodes with some |v_i| > L - margin."""
    grid = f.grid
    outer = np.any(np.abs(grid.velocities) > grid.half_width - margin, axis=-1)
    mass = np.abs(f.values) ** 2
    total = mass.sum()
    if total == 0:
        return 0.0
    return float(mass[outer].sum() / total)


def check_support(f: Field, tolerance: float = ALIASING_TOLERANCE) -> float:
    """Raise GridError when the field leaks onto the periodic boundary."""
    fraction = boundary_mass_fraction(f)
    if fraction > tolerance:
        raise GridError(
            f'boundary mass fraction {fraction:.3e} exceeds {tolerance:.1e}; '
            'enlarge half_width')
    return fraction
