"""Anisotropic norms, the spherical-harmonic multiplier and the macroscopic projection."""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage, special

from kinetic.collision import quadratic_form
from kinetic.errors import DomainError
from kinetic.grid import Field, VelocityGrid, apply_symbol, dft
from kinetic.kernel import KernelConfig, japanese_bracket, weight_Weps

logger = logging.getLogger(__name__)

TAIL_WARNING = 0.01
_CHUNK = 4096


def weighted_L2(f: Field, l: float = 0.0) -> float:
    """|f|_{L^2_l} = (sum |f|^2 <v>^{2l} h^3)^(1/2)."""
    weight = japanese_bracket(f.grid.speed, 2.0 * l)
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2 * weight) * f.grid.cell_volume))


def _symbol(grid: VelocityGrid, eps: float, s: float) -> np.ndarray:
    return weight_Weps(grid.fft_frequency_magnitude, eps, s)


def multiplier_WepsD(f: Field, eps: float, s: float) -> Field:
    """W^eps(D) f through the DFT."""
    return apply_symbol(f, _symbol(f.grid, eps, s))


def fourier_multiplier_norm(f: Field, eps: float, s: float) -> float:
    """|W^eps(D) f|_{L^2} evaluated on the unitary DFT coefficients."""
    coefficients = _symbol(f.grid, eps, s) * dft(f)
    return float(np.sqrt(np.sum(np.abs(coefficients) ** 2) * f.grid.cell_volume))


def real_harmonics(l_max: int, polar: np.ndarray, azimuth: np.ndarray):
    """
    Real orthonormal spherical harmonics up to degree l_max.

    Returns (degrees, table) with table of shape ((l_max+1)^2, P).
    """
    rows, degrees = [], []
    for l in range(l_max + 1):
        for m in range(-l, l + 1):
            y = special.sph_harm_y(l, abs(m), polar, azimuth)
            if m > 0:
                row = np.sqrt(2.0) * (-1) ** m * y.real
            elif m < 0:
                row = np.sqrt(2.0) * (-1) ** m * y.imag
            else:
                row = y.real
            rows.append(row)
            degrees.append(l)
    return np.asarray(degrees), np.vstack(rows)


@dataclass(frozen=True, eq=False)
class SphericalTransform:
    """
    Spherical-harmonic analysis on radial shells of a velocity grid.

    The sphere rule is Gauss-Legendre in cos(theta) times 2 l_max + 1
    uniform azimuths, exact for products of harmonics of degree <= l_max.
    Shells sit at r_k = k L sqrt(3) / n_shells, k = 1..n_shells.
    """
    grid: VelocityGrid
    l_max: int = 16
    n_shells: int = 48

    def __post_init__(self):
        if self.l_max < 0 or self.n_shells < 2:
            raise DomainError('spherical transform needs l_max >= 0 and n_shells >= 2')

    @cached_property
    def _sphere(self):
        cos_nodes, gl_weights = np.polynomial.legendre.leggauss(self.l_max + 1)
        n_az = 2 * self.l_max + 1
        azimuths = 2.0 * np.pi * np.arange(n_az) / n_az
        polar = np.arccos(cos_nodes)
        theta, phi = np.meshgrid(polar, azimuths, indexing='ij')
        weights = np.repeat(gl_weights * 2.0 * np.pi / n_az, n_az)
        return theta.reshape(-1), phi.reshape(-1), weights

    @property
    def sphere_weights(self) -> np.ndarray:
        return self._sphere[2]

    @cached_property
    def directions(self) -> np.ndarray:
        theta, phi, _ = self._sphere
        return np.stack([np.sin(theta) * np.cos(phi),
                         np.sin(theta) * np.sin(phi),
                         np.cos(theta)], axis=-1)

    @cached_property
    def harmonics(self):
        theta, phi, _ = self._sphere
        return real_harmonics(self.l_max, theta, phi)

    @property
    def degrees(self) -> np.ndarray:
        return self.harmonics[0]

    @cached_property
    def radii(self) -> np.ndarray:
        top = self.grid.half_width * np.sqrt(3.0)
        return top * np.arange(1, self.n_shells + 1) / self.n_shells

    @cached_property
    def radial_weights(self) -> np.ndarray:
        """Trapezoid weights for int ... r^2 dr on [0, r_max], with r_0 = 0."""
        dr = self.radii[1] - self.radii[0]
        weights = np.full(self.n_shells, dr)
        weights[-1] = 0.5 * dr
        return weights * self.radii ** 2

    def gram(self) -> np.ndarray:
        table = self.harmonics[1]
        return (table * self.sphere_weights) @ table.T

    def sample(self, f: Field) -> np.ndarray:
        """f at r_k sigma_j, shape (n_shells, P), by cubic splines on the grid."""
        grid = self.grid
        points = self.radii[:, None, None] * self.directions[None, :, :]
        coords = grid.lattice.index_coordinates(points.reshape(-1, 3)).T

        def spline(values):
            return ndimage.map_coordinates(values, coords, order=3, mode='grid-constant', cval=0.0)

        if f.is_real:
            samples = spline(f.values)
        else:
            samples = spline(f.values.real) + 1j * spline(f.values.imag)
        return samples.reshape(self.n_shells, -1)

    def analyze_samples(self, samples: np.ndarray) -> np.ndarray:
        table = self.harmonics[1]
        return samples @ (table * self.sphere_weights).T

    def synthesize_samples(self, coefficients: np.ndarray) -> np.ndarray:
        return coefficients @ self.harmonics[1]

    def analyze(self, f: Field) -> np.ndarray:
        """f_l^m(r_k), shape (n_shells, (l_max+1)^2)."""
        samples = self.sample(f)
        coefficients = self.analyze_samples(samples)
        shell_energy = np.sum(np.abs(samples) ** 2 * self.sphere_weights, axis=1)
        captured = np.sum(np.abs(coefficients) ** 2, axis=1)
        significant = shell_energy > 1e-30 * max(shell_energy.max(), 1e-300)
        if np.any(significant):
            tail = 1.0 - captured[significant] / shell_energy[significant]
            if tail.max() > TAIL_WARNING:
                logger.warning('harmonics above l_max=%s hold %.1f%% of a shell energy',
                               self.l_max, 100.0 * tail.max())
        return coefficients

    def evaluate_on_grid(self, coefficients: np.ndarray) -> np.ndarray:
        """Sum_lm c_lm(|v|) Y_lm(v/|v|) on the grid nodes; c is linear in r, zero at r = 0."""
        grid = self.grid
        points = grid.points
        speed = grid.speed.reshape(-1)
        radii = np.concatenate([[0.0], self.radii])
        padded = np.vstack([np.zeros((1, coefficients.shape[1]), coefficients.dtype),
                            coefficients])
        out = np.zeros(grid.size, dtype=coefficients.dtype)
        for start in range(0, grid.size, _CHUNK):
            chunk = slice(start, start + _CHUNK)
            r = speed[chunk]
            direction = points[chunk] / np.where(r > 0, r, 1.0)[:, None]
            polar = np.arccos(np.clip(direction[:, 2], -1.0, 1.0))
            azimuth = np.arctan2(direction[:, 1], direction[:, 0])
            _, table = real_harmonics(self.l_max, polar, azimuth)
            radial = np.stack([np.interp(r, radii, padded[:, k])
                               for k in range(padded.shape[1])])
            out[chunk] = np.sum(radial * table, axis=0)
        return out.reshape(grid.shape)


def spherical_multiplier(f: Field, eps: float, s: float, st: SphericalTransform) -> Field:
    """
    W^eps((-Delta_S2)^(1/2)) f.

    Only the change (W^eps(sqrt(l(l+1))) - 1) c_lm is synthesized and
    added to f, so radial functions come back untouched.
    """
    coefficients = st.analyze(f)
    factors = weight_Weps(np.sqrt(st.degrees * (st.degrees + 1.0)), eps, s)
    change = coefficients * (factors - 1.0)[None, :]
    return f + st.evaluate_on_grid(change)


@dataclass(frozen=True)
class TripleNormReport:
    spherical_term: float
    fourier_term: float
    weight_term: float

    @property
    def total(self) -> float:
        return self.spherical_term + self.fourier_term + self.weight_term

    def __mul__(self, factor: float) -> 'TripleNormReport':
        return TripleNormReport(self.spherical_term * factor, self.fourier_term * factor,
                                self.weight_term * factor)


def triple_norm(f: Field, eps: float, s: float, l: float, st: SphericalTransform) -> TripleNormReport:
    """Squared |f|_{eps,l}: the three multiplier terms applied to W_l f."""
    weighted = f * japanese_bracket(f.grid.speed, l)
    spherical = spherical_multiplier(weighted, eps, s, st).norm() ** 2
    fourier = fourier_multiplier_norm(weighted, eps, s) ** 2
    weight = (weighted * weight_Weps(f.grid.speed, eps, s)).norm() ** 2
    return TripleNormReport(spherical, fourier, weight)


def equivalence_ratio(f: Field, operator, kernel: KernelConfig, st: SphericalTransform) -> float:
    """(<L f, f> + |f|^2_{L^2_{gamma/2}}) / |f|^2_{eps,gamma/2}."""
    half = kernel.gamma / 2.0
    denominator = triple_norm(f, kernel.eps, kernel.s, half, st).total
    if denominator <= 0:
        raise DomainError('equivalence ratio of a zero field')
    return (quadratic_form(f, operator) + weighted_L2(f, half) ** 2) / denominator


# --- macroscopic projection --------------------------------------------------

@dataclass(frozen=True)
class MacroCoefficients:
    a: float
    b: tuple
    c: float


def null_space_basis(grid: VelocityGrid) -> np.ndarray:
    """Rows sqrt(mu), v_i sqrt(mu), |v|^2 sqrt(mu) sampled on the grid, shape (5, N)."""
    root = (2.0 * np.pi) ** -0.75 * np.exp(-grid.speed ** 2 / 4.0)
    v = grid.velocities
    rows = [root, v[..., 0] * root, v[..., 1] * root, v[..., 2] * root,
            grid.speed ** 2 * root]
    return np.stack([r.reshape(-1) for r in rows])


def orthonormal_null_space(grid: VelocityGrid) -> np.ndarray:
    """Orthonormal rows spanning N in the discrete inner product."""
    basis = null_space_basis(grid) * np.sqrt(grid.cell_volume)
    q, _ = np.linalg.qr(basis.T)
    return q.T / np.sqrt(grid.cell_volume)


def project_N(f: Field, literal: bool = False):
    """
    Macroscopic projection P f = (a + b.v + c |v|^2) sqrt(mu).

    The default is the orthogonal projection in the discrete inner
    product, hence exactly idempotent. ``literal=True`` uses
    a = int (2 - |v|^2/2) sqrt(mu) f, which maps sqrt(mu) to sqrt(mu)/2.
    """
    grid = f.grid
    basis = null_space_basis(grid)
    h3 = grid.cell_volume
    moments = basis @ f.flat * h3
    if literal:
        # rows: sqrt mu, v sqrt mu, |v|^2 sqrt mu
        a = 2.0 * moments[0] - 0.5 * moments[4]
        b = moments[1:4]
        c = moments[4] / 6.0 - 0.5 * moments[0]
        alpha = np.concatenate([[a], b, [c]])
    else:
        gram = basis @ basis.T * h3
        alpha = np.linalg.solve(gram, moments)
    projected = Field(grid, alpha @ basis)
    coefficients = MacroCoefficients(float(np.real(alpha[0])),
                                     tuple(float(np.real(x)) for x in alpha[1:4]),
                                     float(np.real(alpha[4])))
    return coefficients, projected


def project_orthogonal(f: Field) -> Field:
    """(I - P) f."""
    return f - project_N(f)[1]
