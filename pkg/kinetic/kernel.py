"""Collision cross-section, its angular cutoff, the sphere rule and the weight W^eps."""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate

from kinetic.errors import KernelError
from kinetic.grid import EPS_MAX, PHI_INNER, PHI_OUTER, bump_phi

logger = logging.getLogger(__name__)

PRODUCTION_N_THETA = 64
PRODUCTION_N_PHI = 16

GRADING_RATIO = 1.05
GRADING_SWITCH = 0.2

# two-point Gauss-Legendre on [-1, 1]
_GL_NODES = np.array([-1.0, 1.0]) / np.sqrt(3.0)


@dataclass(frozen=True)
class KernelConfig:
    """
    Physical kernel parameters and the angular quadrature controls.

    Parameters
    ----------
    gamma : float
        Kinetic exponent, in (-3, 2].
    s : float
        Angular singularity order, in (0, 1).
    eps : float
        Cutoff parameter, in (0, sqrt(2)/2].
    n_theta, n_phi : int
        Polar and azimuthal node counts. The production rule is 64 x 16;
        smaller rules are accepted and logged as a warning when built.
    delta : float or None
        Regularization length for |u|^gamma. None lets the collision
        workspace pick half a grid spacing.
    """
    gamma: float
    s: float
    eps: float
    K: float = 1.0
    n_theta: int = PRODUCTION_N_THETA
    n_phi: int = PRODUCTION_N_PHI
    delta: float = None

    def __post_init__(self):
        if not -3.0 < self.gamma <= 2.0:
            raise KernelError(f'gamma must lie in (-3, 2], got {self.gamma!r}')
        if not 0.0 < self.s < 1.0:
            raise KernelError(f's must lie in (0, 1), got {self.s!r}')
        if not 0.0 < self.eps <= EPS_MAX + 1e-15:
            raise KernelError(f'eps must lie in (0, sqrt(2)/2], got {self.eps!r}')
        if not self.gamma + 2.0 * self.s > -1.0:
            raise KernelError('kernel needs gamma + 2s > -1')
        if self.K != 1.0:
            raise KernelError('only the equality kernel K = 1 is implemented')
        if self.n_theta < 4 or self.n_theta % 2:
            raise KernelError(f'n_theta must be even and >= 4, got {self.n_theta!r}')
        if self.n_phi < 3:
            raise KernelError(f'n_phi must be >= 3, got {self.n_phi!r}')
        if self.delta is not None and not self.delta > 0:
            raise KernelError(f'delta must be positive, got {self.delta!r}')

    @property
    def is_production(self) -> bool:
        return self.n_theta >= PRODUCTION_N_THETA and self.n_phi >= PRODUCTION_N_PHI

    @property
    def moderately_soft(self) -> bool:
        """gamma in [-2s, 0), the regime of the decay dichotomy."""
        return -2.0 * self.s <= self.gamma < 0.0

    @property
    def theta_min(self) -> float:
        """Below this angle b^eps vanishes identically."""
        return 2.0 * np.arcsin(PHI_INNER * self.eps)

    @property
    def theta_full(self) -> float:
        """Above this angle b^eps equals b."""
        return 2.0 * np.arcsin(min(PHI_OUTER * self.eps, 1.0))

    def with_eps(self, eps: float) -> 'KernelConfig':
        return KernelConfig(self.gamma, self.s, eps, self.K, self.n_theta, self.n_phi, self.delta)

    def refined(self, factor: int) -> 'KernelConfig':
        return KernelConfig(self.gamma, self.s, self.eps, self.K,
                            self.n_theta * factor, self.n_phi, self.delta)

    @cached_property
    def rule(self) -> 'AngularRule':
        return angular_quadrature(self)


def b_profile(theta, s: float):
    """b(cos theta) with sin(theta) b = theta^(-1-2s) on (0, pi/2], zero above."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise KernelError('b is singular at theta = 0')
    inside = theta <= np.pi / 2
    safe = np.where(inside, theta, np.pi / 2)
    value = np.where(inside, safe ** (-1.0 - 2.0 * s) / np.sin(safe), 0.0)
    return float(value) if value.ndim == 0 else value


def b_eps(theta, eps: float, s: float):
    """Cutoff kernel b^eps = b (1 - phi(sin(theta/2) / eps))."""
    theta = np.asarray(theta, dtype=float)
    cutoff = 1.0 - np.asarray(bump_phi(np.sin(theta / 2.0) / eps))
    value = np.asarray(b_profile(theta, s)) * cutoff
    return float(value) if value.ndim == 0 else value


def theta_cells(eps: float, n_cells: int, ratio: float = GRADING_RATIO,
                switch: float = GRADING_SWITCH) -> np.ndarray:
    """
    Cell edges on [theta_min, pi/2]: geometric up to `switch`, uniform above.

    When the geometric part would eat more than the cells left after
    max(2, n_cells // 4) uniform ones, its ratio is coarsened and a
    warning names the ratio actually used.
    """
    theta_min = 2.0 * np.arcsin(PHI_INNER * eps)
    top = np.pi / 2
    if theta_min >= switch:
        return np.linspace(theta_min, top, n_cells + 1)
    n_uniform = max(2, n_cells // 4)
    n_geometric = int(np.ceil(np.log(switch / theta_min) / np.log(ratio)))
    n_geometric = max(1, min(n_geometric, n_cells - n_uniform))
    if (switch / theta_min) ** (1.0 / n_geometric) > ratio * (1 + 1e-12):
        logger.warning('angular grading coarsened from %s to %.4f at eps=%.4g (%s cells)',
                       ratio, (switch / theta_min) ** (1.0 / n_geometric), eps, n_cells)
    geometric = np.geomspace(theta_min, switch, n_geometric + 1)
    uniform = np.linspace(switch, top, n_cells - n_geometric + 1)
    return np.concatenate([geometric, uniform[1:]])


@dataclass(frozen=True, eq=False)
class AngularRule:
    """Product rule on the upper hemisphere around the z axis."""
    polar_nodes: np.ndarray
    polar_weights: np.ndarray  # sin(theta) d(theta) times 2 pi
    polar_b: np.ndarray
    azimuths: np.ndarray
    sigma: np.ndarray          # (M, 3)
    weights: np.ndarray        # (M,) surface weights
    b_weights: np.ndarray      # (M,) weights times b^eps

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def cross_section(self) -> float:
        return float(self.b_weights.sum())


def angular_quadrature(cfg: KernelConfig) -> AngularRule:
    """
    Graded product rule for d sigma = sin(theta) d theta d phi on theta <= pi/2.

    Each polar cell carries two Gauss-Legendre nodes whose weights are
    rescaled to the exact band area, so the total weight is exact.
    """
    edges = theta_cells(cfg.eps, cfg.n_theta // 2)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :])
    raw = np.sin(nodes) * half[:, None]
    band = np.cos(lo) - np.cos(hi)
    raw *= (band / raw.sum(axis=1))[:, None]

    polar_nodes = nodes.reshape(-1)
    polar_weights = 2.0 * np.pi * raw.reshape(-1)
    polar_b = b_eps(polar_nodes, cfg.eps, cfg.s)

    azimuths = 2.0 * np.pi * np.arange(cfg.n_phi) / cfg.n_phi
    theta, phi = np.meshgrid(polar_nodes, azimuths, indexing='ij')
    sigma = np.stack([np.sin(theta) * np.cos(phi),
                      np.sin(theta) * np.sin(phi),
                      np.cos(theta)], axis=-1).reshape(-1, 3)
    weights = np.repeat(polar_weights / cfg.n_phi, cfg.n_phi)
    b_weights = weights * np.repeat(polar_b, cfg.n_phi)
    if not cfg.is_production:
        logger.warning('angular rule below production size: n_theta=%s n_phi=%s',
                       cfg.n_theta, cfg.n_phi)
    return AngularRule(polar_nodes, polar_weights, polar_b, azimuths,
                       sigma, weights, b_weights)


def _adaptive(cfg: KernelConfig, integrand, extra_points=()) -> float:
    lo, top = cfg.theta_min, np.pi / 2
    points = [p for p in (cfg.theta_full, GRADING_SWITCH, *extra_points) if lo < p < top]
    value, _ = integrate.quad(
        lambda t: np.sin(t) * b_eps(t, cfg.eps, cfg.s) * integrand(t),
        lo, top, points=sorted(points) or None, limit=400, epsabs=0.0, epsrel=1e-11)
    return 2.0 * np.pi * value


def angular_moment(cfg: KernelConfig, power: float = 0.0, method: str = 'rule') -> float:
    """int b^eps sin^power(theta/2) d sigma."""
    if method == 'rule':
        rule = cfg.rule
        return float(np.sum(rule.polar_weights * rule.polar_b
                            * np.sin(rule.polar_nodes / 2.0) ** power))
    if method == 'adaptive':
        return _adaptive(cfg, lambda t: np.sin(t / 2.0) ** power)
    raise KernelError(f'unknown quadrature method {method!r}')


def cross_section(cfg: KernelConfig, method: str = 'rule') -> float:
    """Total cutoff cross-section int b^eps d sigma; grows like eps^(-2s)."""
    return angular_moment(cfg, 0.0, method)


def symbol_A(xi_magnitude, cfg: KernelConfig, method: str = 'rule'):
    """A^eps(xi) = int b^eps min(|xi|^2 sin^2(theta/2), 1) d sigma."""
    xi = np.atleast_1d(np.asarray(xi_magnitude, dtype=float))
    if np.any(xi < 0):
        raise KernelError('symbol_A needs |xi| >= 0')
    if method == 'rule':
        rule = cfg.rule
        half = np.sin(rule.polar_nodes / 2.0) ** 2
        factor = np.minimum(xi[:, None] ** 2 * half[None, :], 1.0)
        values = factor @ (rule.polar_weights * rule.polar_b)
    elif method == 'adaptive':
        values = np.empty_like(xi)
        for k, x in enumerate(xi):
            kink = (2.0 * np.arcsin(1.0 / x),) if x > 1.0 else ()
            values[k] = _adaptive(
                cfg, lambda t, x=x: min(x * x * np.sin(t / 2.0) ** 2, 1.0), kink)
    else:
        raise KernelError(f'unknown quadrature method {method!r}')
    if np.ndim(xi_magnitude) == 0:
        return float(values[0])
    return values


def japanese_bracket(r, power: float = 1.0):
    """<r>^power = (1 + r^2)^(power/2)."""
    return (1.0 + np.asarray(r, dtype=float) ** 2) ** (0.5 * power)


def weight_Weps(v, eps: float, s: float, vector: bool = False):
    """W^eps(v) = <v>^s phi(eps v) + eps^(-s) (1 - phi(eps v))."""
    v = np.asarray(v, dtype=float)
    r = np.linalg.norm(v, axis=-1) if vector else np.abs(v)
    low = np.asarray(bump_phi(eps * r))
    value = japanese_bracket(r, s) * low + eps ** (-s) * (1.0 - low)
    return float(value) if value.ndim == 0 else value


def submultiplicative_constant(eps: float, s: float, radii) -> float:
    """Largest W^eps(ab) / (W^eps(a) W^eps(b)) over the sampled pairs."""
    radii = np.asarray(radii, dtype=float)
    a, b = np.meshgrid(radii, radii, indexing='ij')
    ratio = weight_Weps(a * b, eps, s) / (weight_Weps(a, eps, s) * weight_Weps(b, eps, s))
    return float(np.max(ratio))
