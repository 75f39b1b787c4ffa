"""
Direct discrete collision operator Q^eps and everything built on it.

For every output node v the sum runs over all grid nodes v* and all
nodes sigma of the angular rule, rotated so that the rule's pole lies
along v - v*. Post-collision velocities

    v'  = (v + v*)/2 + |v - v*|/2 sigma
    v*' = (v + v*)/2 - |v - v*|/2 sigma

are off the lattice and evaluated with the workspace stencil; values
outside the box count as zero. The cost is O(N^2 M) for N nodes and M
angular nodes: minutes per pass for n <= 16 with a reduced rule, and
days per pass at n = 32 with the production rule. Several fields or pairs that
share a workspace go through one pass (`Q_eps_many`, `seminorm_R_many`).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from kinetic.errors import DomainError, GridError
from kinetic.grid import (Field, VelocityGrid, bump_phi, bump_psi, fourier_transform,
                          interpolate, interpolation_stencil, maxwellian,
                          sqrt_maxwellian_at)
from kinetic.kernel import KernelConfig, japanese_bracket

logger = logging.getLogger(__name__)

SQRT_MU_FLOOR = 1e-12

# Stencil entries materialized per block of v* nodes.
POINTS_PER_CHUNK = 2 ** 20


def orthonormal_frames(axes: np.ndarray):
    """Two unit vectors completing each row of `axes` to a right-handed frame."""
    helper = np.where(np.abs(axes[:, :1]) < 0.9,
                      np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))
    e1 = helper - np.sum(helper * axes, axis=1, keepdims=True) * axes
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(axes, e1)
    return e1, e2


def rotate_rule(sigma: np.ndarray, axes: np.ndarray) -> np.ndarray:
    """Rotate local rule nodes (M, 3) onto every axis (K, 3); returns (K, M, 3)."""
    e1, e2 = orthonormal_frames(axes)
    return (sigma[None, :, 0, None] * e1[:, None, :]
            + sigma[None, :, 1, None] * e2[:, None, :]
            + sigma[None, :, 2, None] * axes[:, None, :])


def post_collision(v: np.ndarray, v_star: np.ndarray, sigma: np.ndarray):
    """sigma-representation of the collision; conserves momentum and energy."""
    centre = 0.5 * (v + v_star)
    half = 0.5 * np.linalg.norm(v - v_star, axis=-1)
    return centre + half[..., None] * sigma, centre - half[..., None] * sigma


@dataclass(frozen=True, eq=False)
class CollisionWorkspace:
    """
    Everything the collision sums need for one (grid, kernel) pair.

    `order` picks the off-grid stencil: 1 trilinear, 3 Keys cubic.
    `workers` > 1 spreads output nodes over a thread pool; results are
    gathered in node order so sums do not depend on scheduling.
    """
    grid: VelocityGrid
    kernel: KernelConfig
    order: int = 3
    workers: int = 1

    def __post_init__(self):
        if self.order not in (1, 3):
            raise DomainError(f'interpolation order must be 1 or 3, got {self.order!r}')

    @property
    def delta(self) -> float:
        if self.kernel.delta is not None:
            return self.kernel.delta
        return 0.5 * self.grid.spacing

    @property
    def rule(self):
        return self.kernel.rule

    @cached_property
    def maxwellian(self):
        return maxwellian(self.grid)

    @property
    def mu(self) -> Field:
        return self.maxwellian[0]

    @property
    def sqrt_mu(self) -> Field:
        return self.maxwellian[1]

    @cached_property
    def block_size(self) -> int:
        per_pair = self.rule.size * (4 if self.order == 1 else 32)
        return max(1, POINTS_PER_CHUNK // per_pair)

    def kinetic(self, speed: np.ndarray, star: bool = False) -> np.ndarray:
        """|u|^gamma regularized by delta, or <u>^gamma when `star`."""
        if star:
            return japanese_bracket(speed, self.kernel.gamma)
        return np.maximum(speed, self.delta) ** self.kernel.gamma

    def stencil(self, points: np.ndarray):
        return interpolation_stencil(points, self.grid.lattice, self.order)

    def with_kernel(self, kernel: KernelConfig) -> 'CollisionWorkspace':
        return CollisionWorkspace(self.grid, kernel, self.order, self.workers)

    def check(self, *fields: Field):
        for f in fields:
            if f.grid != self.grid:
                raise GridError('field and collision workspace use different grids')

    def map_nodes(self, function, nodes=None) -> list:
        nodes = range(self.grid.size) if nodes is None else nodes
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                return list(pool.map(function, nodes))
        return [function(p) for p in nodes]

    def apply(self, f: Field) -> Field:
        return L_eps(f, self)


def collision_blocks(ws: CollisionWorkspace, p: int):
    """
    Yield (q, speed, v_prime, v_star_prime) for output node p, block by block.

    q indexes the partner nodes v* (the pair v* = v is skipped);
    v_prime and v_star_prime have shape (len(q), M, 3).
    """
    points = ws.grid.points
    v = points[p]
    partners = np.delete(np.arange(ws.grid.size), p)
    for start in range(0, partners.size, ws.block_size):
        q = partners[start:start + ws.block_size]
        u = v - points[q]
        speed = np.linalg.norm(u, axis=1)
        sigma = rotate_rule(ws.rule.sigma, u / speed[:, None])
        centre = 0.5 * (v + points[q])
        offset = 0.5 * speed[:, None, None] * sigma
        yield q, speed, centre[:, None, :] + offset, centre[:, None, :] - offset


def _loss_rates(ws: CollisionWorkspace, p: int, g_flat: np.ndarray) -> complex:
    """sum over v* != v of g(v*) |u|^gamma int b^eps d sigma h^3."""
    points = ws.grid.points
    speed = np.linalg.norm(points[p] - points, axis=1)
    kernel = ws.kinetic(speed)
    kernel[p] = 0.0
    return np.sum(g_flat * kernel) * ws.rule.cross_section * ws.grid.cell_volume


def _collision_at(ws: CollisionWorkspace, p: int, pairs) -> np.ndarray:
    """Q(g, h)(v_p) for every pair; the stencils are built once and shared."""
    b_weights = ws.rule.b_weights
    gains = [[] for _ in pairs]
    for q, speed, v_prime, v_star_prime in collision_blocks(ws, p):
        weight = (ws.kinetic(speed)[:, None] * b_weights[None, :]).reshape(-1)
        at_prime = ws.stencil(v_prime)
        at_star = ws.stencil(v_star_prime)
        for k, (g_flat, h_flat) in enumerate(pairs):
            product = interpolate(g_flat, at_star) * interpolate(h_flat, at_prime)
            gains[k].append(np.sum(weight * product))
    return np.array([np.sum(gain) * ws.grid.cell_volume - h_flat[p] * _loss_rates(ws, p, g_flat)
                     for gain, (g_flat, h_flat) in zip(gains, pairs)])


def _collision(ws: CollisionWorkspace, pairs, nodes=None) -> np.ndarray:
    """Array of shape (len(pairs), len(nodes)) with Q(g, h) per pair."""
    pairs = [(g.flat, h.flat) for g, h in pairs]
    return np.asarray(ws.map_nodes(lambda p: _collision_at(ws, p, pairs), nodes)).T


def Q_eps(g: Field, h: Field, ws: CollisionWorkspace) -> Field:
    """Cutoff collision operator Q^eps(g, h) on every grid node."""
    ws.check(g, h)
    return Field(ws.grid, _collision(ws, [(g, h)])[0])


def Q_eps_many(pairs, ws: CollisionWorkspace) -> list:
    """Q^eps(g, h) for several pairs in one pass over the collision geometry."""
    pairs = list(pairs)
    for g, h in pairs:
        ws.check(g, h)
    return [Field(ws.grid, values) for values in _collision(ws, pairs)]


def Q_eps_at(g: Field, h: Field, ws: CollisionWorkspace, nodes) -> np.ndarray:
    """Q^eps(g, h) at selected flat node indices only."""
    ws.check(g, h)
    return _collision(ws, [(g, h)], list(nodes))[0]


def _divide_sqrt_mu(values: np.ndarray, ws: CollisionWorkspace, nodes=None) -> np.ndarray:
    root = ws.sqrt_mu.flat if nodes is None else ws.sqrt_mu.flat[list(nodes)]
    safe = np.where(root > SQRT_MU_FLOOR, root, 1.0)
    return np.where(root > SQRT_MU_FLOOR, values / safe, 0.0)


def Gamma_eps(g: Field, h: Field, ws: CollisionWorkspace) -> Field:
    """mu^(-1/2) Q^eps(mu^(1/2) g, mu^(1/2) h), zero where sqrt(mu) underflows."""
    return Gamma_eps_many([(g, h)], ws)[0]


def Gamma_eps_many(pairs, ws: CollisionWorkspace) -> list:
    pairs = list(pairs)
    for g, h in pairs:
        ws.check(g, h)
    root = ws.sqrt_mu
    values = _collision(ws, [(root * g, root * h) for g, h in pairs])
    return [Field(ws.grid, _divide_sqrt_mu(row, ws)) for row in values]


def _linearized_pairs(f: Field, ws: CollisionWorkspace):
    weighted = ws.sqrt_mu * f
    return [(ws.mu, weighted), (weighted, ws.mu)]


def L_eps(f: Field, ws: CollisionWorkspace) -> Field:
    """L^eps f = -Gamma^eps(sqrt mu, f) - Gamma^eps(f, sqrt mu)."""
    ws.check(f)
    values = _collision(ws, _linearized_pairs(f, ws)).sum(axis=0)
    return Field(ws.grid, -_divide_sqrt_mu(values, ws))


def L_eps_at(f: Field, ws: CollisionWorkspace, nodes) -> np.ndarray:
    ws.check(f)
    nodes = list(nodes)
    values = _collision(ws, _linearized_pairs(f, ws), nodes).sum(axis=0)
    return -_divide_sqrt_mu(values, ws, nodes)


def collision_invariants(grid: VelocityGrid) -> dict:
    """1, v_x, v_y, v_z and |v|^2 on the grid, keyed by name."""
    v = grid.velocities
    return {'mass': np.ones(grid.shape),
            'momentum_x': v[..., 0],
            'momentum_y': v[..., 1],
            'momentum_z': v[..., 2],
            'energy': grid.speed ** 2}


def collision_frequency(ws: CollisionWorkspace) -> Field:
    """nu(v) = sum over v* of mu(v*) |u|^gamma int b^eps d sigma; the loss rate of L^eps."""
    mu = ws.mu.flat
    return Field(ws.grid, np.asarray(ws.map_nodes(lambda p: _loss_rates(ws, p, mu))))


# --- dense assembly ----------------------------------------------------------

def _assemble_row(ws: CollisionWorkspace, p: int) -> np.ndarray:
    n = ws.grid.size
    mu = ws.mu.flat
    root = ws.sqrt_mu.flat
    row = np.zeros(n)
    if root[p] <= SQRT_MU_FLOOR:
        return row
    b_weights = ws.rule.b_weights
    for q, speed, v_prime, v_star_prime in collision_blocks(ws, p):
        weight = (ws.kinetic(speed)[:, None] * b_weights[None, :]).reshape(-1)
        idx_prime, w_prime = ws.stencil(v_prime)
        idx_star, w_star = ws.stencil(v_star_prime)
        mu_prime = np.sum(mu[idx_prime] * w_prime, axis=1)
        mu_star = np.sum(mu[idx_star] * w_star, axis=1)
        # mu(v*') (sqrt(mu) f)(v') + (sqrt(mu) f)(v*') mu(v')
        row += np.bincount(idx_prime.reshape(-1),
                           ((weight * mu_star)[:, None] * w_prime * root[idx_prime]).reshape(-1),
                           minlength=n)
        row += np.bincount(idx_star.reshape(-1),
                           ((weight * mu_prime)[:, None] * w_star * root[idx_star]).reshape(-1),
                           minlength=n)
    row *= ws.grid.cell_volume

    points = ws.grid.points
    kernel = ws.kinetic(np.linalg.norm(points[p] - points, axis=1))
    kernel[p] = 0.0
    scale = ws.rule.cross_section * ws.grid.cell_volume
    row[p] -= root[p] * np.sum(mu * kernel) * scale
    row -= mu[p] * root * kernel * scale
    return -row / root[p]


def assemble_L(ws: CollisionWorkspace) -> np.ndarray:
    """Dense matrix of L^eps on the grid; meant for coarse grids."""
    logger.info('assembling dense L^eps on %s nodes (%s angular nodes)',
                ws.grid.size, ws.rule.size)
    return np.vstack(ws.map_nodes(lambda p: _assemble_row(ws, p)))


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """A linear operator on Fields stored as a dense matrix."""
    matrix: np.ndarray
    grid: VelocityGrid

    @classmethod
    def from_workspace(cls, ws: CollisionWorkspace) -> 'DenseOperator':
        return cls(assemble_L(ws), ws.grid)

    def apply(self, f: Field) -> Field:
        if f.grid != self.grid:
            raise GridError('field and operator use different grids')
        return Field(self.grid, self.matrix @ f.flat)

    def quadratic_form(self, f: Field) -> float:
        return self.apply(f).inner(f)


def quadratic_form(f: Field, operator) -> float:
    """
    <L^eps f, f>.

    For real f the average of <L f, f> and <f, L f> is the same number,
    so a single evaluation is returned.
    """
    return operator.apply(f).inner(f)


def adjoint_defect(f: Field, g: Field, operator) -> float:
    """|<L f, g> - <f, L g>|; zero for an exactly symmetric operator."""
    return abs(operator.apply(f).inner(g) - f.inner(operator.apply(g)))


# --- quadratic functionals ---------------------------------------------------

def _seminorm(ws: CollisionWorkspace, per_node) -> float:
    values = ws.map_nodes(per_node)
    return float(np.sum(values) * ws.grid.cell_volume ** 2)


def seminorm_R(g: Field, f: Field, ws: CollisionWorkspace, star: bool = False) -> float:
    """R_g(f) = int b^eps |v - v*|^gamma g* (f' - f)^2; `star` uses <v - v*>^gamma."""
    return float(seminorm_R_many(g, [f], ws, star)[0])


def seminorm_R_many(g: Field, fields, ws: CollisionWorkspace, star: bool = False) -> np.ndarray:
    """R_g(f) for every f in `fields`, sharing the stencils of one pass."""
    fields = list(fields)
    ws.check(g, *fields)
    g_flat = g.flat
    f_flats = [f.flat for f in fields]
    b_weights = ws.rule.b_weights

    def at_node(p):
        parts = [[] for _ in f_flats]
        for q, speed, v_prime, _ in collision_blocks(ws, p):
            stencil = ws.stencil(v_prime)
            weight = ((ws.kinetic(speed, star) * g_flat[q])[:, None] * b_weights[None, :]).reshape(-1)
            for k, f_flat in enumerate(f_flats):
                jump = np.abs(interpolate(f_flat, stencil) - f_flat[p]) ** 2
                parts[k].append(np.sum(weight * jump))
        return [np.sum(part) for part in parts]

    values = np.asarray(ws.map_nodes(at_node))
    return np.sum(values, axis=0) * ws.grid.cell_volume ** 2


def seminorm_R_star(g: Field, f: Field, ws: CollisionWorkspace) -> float:
    return seminorm_R(g, f, ws, star=True)


def seminorm_M(f: Field, ws: CollisionWorkspace) -> float:
    """M(f) = int b^eps |v - v*|^gamma f*^2 (sqrt(mu)' - sqrt(mu))^2 with exact sqrt(mu)."""
    ws.check(f)
    f_flat = f.flat
    root = ws.sqrt_mu.flat
    b_weights = ws.rule.b_weights

    def at_node(p):
        parts = []
        for q, speed, v_prime, _ in collision_blocks(ws, p):
            jump = (sqrt_maxwellian_at(v_prime).reshape(-1) - root[p]) ** 2
            weight = (ws.kinetic(speed) * np.abs(f_flat[q]) ** 2)[:, None] * b_weights[None, :]
            parts.append(np.sum(weight.reshape(-1) * jump))
        return np.sum(parts)

    return _seminorm(ws, at_node)


def bobylev_R(f: Field, ws: CollisionWorkspace) -> float:
    """
    R_mu(f) for gamma = 0 evaluated in frequency space.

    Uses xi+ = (xi + |xi| sigma)/2, xi- = xi - xi+ and the transform
    of mu, exp(-|xi|^2/2); f_hat is interpolated at xi+ on the dual lattice.
    """
    if ws.kernel.gamma != 0:
        raise DomainError('the frequency-space identity needs gamma = 0')
    ws.check(f)
    grid = ws.grid
    transform = fourier_transform(f).reshape(-1)
    xi = grid.frequencies.reshape(-1, 3)
    size = np.linalg.norm(xi, axis=1)
    nonzero = np.flatnonzero(size > 0)
    b_weights = ws.rule.b_weights
    parts = []
    for start in range(0, nonzero.size, ws.block_size):
        k = nonzero[start:start + ws.block_size]
        sigma = rotate_rule(ws.rule.sigma, xi[k] / size[k, None])
        plus = 0.5 * (xi[k, None, :] + size[k, None, None] * sigma)
        minus = xi[k, None, :] - plus
        at_plus = interpolate(transform, interpolation_stencil(
            plus, grid.dual_lattice, ws.order)).reshape(k.size, -1)
        here = transform[k, None]
        mu_minus = np.exp(-0.5 * np.sum(minus ** 2, axis=-1))
        integrand = (np.abs(here - at_plus) ** 2
                     + 2.0 * np.real((1.0 - mu_minus) * at_plus * np.conj(here)))
        parts.append(np.sum(integrand * b_weights[None, :]))
    return float(np.sum(parts) * grid.frequency_spacing ** 3 / (2.0 * np.pi) ** 3)


# --- commutators -------------------------------------------------------------

def cutoff_function(grid: VelocityGrid, kind: str, scale: float) -> np.ndarray:
    """chi(v / M) for chi = phi ('low'), 1 - phi ('high') or psi ('ring')."""
    if not scale > 0:
        raise DomainError(f'scale must be positive, got {scale!r}')
    r = grid.speed / scale
    if kind == 'low':
        return bump_phi(r)
    if kind == 'high':
        return 1.0 - bump_phi(r)
    if kind == 'ring':
        return bump_psi(r)
    raise DomainError(f'unknown cutoff kind {kind!r}')


def commutator_pairing(f: Field, kind: str, scale: float, operator) -> float:
    """<[L, chi_M] f, chi_M f> = <L(chi f), chi f> - <L f, chi^2 f>."""
    chi = cutoff_function(f.grid, kind, scale)
    localized = f * chi
    return operator.apply(localized).inner(localized) - operator.apply(f).inner(localized * chi)


def weight_commutator(g: Field, h: Field, f: Field, l: float, ws: CollisionWorkspace) -> float:
    """<Gamma(g, W_l h) - W_l Gamma(g, h), f> with W_l = <v>^l."""
    weight = japanese_bracket(ws.grid.speed, l)
    weighted, plain = Gamma_eps_many([(g, h * weight), (g, h)], ws)
    return (weighted - plain * weight).inner(f)


# --- oracle ------------------------------------------------------------------

def _trilinear(values: np.ndarray, grid: VelocityGrid, point) -> float:
    n = grid.n_per_axis
    x = [(point[a] + grid.half_width) / grid.spacing for a in range(3)]
    base = [int(np.floor(c)) for c in x]
    t = [x[a] - base[a] for a in range(3)]
    total = 0.0
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                i, j, k = base[0] + dx, base[1] + dy, base[2] + dz
                if not (0 <= i < n and 0 <= j < n and 0 <= k < n):
                    continue
                weight = ((t[0] if dx else 1 - t[0])
                          * (t[1] if dy else 1 - t[1])
                          * (t[2] if dz else 1 - t[2]))
                total += weight * values[i, j, k]
    return total


def brute_force_Q(g: Field, h: Field, ws: CollisionWorkspace, nodes) -> np.ndarray:
    """Q^eps(g, h) at `nodes` by plain loops and trilinear interpolation."""
    ws.check(g, h)
    grid = ws.grid
    points = grid.points
    rule = ws.rule
    out = []
    for p in nodes:
        v = points[p]
        total = 0.0
        for q in range(grid.size):
            if q == p:
                continue
            v_star = points[q]
            u = v - v_star
            speed = float(np.sqrt(u @ u))
            axis = u / speed
            e1, e2 = orthonormal_frames(axis[None, :])
            kinetic = max(speed, ws.delta) ** ws.kernel.gamma
            for m in range(rule.size):
                s = rule.sigma[m]
                sigma = s[0] * e1[0] + s[1] * e2[0] + s[2] * axis
                v_prime, v_star_prime = post_collision(v, v_star, sigma)
                gain = (_trilinear(g.values, grid, v_star_prime)
                        * _trilinear(h.values, grid, v_prime))
                loss = g.flat[q] * h.flat[p]
                total += kinetic * rule.b_weights[m] * (gain - loss)
        out.append(total * grid.cell_volume)
    return np.asarray(out)
