"""Time evolution of d/dt f + L^eps f = 0 and the decay diagnostics built on it."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize, stats

from kinetic.errors import DomainError, StabilityError
from kinetic.grid import Field, VelocityGrid, dyadic_block, phase_split
from kinetic.norms import project_N, project_orthogonal

logger = logging.getLogger(__name__)

ENERGY_GROWTH_TOLERANCE = 1e-6
ORTHOGONALITY_TOLERANCE = 1e-8
CROSSOVER_SLOPE_RATIO = 0.5


@dataclass(frozen=True)
class EvolutionConfig:
    """
    Parameters
    ----------
    total_time : float
    dt : float or None
        Fixed step; None picks c_stab / |L| from a power iteration.
    record_every : int
        Steps between recorded diagnostics; the final state is always recorded.
    reproject : bool
        Apply I - P at every record.
    blocks : tuple of int
        Dyadic indices whose block energies are recorded.
    eps : float or None
        Cutoff used for the low/high phase split diagnostics.
    """
    total_time: float
    dt: float = None
    c_stab: float = 0.5
    record_every: int = 1
    reproject: bool = False
    blocks: tuple = ()
    eps: float = None
    power_iterations: int = 5
    require_orthogonal: bool = True

    def __post_init__(self):
        if not self.total_time > 0:
            raise DomainError('total_time must be positive')
        if self.dt is not None and not self.dt > 0:
            raise DomainError('dt must be positive')
        if not 0 < self.c_stab <= 0.5:
            raise DomainError('c_stab must lie in (0, 0.5]')
        if self.record_every < 1:
            raise DomainError('record_every must be >= 1')


@dataclass(frozen=True, eq=False)
class DecaySeries:
    times: np.ndarray
    energy: np.ndarray
    low: np.ndarray
    high: np.ndarray
    blocks: dict = field(default_factory=dict)
    macro: list = field(default_factory=list)
    dt: float = None
    final: Field = None

    @classmethod
    def synthetic(cls, times, energy) -> 'DecaySeries':
        """Energy-only series, for fitting curves that did not come from evolve."""
        times = np.asarray(times, dtype=float)
        energy = np.asarray(energy, dtype=float)
        return cls(times, energy, np.full_like(energy, np.nan), np.full_like(energy, np.nan))


def estimate_operator_norm(operator, grid: VelocityGrid, iterations: int = 5, seed: int = 0) -> float:
    """|L| by power iteration from a fixed random start."""
    rng = np.random.default_rng(seed)
    x = Field(grid, rng.standard_normal(grid.shape))
    x = x / x.norm()
    estimate = 0.0
    for _ in range(iterations):
        y = operator.apply(x)
        estimate = y.norm()
        if estimate == 0:
            break
        x = y / estimate
    logger.debug('operator norm estimate %.6g after %s iterations', estimate, iterations)
    return estimate


def _rk4(operator, f: Field, dt: float) -> Field:
    k1 = -operator.apply(f)
    k2 = -operator.apply(f + 0.5 * dt * k1)
    k3 = -operator.apply(f + 0.5 * dt * k2)
    k4 = -operator.apply(f + dt * k3)
    return f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_size(cfg: EvolutionConfig, operator, grid: VelocityGrid) -> float:
    if cfg.dt is not None:
        return cfg.dt
    norm = estimate_operator_norm(operator, grid, cfg.power_iterations)
    if norm == 0:
        return cfg.total_time
    return cfg.c_stab / norm


def evolve(f0: Field, cfg: EvolutionConfig, operator) -> DecaySeries:
    """RK4 trajectory of d/dt f = -L f with recorded diagnostics."""
    grid = f0.grid
    if cfg.require_orthogonal:
        leak = project_N(f0)[1].norm()
        if leak > ORTHOGONALITY_TOLERANCE * max(f0.norm(), 1.0):
            raise DomainError(f'initial datum has a null-space component of size {leak:.3e}')

    dt = step_size(cfg, operator, grid)
    n_steps = max(1, math.ceil(cfg.total_time / dt - 1e-9))
    dt = cfg.total_time / n_steps
    logger.info('evolving %s steps of dt=%.4g up to t=%s', n_steps, dt, cfg.total_time)

    records = {'times': [], 'energy': [], 'low': [], 'high': [], 'macro': []}
    blocks = {j: [] for j in cfg.blocks}

    def record(t, f):
        records['times'].append(t)
        records['energy'].append(f.norm() ** 2)
        if cfg.eps is not None:
            low, high = phase_split(f, cfg.eps)
            records['low'].append(low.norm() ** 2)
            records['high'].append(high.norm() ** 2)
        else:
            records['low'].append(np.nan)
            records['high'].append(np.nan)
        for j in cfg.blocks:
            blocks[j].append(dyadic_block(f, j).norm() ** 2)
        records['macro'].append(project_N(f)[0])

    f = f0
    record(0.0, f)
    energy = f.norm() ** 2
    for step in range(1, n_steps + 1):
        f = _rk4(operator, f, dt)
        new_energy = f.norm() ** 2
        if new_energy > energy * (1.0 + ENERGY_GROWTH_TOLERANCE) and new_energy > 1e-300:
            raise StabilityError(
                f'energy grew from {energy:.6g} to {new_energy:.6g} at step {step}; reduce dt')
        energy = new_energy
        if step % cfg.record_every == 0 or step == n_steps:
            if cfg.reproject:
                f = project_orthogonal(f)
                energy = f.norm() ** 2
            record(step * dt, f)

    return DecaySeries(
        times=np.asarray(records['times']),
        energy=np.asarray(records['energy']),
        low=np.asarray(records['low']),
        high=np.asarray(records['high']),
        blocks={j: np.asarray(values) for j, values in blocks.items()},
        macro=records['macro'],
        dt=dt,
        final=f,
    )


def exponential_reference(matrix: np.ndarray, f0: Field, t: float) -> Field:
    """exp(-t A) f0 by dense matrix exponential."""
    return Field(f0.grid, linalg.expm(-t * matrix) @ f0.flat)


def make_ring_datum(grid: VelocityGrid, j: int, n0: int = 2) -> Field:
    """
    Smooth radial bump on 2^j <= |v| <= n0 2^j, normalized and projected onto N-perp.
    """
    if n0 < 2:
        raise DomainError('ring datum needs n0 >= 2')
    inner, outer = 2.0 ** j, n0 * 2.0 ** j
    if outer > grid.half_width - 2.0:
        raise DomainError(f'ring up to |v| = {outer} does not fit a box of half width '
                          f'{grid.half_width}')
    r = grid.speed
    inside = (r > inner) & (r < outer)
    gap = np.where(inside, (r - inner) * (outer - r), 1.0)
    bump = Field(grid, np.where(inside, np.exp(-1.0 / gap), 0.0))
    bump = bump / bump.norm()
    datum = project_orthogonal(bump)
    return datum / datum.norm()


# --- fits ---------------------------------------------------------------------

def fit_exponent(x, y):
    """Slope and R^2 of log|y| against log x."""
    result = stats.linregress(np.log(np.asarray(x, dtype=float)),
                              np.log(np.abs(np.asarray(y, dtype=float))))
    return float(result.slope), float(result.rvalue ** 2)


def regress_crossover(eps_values, t_stars):
    """Slope and R^2 of t* against -ln(eps)."""
    result = stats.linregress(-np.log(np.asarray(eps_values, dtype=float)),
                              np.asarray(t_stars, dtype=float))
    return float(result.slope), float(result.rvalue ** 2)


def _hinge_fit(t, y, breakpoint):
    design = np.column_stack([np.ones_like(t), t, np.maximum(t - breakpoint, 0.0)])
    coefficients, *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = y - design @ coefficients
    return float(residual @ residual), coefficients


def detect_crossover(series: DecaySeries, eps: float = None, s: float = None):
    """
    Breakpoint of a continuous two-segment linear fit of log energy against time.

    Returns None when a single line already fits, or when the second
    slope is not markedly shallower than the first.
    """
    positive = series.energy > 0
    t = series.times[positive]
    y = np.log(series.energy[positive])
    if t.size < 5:
        return None
    line = np.polyfit(t, y, 1)
    single = float(np.sum((y - np.polyval(line, t)) ** 2))
    if single <= 1e-12 * max(np.var(y) * t.size, 1e-300):
        return None
    found = optimize.minimize_scalar(lambda b: _hinge_fit(t, y, b)[0],
                                     bounds=(t[1], t[-2]), method='bounded',
                                     options={'xatol': 1e-6 * (t[-1] - t[0])})
    breakpoint = float(found.x)
    _, (_, first, change) = _hinge_fit(t, y, breakpoint)
    second = first + change
    if first >= 0 or abs(second) >= CROSSOVER_SLOPE_RATIO * abs(first):
        return None
    if eps is not None and s is not None:
        logger.debug('crossover %.4g for eps=%s (scale -2s ln eps = %.4g)',
                     breakpoint, eps, -2.0 * s * math.log(eps))
    return breakpoint


@dataclass(frozen=True)
class DecayBoundReport:
    kind: str
    constants: dict
    margin: float
    passed: bool
    window: tuple = None


def _exponential_rate(times, energy):
    positive = energy > 0
    if np.sum(positive) < 2:
        return 0.0
    slope = stats.linregress(times[positive], np.log(energy[positive])).slope
    return float(-slope)


def decay_bound_check(series: DecaySeries, eps: float, s: float, gamma: float,
                      j: int = None, eta: float = 0.05, kind: str = 'retention',
                      window_constant: float = 1.0) -> DecayBoundReport:
    """
    Fit the constants of one of the decay bounds and report the margin.

    kind='retention': |P_j f(t)|^2 >= 1 - 4 eta - C eps^(2s) on
    t <= window_constant eta 2^(-j gamma) eps^(2s); fits C.
    kind='low': |f(t)|^2 <= A exp(-c t) |f0|^2 up to the crossover; fits (c, A).
    kind='split': |f(t)|^2 <= A (exp(-c t)|f0^l|^2 + |f0^h|^2 + eps^(2s)|f0|^2); fits (c, A).
    """
    scale = eps ** (2.0 * s)
    t = series.times
    energy = series.energy
    if kind == 'retention':
        if j not in series.blocks:
            return DecayBoundReport(kind, {}, float('nan'), False)
        end = window_constant * eta * 2.0 ** (-j * gamma) * scale
        inside = t <= end
        block = series.blocks[j][inside] / energy[0]
        C = max(0.0, float(np.max((1.0 - 4.0 * eta - block) / scale)))
        margin = float(np.min(block - (1.0 - 4.0 * eta)))
        return DecayBoundReport(kind, {'C': C}, margin, bool(np.isfinite(C)), (0.0, end))

    if energy[0] <= 0:
        return DecayBoundReport(kind, {}, 0.0, False)
    if kind == 'low':
        t_star = detect_crossover(series, eps, s)
        early = t <= (t_star if t_star is not None else t[-1])
        c = _exponential_rate(t[early], energy[early])
        reference = np.exp(-c * t[early]) * energy[0]
        A = float(np.max(energy[early] / reference))
        margin = float(np.min(A * reference - energy[early]))
        return DecayBoundReport(kind, {'c': c, 'A': A, 't_star': t_star}, margin, c > 0,
                                (0.0, float(t[early][-1])))
    if kind == 'split':
        low0, high0 = series.low[0], series.high[0]
        if np.isnan(low0):
            return DecayBoundReport(kind, {}, float('nan'), False)
        head = t <= t[len(t) // 2]
        c = _exponential_rate(t[head], energy[head])
        bound = np.exp(-c * t) * low0 + high0 + scale * energy[0]
        A = float(np.max(energy / bound))
        margin = float(np.min(A * bound - energy))
        return DecayBoundReport(kind, {'c': c, 'A': A}, margin, c > 0)
    raise DomainError(f'unknown decay bound {kind!r}')
