"""
The scalar decay model: Y' + c1 Y1 + c2 eps^(-2s) Y2^(1+1/p) = 0 and its
exactly solvable special case X' + f(X) = 0 with f(x) = 1 + 2x - sqrt(1 + 4x).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from kinetic.errors import DomainError, NoCrossingError

logger = logging.getLogger(__name__)

CRITICAL_LEVEL = 0.25
DEFAULT_DT = 1e-4
MAX_DT = 1e-2
MAX_HALVINGS = 6
SANDWICH_RTOL = 1e-9

SPLIT_POLICIES = ('balance', 'all-low', 'all-high')


def _gap(x: float) -> float:
    # (1 + 2x)^2 - (1 + 4x) = 4x^2, divided by the conjugate
    return 4.0 * x * x / ((1.0 + 2.0 * x) + math.sqrt(1.0 + 4.0 * x))


def f_gap(x):
    """f(x) = 1 + 2x - sqrt(1 + 4x), evaluated without cancellation."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError('f_gap is defined for x >= 0')
    value = 4.0 * x * x / ((1.0 + 2.0 * x) + np.sqrt(1.0 + 4.0 * x))
    return float(value) if value.ndim == 0 else value


@dataclass(frozen=True, eq=False)
class OdeSeries:
    """Recorded trajectory of one of the scalar models."""
    times: np.ndarray
    values: np.ndarray
    eps: float
    s: float
    low: np.ndarray = None
    high: np.ndarray = None

    @property
    def initial(self) -> float:
        return float(self.values[0])


def _rk4_step(rate, y: float, dt: float) -> float:
    k1 = rate(y)
    k2 = rate(max(y - 0.5 * dt * k1, 0.0))
    k3 = rate(max(y - 0.5 * dt * k2, 0.0))
    k4 = rate(max(y - dt * k3, 0.0))
    return max(y - dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0, 0.0)


def _integrate(rate, y0: float, total_time: float, dt: float, level: float = None):
    """RK4 for y' = -rate(y); halves the step while it would jump across `level`."""
    if not 0 < dt <= MAX_DT:
        raise DomainError(f'time step must lie in (0, {MAX_DT}], got {dt!r}')
    times, values = [0.0], [y0]
    t, y = 0.0, y0
    while t < total_time - 1e-12:
        step = min(dt, total_time - t)
        y_next = _rk4_step(rate, y, step)
        if level is not None and y_next < level <= y:
            for _ in range(MAX_HALVINGS):
                step *= 0.5
                y_next = _rk4_step(rate, y, step)
                if not y_next < level <= y:
                    break
        t += step
        y = y_next
        times.append(t)
        values.append(y)
    return np.asarray(times), np.asarray(values)


def integrate_special(eps: float, s: float, total_time: float, dt: float = DEFAULT_DT,
                      adaptive: bool = True) -> OdeSeries:
    """X' = -f(X), X(0) = eps^(-2s), by classical RK4."""
    _check_parameters(eps, s)
    x0 = eps ** (-2.0 * s)
    level = CRITICAL_LEVEL if adaptive else None
    times, values = _integrate(_gap, x0, total_time, dt, level)
    logger.debug('special model eps=%s s=%s: %s steps, X(T)=%.6g', eps, s, len(times) - 1, values[-1])
    return OdeSeries(times, values, eps, s)


def critical_time(series: OdeSeries, level: float = CRITICAL_LEVEL) -> float:
    """First time the series reaches `level`, by linear interpolation."""
    values = series.values
    if values[0] <= level:
        raise NoCrossingError(f'series starts at {values[0]:.6g}, already below {level}')
    below = np.flatnonzero(values <= level)
    if below.size == 0:
        raise NoCrossingError(f'series never reaches {level} before t = {series.times[-1]:.6g}')
    k = below[0]
    t0, t1 = series.times[k - 1], series.times[k]
    y0, y1 = values[k - 1], values[k]
    return float(t0 + (y0 - level) * (t1 - t0) / (y0 - y1))


def critical_time_bracket(eps: float, s: float):
    """
    Bounds on t* implied by the exponential sandwich.

    X(0) e^(-6t) <= X(t) <= X(0) e^(-t/4) with X(t*) = 1/4 gives
    ln(4 X(0))/6 <= t* <= 4 ln(4 X(0)).
    """
    base = -2.0 * s * math.log(eps) + math.log(4.0)
    return base / 6.0, 4.0 * base


@dataclass(frozen=True, eq=False)
class SandwichBounds:
    lower_exp: np.ndarray
    upper_exp: np.ndarray
    lower_poly: np.ndarray
    upper_poly: np.ndarray
    before: np.ndarray  # mask t <= t*


def sandwich_bounds(series: OdeSeries, t_star: float = None) -> SandwichBounds:
    """The four comparison curves; exponential ones before t*, algebraic ones after."""
    if t_star is None:
        t_star = critical_time(series)
    t = series.times
    x0 = series.initial
    after = np.maximum(t - t_star, 0.0)
    return SandwichBounds(
        lower_exp=x0 * np.exp(-6.0 * t),
        upper_exp=x0 * np.exp(-t / 4.0),
        lower_poly=1.0 / (4.0 + 3.0 * after),
        upper_poly=1.0 / (4.0 + after),
        before=t <= t_star,
    )


def check_sandwich(series: OdeSeries, t_star: float = None, rtol: float = SANDWICH_RTOL) -> dict:
    """Violation counts of every bound at the recorded points, including the combined Y bound."""
    if t_star is None:
        t_star = critical_time(series)
    bounds = sandwich_bounds(series, t_star)
    x = series.values
    before, after = bounds.before, ~bounds.before

    def below(lower, mask):
        return int(np.sum(x[mask] < lower[mask] * (1.0 - rtol)))

    def above(upper, mask):
        return int(np.sum(x[mask] > upper[mask] * (1.0 + rtol)))

    scale = series.eps ** (2.0 * series.s)
    y = scale * x
    lower_y = np.where(before, bounds.lower_exp / series.initial, scale * bounds.lower_poly)
    upper_y = np.where(before, bounds.upper_exp / series.initial, scale * bounds.upper_poly)
    return {
        'lower_exp': below(bounds.lower_exp, before),
        'upper_exp': above(bounds.upper_exp, before),
        'lower_poly': below(bounds.lower_poly, after),
        'upper_poly': above(bounds.upper_poly, after),
        'lower_combined': int(np.sum(y < lower_y * (1.0 - rtol))),
        'upper_combined': int(np.sum(y > upper_y * (1.0 + rtol))),
    }


@dataclass(frozen=True)
class OdeState:
    """
    Total Y split into Y1 + Y2 with the model constants.

    Parameters
    ----------
    policy : str
        'balance' sets c1 Y1 = c2 eps^(-2s) Y2^(1+1/p); 'all-low' puts
        everything in Y1, 'all-high' everything in Y2.
    """
    Y: float
    Y1: float
    Y2: float
    c1: float = 1.0
    c2: float = 1.0
    p: float = 1.0
    eps: float = 0.01
    s: float = 0.5
    policy: str = 'balance'

    def __post_init__(self):
        _check_parameters(self.eps, self.s)
        if min(self.c1, self.c2, self.p) <= 0:
            raise DomainError('c1, c2 and p must be positive')
        if self.policy not in SPLIT_POLICIES:
            raise DomainError(f'unknown split policy {self.policy!r}')
        if min(self.Y, self.Y1, self.Y2) < 0:
            raise DomainError('Y, Y1 and Y2 must be nonnegative')
        if abs(self.Y1 + self.Y2 - self.Y) > 1e-12 * max(1.0, self.Y):
            raise DomainError('Y1 + Y2 must equal Y')

    @classmethod
    def split(cls, Y: float, c1=1.0, c2=1.0, p=1.0, eps=0.01, s=0.5, policy='balance'):
        low, high = _split(Y, c1, c2, p, eps ** (-2.0 * s), policy)
        return cls(Y, low, high, c1, c2, p, eps, s, policy)

    @property
    def rate(self) -> float:
        return (self.c1 * self.Y1
                + self.c2 * self.eps ** (-2.0 * self.s) * self.Y2 ** (1.0 + 1.0 / self.p))


def _split(y: float, c1: float, c2: float, p: float, weight: float, policy: str):
    if policy == 'all-low' or y <= 0:
        return y, 0.0
    if policy == 'all-high':
        return 0.0, y
    if p == 1.0:
        root = math.sqrt(c1 * c1 + 4.0 * c1 * c2 * weight * y)
        high = 2.0 * c1 * y / (c1 + root)
        low = 4.0 * c1 * c2 * weight * y * y / (c1 + root) ** 2
        return low, high
    exponent = 1.0 + 1.0 / p
    high = optimize.brentq(lambda z: c2 * weight * z ** exponent - c1 * (y - z),
                           0.0, y, xtol=1e-15 * max(y, 1e-300), rtol=4e-16)
    return y - high, high


def integrate_general(c1: float, c2: float, p: float, eps: float, s: float,
                      policy: str, total_time: float, dt: float = DEFAULT_DT,
                      y0: float = 1.0) -> OdeSeries:
    """Y' = -(c1 Y1 + c2 eps^(-2s) Y2^(1+1/p)) with Y1, Y2 chosen by `policy`."""
    initial = OdeState.split(y0, c1, c2, p, eps, s, policy)
    weight = eps ** (-2.0 * s)
    exponent = 1.0 + 1.0 / p

    def rate(y):
        low, high = _split(y, c1, c2, p, weight, policy)
        return c1 * low + c2 * weight * high ** exponent

    times, values = _integrate(rate, initial.Y, total_time, dt)
    parts = np.array([_split(y, c1, c2, p, weight, policy) for y in values])
    return OdeSeries(times, values, eps, s, parts[:, 0], parts[:, 1])


def all_high_solution(t, c2: float, p: float, eps: float, s: float, y0: float = 1.0):
    """(Y0^(-1/p) + (c2/p) eps^(-2s) t)^(-p)."""
    t = np.asarray(t, dtype=float)
    return (y0 ** (-1.0 / p) + (c2 / p) * eps ** (-2.0 * s) * t) ** (-p)


@dataclass(frozen=True)
class ConclusionFit:
    """Constants making Y <= A Y0 e^(-c1 t/8) before t* and B Y0 eps^(2sp) (1+t)^(-p) after."""
    t_star: float
    A: float
    B: float


def decay_conclusion(series: OdeSeries, c1: float, p: float) -> ConclusionFit:
    """Fit the constants of the exponential-then-algebraic decay conclusion."""
    t = series.times
    y0 = series.initial
    tail = series.eps ** (2.0 * series.s * p)

    def gap(time):
        return math.exp(-c1 * time / 8.0) - tail * (1.0 + time) ** (-p)

    end = float(t[-1])
    if gap(end) > 0:
        t_star = end
    else:
        t_star = optimize.brentq(gap, 0.0, end)
    early = t <= t_star
    A = float(np.max(series.values[early] / (y0 * np.exp(-c1 * t[early] / 8.0))))
    late = ~early
    if np.any(late):
        B = float(np.max(series.values[late] / (y0 * tail * (1.0 + t[late]) ** (-p))))
    else:
        B = 0.0
    return ConclusionFit(float(t_star), A, B)


def _check_parameters(eps: float, s: float):
    if not 0.0 < eps < 1.0:
        raise DomainError(f'eps must lie in (0, 1), got {eps!r}')
    if not 0.0 < s < 1.0:
        raise DomainError(f's must lie in (0, 1), got {s!r}')
