"""The shared battery of test functions used by the experiments."""

import logging
from dataclasses import dataclass

import numpy as np

from kinetic.errors import DomainError
from kinetic.grid import Field, VelocityGrid, apply_symbol, bump_phi, maxwellian
from kinetic.norms import project_orthogonal
from kinetic.semigroup import make_ring_datum

logger = logging.getLogger(__name__)

BATTERY_IDS = (
    'sqrt_mu',
    'v1_sqrt_mu',
    'energy_mode',
    'gauss_1',
    'gauss_3',
    'ring_1',
    'ring_2',
    'random',
)

# Members that live in the null space and survive I - P only as rounding noise.
NULL_SPACE_IDS = ('sqrt_mu', 'v1_sqrt_mu', 'energy_mode')

RANDOM_BANDWIDTH = 2.0


@dataclass(frozen=True, eq=False)
class BatteryMember:
    id: str
    field: Field


def _offset_gaussian(grid: VelocityGrid, distance: float) -> Field:
    v = grid.velocities
    centre = np.array([distance, 0.0, 0.0])
    return Field(grid, np.exp(-np.sum((v - centre) ** 2, axis=-1)))


def _random_field(grid: VelocityGrid, seed: int) -> Field:
    rng = np.random.default_rng(seed)
    noise = Field(grid, rng.standard_normal(grid.shape))
    smooth = apply_symbol(noise, bump_phi(grid.fft_frequency_magnitude / RANDOM_BANDWIDTH))
    return smooth * np.exp(-grid.speed ** 2 / 4.0)


def battery_function(grid: VelocityGrid, function_id: str, seed: int = 0) -> Field:
    """One member, normalized to unit L2 norm; DomainError when it does not fit the grid."""
    _, root = maxwellian(grid)
    if function_id == 'sqrt_mu':
        f = root
    elif function_id == 'v1_sqrt_mu':
        f = root * grid.velocities[..., 0]
    elif function_id == 'energy_mode':
        f = root * (grid.speed ** 2 - 3.0)
    elif function_id == 'gauss_1':
        f = _offset_gaussian(grid, 1.0)
    elif function_id == 'gauss_3':
        if 3.0 + 3.0 > grid.half_width:
            raise DomainError('gauss_3 needs half_width >= 6')
        f = _offset_gaussian(grid, 3.0)
    elif function_id == 'ring_1':
        f = make_ring_datum(grid, 1)
    elif function_id == 'ring_2':
        f = make_ring_datum(grid, 2)
    elif function_id == 'random':
        f = _random_field(grid, seed)
    else:
        raise DomainError(f'unknown battery function {function_id!r}')
    return f / f.norm()


def make_battery(grid: VelocityGrid, ids=BATTERY_IDS, seed: int = 0,
                 orthogonal: bool = False) -> list:
    """
    Build the requested members; members that do not fit the grid are skipped.

    With ``orthogonal=True`` every member is replaced by (I - P) f,
    renormalized, and the null-space members are dropped.
    """
    members = []
    for function_id in ids:
        if orthogonal and function_id in NULL_SPACE_IDS:
            continue
        try:
            f = battery_function(grid, function_id, seed)
        except DomainError as exc:
            logger.warning('skipping battery member %s: %s', function_id, exc)
            continue
        if orthogonal:
            f = project_orthogonal(f)
            f = f / f.norm()
        members.append(BatteryMember(function_id, f))
    return members
