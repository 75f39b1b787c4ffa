"""Experiment configuration: layered defaults, eps-list parsing and the config hash."""

import hashlib
import json
import logging
import re
from dataclasses import asdict, dataclass, field

from django.conf import settings
from dotenv import dotenv_values

logger = logging.getLogger(__name__)

EXPERIMENT_NAMES = (
    'ode',
    'norm-equivalence',
    'symbol',
    'semigroup',
    'commutator',
    'operator-diff',
)

# Angular rule and stencil of the direct collision sums at desk scale.
DESK_COLLISION = {'n_theta': 32, 'n_phi': 8, 'order': 1}

# Per-experiment overrides on top of settings.BOLTZLAB_DEFAULTS.
EXPERIMENT_DEFAULTS = {
    'ode': {'eps_list': '1e-1,1e-2,1e-3', 's': 0.5, 'total_time': 20.0, 'dt': 1e-4},
    'norm-equivalence': {'eps_list': '2^-3..2^-6', 'gamma': 0.0, 's': 0.5,
                         'grid_n': 12, 'half_width': 6.0,
                         'coarse_n': 8, 'coarse_half_width': 6.0, **DESK_COLLISION},
    'symbol': {'eps_list': '2^-3..2^-7', 'gamma': 0.0, 's': 0.5},
    'semigroup': {'eps_list': '2^-4..2^-6', 'gamma': -1.0, 's': 0.5,
                  'grid_n': 16, 'half_width': 10.0, 'ring_j': 2, 'total_time': 8.0,
                  **DESK_COLLISION},
    # the cutoff transition 3/(4 eps) <= |v| <= 4/(3 eps) must meet the box for every eps
    'commutator': {'eps_list': '0.125,0.105,0.088', 'gamma': 0.0, 's': 0.5,
                   'coarse_n': 16, 'coarse_half_width': 14.0, 'ring_j': 3, **DESK_COLLISION},
    'operator-diff': {'eps_list': '2^-3..2^-5', 'gamma': 0.0, 's': 0.5,
                      'coarse_n': 12, 'coarse_half_width': 6.0, **DESK_COLLISION},
}

_RANGE = re.compile(r'^\s*2\^(-?\d+)\s*\.\.\s*2\^(-?\d+)\s*$')


def parse_eps_list(text) -> tuple:
    """
    Parse '2^-3..2^-7', '1e-1,1e-2' or a single number into a tuple of floats.

    Raises ValueError for anything else.
    """
    if isinstance(text, (int, float)):
        return (float(text),)
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    match = _RANGE.match(text)
    if match:
        first, last = int(match.group(1)), int(match.group(2))
        step = -1 if last < first else 1
        return tuple(2.0 ** k for k in range(first, last + step, step))
    parts = [p.strip() for p in text.split(',') if p.strip()]
    if not parts:
        raise ValueError('empty eps list')
    values = []
    for part in parts:
        if part.startswith('2^'):
            values.append(2.0 ** int(part[2:]))
        else:
            values.append(float(part))
    return tuple(values)


def layered_defaults(experiment: str) -> dict:
    data = dict(settings.BOLTZLAB_DEFAULTS)
    data.update(EXPERIMENT_DEFAULTS.get(experiment, {}))
    data['experiment'] = experiment
    return data


def read_config_file(path) -> dict:
    """Flat KEY=value file; keys are case-insensitive and may use dashes."""
    raw = dotenv_values(path)
    return {key.strip().lower().replace('-', '_'): value
            for key, value in raw.items() if value is not None}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    grid_n: int
    half_width: float
    coarse_n: int
    coarse_half_width: float
    gamma: float
    s: float
    eps_list: tuple
    n_theta: int
    n_phi: int
    l_max: int
    n_shells: int
    order: int
    battery: tuple
    seed: int
    total_time: float
    dt: float
    eta: float
    ring_j: int
    out_dir: str = field(default='', compare=False)

    def as_dict(self) -> dict:
        data = asdict(self)
        data['eps_list'] = list(self.eps_list)
        data['battery'] = list(self.battery)
        return data

    @property
    def config_hash(self) -> str:
        return config_hash(self)


def config_hash(config: ExperimentConfig) -> str:
    """First 16 hex digits of sha256 over the sorted JSON of everything but out_dir."""
    data = config.as_dict()
    data.pop('out_dir', None)
    text = json.dumps(data, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:16]
