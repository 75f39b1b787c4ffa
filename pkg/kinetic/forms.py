"""Django form that validates layered experiment parameters into an ExperimentConfig."""

import logging

from django import forms
from django.core.exceptions import ValidationError
from django.core.validators import MaxValueValidator, MinValueValidator

from kinetic.battery import BATTERY_IDS
from kinetic.config import EXPERIMENT_NAMES, ExperimentConfig, parse_eps_list
from kinetic.kernel import PRODUCTION_N_PHI, PRODUCTION_N_THETA

logger = logging.getLogger(__name__)

# Largest cutoff used by the collision experiments.
EPS_EXPERIMENT_MAX = 2.0 ** -3


class ExperimentConfigForm(forms.Form):
    """Validate layered experiment parameters and turn them into an ExperimentConfig."""

    experiment = forms.ChoiceField(choices=[(name, name) for name in EXPERIMENT_NAMES])
    grid_n = forms.IntegerField(validators=[MinValueValidator(8), MaxValueValidator(256)])
    half_width = forms.FloatField(validators=[MinValueValidator(1.0)])
    coarse_n = forms.IntegerField(validators=[MinValueValidator(8), MaxValueValidator(256)])
    coarse_half_width = forms.FloatField(validators=[MinValueValidator(1.0)])
    gamma = forms.FloatField()
    s = forms.FloatField()
    eps_list = forms.CharField()
    n_theta = forms.IntegerField(validators=[MinValueValidator(4)])
    n_phi = forms.IntegerField(validators=[MinValueValidator(3)])
    l_max = forms.IntegerField(validators=[MinValueValidator(1), MaxValueValidator(64)])
    n_shells = forms.IntegerField(validators=[MinValueValidator(2)])
    order = forms.TypedChoiceField(choices=[(1, '1'), (3, '3')], coerce=int)
    battery = forms.CharField()
    seed = forms.IntegerField(validators=[MinValueValidator(0)])
    total_time = forms.FloatField()
    dt = forms.FloatField()
    eta = forms.FloatField(validators=[MinValueValidator(0.0), MaxValueValidator(0.25)])
    ring_j = forms.IntegerField(validators=[MinValueValidator(0)])
    out_dir = forms.CharField(required=False)

    def clean_eps_list(self):
        text = self.cleaned_data['eps_list']
        try:
            values = parse_eps_list(text)
        except ValueError:
            raise ValidationError(f'Cannot read eps list {text!r}.')
        return values

    def clean_battery(self):
        ids = tuple(x.strip() for x in self.cleaned_data['battery'].split(',') if x.strip())
        unknown = [x for x in ids if x not in BATTERY_IDS]
        if unknown:
            raise ValidationError(f'Unknown battery functions: {", ".join(unknown)}.')
        return ids

    def clean(self):
        """Cross-field checks on grid, kernel and cutoff parameters."""
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data
        experiment = cleaned_data['experiment']
        gamma, s = cleaned_data['gamma'], cleaned_data['s']
        eps_list = cleaned_data['eps_list']

        for key in ('grid_n', 'coarse_n'):
            if cleaned_data[key] % 2:
                raise ValidationError(f'{key} must be even.')
        if not 0.0 < s < 1.0:
            raise ValidationError('s must lie in (0, 1).')
        if not -3.0 < gamma <= 2.0 or gamma + 2.0 * s <= -1.0:
            raise ValidationError('gamma must lie in (-3, 2] with gamma + 2s > -1.')
        if cleaned_data['total_time'] <= 0 or cleaned_data['dt'] <= 0:
            raise ValidationError('total_time and dt must be positive.')

        if experiment == 'ode':
            if any(not 0.0 < eps < 1.0 for eps in eps_list):
                raise ValidationError('eps values must lie in (0, 1).')
            if cleaned_data['dt'] > 1e-2:
                raise ValidationError('dt must not exceed 1e-2.')
        elif any(not 0.0 < eps <= EPS_EXPERIMENT_MAX for eps in eps_list):
            raise ValidationError('eps values must lie in (0, 2^-3].')
        if experiment == 'semigroup' and not -2.0 * s <= gamma < 0.0:
            raise ValidationError('semigroup runs need gamma in [-2s, 0).')
        if experiment in ('semigroup', 'commutator', 'operator-diff') and len(eps_list) < 2:
            raise ValidationError('this experiment fits an eps exponent and needs two or more eps values.')

        if cleaned_data['n_theta'] % 2:
            raise ValidationError('n_theta must be even.')
        if cleaned_data['n_theta'] < PRODUCTION_N_THETA or cleaned_data['n_phi'] < PRODUCTION_N_PHI:
            logger.warning('angular rule %sx%s is below the %sx%s used for reported results',
                           cleaned_data['n_theta'], cleaned_data['n_phi'],
                           PRODUCTION_N_THETA, PRODUCTION_N_PHI)
        return cleaned_data

    def to_config(self) -> ExperimentConfig:
        data = self.cleaned_data
        return ExperimentConfig(
            experiment=data['experiment'],
            grid_n=data['grid_n'],
            half_width=data['half_width'],
            coarse_n=data['coarse_n'],
            coarse_half_width=data['coarse_half_width'],
            gamma=data['gamma'],
            s=data['s'],
            eps_list=tuple(data['eps_list']),
            n_theta=data['n_theta'],
            n_phi=data['n_phi'],
            l_max=data['l_max'],
            n_shells=data['n_shells'],
            order=data['order'],
            battery=data['battery'],
            seed=data['seed'],
            total_time=data['total_time'],
            dt=data['dt'],
            eta=data['eta'],
            ring_j=data['ring_j'],
            out_dir=data.get('out_dir') or '',
        )
