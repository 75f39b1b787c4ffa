import tempfile
from dataclasses import replace
from pathlib import Path

from django.test import SimpleTestCase

from kinetic.config import config_hash, layered_defaults, parse_eps_list, read_config_file
from kinetic.forms import ExperimentConfigForm


class TestEpsList(SimpleTestCase):
    def test_range(self):
        self.assertEqual(parse_eps_list('2^-3..2^-5'), (0.125, 0.0625, 0.03125))
        self.assertEqual(parse_eps_list(' 2^-5 .. 2^-4 '), (0.03125, 0.0625))

    def test_lists(self):
        self.assertEqual(parse_eps_list('1e-1, 1e-2'), (0.1, 0.01))
        self.assertEqual(parse_eps_list('2^-4'), (0.0625,))
        self.assertEqual(parse_eps_list(0.5), (0.5,))
        self.assertEqual(parse_eps_list([0.1, 0.2]), (0.1, 0.2))

    def test_errors(self):
        for text in ('', ' , ', 'small'):
            with self.assertRaises(ValueError):
                parse_eps_list(text)


class TestLayering(SimpleTestCase):
    def test_experiment_overrides(self):
        data = layered_defaults('semigroup')
        self.assertEqual(data['experiment'], 'semigroup')
        self.assertEqual(data['grid_n'], 16)
        self.assertEqual(data['gamma'], -1.0)
        self.assertEqual(layered_defaults('symbol')['grid_n'], 32)
        self.assertEqual(layered_defaults('symbol')['n_theta'], 64)

    def test_commutator_cutoff_meets_box(self):
        data = layered_defaults('commutator')
        for eps in parse_eps_list(data['eps_list']):
            self.assertLess(0.75 / eps, data['coarse_half_width'])

    def test_config_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'run.cfg'
            path.write_text('# coarse run\nEPS-LIST=2^-3..2^-4\nGrid_N=12\n')
            data = read_config_file(path)
        self.assertEqual(data, {'eps_list': '2^-3..2^-4', 'grid_n': '12'})


class TestConfigForm(SimpleTestCase):
    def form(self, experiment='symbol', **changes):
        data = layered_defaults(experiment)
        data.update(changes)
        return ExperimentConfigForm(data)

    def test_defaults_are_valid(self):
        for experiment in ('ode', 'symbol', 'norm-equivalence', 'semigroup', 'commutator',
                           'operator-diff'):
            form = self.form(experiment)
            self.assertTrue(form.is_valid(), (experiment, form.errors))

    def test_to_config(self):
        form = self.form('norm-equivalence', battery='gauss_1, random')
        self.assertTrue(form.is_valid(), form.errors)
        config = form.to_config()
        self.assertEqual(config.eps_list, (0.125, 0.0625, 0.03125, 0.015625))
        self.assertEqual(config.battery, ('gauss_1', 'random'))
        self.assertEqual(config.order, 1)
        self.assertEqual((config.grid_n, config.n_theta, config.n_phi), (12, 32, 8))

    def test_hash(self):
        form = self.form()
        self.assertTrue(form.is_valid())
        config = form.to_config()
        self.assertEqual(len(config.config_hash), 16)
        self.assertEqual(config_hash(replace(config, out_dir='elsewhere')), config.config_hash)
        self.assertNotEqual(config_hash(replace(config, seed=1)), config.config_hash)

    def test_rejected(self):
        bad = [
            ('symbol', dict(grid_n=9)),
            ('symbol', dict(s=1.0)),
            ('symbol', dict(eps_list='0.5')),
            ('symbol', dict(eps_list='tiny')),
            ('symbol', dict(battery='gauss_1,sech')),
            ('semigroup', dict(gamma=0.0)),
            ('commutator', dict(eps_list='2^-4')),
            ('ode', dict(dt=0.1)),
            ('ode', dict(eps_list='1.5')),
        ]
        for experiment, changes in bad:
            form = self.form(experiment, **changes)
            self.assertFalse(form.is_valid(), (experiment, changes))
