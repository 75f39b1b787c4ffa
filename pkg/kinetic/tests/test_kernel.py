import numpy as np
from django.test import SimpleTestCase

from kinetic.errors import KernelError
from kinetic.kernel import (KernelConfig, angular_moment, b_eps, b_profile, cross_section,
                            japanese_bracket, submultiplicative_constant, symbol_A,
                            theta_cells, weight_Weps)


class TestKernelConfig(SimpleTestCase):
    def test_validation(self):
        bad = [
            dict(gamma=-3.0, s=0.5, eps=0.1),
            dict(gamma=0.0, s=1.0, eps=0.1),
            dict(gamma=0.0, s=0.5, eps=0.8),
            dict(gamma=-2.5, s=0.2, eps=0.1),
            dict(gamma=0.0, s=0.5, eps=0.1, n_theta=9),
            dict(gamma=0.0, s=0.5, eps=0.1, K=2.0),
            dict(gamma=0.0, s=0.5, eps=0.1, delta=0.0),
        ]
        for kwargs in bad:
            with self.assertRaises(KernelError, msg=str(kwargs)):
                KernelConfig(**kwargs)

    def test_regimes(self):
        cfg = KernelConfig(-1.0, 0.5, 0.1)
        self.assertTrue(cfg.moderately_soft)
        self.assertTrue(cfg.is_production)
        self.assertFalse(KernelConfig(0.0, 0.5, 0.1, n_theta=8, n_phi=4).is_production)
        self.assertEqual(cfg.with_eps(0.05).eps, 0.05)
        self.assertEqual(cfg.refined(4).n_theta, 256)

    def test_small_rule_warns(self):
        cfg = KernelConfig(0.0, 0.5, 0.1, n_theta=8, n_phi=4)
        with self.assertLogs('kinetic.kernel', 'WARNING') as logs:
            cfg.rule
        self.assertTrue(any('below production size' in line for line in logs.output))


class TestAngularProfile(SimpleTestCase):
    def test_profile(self):
        self.assertAlmostEqual(b_profile(np.pi / 2, 0.5), (np.pi / 2) ** -2.0)
        self.assertEqual(b_profile(2.0, 0.5), 0.0)
        with self.assertRaises(KernelError):
            b_profile(0.0, 0.5)

    def test_cutoff(self):
        cfg = KernelConfig(0.0, 0.5, 0.1)
        self.assertEqual(b_eps(0.9 * cfg.theta_min, 0.1, 0.5), 0.0)
        theta = 1.1 * cfg.theta_full
        self.assertAlmostEqual(b_eps(theta, 0.1, 0.5), b_profile(theta, 0.5))

    def test_theta_cells(self):
        eps = 2.0 ** -6
        with self.assertLogs('kinetic.kernel', 'WARNING') as logs:
            edges = theta_cells(eps, 32)
        self.assertIn('angular grading coarsened', logs.output[0])
        self.assertEqual(edges.size, 33)
        self.assertAlmostEqual(edges[0], 2.0 * np.arcsin(0.75 * eps))
        self.assertAlmostEqual(edges[-1], np.pi / 2)
        self.assertTrue(np.all(np.diff(edges) > 0))

    def test_theta_cells_keep_grading(self):
        with self.assertNoLogs('kinetic.kernel', 'WARNING'):
            edges = theta_cells(2.0 ** -3, 32)
        self.assertTrue(np.all(np.diff(edges) > 0))


class TestAngularRule(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.cfg = KernelConfig(0.0, 0.5, 2.0 ** -4)

    def test_band_area_is_exact(self):
        rule = self.cfg.rule
        self.assertEqual(rule.size, 64 * 16)
        expected = 2.0 * np.pi * np.cos(self.cfg.theta_min)
        self.assertAlmostEqual(rule.total_weight / expected, 1.0, places=12)
        np.testing.assert_allclose(np.linalg.norm(rule.sigma, axis=1), 1.0)

    def test_rule_against_adaptive(self):
        for power in (0.0, 2.0):
            rule = angular_moment(self.cfg, power)
            adaptive = angular_moment(self.cfg, power, 'adaptive')
            self.assertLess(abs(rule - adaptive) / adaptive, 1e-2)

    def test_cross_section_growth(self):
        coarse = cross_section(KernelConfig(0.0, 0.5, 2.0 ** -6), 'adaptive')
        fine = cross_section(KernelConfig(0.0, 0.5, 2.0 ** -7), 'adaptive')
        self.assertAlmostEqual(fine / coarse, 2.0, delta=0.1)

    def test_unknown_method(self):
        with self.assertRaises(KernelError):
            angular_moment(self.cfg, 0.0, 'trapezoid')


class TestSymbol(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.cfg = KernelConfig(0.0, 0.5, 2.0 ** -4)

    def test_quadratic_regime(self):
        # |xi| sin(theta/2) <= 1 on the whole hemisphere
        self.assertEqual(symbol_A(0.0, self.cfg), 0.0)
        moment = angular_moment(self.cfg, 2.0)
        self.assertAlmostEqual(symbol_A(1.0, self.cfg) / moment, 1.0, places=12)

    def test_saturated_regime(self):
        xi = 1.01 / (0.75 * self.cfg.eps)
        self.assertAlmostEqual(symbol_A(xi, self.cfg) / cross_section(self.cfg), 1.0, places=12)

    def test_rule_against_adaptive(self):
        xi = np.array([0.5, 3.0, 20.0])
        rule = symbol_A(xi, self.cfg)
        adaptive = symbol_A(xi, self.cfg, 'adaptive')
        np.testing.assert_allclose(rule, adaptive, rtol=1e-2)
        self.assertTrue(np.all(np.diff(rule) > 0))

    def test_negative_frequency(self):
        with self.assertRaises(KernelError):
            symbol_A(-1.0, self.cfg)


class TestWeight(SimpleTestCase):
    def test_limits(self):
        eps, s = 0.1, 0.5
        self.assertEqual(weight_Weps(0.0, eps, s), 1.0)
        self.assertAlmostEqual(weight_Weps(20.0, eps, s), eps ** -s)
        self.assertAlmostEqual(weight_Weps(np.array([3.0, 4.0, 0.0]), eps, s, vector=True),
                               japanese_bracket(5.0, s))

    def test_submultiplicative(self):
        constant = submultiplicative_constant(0.1, 0.5, np.geomspace(0.1, 40.0, 40))
        self.assertGreaterEqual(constant, 1.0)
        self.assertLess(constant, 10.0)
