import numpy as np
from django.test import SimpleTestCase

from kinetic.collision import DenseOperator
from kinetic.errors import DomainError
from kinetic.grid import make_grid, maxwellian
from kinetic.kernel import KernelConfig, weight_Weps
from kinetic.norms import (SphericalTransform, equivalence_ratio,
                           fourier_multiplier_norm, multiplier_WepsD, null_space_basis,
                           orthonormal_null_space, project_N, project_orthogonal,
                           spherical_multiplier, triple_norm, weighted_L2)


class TestMultipliers(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.grid = make_grid(16, 6.0)
        v = cls.grid.velocities
        cls.f = cls.grid.field(np.exp(-np.sum((v - [1.0, 0.0, 0.0]) ** 2, axis=-1)))

    def test_weighted_L2(self):
        self.assertAlmostEqual(weighted_L2(self.f), self.f.norm())
        self.assertGreater(weighted_L2(self.f, 1.0), self.f.norm())

    def test_fourier_multiplier(self):
        norm = fourier_multiplier_norm(self.f, 0.25, 0.5)
        self.assertGreaterEqual(norm, self.f.norm())
        self.assertAlmostEqual(norm, multiplier_WepsD(self.f, 0.25, 0.5).norm(), places=10)

    def test_triple_norm_parts(self):
        st = SphericalTransform(self.grid, l_max=6, n_shells=24)
        report = triple_norm(self.f, 0.25, 0.5, 0.0, st)
        self.assertAlmostEqual(report.total, report.spherical_term + report.fourier_term
                               + report.weight_term)
        self.assertTrue(all(x > 0 for x in (report.spherical_term, report.fourier_term,
                                            report.weight_term)))
        self.assertAlmostEqual((report * 2.0).total, 2.0 * report.total)

    def test_equivalence_ratio(self):
        st = SphericalTransform(self.grid, l_max=6, n_shells=24)
        identity = DenseOperator(np.eye(self.grid.size), self.grid)
        kernel = KernelConfig(0.0, 0.5, 0.25)
        ratio = equivalence_ratio(self.f, identity, kernel, st)
        expected = 2.0 * self.f.norm() ** 2 / triple_norm(self.f, 0.25, 0.5, 0.0, st).total
        self.assertAlmostEqual(ratio, expected, places=10)
        with self.assertRaises(DomainError):
            equivalence_ratio(self.grid.zeros(), identity, kernel, st)


class TestSphericalTransform(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.grid = make_grid(16, 6.0)
        cls.st = SphericalTransform(cls.grid, l_max=4, n_shells=24)

    def test_harmonics_are_orthonormal(self):
        size = (self.st.l_max + 1) ** 2
        np.testing.assert_allclose(self.st.gram(), np.eye(size), atol=1e-12)
        self.assertAlmostEqual(self.st.sphere_weights.sum(), 4.0 * np.pi)

    def test_band_limited_round_trip(self):
        rng = np.random.default_rng(0)
        coefficients = rng.standard_normal((self.st.n_shells, (self.st.l_max + 1) ** 2))
        samples = self.st.synthesize_samples(coefficients)
        np.testing.assert_allclose(self.st.analyze_samples(samples), coefficients, atol=1e-12)

    def test_radial_function_is_untouched(self):
        f = self.grid.field(np.exp(-self.grid.speed ** 2 / 4.0))
        change = spherical_multiplier(f, 0.25, 0.5, self.st) - f
        self.assertLess(change.norm(), 1e-2 * f.norm())

    def test_anisotropic_function_is_amplified(self):
        v = self.grid.velocities
        f = self.grid.field(v[..., 2] * np.exp(-self.grid.speed ** 2 / 2.0))
        self.assertGreater(spherical_multiplier(f, 0.25, 0.5, self.st).norm(), f.norm())

    def test_degree_one_harmonic_scaled_by_weight(self):
        v = self.grid.velocities
        f = self.grid.field(v[..., 2] * np.exp(-self.grid.speed ** 2 / 2.0))
        factor = weight_Weps(np.sqrt(2.0), 0.25, 0.5)
        change = spherical_multiplier(f, 0.25, 0.5, self.st) - f
        expected = (factor - 1.0) * f
        self.assertLess((change - expected).norm(), 0.1 * expected.norm())

    def test_zero_coefficients(self):
        zeros = np.zeros((self.st.n_shells, (self.st.l_max + 1) ** 2))
        self.assertEqual(np.abs(self.st.evaluate_on_grid(zeros)).max(), 0.0)

    def test_invalid(self):
        with self.assertRaises(DomainError):
            SphericalTransform(self.grid, l_max=4, n_shells=1)


class TestMacroscopicProjection(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.grid = make_grid(16, 8.0)
        _, cls.root = maxwellian(cls.grid)
        rng = np.random.default_rng(5)
        cls.f = cls.grid.field(rng.standard_normal(cls.grid.shape)
                               * np.exp(-cls.grid.speed ** 2 / 8.0))

    def test_basis(self):
        basis = null_space_basis(self.grid)
        self.assertEqual(basis.shape, (5, self.grid.size))
        q = orthonormal_null_space(self.grid)
        np.testing.assert_allclose(q @ q.T * self.grid.cell_volume, np.eye(5), atol=1e-12)

    def test_idempotent(self):
        _, once = project_N(self.f)
        _, twice = project_N(once)
        np.testing.assert_allclose(twice.values, once.values, atol=1e-10)

    def test_orthogonal_complement(self):
        rest = project_orthogonal(self.f)
        moments = null_space_basis(self.grid) @ rest.flat * self.grid.cell_volume
        np.testing.assert_allclose(moments, 0.0, atol=1e-10)

    def test_coefficients_of_sqrt_mu(self):
        coefficients, projected = project_N(self.root)
        self.assertAlmostEqual(coefficients.a, 1.0, places=8)
        self.assertAlmostEqual(coefficients.c, 0.0, places=8)
        np.testing.assert_allclose(projected.values, self.root.values, atol=1e-12)

    def test_literal_coefficient_halves_sqrt_mu(self):
        coefficients, projected = project_N(self.root, literal=True)
        self.assertAlmostEqual(coefficients.a, 0.5, places=6)
        np.testing.assert_allclose(projected.values, 0.5 * self.root.values, atol=1e-6)
