import numpy as np
from django.test import SimpleTestCase

from kinetic.battery import battery_function, make_battery
from kinetic.collision import (CollisionWorkspace, DenseOperator, Gamma_eps, Gamma_eps_many, L_eps,
                               L_eps_at, Q_eps, Q_eps_at, Q_eps_many, adjoint_defect, bobylev_R,
                               brute_force_Q, collision_frequency, collision_invariants,
                               commutator_pairing, cutoff_function, orthonormal_frames,
                               post_collision, quadratic_form, rotate_rule, seminorm_M, seminorm_R,
                               seminorm_R_many, seminorm_R_star, weight_commutator)
from kinetic.errors import DomainError, GridError
from kinetic.grid import make_grid, maxwellian
from kinetic.kernel import KernelConfig
from kinetic.norms import null_space_basis

# Small angular rule for unit tests: 8 polar x 3 azimuthal nodes.
TINY = dict(n_theta=8, n_phi=3)
# Four azimuths, for checks that need the circle average resolved.
SMALL = dict(n_theta=8, n_phi=4)


def gaussian(grid, centre=(0.0, 0.0, 0.0), width=1.0):
    v = grid.velocities - np.asarray(centre)
    return grid.field(np.exp(-np.sum(v ** 2, axis=-1) / width))


def centre_node(grid) -> int:
    n = grid.n_per_axis
    k = n // 2
    return k * n * n + k * n + k


class TestGeometry(SimpleTestCase):
    def test_frames_are_orthonormal(self):
        rng = np.random.default_rng(0)
        axes = rng.standard_normal((10, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        e1, e2 = orthonormal_frames(axes)
        for a, b in ((e1, e2), (e1, axes), (e2, axes)):
            np.testing.assert_allclose(np.sum(a * b, axis=1), 0.0, atol=1e-14)
        np.testing.assert_allclose(np.linalg.norm(e2, axis=1), 1.0)

    def test_rotation_maps_pole_to_axis(self):
        axes = np.array([[0.0, 0.6, 0.8], [1.0, 0.0, 0.0]])
        rotated = rotate_rule(np.array([[0.0, 0.0, 1.0]]), axes)
        np.testing.assert_allclose(rotated[:, 0, :], axes, atol=1e-15)

    def test_post_collision_conserves(self):
        rng = np.random.default_rng(2)
        v, v_star = rng.standard_normal((2, 5, 3))
        sigma = rng.standard_normal((5, 3))
        sigma /= np.linalg.norm(sigma, axis=1, keepdims=True)
        v_prime, v_star_prime = post_collision(v, v_star, sigma)
        np.testing.assert_allclose(v_prime + v_star_prime, v + v_star, atol=1e-14)
        np.testing.assert_allclose(np.sum(v_prime ** 2 + v_star_prime ** 2, axis=1),
                                   np.sum(v ** 2 + v_star ** 2, axis=1), atol=1e-13)


class TestDiscreteOperator(SimpleTestCase):
    """Exact agreement between the vectorized sums, the dense matrix and the loop oracle."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.grid = make_grid(8, 4.0)
        cls.ws = CollisionWorkspace(cls.grid, KernelConfig(0.0, 0.5, 0.25, **TINY), order=1)
        cls.g = gaussian(cls.grid, (0.5, 0.0, 0.0))
        cls.h = gaussian(cls.grid, (0.0, -0.5, 0.5), 2.0)
        cls.dense = DenseOperator.from_workspace(cls.ws)

    def test_matches_brute_force(self):
        nodes = [centre_node(self.grid), 100]
        fast = Q_eps_at(self.g, self.h, self.ws, nodes)
        slow = brute_force_Q(self.g, self.h, self.ws, nodes)
        np.testing.assert_allclose(fast, slow, rtol=1e-8, atol=1e-14)

    def test_dense_matches_matrix_free(self):
        np.testing.assert_allclose(self.dense.apply(self.h).values, L_eps(self.h, self.ws).values,
                                   rtol=1e-9, atol=1e-12)
        self.assertAlmostEqual(self.dense.quadratic_form(self.h), quadratic_form(self.h, self.ws),
                               places=10)

    def test_node_subset(self):
        nodes = [3, centre_node(self.grid)]
        np.testing.assert_allclose(L_eps_at(self.g, self.ws, nodes),
                                   self.dense.apply(self.g).flat[nodes], rtol=1e-9, atol=1e-12)

    def test_bilinear(self):
        nodes = [centre_node(self.grid)]
        combined = Q_eps_at(self.g, 2.0 * self.h + self.g, self.ws, nodes)
        parts = 2.0 * Q_eps_at(self.g, self.h, self.ws, nodes) + Q_eps_at(self.g, self.g, self.ws, nodes)
        np.testing.assert_allclose(combined, parts, rtol=1e-10)

    def test_full_grid_matches_node_subset(self):
        nodes = [centre_node(self.grid), 17]
        np.testing.assert_allclose(Q_eps(self.g, self.h, self.ws).flat[nodes],
                                   Q_eps_at(self.g, self.h, self.ws, nodes), rtol=1e-12)

    def test_linearization(self):
        root = self.ws.sqrt_mu
        expected = -(Gamma_eps(root, self.h, self.ws) + Gamma_eps(self.h, root, self.ws))
        actual = L_eps(self.h, self.ws)
        np.testing.assert_allclose(actual.values, expected.values, rtol=1e-8,
                                   atol=1e-10 * np.abs(expected.values).max())

    def test_batched_pairs_match_single_pairs(self):
        first, second = Q_eps_many([(self.g, self.h), (self.h, self.g)], self.ws)
        np.testing.assert_allclose(first.values, Q_eps(self.g, self.h, self.ws).values,
                                   rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(second.values, Q_eps(self.h, self.g, self.ws).values,
                                   rtol=1e-12, atol=1e-15)
        root = self.ws.sqrt_mu
        batched = Gamma_eps_many([(root, self.h), (self.h, root)], self.ws)
        expected = -(batched[0] + batched[1])
        np.testing.assert_allclose(L_eps(self.h, self.ws).values, expected.values, rtol=1e-8,
                                   atol=1e-10 * np.abs(expected.values).max())

    def test_collision_frequency_positive(self):
        nu = collision_frequency(self.ws)
        self.assertTrue(np.all(nu.values > 0))

    def test_grid_mismatch(self):
        other = make_grid(8, 5.0).zeros()
        with self.assertRaises(GridError):
            L_eps(other, self.ws)
        with self.assertRaises(GridError):
            self.dense.apply(other)


class TestEquilibrium(SimpleTestCase):
    """Q(mu, mu) and L sqrt(mu) vanish up to interpolation error at the centre."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.grid = make_grid(16, 4.0)
        cls.ws = CollisionWorkspace(cls.grid, KernelConfig(0.0, 0.5, 0.25, **TINY), order=3)
        cls.node = centre_node(cls.grid)
        cls.mu, cls.root = maxwellian(cls.grid)
        cls.loss = (cls.mu.flat[cls.node] * cls.ws.rule.cross_section * cls.grid.cell_volume
                    * np.sum(cls.mu.flat))

    def test_maxwellian_is_stationary(self):
        value = Q_eps_at(self.mu, self.mu, self.ws, [self.node])[0]
        self.assertLess(abs(value) / self.loss, 0.05)

    def test_sqrt_maxwellian_in_kernel(self):
        value = L_eps_at(self.root, self.ws, [self.node])[0]
        scale = self.loss / self.root.flat[self.node]
        self.assertLess(abs(value) / scale, 0.1)


class TestQuadraticFunctionals(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.grid = make_grid(8, 4.0)
        cls.ws = CollisionWorkspace(cls.grid, KernelConfig(0.0, 0.5, 0.25, **TINY), order=1)
        cls.mu, cls.root = maxwellian(cls.grid)
        cls.f = gaussian(cls.grid, (0.5, 0.0, 0.0))

    def test_star_variant_agrees_for_gamma_zero(self):
        self.assertAlmostEqual(seminorm_R(self.mu, self.f, self.ws),
                               seminorm_R_star(self.mu, self.f, self.ws), places=12)

    def test_seminorm_is_quadratic(self):
        base = seminorm_R(self.mu, self.f, self.ws)
        self.assertGreater(base, 0.0)
        self.assertAlmostEqual(seminorm_R(self.mu, 3.0 * self.f, self.ws) / base, 9.0, places=10)

    def test_seminorm_batch_matches_single(self):
        h = gaussian(self.grid, (0.0, 0.5, -0.5), 2.0)
        values = seminorm_R_many(self.mu, [self.f, h], self.ws)
        self.assertAlmostEqual(values[0] / seminorm_R(self.mu, self.f, self.ws), 1.0, places=12)
        self.assertAlmostEqual(values[1] / seminorm_R(self.mu, h, self.ws), 1.0, places=12)

    def test_maxwellian_jump_functional(self):
        base = seminorm_M(self.f, self.ws)
        self.assertGreater(base, 0.0)
        self.assertAlmostEqual(seminorm_M(2.0 * self.f, self.ws) / base, 4.0, places=10)

    def test_bobylev_needs_maxwell_molecules(self):
        ws = CollisionWorkspace(self.grid, KernelConfig(-1.0, 0.5, 0.25, **TINY), order=1)
        with self.assertRaises(DomainError):
            bobylev_R(self.f, ws)
        self.assertTrue(np.isfinite(bobylev_R(self.f, self.ws)))

    def test_weight_commutator_trivial_weight(self):
        self.assertEqual(weight_commutator(self.root, self.f, self.f, 0.0, self.ws), 0.0)


class TestCommutators(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.grid = make_grid(8, 4.0)
        rng = np.random.default_rng(3)
        a = rng.standard_normal((cls.grid.size, cls.grid.size))
        cls.symmetric = DenseOperator(a + a.T, cls.grid)
        cls.skewed = DenseOperator(a, cls.grid)
        cls.diagonal = DenseOperator(np.diag(1.0 + cls.grid.speed.reshape(-1)), cls.grid)
        cls.f = gaussian(cls.grid, (0.5, 0.0, 0.0))

    def test_cutoff_kinds(self):
        low = cutoff_function(self.grid, 'low', 1.0)
        high = cutoff_function(self.grid, 'high', 1.0)
        np.testing.assert_allclose(low + high, 1.0)
        ring = cutoff_function(self.grid, 'ring', 1.0)
        self.assertEqual(ring.flat[centre_node(self.grid)], 0.0)
        with self.assertRaises(DomainError):
            cutoff_function(self.grid, 'band', 1.0)
        with self.assertRaises(DomainError):
            cutoff_function(self.grid, 'low', 0.0)

    def test_cutoff_beyond_box_commutes(self):
        self.assertEqual(commutator_pairing(self.f, 'low', 100.0, self.symmetric), 0.0)
        self.assertEqual(commutator_pairing(self.f, 'high', 100.0, self.symmetric), 0.0)

    def test_multiplication_operator_commutes(self):
        for kind in ('low', 'high', 'ring'):
            value = commutator_pairing(self.f, kind, 1.5, self.diagonal)
            self.assertAlmostEqual(value, 0.0, places=12)

    def test_adjoint_defect(self):
        g = gaussian(self.grid, (0.0, 1.0, 0.0))
        self.assertAlmostEqual(adjoint_defect(self.f, g, self.symmetric), 0.0, places=9)
        self.assertGreater(adjoint_defect(self.f, g, self.skewed), 1e-6)


class TestLinearizedOperator(SimpleTestCase):
    """Conservation, null space, symmetry and coercivity with the cubic stencil."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.grid = make_grid(8, 3.5)
        cls.ws = CollisionWorkspace(cls.grid, KernelConfig(0.0, 0.5, 0.25, **SMALL), order=3)
        cls.dense = DenseOperator.from_workspace(cls.ws)
        cls.nu = collision_frequency(cls.ws)
        cls.mu, cls.root = maxwellian(cls.grid)
        cls.battery = make_battery(cls.grid, ('sqrt_mu', 'v1_sqrt_mu', 'energy_mode', 'gauss_1',
                                              'random'))

    def test_collision_invariants_are_conserved(self):
        v = self.grid.velocities
        g = self.grid.field(np.exp(-0.5 * ((v[..., 0] - 0.3) ** 2 / 0.6 + v[..., 1] ** 2
                                           + v[..., 2] ** 2 / 0.8)))
        q = Q_eps(g, g, self.ws)
        h3 = self.grid.cell_volume
        loss = self.ws.rule.cross_section * h3 * np.sum(g.values)
        for name, weight in collision_invariants(self.grid).items():
            scale = loss * np.sum(np.abs(weight) * g.values) * h3
            self.assertLess(abs(q.inner(weight)) / scale, 0.05, msg=name)

    def test_null_space_is_annihilated(self):
        # measured with a sqrt(mu) weight, the scale of Q
        for k, row in enumerate(null_space_basis(self.grid)):
            e = self.grid.field(row)
            residual = (self.dense.apply(e) * self.root).norm()
            scale = (e * self.nu * self.root).norm()
            self.assertLess(residual / scale, 0.1, msg=f'null-space element {k}')

    def test_symmetric_on_smooth_fields(self):
        fields = [member.field for member in self.battery if member.id != 'random']
        scale = self.nu.values.max()
        for f in fields:
            for g in fields:
                defect = adjoint_defect(f, g, self.dense) / (scale * f.norm() * g.norm())
                self.assertLess(defect, 0.05)

    def test_quadratic_form_bounded_below(self):
        # gamma = 0, so the weighted L2 term is the plain norm
        for member in self.battery:
            f = member.field
            self.assertGreater(quadratic_form(f, self.dense) + f.norm() ** 2, 0.0, msg=member.id)
        for member in make_battery(self.grid, ('gauss_1', 'random'), orthogonal=True):
            self.assertGreater(quadratic_form(member.field, self.dense), 0.0, msg=member.id)

    def test_commutator_pairing(self):
        f = battery_function(self.grid, 'gauss_1')
        self.assertEqual(commutator_pairing(f, 'low', 100.0, self.dense), 0.0)
        self.assertEqual(commutator_pairing(f, 'high', 100.0, self.dense), 0.0)
        for kind in ('low', 'high', 'ring'):
            once = commutator_pairing(f, kind, 1.5, self.dense)
            self.assertTrue(np.isfinite(once))
            self.assertAlmostEqual(commutator_pairing(2.0 * f, kind, 1.5, self.dense), 4.0 * once,
                                   places=8)


class TestFrequencyIdentity(SimpleTestCase):
    """R_mu in velocity space against its frequency-space evaluation."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.grid = make_grid(12, 5.0)
        cls.ws = CollisionWorkspace(cls.grid, KernelConfig(0.0, 0.5, 0.25, **SMALL), order=3,
                                    workers=4)
        cls.mu, _ = maxwellian(cls.grid)

    def test_bobylev_matches_velocity_space(self):
        ids = ('sqrt_mu', 'gauss_1')
        fields = [battery_function(self.grid, function_id) for function_id in ids]
        physical = seminorm_R_many(self.mu, fields, self.ws)
        for function_id, f, value in zip(ids, fields, physical):
            self.assertGreater(value, 0.0)
            frequency = bobylev_R(f, self.ws)
            self.assertLess(abs(value - frequency) / value, 0.15, msg=function_id)
