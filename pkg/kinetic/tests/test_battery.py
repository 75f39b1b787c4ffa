from django.test import SimpleTestCase

from kinetic.battery import BATTERY_IDS, NULL_SPACE_IDS, battery_function, make_battery
from kinetic.errors import DomainError
from kinetic.grid import make_grid
from kinetic.norms import project_N


class TestBattery(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.grid = make_grid(16, 8.0)

    def test_members_are_normalized(self):
        with self.assertLogs('kinetic.battery', 'WARNING') as logs:
            members = make_battery(self.grid)
        self.assertIn('ring_2', logs.output[0])
        ids = [m.id for m in members]
        self.assertEqual(ids, [x for x in BATTERY_IDS if x != 'ring_2'])
        for member in members:
            self.assertAlmostEqual(member.field.norm(), 1.0, msg=member.id)

    def test_orthogonal_battery(self):
        members = make_battery(self.grid, ids=('sqrt_mu', 'gauss_1', 'random'), orthogonal=True)
        self.assertEqual([m.id for m in members], ['gauss_1', 'random'])
        for member in members:
            self.assertAlmostEqual(member.field.norm(), 1.0)
            self.assertLess(project_N(member.field)[1].norm(), 1e-10)

    def test_null_space_members(self):
        for function_id in NULL_SPACE_IDS:
            f = battery_function(self.grid, function_id)
            self.assertAlmostEqual(project_N(f)[1].norm(), 1.0, places=6)

    def test_random_is_seeded(self):
        a = battery_function(self.grid, 'random', seed=4)
        b = battery_function(self.grid, 'random', seed=4)
        c = battery_function(self.grid, 'random', seed=5)
        self.assertEqual((a - b).norm(), 0.0)
        self.assertGreater((a - c).norm(), 0.1)

    def test_errors(self):
        with self.assertRaises(DomainError):
            battery_function(self.grid, 'sech')
        with self.assertRaises(DomainError):
            battery_function(make_grid(8, 4.0), 'gauss_3')
