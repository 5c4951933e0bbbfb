import unittest

import numpy as np

from wavedamp.core import Damper, Forcing, StringParams
from wavedamp.errors import SingularPoint
from wavedamp.residuals import interface_residuals, ode_residual, step_size


class TestResiduals(unittest.TestCase):
    def setUp(self):
        self.params = StringParams()
        self.damper = Damper()

    def test_default_configuration(self):
        for forcing in Forcing:
            residuals = interface_residuals(0.9j, self.params, self.damper, forcing)
            self.assertLess(residuals.continuity, 1e-10)
            self.assertLess(residuals.jump, 1e-6)
            for x in (0.5, 4.4, 4.6, 9.5):
                self.assertLess(ode_residual(x, 0.9j, self.params, self.damper, forcing), 1e-6)

    def test_random_battery(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            length = rng.uniform(1.0, 20.0)
            params = StringParams(length, rng.uniform(0.01, 1.0), rng.uniform(0.25, 4.0))
            damper = Damper(rng.uniform(0.02, 0.98) * length, rng.uniform(0.0, 100.0))
            s = 1j * rng.uniform(0.1, 5.0)
            for forcing in Forcing:
                residuals = interface_residuals(s, params, damper, forcing)
                self.assertLess(residuals.continuity, 1e-10, (params, damper, s, forcing))
                self.assertLess(residuals.jump, 1e-6, (params, damper, s, forcing))
                for x in rng.uniform(0, length, 3):
                    self.assertLess(ode_residual(x, s, params, damper, forcing), 1e-6, (params, damper, s, x))

    def test_step_size(self):
        self.assertAlmostEqual(step_size(0j, self.params), 0.1)
        self.assertAlmostEqual(step_size(100j, self.params), 1e-2 / abs(np.sqrt(100j * (100j + 0.08))))

    def test_out_of_range(self):
        with self.assertRaises(ValueError):
            ode_residual(11.0, 1j, self.params, self.damper, Forcing.UNIFORM)

    def test_singular(self):
        with self.assertRaises(SingularPoint):
            interface_residuals(0j, self.params, self.damper, Forcing.BOUNDARY_LEFT)
