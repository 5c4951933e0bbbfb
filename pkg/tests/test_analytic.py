import math
import unittest

import numpy as np

import mp_oracle
from wavedamp import analytic
from wavedamp.analytic import LimitCase, Side
from wavedamp.core import Damper, Forcing, StringParams
from wavedamp.errors import PoleEncountered, SingularPoint

FORCINGS = (Forcing.UNIFORM, Forcing.BOUNDARY_LEFT)


def omega_for_root(params: StringParams, z_length: float) -> float:
    """
    Return the omega > 0 at which |z|*length equals z_length on the imaginary axis.
    """
    target = (z_length / params.length) ** 2 * params.stiffness
    d = params.internal_damping
    return math.sqrt((-(d**2) + math.sqrt(d**4 + 4 * target**2)) / 2)


def oracle_h(s, params, damper, forcing):
    return mp_oracle.output(
        s, params.length, params.internal_damping, params.stiffness, damper.position, damper.gain, forcing.value
    )


def oracle_g(x, s, params, damper, forcing):
    return mp_oracle.displacement(
        x, s, params.length, params.internal_damping, params.stiffness, damper.position, damper.gain, forcing.value
    )


def random_configuration(rng, max_damping=1.0, max_length=20.0):
    length = rng.uniform(1.0, max_length)
    params = StringParams(length, rng.uniform(0.01, max_damping), rng.uniform(0.25, 4.0))
    damper = Damper(rng.uniform(0.05, 0.95) * length, rng.uniform(0.0, 100.0))
    return params, damper


class TestZeroFrequency(unittest.TestCase):
    def setUp(self):
        self.params = StringParams()
        self.damper = Damper()

    def test_uniform_at_zero(self):
        self.assertAlmostEqual(analytic.uniform_h(0, self.params, self.damper), 100.0 / 12.0, places=10)

    def test_boundary_at_zero(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            params, damper = random_configuration(rng)
            self.assertAlmostEqual(analytic.boundary_h(0j, params, damper), 0.5, places=10)

    def test_approach_to_zero(self):
        for s in (1e-9j, 1e-10 + 1e-10j):
            self.assertAlmostEqual(abs(analytic.uniform_h(s, self.params, self.damper) - 100.0 / 12.0), 0, places=6)
            self.assertAlmostEqual(abs(analytic.boundary_h(s, self.params, self.damper) - 0.5), 0, places=6)

    def test_at_zero_limit(self):
        value = analytic.limit_h(0, self.params, self.damper, Forcing.UNIFORM, LimitCase.AT_ZERO)
        self.assertAlmostEqual(value, 100.0 / 12.0, places=12)
        values = analytic.limit_h(np.array([1j, 2j]), self.params, self.damper, Forcing.BOUNDARY_LEFT, LimitCase.AT_ZERO)
        np.testing.assert_array_equal(values, [0.5, 0.5])


class TestSeries(unittest.TestCase):
    def setUp(self):
        self.params = StringParams()
        self.damper = Damper()

    def test_series_matches_oracle(self):
        for forcing in FORCINGS:
            for z_length in (0.01, 0.05, 0.099):
                s = 1j * omega_for_root(self.params, z_length)
                expected = oracle_h(s, self.params, self.damper, forcing)
                value = analytic.output_h(s, self.params, self.damper, forcing)
                self.assertLess(abs(value - expected), 1e-10 * abs(expected), (forcing, z_length))

    def test_no_seam_at_switch(self):
        for forcing in FORCINGS:
            s = np.array([1j * omega_for_root(self.params, analytic.Z_SWITCH * (1 + 1e-6))])
            z = np.sqrt(s * (s + self.params.internal_damping) / self.params.stiffness)
            series = analytic._series_h(s, z, self.params, self.damper, forcing)[0]
            direct = analytic.output_h(s[0], self.params, self.damper, forcing)
            self.assertLess(abs(series - direct), 1e-10 * abs(direct), forcing)

    def test_series_off_axis(self):
        s = 2e-4 + 3e-4j
        for forcing in FORCINGS:
            expected = oracle_h(s, self.params, self.damper, forcing)
            value = analytic.output_h(s, self.params, self.damper, forcing)
            self.assertLess(abs(value - expected), 1e-10 * abs(expected))

    def test_series_at_minus_damping(self):
        # z = 0 away from s = 0, still a removable point of H
        s = -self.params.internal_damping
        value = analytic.uniform_h(s, self.params, self.damper)
        nearby = analytic.uniform_h(s + 1e-7j, self.params, self.damper)
        self.assertTrue(np.isfinite(value))
        self.assertLess(abs(value - nearby), 1e-4 * abs(value))


class TestOracle(unittest.TestCase):
    def test_default_configuration(self):
        params, damper = StringParams(), Damper()
        for forcing in FORCINGS:
            for omega in (0.05, 0.3, 1.0, 2.7, 10.0, 40.0):
                expected = oracle_h(1j * omega, params, damper, forcing)
                value = analytic.output_h(1j * omega, params, damper, forcing)
                self.assertLess(abs(value - expected), 1e-10 * abs(expected), (forcing, omega))

    def test_random_battery(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            params, damper = random_configuration(rng)
            s = complex(rng.uniform(0.0, 0.5), rng.uniform(0.1, 10.0))
            for forcing in FORCINGS:
                expected = oracle_h(s, params, damper, forcing)
                value = analytic.output_h(s, params, damper, forcing)
                self.assertLess(abs(value - expected), 1e-9 * abs(expected), (params, damper, s, forcing))

    def test_displacement_battery(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            params, damper = random_configuration(rng)
            s = 1j * rng.uniform(0.1, 5.0)
            x = rng.uniform(0, params.length, 5)
            for forcing in FORCINGS:
                expected = np.array([oracle_g(xi, s, params, damper, forcing) for xi in x])
                values = analytic.displacement_g(x, s, params, damper, forcing)
                np.testing.assert_allclose(values, expected, rtol=1e-9, atol=1e-12 * np.max(np.abs(expected)))


class TestLimits(unittest.TestCase):
    def setUp(self):
        self.params = StringParams()
        self.omega = np.geomspace(0.1, 50, 20)

    def test_no_damping(self):
        damper = Damper(4.5, 0.0)
        for forcing in FORCINGS:
            values = analytic.output_h(1j * self.omega, self.params, damper, forcing)
            limits = analytic.limit_h(1j * self.omega, self.params, damper, forcing, LimitCase.NO_DAMPING)
            np.testing.assert_allclose(values, limits, rtol=1e-12)

    def test_infinite_gain(self):
        damper = Damper(4.5, 1e9)
        for forcing in FORCINGS:
            values = analytic.output_h(1j * self.omega, self.params, damper, forcing)
            limits = analytic.limit_h(1j * self.omega, self.params, damper, forcing, LimitCase.INFINITE_GAIN)
            np.testing.assert_allclose(values, limits, rtol=1e-6)

    def test_damper_at_the_ends(self):
        for forcing in FORCINGS:
            limits = analytic.limit_h(1j * self.omega, self.params, Damper(5.0, 0.1), forcing, LimitCase.NO_DAMPING)
            for position in (1e-6 * self.params.length, (1 - 1e-6) * self.params.length):
                values = analytic.output_h(1j * self.omega, self.params, Damper(position, 0.1), forcing)
                np.testing.assert_allclose(values, limits, rtol=1e-3)

    def test_limit_undefined_at_zero(self):
        with self.assertRaises(SingularPoint):
            analytic.limit_h(0j, self.params, Damper(), Forcing.UNIFORM, LimitCase.NO_DAMPING)
        with self.assertRaises(SingularPoint):
            analytic.limit_h(0j, self.params, Damper(), Forcing.BOUNDARY_LEFT, LimitCase.INFINITE_GAIN)


class TestSymmetries(unittest.TestCase):
    def setUp(self):
        self.params = StringParams()
        self.damper = Damper()
        self.s = 1j * np.linspace(0.2, 5.0, 25)

    def test_mirror_symmetry_uniform(self):
        values = analytic.uniform_h(self.s, self.params, self.damper)
        mirrored = analytic.uniform_h(self.s, self.params, self.damper.mirrored(self.params))
        np.testing.assert_allclose(values, mirrored, rtol=1e-12)

    def test_conjugate_symmetry(self):
        for forcing in FORCINGS:
            values = analytic.output_h(self.s + 0.1, self.params, self.damper, forcing)
            conjugates = analytic.output_h(np.conj(self.s + 0.1), self.params, self.damper, forcing)
            np.testing.assert_allclose(conjugates, np.conj(values), rtol=1e-12)

    def test_branch_independence(self):
        for forcing in FORCINGS:
            values = analytic.output_h(self.s, self.params, self.damper, forcing)
            negated = analytic.output_h(self.s, self.params, self.damper, forcing, negate_root=True)
            np.testing.assert_allclose(negated, values, rtol=1e-10)

    def test_random_symmetries(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            params, damper = random_configuration(rng, max_damping=0.2, max_length=10.0)
            s = rng.uniform(0.0, 0.2) + 1j * rng.uniform(0.2, 5.0)
            for forcing in FORCINGS:
                value = analytic.output_h(s, params, damper, forcing)
                negated = analytic.output_h(s, params, damper, forcing, negate_root=True)
                conjugate = analytic.output_h(np.conj(s), params, damper, forcing)
                self.assertLess(abs(negated - value), 1e-9 * abs(value), (params, damper, s, forcing))
                self.assertLess(abs(conjugate - np.conj(value)), 1e-12 * abs(value), (params, damper, s, forcing))
            mirrored = analytic.uniform_h(s, params, damper.mirrored(params))
            value = analytic.uniform_h(s, params, damper)
            self.assertLess(abs(mirrored - value), 1e-10 * abs(value), (params, damper, s))

    def test_displacement_branch_independence(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            params, damper = random_configuration(rng, max_damping=0.1, max_length=10.0)
            x = np.linspace(0, params.length, 9)
            s = 1j * rng.uniform(0.2, 3.0)
            for forcing in FORCINGS:
                values = analytic.displacement_g(x, s, params, damper, forcing)
                negated = analytic.displacement_g(x, s, params, damper, forcing, negate_root=True)
                np.testing.assert_allclose(negated, values, rtol=1e-9, atol=1e-12 * np.max(np.abs(values)))


class TestDisplacement(unittest.TestCase):
    def setUp(self):
        self.params = StringParams()
        self.damper = Damper()

    def test_boundary_values(self):
        s = 0.7j
        self.assertAlmostEqual(analytic.uniform_g(0.0, s, self.params, self.damper), 0, places=14)
        self.assertAlmostEqual(analytic.uniform_g(10.0, s, self.params, self.damper), 0, places=14)
        self.assertAlmostEqual(analytic.boundary_g(0.0, s, self.params, self.damper), 1, places=13)
        self.assertAlmostEqual(analytic.boundary_g(10.0, s, self.params, self.damper), 0, places=14)

    def test_continuous_at_damper(self):
        s = 1.3j
        for forcing in FORCINGS:
            left = analytic.g_branch(4.5, s, self.params, self.damper, forcing, Side.LEFT)
            right = analytic.g_branch(4.5, s, self.params, self.damper, forcing, Side.RIGHT)
            self.assertLess(abs(left - right), 1e-12 * max(1.0, abs(left)))
            self.assertEqual(analytic.displacement_g(4.5, s, self.params, self.damper, forcing), left)

    def test_shape(self):
        x = np.linspace(0, 10, 11)
        self.assertEqual(analytic.uniform_g(x, 1j, self.params, self.damper).shape, (11,))
        grid = analytic.boundary_g(x[:, None], 1j * np.array([[0.5, 1.0, 2.0]]), self.params, self.damper)
        self.assertEqual(grid.shape, (11, 3))
        self.assertIsInstance(analytic.uniform_g(1.0, 1j, self.params, self.damper), complex)

    def test_out_of_range(self):
        with self.assertRaises(ValueError):
            analytic.uniform_g(-0.1, 1j, self.params, self.damper)
        with self.assertRaises(ValueError):
            analytic.boundary_g(10.5, 1j, self.params, self.damper)

    def test_singular_points(self):
        for s in (0j, -self.params.internal_damping):
            with self.assertRaises(SingularPoint) as ctx:
                analytic.uniform_g(1.0, s, self.params, self.damper)
            self.assertEqual(ctx.exception.points.size, 1)
        with self.assertRaises(SingularPoint):
            analytic.boundary_g(np.array([1.0, 2.0]), np.array([1j, 0j]), self.params, self.damper)


class TestQuadratureIdentity(unittest.TestCase):
    def test_matches_output(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            params, damper = random_configuration(rng)
            s = 1j * rng.uniform(0.1, 3.0)
            for forcing in FORCINGS:
                value = analytic.output_h(s, params, damper, forcing)
                average = analytic.h_from_g_quadrature(s, params, damper, forcing, 128)
                self.assertLess(abs(average - value), 1e-9 * max(1.0, abs(value)), (params, damper, s, forcing))

    def test_too_few_points(self):
        with self.assertRaises(ValueError):
            analytic.h_from_g_quadrature(1j, StringParams(), Damper(), Forcing.UNIFORM, 8)


class TestAuxQuantities(unittest.TestCase):
    def setUp(self):
        self.params = StringParams()

    def test_undamped_eta(self):
        s = 0.5 + 1.0j
        aux = analytic.aux_quantities(s, self.params, Damper(4.5, 0.0))
        z, _, _, _, eta = aux.unscaled()
        expected = self.params.stiffness * z * np.sinh(z * self.params.length)
        self.assertLess(abs(eta - expected), 1e-13 * abs(expected))

    def test_vanish_at_zero(self):
        aux = analytic.aux_quantities(0j, self.params, Damper())
        for value in (aux.z, aux.beta1, aux.beta2, aux.gamma, aux.eta):
            self.assertEqual(value, 0)

    def test_mirror_swaps_betas(self):
        damper = Damper(3.0, 7.0)
        aux = analytic.aux_quantities(0.8j, self.params, damper)
        mirrored = analytic.aux_quantities(0.8j, self.params, damper.mirrored(self.params))
        self.assertLess(abs(aux.beta1 - mirrored.beta2), 1e-12 * abs(aux.beta1))
        self.assertLess(abs(aux.gamma - mirrored.gamma), 1e-12 * abs(aux.gamma))
        self.assertLess(abs(aux.eta - mirrored.eta), 1e-12 * abs(aux.eta))

    def test_large_s_is_finite(self):
        aux = analytic.aux_quantities(np.array([1e6 + 1e6j, 1e12j, 1e100]), self.params, Damper())
        for value in (aux.beta1, aux.beta2, aux.gamma, aux.eta):
            self.assertTrue(np.all(np.isfinite(value)))


class TestLargeArguments(unittest.TestCase):
    def setUp(self):
        self.params = StringParams()
        self.damper = Damper()

    def test_boundary_decay(self):
        # tanh(z*length/2) -> 1 only where Re(z) grows
        for s in (1e8, 1e12 + 1e12j):
            z = np.sqrt(s * (s + self.params.internal_damping))
            value = analytic.boundary_h(s, self.params, self.damper)
            self.assertLess(abs(value * z * self.params.length - 1), 1e-6)

    def test_boundary_on_imaginary_axis(self):
        for s in (3000j, 3000.5j):
            expected = oracle_h(s, self.params, self.damper, Forcing.BOUNDARY_LEFT)
            value = analytic.boundary_h(s, self.params, self.damper)
            self.assertLess(abs(value - expected), 1e-9 * abs(expected), s)

        undamped = Damper(4.5, 0.0)
        for s in (1e6j, 1e6j + 0.3j):
            value = analytic.boundary_h(s, self.params, undamped)
            z = np.sqrt(s * (s + self.params.internal_damping))
            expected = np.tanh(z * self.params.length / 2) / (z * self.params.length)
            self.assertLess(abs(value - expected), 1e-6 * abs(expected), s)

    def test_uniform_decay(self):
        for s in (1e8, 1e8j, 1e120):
            value = analytic.uniform_h(s, self.params, self.damper)
            w = s * (s + self.params.internal_damping)
            self.assertTrue(np.isfinite(value))
            self.assertLess(abs(value * w - 1), 1e-6)

    def test_array_shape(self):
        s = 1j * np.linspace(0, 100, 12).reshape(3, 4)
        self.assertEqual(analytic.uniform_h(s, self.params, self.damper).shape, (3, 4))
        self.assertIsInstance(analytic.boundary_h(1j, self.params, self.damper), complex)


class TestPoles(unittest.TestCase):
    def test_undamped_resonance(self):
        params = StringParams(10.0, 0.0, 1.0)
        s = 1j * math.pi / 10
        with self.assertRaises(PoleEncountered) as ctx:
            analytic.uniform_h(np.array([0.5j, s]), params, Damper(4.5, 0.0))
        self.assertEqual(ctx.exception.points.size, 1)
        self.assertAlmostEqual(ctx.exception.points[0], s)

    def test_displacement_at_resonance(self):
        params = StringParams(10.0, 0.0, 1.0)
        with self.assertRaises(SingularPoint):
            analytic.boundary_g(2.0, 1j * math.pi / 10, params, Damper(4.5, 0.0))

    def test_response_adapter(self):
        response = analytic.AnalyticResponse(StringParams(), Damper(), Forcing.UNIFORM)
        np.testing.assert_allclose(
            response.evaluate(np.array([0.0, 1.0])),
            analytic.uniform_h(np.array([0j, 1j]), StringParams(), Damper()),
        )
