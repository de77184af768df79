import math, unittest

import numpy as np
from scipy import special

from gtrfading.errors import ConvergenceError, DomainError
from gtrfading.quad import QuadResult, QuadSpec, evaluate_on_grid, integrate_finite, integrate_periodic, integrate_semi_infinite


class FiniteTests(unittest.TestCase):
    def test_smooth_integral(self):
        res = integrate_finite(math.sin, 0.0, math.pi)
        self.assertTrue(res.converged); self.assertAlmostEqual(res.value, 2.0, places=12); self.assertGreaterEqual(res.evals, 1)

    def test_interval_is_checked(self):
        with self.assertRaises(DomainError) as ctx:
            integrate_finite(math.sin, 1.0, 1.0)
        self.assertEqual(ctx.exception.invariant, "interval_order")
        with self.assertRaises(DomainError):
            integrate_finite(math.sin, 0.0, math.inf)

    def test_budget_exhaustion_is_reported_not_raised(self):
        res = integrate_finite(lambda x: math.sin(200.0 * x) * math.exp(x), 0.0, 10.0, QuadSpec(max_evals=21))
        self.assertFalse(res.converged)
        with self.assertRaises(ConvergenceError) as ctx:
            res.require("oscillatory test integral")
        self.assertIs(ctx.exception.partial, res)
        self.assertIn("oscillatory test integral", str(ctx.exception))


class PeriodicTests(unittest.TestCase):
    def test_bessel_integral(self):
        res = integrate_periodic(lambda a: np.exp(np.cos(a)))
        self.assertTrue(res.converged); self.assertAlmostEqual(res.value, 2.0 * math.pi * float(special.i0(1.0)), places=12)

    def test_constant_and_scalar_only_integrands(self):
        self.assertAlmostEqual(integrate_periodic(lambda a: 3.0).value, 6.0 * math.pi, places=12)
        self.assertAlmostEqual(integrate_periodic(lambda a: math.cos(a) ** 2).value, math.pi, places=12)

    def test_kink_does_not_converge_within_budget(self):
        res = integrate_periodic(lambda a: np.abs(np.sin(a)), QuadSpec(max_evals=200))
        self.assertFalse(res.converged); self.assertAlmostEqual(res.value, 4.0, delta=1e-2)
        self.assertGreater(res.error_estimate, 0.0)


class SemiInfiniteTests(unittest.TestCase):
    def test_known_decay(self):
        res = integrate_semi_infinite(lambda t: math.exp(-t), 0.0, decay_rate=1.0)
        self.assertTrue(res.converged); self.assertAlmostEqual(res.value, 1.0, places=11)

    def test_shifted_start(self):
        res = integrate_semi_infinite(lambda t: math.exp(-2.0 * t), 1.0, decay_rate=2.0)
        self.assertAlmostEqual(res.value, 0.5 * math.exp(-2.0), places=12)

    def test_tiny_integral_keeps_relative_accuracy(self):
        res = integrate_semi_infinite(lambda t: 1e-30 * math.exp(-t), 0.0, decay_rate=1.0)
        self.assertTrue(res.converged); self.assertAlmostEqual(res.value / 1e-30, 1.0, delta=1e-9)

    def test_log_singularity_at_start(self):
        f = lambda t: (1.0 - math.log(t)) * math.exp(-t)  # noqa: E731
        res = integrate_semi_infinite(f, 0.0, decay_rate=1.0, log_singular=True)
        self.assertTrue(res.converged); self.assertAlmostEqual(res.value, 1.5772156649015329, places=10)

    def test_without_decay_rate(self):
        res = integrate_semi_infinite(lambda t: 1.0 / (1.0 + t * t), 0.0)
        self.assertTrue(res.converged); self.assertAlmostEqual(res.value, math.pi / 2.0, places=9)

    def test_arguments_are_checked(self):
        with self.assertRaises(DomainError):
            integrate_semi_infinite(math.exp, 0.0, decay_rate=0.0)
        with self.assertRaises(DomainError):
            integrate_semi_infinite(math.exp, math.nan)


class SpecTests(unittest.TestCase):
    def test_invalid_specs(self):
        for kwargs in ({"rel_tol": 0.0}, {"abs_tol": -1.0}, {"max_evals": 3}):
            with self.assertRaises(DomainError):
                QuadSpec(**kwargs)

    def test_tolerance_is_mixed(self):
        spec = QuadSpec(rel_tol=1e-6, abs_tol=1e-9)
        self.assertEqual(spec.tolerance(0.0), 1e-9); self.assertAlmostEqual(spec.tolerance(10.0), 1e-5, places=18)

    def test_grid_fallback(self):
        x = np.linspace(0.0, 1.0, 5)
        np.testing.assert_allclose(evaluate_on_grid(math.exp, x), np.exp(x))
        np.testing.assert_allclose(evaluate_on_grid(lambda t: 2.0, x), np.full(5, 2.0))

    def test_tolerance_below_quadpack_floor_is_not_converged(self):
        res = integrate_finite(math.exp, 0.0, 1.0, QuadSpec(rel_tol=1e-300, abs_tol=0.0))
        self.assertAlmostEqual(res.value, math.e - 1.0, places=13)
        self.assertEqual(res.converged, res.error_estimate == 0.0)

    def test_result_require_passes_value(self):
        self.assertEqual(QuadResult(1.5, 0.0, 3, True).require("x"), 1.5)


if __name__ == "__main__":
    unittest.main()
