import math
import unittest

from scipy import special

from algorithms.errors import DomainError, QuadratureError
from algorithms.numerics import (
    QuadratureSpec,
    exp_integral_e1,
    exp_shifted_gamma,
    integrate_1d,
    integrate_nested,
    integrate_semi_infinite,
    regularized_lower_gamma,
    scaled_upper_gamma,
    upper_incomplete_gamma,
)


def gamma_by_recurrence(s, x):
    # Gamma(s, x) = (Gamma(s + 1, x) - x^s e^-x) / s, started from scipy's E1
    value = special.exp1(x)
    for k in range(-1, s - 1, -1):
        value = (value - x ** k * math.exp(-x)) / k
    return value


class TestIncompleteGamma(unittest.TestCase):

    def test_known_values(self):
        self.assertAlmostEqual(upper_incomplete_gamma(1, 2.0), math.exp(-2.0), places=12)
        self.assertAlmostEqual(upper_incomplete_gamma(3, 2.0), 10 * math.exp(-2.0), places=12)
        self.assertAlmostEqual(upper_incomplete_gamma(0, 1.0), 0.219384, places=6)
        self.assertAlmostEqual(upper_incomplete_gamma(-1, 1.0), 0.148496, places=6)

    def test_positive_orders_match_scipy(self):
        for s in range(1, 8):
            for x in (0.01, 0.3, 1.0, 4.5, 20.0):
                expected = special.gammaincc(s, x) * special.gamma(s)
                self.assertTrue(math.isclose(upper_incomplete_gamma(s, x), expected, rel_tol=1e-12),
                                f"Gamma({s}, {x})")

    def test_nonpositive_orders_match_recurrence(self):
        for s in range(0, -5, -1):
            for x in (0.2, 0.9, 1.5, 3.0, 12.0):
                expected = gamma_by_recurrence(s, x)
                self.assertTrue(math.isclose(upper_incomplete_gamma(s, x), expected, rel_tol=1e-9),
                                f"Gamma({s}, {x}) = {upper_incomplete_gamma(s, x)} vs {expected}")

    def test_recurrence_consistency(self):
        # Gamma(s + 1, x) = s Gamma(s, x) + x^s e^-x across both non-positive evaluation paths
        for s in range(-5, 11):
            for x in (0.5, 2.0, 8.0):
                expected = math.fsum((s * upper_incomplete_gamma(s, x), x ** s * math.exp(-x)))
                self.assertTrue(math.isclose(upper_incomplete_gamma(s + 1, x), expected, rel_tol=1e-10),
                                f"s={s}, x={x}")

    def test_large_terms_do_not_overflow(self):
        # the largest term x^199 alone exceeds the float range
        expected = math.log(special.gammaincc(200, 800.0)) + special.gammaln(200)
        self.assertAlmostEqual(math.log(upper_incomplete_gamma(200, 800.0)), expected, places=8)
        self.assertEqual(scaled_upper_gamma(4, 1e110), math.inf)
        self.assertEqual(upper_incomplete_gamma(4, 1e110), 0.0)
        self.assertEqual(exp_shifted_gamma(4, 1e110, 10.0), 0.0)

    def test_scaled_form(self):
        self.assertAlmostEqual(scaled_upper_gamma(0, 1.0), math.e * special.exp1(1.0), places=12)
        self.assertAlmostEqual(scaled_upper_gamma(0, 1.0), 0.596347, places=6)
        # e^x Gamma(s, x) stays finite where Gamma(s, x) underflows
        self.assertTrue(math.isfinite(scaled_upper_gamma(3, 800.0)))
        self.assertGreater(scaled_upper_gamma(3, 800.0), 0.0)

    def test_exp_shifted_gamma(self):
        self.assertEqual(exp_shifted_gamma(3, math.inf, 5.0), 0.0)
        self.assertAlmostEqual(exp_shifted_gamma(2, 3.0, 1.0), math.e * upper_incomplete_gamma(2, 3.0), places=12)

    def test_infinite_argument(self):
        self.assertEqual(upper_incomplete_gamma(2, math.inf), 0.0)
        self.assertEqual(upper_incomplete_gamma(-3, math.inf), 0.0)

    def test_domain_errors(self):
        with self.assertRaises(DomainError):
            upper_incomplete_gamma(0.5, 1.0)
        with self.assertRaises(DomainError):
            upper_incomplete_gamma(-1, 0.0)
        with self.assertRaises(DomainError):
            upper_incomplete_gamma(2, -1.0)

    def test_regularized_lower_gamma(self):
        self.assertAlmostEqual(regularized_lower_gamma(3, 2.0), special.gammainc(3, 2.0), places=14)
        self.assertEqual(regularized_lower_gamma(3, 0.0), 0.0)


class TestExponentialIntegral(unittest.TestCase):

    def test_known_values(self):
        self.assertAlmostEqual(exp_integral_e1(1.0), 0.2193839, places=7)
        self.assertTrue(math.isclose(exp_integral_e1(10.0), 4.1570e-6, rel_tol=1e-4))

    def test_matches_scipy(self):
        for x in (1e-4, 0.1, 0.99, 1.01, 2.0, 7.5, 40.0):
            self.assertTrue(math.isclose(exp_integral_e1(x), special.exp1(x), rel_tol=1e-12), f"E1({x})")

    def test_decreasing_to_zero(self):
        values = [exp_integral_e1(x) for x in (0.5, 1.0, 5.0, 50.0, 500.0)]
        self.assertTrue(all(a > b for a, b in zip(values, values[1:])))
        self.assertEqual(exp_integral_e1(math.inf), 0.0)

    def test_nonpositive_argument(self):
        with self.assertRaises(DomainError):
            exp_integral_e1(0.0)


class TestQuadrature(unittest.TestCase):

    def test_integrate_1d(self):
        self.assertAlmostEqual(integrate_1d(lambda t: t, 0.0, 1.0), 0.5, places=12)
        self.assertAlmostEqual(integrate_1d(lambda t: math.exp(-t), 0.0, math.inf), 1.0, places=9)
        self.assertAlmostEqual(integrate_1d(lambda t: 4 * t * math.exp(-2 * t), 0.0, math.inf), 1.0, places=9)
        self.assertEqual(integrate_1d(lambda t: t, 2.0, 2.0), 0.0)

    def test_break_points(self):
        value = integrate_1d(lambda t: abs(t - 0.3), 0.0, 1.0, points=(0.3, 5.0))
        self.assertAlmostEqual(value, 0.5 * 0.3 ** 2 + 0.5 * 0.7 ** 2, places=12)

    def test_bounds_out_of_order(self):
        with self.assertRaises(DomainError):
            integrate_1d(lambda t: t, 1.0, 0.0)

    def test_non_convergence(self):
        with self.assertRaises(QuadratureError) as context:
            integrate_1d(lambda t: math.sin(200.0 * t), 0.0, 10.0, QuadratureSpec(max_subdivisions=2))
        self.assertTrue(math.isfinite(context.exception.estimate))

    def test_semi_infinite(self):
        self.assertAlmostEqual(integrate_semi_infinite(lambda t: math.exp(-t), 0.0), 1.0, places=9)
        self.assertAlmostEqual(
            integrate_semi_infinite(lambda t: math.log1p(t) * math.exp(-t), 0.0), 0.596347, places=6)
        self.assertAlmostEqual(
            integrate_semi_infinite(lambda t: t * math.exp(-t * t), 1.0), math.exp(-1.0) / 2, places=9)

    def test_nested(self):
        triangle = integrate_nested(lambda x, y: 1.0, [(0.0, 1.0), (0.0, lambda x: x)])
        self.assertAlmostEqual(triangle, 0.5, places=10)
        simplex = integrate_nested(
            lambda y, z, x: 1.0, [(0.0, 1.0), (lambda y: y, 1.0), (lambda y, z: z, 1.0)])
        self.assertAlmostEqual(simplex, 1.0 / 6.0, places=10)

    def test_nested_empty_range(self):
        self.assertEqual(integrate_nested(lambda x, y: 1.0, [(0.0, 1.0), (lambda x: 2.0, 1.0)]), 0.0)

    def test_nesting_limit(self):
        with self.assertRaises(DomainError):
            integrate_nested(lambda *v: 1.0, [(0.0, 1.0)] * 4)

    def test_spec_validation(self):
        with self.assertRaises(ValueError):
            QuadratureSpec(rel_tol=0.0)
        with self.assertRaises(ValueError):
            QuadratureSpec(max_subdivisions=0)
        tighter = QuadratureSpec().tightened(2)
        self.assertAlmostEqual(tighter.rel_tol, 1e-10, places=20)


if __name__ == '__main__':
    unittest.main()
