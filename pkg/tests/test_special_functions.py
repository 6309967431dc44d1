import math
import unittest

import numpy as np
from numpy.testing import assert_allclose
from scipy import integrate, special

from singlap.errors import DomainError
from singlap.special_functions import (gamma_bound_checks, gamma_complete, gamma_lower, gamma_regularized_lower,
                                       gamma_regularized_upper, gamma_upper, lambert_w0, lambert_wm1,
                                       sphere_area, unit_ball_volume)

A_GRID = [0.5, 1.0, 1.5, 2.5, 7.0, 20.0]
X_GRID = [0.0, 0.1, 1.0, 2.0, 5.0, 12.0, 30.0]


class TestIncompleteGamma(unittest.TestCase):

    def test_lower_plus_upper_is_complete(self):
        for a in A_GRID:
            for x in X_GRID:
                total = gamma_lower(a, x) + gamma_upper(a, x)
                assert_allclose(total, math.gamma(a), rtol=1e-12, err_msg=f"a={a}, x={x}")

    def test_regularized_against_scipy(self):
        for a in A_GRID:
            for x in X_GRID[1:]:
                assert_allclose(gamma_regularized_lower(a, x), special.gammainc(a, x), rtol=1e-11, atol=1e-300)
                assert_allclose(gamma_regularized_upper(a, x), special.gammaincc(a, x), rtol=1e-10, atol=1e-300)

    def test_zero_cutoff(self):
        self.assertEqual(gamma_lower(2.0, 0.0), 0.0)
        self.assertEqual(gamma_upper(2.0, 0.0), math.gamma(2.0))

    def test_exponential_case(self):
        # a = 1：Γ(1, x) = e^{-x}
        for x in (0.3, 4.0, 25.0):
            assert_allclose(gamma_upper(1.0, x), math.exp(-x), rtol=1e-13)

    def test_domain_errors(self):
        with self.assertRaises(DomainError):
            gamma_lower(0.0, 1.0)
        with self.assertRaises(DomainError):
            gamma_upper(-1.0, 1.0)
        with self.assertRaises(DomainError):
            gamma_lower(1.0, -0.5)
        with self.assertRaises(DomainError):
            gamma_complete(0.0)

    def test_bound_checks_hold_for_a_at_least_one(self):
        for a in (1.0, 1.5, 2.5, 5.0, 10.0):
            for x in (0.01, 0.5, 1.0, 3.0, 8.0, 20.0):
                checks = gamma_bound_checks(a, x)
                self.assertTrue(checks["upper_lower_bound"], (a, x))
                self.assertTrue(checks["lower_half"], (a, x))
                if checks["upper_upper_bound"] is not None:
                    self.assertTrue(checks["upper_upper_bound"], (a, x))

    def test_full_grid_bounds_and_additivity(self):
        # a = 0.5, 1.0, …, 10；x = 0, 0.1, …, 20
        for a in np.arange(1, 21) * 0.5:
            complete = math.gamma(a)
            for x in np.arange(0, 201) * 0.1:
                a, x = float(a), float(x)
                assert_allclose(gamma_lower(a, x) + gamma_upper(a, x), complete, rtol=1e-12,
                                err_msg=f"a={a}, x={x}")
                checks = gamma_bound_checks(a, x)
                self.assertTrue(checks["lower_half"], (a, x))
                for name in ("upper_lower_bound", "upper_upper_bound"):
                    self.assertIsNot(checks[name], False, (name, a, x))

    def test_against_adaptive_quadrature(self):
        value, _ = integrate.quad(lambda s: s ** 1.5 * math.exp(-s), 0.0, 3.1, epsabs=0.0, epsrel=1e-13)
        assert_allclose(gamma_lower(2.5, 3.1), value, rtol=1e-11)
        assert_allclose(gamma_upper(2.5, 3.1), math.gamma(2.5) - value, rtol=1e-11)

    def test_upper_bound_not_applied_below_one(self):
        # a = 0.5, x = 0.5 时 Γ(a,x) > a·x^{a-1}e^{-x}，该上界只对 a ≥ 1 检查
        checks = gamma_bound_checks(0.5, 0.5)
        self.assertIsNone(checks["upper_upper_bound"])
        self.assertGreater(gamma_upper(0.5, 0.5), 0.5 * 0.5 ** -0.5 * math.exp(-0.5))


class TestLambertW(unittest.TestCase):

    def setUp(self):
        self.rhos = np.concatenate([np.geomspace(1e-12, 0.3, 40), np.linspace(0.3, math.exp(-1.0), 20)])

    def test_defining_equation(self):
        for rho in self.rhos:
            for w in (lambert_w0(rho), lambert_wm1(rho)):
                assert_allclose(w * math.exp(w), -rho, rtol=1e-12, atol=1e-15)

    def test_branch_ranges(self):
        for rho in self.rhos:
            self.assertGreaterEqual(lambert_w0(rho), -1.0)
            self.assertLess(lambert_w0(rho), 0.0)
            self.assertLessEqual(lambert_wm1(rho), -1.0)

    def test_against_scipy(self):
        for rho in np.linspace(0.01, 0.36, 15):
            assert_allclose(lambert_w0(rho), special.lambertw(-rho, 0).real, rtol=1e-12)
            assert_allclose(lambert_wm1(rho), special.lambertw(-rho, -1).real, rtol=1e-12)

    def test_branch_point(self):
        self.assertEqual(lambert_w0(math.exp(-1.0)), -1.0)
        self.assertEqual(lambert_wm1(math.exp(-1.0)), -1.0)

    def test_relaxation_inequalities(self):
        for rho in np.linspace(0.01, 0.36, 36):
            self.assertLess(-lambert_w0(rho), math.e * rho)
            self.assertGreater(-lambert_wm1(rho), math.log(1.0 / rho))

    def test_domain_errors(self):
        for rho in (0.0, -0.1, 0.4, math.nan):
            with self.assertRaises(DomainError):
                lambert_w0(rho)
            with self.assertRaises(DomainError):
                lambert_wm1(rho)


class TestSphereArea(unittest.TestCase):

    def test_known_values(self):
        assert_allclose(sphere_area(1), 2.0)
        assert_allclose(sphere_area(2), 2.0 * math.pi)
        assert_allclose(sphere_area(3), 4.0 * math.pi)
        assert_allclose(unit_ball_volume(2), math.pi)
        assert_allclose(unit_ball_volume(3), 4.0 * math.pi / 3.0)

    def test_area_is_derivative_of_volume(self):
        for d in range(1, 8):
            assert_allclose(sphere_area(d), d * unit_ball_volume(d), rtol=1e-14)

    def test_invalid_dimension(self):
        for d in (0, -2, 1.5, True):
            with self.assertRaises(DomainError):
                sphere_area(d)


if __name__ == "__main__":
    unittest.main()
