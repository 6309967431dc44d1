import math
import unittest

import numpy as np
from numpy.testing import assert_allclose
from scipy.optimize import minimize_scalar

from singlap.errors import PreconditionError, UnsupportedDimensionError
from singlap.laplacian import expected_laplacian_full, expected_laplacian_oracle
from singlap.manifold_gen import make_boundary_scene, make_intersection_scene
from singlap.theory import (BoundaryGeometry, LocalGeometry, PredictionEnvelope, a_bounds, boundary_a1_bounds,
                            boundary_exact_a1, boundary_geometry, boundary_term, calibrate_a_convention,
                            check_curvature_hypothesis, check_hypotheses, curvature_constant, error_bound,
                            exact_a, local_geometry, predict_flat_boundary, predict_flat_interior,
                            predict_general, predict_intersection_sum, signal_argmax, signal_profile)


def _offset(r, theta, phi, t):
    """相对 e1-e2 平面的点：距 x0 为 r√t，与平面夹角 θ"""
    c = math.cos(theta)
    return r * math.sqrt(t) * np.array([c * math.cos(phi), c * math.sin(phi), math.sin(theta)])


def _random_unit(rng, N=3):
    v = rng.normal(size=N)
    return v / np.linalg.norm(v)


class TestSignalShape(unittest.TestCase):

    def test_profile_extrema(self):
        u = 1.0 / math.sqrt(2.0)
        assert_allclose(signal_profile(u), u * math.exp(-0.5))
        assert_allclose(signal_profile(-u), -u * math.exp(-0.5))
        grid = np.linspace(-4, 4, 8001)
        self.assertAlmostEqual(abs(grid[np.argmax(signal_profile(grid))]), u, places=3)

    def test_argmax_matches_numerical_search(self):
        for theta in (math.pi / 2, math.pi / 4, math.pi / 8, math.pi / 16):
            s = math.sin(theta)
            res = minimize_scalar(lambda r: -r * math.exp(-(s * r) ** 2), bracket=(0.1, 1.0, 50.0),
                                  method="golden", tol=1e-10)
            assert_allclose(signal_argmax(theta), res.x, rtol=1e-6)

    def test_argmax_undefined_at_zero_angle(self):
        with self.assertRaises(PreconditionError):
            signal_argmax(0.0)


class TestGeometry(unittest.TestCase):

    def test_local_geometry_recovers_coordinates(self):
        scene = make_intersection_scene(3, 2, math.pi / 3)
        t = 1e-3
        v = np.array([0.6, 0.0, 0.8])
        x = _offset(1.3, 0.4, 0.7, t)
        geom = local_geometry(scene, 0, x, v, t, 6.0 * math.sqrt(t))
        assert_allclose(geom.r, 1.3, rtol=1e-12)
        assert_allclose(geom.theta, 0.4, rtol=1e-12)
        assert_allclose(geom.v_n, 0.8, rtol=1e-12)
        assert_allclose(geom.r0, 6.0, rtol=1e-12)

    def test_v_n_sign_follows_offset(self):
        scene = make_intersection_scene(3, 2, math.pi / 3)
        t = 1e-3
        v = np.array([0.0, 0.0, 1.0])
        below = local_geometry(scene, 0, _offset(1.0, -0.4, 0.0, t), v, t, 0.2)
        self.assertLess(below.v_n, 0.0)
        self.assertGreater(below.theta, 0.0)

    def test_hypotheses(self):
        base = dict(x0=np.zeros(3), x=np.zeros(3), piece_index=0, theta=0.5, v_n=1.0, d=2)
        check_hypotheses(LocalGeometry(r=1.0, r0=6.0, **base), 1e-3)
        with self.assertRaises(PreconditionError):
            check_hypotheses(LocalGeometry(r=0.5, r0=2.0, **base), 1e-3)
        with self.assertRaises(PreconditionError) as ctx:
            check_hypotheses(LocalGeometry(r=3.0, r0=6.0, **base), 1e-3)
        self.assertEqual(ctx.exception.inequality, "r < r0/2")

    def test_curvature_hypothesis(self):
        check_curvature_hypothesis(0.5, 0.025, 1e-4)
        with self.assertRaises(PreconditionError):
            check_curvature_hypothesis(0.5, 0.2, 1e-3)

    def test_boundary_geometry_range(self):
        BoundaryGeometry(k0=-5.0, delta0=5.0, v_n_boundary=0.3)
        with self.assertRaises(PreconditionError):
            BoundaryGeometry(k0=5.5, delta0=5.0, v_n_boundary=0.3)

    def test_envelope_ordering(self):
        with self.assertRaises(PreconditionError):
            PredictionEnvelope(central=1.0, lower=2.0, upper=3.0)
        env = PredictionEnvelope(central=1.0, lower=0.5, upper=1.5)
        self.assertTrue(env.contains(1.2))
        self.assertFalse(env.contains(1.6))


class TestConstants(unittest.TestCase):

    def test_a_bounds(self):
        for d in (1, 2, 3):
            for variant in ("statement", "proof"):
                lo, hi = a_bounds(d, 6.0, 0.25, variant, "limit")
                self.assertLessEqual(lo, hi)
                assert_allclose(hi, 0.25 * math.pi ** (d / 2.0))
            assert_allclose(a_bounds(d, 6.0, 0.25, convention="doubled")[1],
                            2.0 * a_bounds(d, 6.0, 0.25, convention="limit")[1])

    def test_exact_a_two_dimensional(self):
        for delta0 in (0.5, 1.0, 3.0):
            assert_allclose(exact_a(2, delta0, 1.0), math.pi * (1.0 - math.exp(-delta0 ** 2)), rtol=1e-13)
        assert_allclose(exact_a(3, 8.0, 0.5), 0.5 * math.pi ** 1.5, rtol=1e-14)

    def test_boundary_a1_limits(self):
        delta0 = 4.0
        for d in (2, 3):
            full = boundary_exact_a1(BoundaryGeometry(-delta0, delta0, 0.0), d, 1.0)
            half = boundary_exact_a1(BoundaryGeometry(0.0, delta0, 0.0), d, 1.0)
            empty = boundary_exact_a1(BoundaryGeometry(delta0, delta0, 0.0), d, 1.0)
            assert_allclose(full, exact_a(d, delta0, 1.0), rtol=1e-10)
            assert_allclose(half, 0.5 * full, rtol=1e-10)
            self.assertEqual(empty, 0.0)

    def test_boundary_a1_bounds_contain_exact(self):
        for k0 in np.linspace(-5.0, 5.0, 21):
            bgeom = BoundaryGeometry(float(k0), 5.0, 0.0)
            exact = boundary_exact_a1(bgeom, 2, 1.0)
            for variant in ("proof", "remark"):
                lo, hi = boundary_a1_bounds(bgeom, 2, 1.0, variant)
                self.assertLessEqual(lo, exact * (1 + 1e-12) + 1e-15)
                self.assertGreaterEqual(hi, exact)

    def test_boundary_term_vanishes_for_full_ball(self):
        bgeom = BoundaryGeometry(-4.0, 4.0, 1.0)
        self.assertEqual(boundary_term(bgeom, 2, 1e-3, 0.3, 1.0, 1.0), 0.0)

    def test_one_dimensional_boundary_is_unsupported(self):
        bgeom = BoundaryGeometry(0.0, 4.0, 1.0)
        with self.assertRaises(UnsupportedDimensionError):
            boundary_exact_a1(bgeom, 1, 1.0)
        with self.assertRaises(UnsupportedDimensionError):
            boundary_term(bgeom, 1, 1e-3, 0.3, 1.0, 1.0)

    def test_curvature_constant(self):
        L, R, t = 0.5, 0.025, 1e-4
        q = 4 * L * R * R
        assert_allclose(curvature_constant(L, R, t), 4 * q * q * R / t + L * R * R * (1 + q))
        self.assertEqual(curvature_constant(0.0, R, t), 0.0)


class TestFlatContainment(unittest.TestCase):

    def test_interior_envelope_contains_oracle(self):
        scene = make_intersection_scene(3, 2, math.pi / 3)
        piece = scene.pieces[0]
        t = 1e-3
        R = 6.0 * math.sqrt(t)
        rng = np.random.default_rng(0)
        for _ in range(50):
            r = rng.uniform(0.05, 2.9)
            theta = rng.uniform(0.05, math.pi / 2)
            x = _offset(r, theta, rng.uniform(0, 2 * math.pi), t)
            v = _random_unit(rng)
            geom = local_geometry(scene, 0, x, v, t, R)
            env = predict_flat_interior(geom, t, piece.area, piece.weight)
            oracle = expected_laplacian_oracle(scene, 0, x, v, t, quad_resolution=64)
            self.assertTrue(env.contains(oracle.value), (r, theta, env.to_dict(), oracle.value))

    def test_calibration_selects_limit(self):
        scene = make_intersection_scene(3, 2, math.pi / 3)
        t = 1e-3
        rng = np.random.default_rng(1)
        xs = np.array([_offset(rng.uniform(0.3, 2.0), rng.uniform(0.3, 1.4), rng.uniform(0, 6), t)
                       for _ in range(5)])
        result = calibrate_a_convention(scene, 0, xs, np.array([0.0, 0.6, 0.8]), t, 6.0 * math.sqrt(t), 64)
        self.assertEqual(result["selected"], "limit")
        self.assertLess(result["errors"]["limit"], 0.01 * result["errors"]["doubled"])

    def test_boundary_envelope_contains_oracle(self):
        scene = make_boundary_scene(3, 2, 1.0)
        piece = scene.pieces[0]
        t = 1e-3
        R = 6.0 * math.sqrt(t)
        rng = np.random.default_rng(2)
        k0s = []
        for _ in range(50):
            r = rng.uniform(0.05, 2.9)
            theta = rng.uniform(0.05, math.pi / 2)
            x = _offset(r, theta, rng.uniform(0, 2 * math.pi), t)
            v = _random_unit(rng)
            geom = local_geometry(scene, 0, x, v, t, R)
            bgeom = boundary_geometry(scene, geom, v, t)
            k0s.append(bgeom.k0)
            env = predict_flat_boundary(geom, bgeom, t, piece.area, piece.weight)
            oracle = expected_laplacian_oracle(scene, 0, x, v, t, quad_resolution=64)
            self.assertTrue(env.contains(oracle.value), (r, theta, env.to_dict(), oracle.value))
            assert_allclose(env.central, oracle.value, rtol=1e-6, atol=1e-11)
        # 边界点两侧都覆盖到
        self.assertLess(min(k0s), 0.0)
        self.assertGreater(max(k0s), 0.0)

    def test_boundary_rejects_one_dimensional_pieces(self):
        base = dict(x0=np.zeros(2), x=np.zeros(2), piece_index=0, r=1.0, theta=0.5, v_n=1.0, r0=6.0, d=1)
        with self.assertRaises(UnsupportedDimensionError):
            predict_flat_boundary(LocalGeometry(**base), BoundaryGeometry(0.0, 5.0, 1.0), 1e-3, 2.0)


class TestCurvedContainment(unittest.TestCase):

    def setUp(self):
        self.L = 0.5
        self.t = 1e-4
        self.R = 2.5 * math.sqrt(self.t)
        self.scene = make_intersection_scene(3, 2, math.pi / 3, "curved", self.L)
        self.rng = np.random.default_rng(3)

    def test_off_manifold_envelope(self):
        piece = self.scene.pieces[0]
        diam = self.scene.diameter
        for _ in range(50):
            r = self.rng.uniform(0.05, 1.2)
            theta = self.rng.uniform(0.05, math.pi / 2)
            x = _offset(r, theta, self.rng.uniform(0, 2 * math.pi), self.t)
            v = _random_unit(self.rng)
            geom = local_geometry(self.scene, 0, x, v, self.t, self.R)
            env = predict_general(geom, self.t, self.L, self.R, diam, piece.area, piece.weight)
            oracle = expected_laplacian_oracle(self.scene, 0, x, v, self.t, quad_resolution=64)
            self.assertTrue(env.contains(oracle.value), (r, theta, env.to_dict(), oracle.value))

    def test_on_manifold_error_bound(self):
        piece = self.scene.pieces[0]
        diam = self.scene.diameter
        for _ in range(20):
            u = self.rng.uniform(-0.3, 0.3, size=2) * self.R
            x = piece.embed(u[None, :])[0]
            v = _random_unit(self.rng)
            geom = local_geometry(self.scene, 0, x, v, self.t, self.R)
            bound = error_bound(geom, self.t, self.L, self.R, diam, piece.area, piece.weight)
            oracle = expected_laplacian_oracle(self.scene, 0, x, v, self.t, quad_resolution=64)
            self.assertLessEqual(abs(oracle.value), bound)

    def test_intersection_sum_envelope(self):
        piece1, piece2 = self.scene.pieces
        diam = self.scene.diameter
        for _ in range(20):
            u = self.rng.uniform(-0.3, 0.3, size=2) * self.R
            x = piece2.embed(u[None, :])[0]
            v = _random_unit(self.rng)
            geom = local_geometry(self.scene, 0, x, v, self.t, self.R)
            env = predict_intersection_sum(geom, self.t, self.L, self.R, diam, piece1.area, piece1.weight)
            full = expected_laplacian_full(self.scene, x, v, self.t, quad_resolution=64)
            self.assertTrue(env.contains(full.value), (env.to_dict(), full.value))

    def test_flat_limit_of_general_envelope(self):
        scene = make_intersection_scene(3, 2, math.pi / 3)
        t = 1e-3
        R = 6.0 * math.sqrt(t)
        v = np.array([0.0, 0.6, 0.8])
        geom = local_geometry(scene, 0, _offset(1.0, 0.7, 0.3, t), v, t, R)
        flat = predict_flat_interior(geom, t, scene.pieces[0].area)
        general = predict_general(geom, t, 0.0, R, 0.0, scene.pieces[0].area)
        assert_allclose(general.central, flat.central)
        self.assertLessEqual(general.lower, flat.lower + 1e-15)
        self.assertGreaterEqual(general.upper, flat.upper - 1e-15)


if __name__ == "__main__":
    unittest.main()
