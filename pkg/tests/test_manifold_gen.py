import math
import os
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from singlap.errors import PreconditionError
from singlap.manifold_gen import (add_noise, load_cloud, make_boundary_scene, make_intersection_scene,
                                  make_plane_scene, make_probe_curve, regularity_audit, sample_uniform,
                                  save_cloud)


class TestScenes(unittest.TestCase):

    def test_intersection_angle(self):
        for theta in (math.pi / 2, math.pi / 4, math.pi / 16):
            scene = make_intersection_scene(3, 2, theta)
            e1 = scene.pieces[0].frame[:, 0]
            f1 = scene.pieces[1].frame[:, 0]
            assert_allclose(float(e1 @ f1), math.cos(theta), atol=1e-15)
            # 交集方向 e2 同时在两片上
            assert_allclose(scene.pieces[0].frame[:, 1], scene.pieces[1].frame[:, 1])

    def test_invalid_angle(self):
        for theta in (0.0, -0.1, math.pi / 2 + 0.01):
            with self.assertRaises(PreconditionError):
                make_intersection_scene(3, 2, theta)

    def test_dimension_check(self):
        with self.assertRaises(PreconditionError):
            make_intersection_scene(3, 3, math.pi / 4)

    def test_curved_scene_requires_positive_L(self):
        with self.assertRaises(PreconditionError):
            make_intersection_scene(3, 2, math.pi / 4, "curved", L=0.0)

    def test_flat_area_and_curved_area(self):
        flat = make_intersection_scene(3, 2, math.pi / 3, extent=0.5)
        curved = make_intersection_scene(3, 2, math.pi / 3, "curved", L=0.5, extent=0.5)
        assert_allclose(flat.pieces[0].area, 1.0)
        self.assertGreater(curved.pieces[0].area, 1.0)

    def test_plane_scene_diameter(self):
        scene = make_plane_scene(3, 2, 2.5)
        assert_allclose(scene.diameter, 5.0 * math.sqrt(2.0))

    def test_boundary_scene_x0_on_boundary(self):
        scene = make_boundary_scene(3, 2, 1.0)
        piece = scene.pieces[0]
        info = piece.nearest_boundary(piece.chart(scene.x0)[0])
        self.assertEqual(info["axis"], 0)
        self.assertEqual(info["side"], -1.0)
        self.assertEqual(info["K"], 0.0)
        assert_allclose(info["outward_normal"], [-1.0, 0.0, 0.0])

    def test_scene_hash_depends_on_parameters(self):
        a = make_intersection_scene(3, 2, math.pi / 4)
        b = make_intersection_scene(3, 2, math.pi / 4)
        c = make_intersection_scene(3, 2, math.pi / 8)
        self.assertEqual(a.scene_hash(), b.scene_hash())
        self.assertNotEqual(a.scene_hash(), c.scene_hash())


class TestSampling(unittest.TestCase):

    def test_points_lie_on_pieces(self):
        for kind, L in (("flat", 0.0), ("curved", 0.5)):
            scene = make_intersection_scene(3, 2, math.pi / 4, kind, L)
            cloud = sample_uniform(scene, 500, seed=1)
            self.assertEqual(cloud.n, 1000)
            self.assertLessEqual(cloud.check_on_pieces(scene), 1e-10)

    def test_seed_determinism(self):
        scene = make_intersection_scene(3, 2, math.pi / 4, "curved", 0.5, profile="sine")
        a = sample_uniform(scene, 300, seed=7)
        b = sample_uniform(scene, 300, seed=7)
        c = sample_uniform(scene, 300, seed=8)
        assert_array_equal(a.points, b.points)
        self.assertFalse(np.array_equal(a.points, c.points))

    def test_n_total_splits_by_area(self):
        scene = make_intersection_scene(3, 2, math.pi / 4, ambient_cube=1.7)
        cloud = sample_uniform(scene, seed=3, n_total=20000)
        self.assertEqual(cloud.n, 20000)
        self.assertLessEqual(float(np.max(np.abs(cloud.points))), 1.7 + 1e-12)
        # 倾斜片更长，分到的点更多
        counts = cloud.meta["counts"]
        self.assertGreater(counts[1], counts[0])

    def test_uniform_marginal_on_flat_piece(self):
        scene = make_plane_scene(3, 2, 1.0)
        cloud = sample_uniform(scene, 40000, seed=0)
        frac = float(np.mean(cloud.points[:, 0] < 0.0))
        self.assertAlmostEqual(frac, 0.5, delta=0.01)
        assert_allclose(cloud.points[:, 2], 0.0)

    def test_add_noise(self):
        scene = make_plane_scene(3, 2, 1.0)
        cloud = sample_uniform(scene, 20000, seed=0)
        noisy = add_noise(cloud, 0.1, seed=1)
        self.assertEqual(noisy.sigma, 0.1)
        assert_allclose(np.std(noisy.points[:, 2]), 0.1, rtol=0.03)
        assert_array_equal(noisy.labels, cloud.labels)
        same = add_noise(cloud, 0.0)
        assert_array_equal(same.points, cloud.points)
        with self.assertRaises(PreconditionError):
            add_noise(cloud, -1.0)

    def test_save_and_load(self):
        scene = make_intersection_scene(3, 2, math.pi / 5, "curved", 0.3)
        cloud = sample_uniform(scene, 50, seed=11)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "cloud.csv")
            paths = save_cloud(cloud, path, scene)
            self.assertTrue(all(os.path.exists(p) for p in paths))
            loaded, loaded_scene = load_cloud(path)
        assert_array_equal(loaded.points, cloud.points)
        assert_array_equal(loaded.labels, cloud.labels)
        self.assertEqual(loaded.seed, 11)
        self.assertEqual(loaded_scene.scene_hash(), scene.scene_hash())

    def test_load_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            load_cloud("/nonexistent/cloud.csv")


class TestProbeCurve(unittest.TestCase):

    def test_flat_curve_crosses_at_x0(self):
        scene = make_intersection_scene(3, 2, math.pi / 4)
        curve = make_probe_curve(scene, 0, scene.x0, 1000, 0.3)
        self.assertEqual(curve.m, 1000)
        assert_allclose(curve.crossing_arc, 0.0, atol=1e-12)
        assert_allclose(curve.crossing_point, scene.x0, atol=1e-12)
        assert_allclose(np.diff(curve.arc), 0.6 / 999, rtol=1e-10)

    def test_curved_curve_is_arc_length_parametrized(self):
        scene = make_intersection_scene(3, 2, math.pi / 4, "curved", 0.5)
        curve = make_probe_curve(scene, 0, scene.x0, 400, 0.3)
        self.assertLessEqual(float(np.max(scene.pieces[0].residual(curve.points))), 1e-10)
        seg = np.linalg.norm(np.diff(curve.points, axis=0), axis=1)
        assert_allclose(seg, np.mean(seg), rtol=1e-3)

    def test_curve_missing_intersection(self):
        scene = make_intersection_scene(3, 2, math.pi / 4)
        through = scene.pieces[0].embed([[0.2, 0.0]])[0]
        # 沿 e2 方向的坐标线与交集平行，不会穿过
        with self.assertRaises(PreconditionError):
            make_probe_curve(scene, 0, through, 100, 0.2, direction=np.array([0.0, 1.0]))

    def test_curve_must_stay_inside_piece(self):
        scene = make_intersection_scene(3, 2, math.pi / 4, extent=0.5)
        with self.assertRaises(PreconditionError) as ctx:
            make_probe_curve(scene, 0, scene.x0, 100, 0.6)
        self.assertIn("half_length", ctx.exception.inequality)
        curve = make_probe_curve(scene, 0, scene.x0, 100, 0.5)
        assert_allclose(curve.points[[0, -1], 0], [-0.5, 0.5], atol=1e-15)
        curved = make_intersection_scene(3, 2, math.pi / 4, "curved", 0.5, extent=0.5)
        with self.assertRaises(PreconditionError):
            make_probe_curve(curved, 0, curved.x0, 100, 0.7)


class TestRegularityAudit(unittest.TestCase):

    def test_quadratic_profile(self):
        scene = make_intersection_scene(3, 2, math.pi / 4, "curved", 0.5)
        audit = regularity_audit(scene.pieces[0], n_pairs=5000, radius=0.1, seed=0)
        self.assertLessEqual(audit["bound1_max"], 1.01 * 0.5)
        self.assertGreater(audit["bound1_max"], 0.25)
        self.assertLessEqual(audit["bound2_max"], 2.0 * 0.5 ** 2 + 1e-12)

    def test_flat_piece_is_exactly_regular(self):
        scene = make_plane_scene(3, 2, 1.0)
        audit = regularity_audit(scene.pieces[0], n_pairs=1000, seed=0)
        self.assertLessEqual(audit["bound1_max"], 1e-10)
        self.assertEqual(audit["bound2_max"], 0.0)


if __name__ == "__main__":
    unittest.main()
