import math
import os
import unittest

import numpy as np
from numpy.testing import assert_allclose

from singlap.errors import PreconditionError
from singlap.hyptest import (TestConfig, TestReport, ball_mass, bandwidth_for_test, concentration_bound,
                             epsilon_for_level, general_threshold, hypothesis_bandwidth, lambert_sample_bounds,
                             make_hypothesis_scene, power_bandwidth, power_conditions_check, power_lower_bound,
                             required_sample_size, run_concentration_experiment, run_experiment_table, run_test,
                             run_trial, threshold_delta)
from singlap.io_utils import set_verbose
from singlap.laplacian import ProbeDirection, graph_laplacian_apply
from singlap.manifold_gen import sample_uniform


class TestBandwidthAndThreshold(unittest.TestCase):

    def test_reference_values(self):
        t = power_bandwidth(40000, 0.05)
        self.assertAlmostEqual(t, 0.2238, places=4)
        self.assertAlmostEqual(threshold_delta(40000, t, 0.05), 0.005423, places=6)
        self.assertAlmostEqual(hypothesis_bandwidth(40000, 0.05), 0.2426, places=4)
        self.assertEqual(bandwidth_for_test(40000, 0.05), t)

    def test_monotone_in_n(self):
        ns = [1000, 5000, 20000, 40000, 70000]
        ts = [power_bandwidth(n, 0.05) for n in ns]
        deltas = [threshold_delta(n, t, 0.05) for n, t in zip(ns, ts)]
        self.assertTrue(all(a > b for a, b in zip(ts, ts[1:])))
        self.assertTrue(all(a > b for a, b in zip(deltas, deltas[1:])))
        for n in ns:
            self.assertLessEqual(power_bandwidth(n, 0.05), hypothesis_bandwidth(n, 0.05))

    def test_small_n_is_rejected(self):
        with self.assertRaises(PreconditionError):
            power_bandwidth(2, 0.05)
        with self.assertRaises(PreconditionError):
            hypothesis_bandwidth(4, 0.05)

    def test_threshold_gives_level(self):
        for n in (2000, 40000):
            t = power_bandwidth(n, 0.05)
            bound = concentration_bound(n, t, threshold_delta(n, t, 0.05))
            assert_allclose(bound, 2 * n * (0.05 / (2 * n)) ** 4, rtol=1e-9)
            self.assertLessEqual(bound, 0.05)

    def test_epsilon_for_level(self):
        eps = epsilon_for_level(5000, 0.3, 0.01)
        assert_allclose(concentration_bound(5000, 0.3, eps), 0.01, rtol=1e-12)
        self.assertEqual(concentration_bound(5000, 0.3, 0.0), 1.0)

    def test_single_summand_bound(self):
        t = 0.2
        v = np.array([1.0, 0.0, 0.0])
        worst = 0.0
        for r in np.linspace(0.0, 2.0, 2001):
            worst = max(worst, abs(graph_laplacian_apply(np.array([[r, 0.0, 0.0]]), np.zeros(3), v, t)))
        self.assertLessEqual(worst, math.sqrt(t / (2 * math.e)) * (1 + 1e-12))
        self.assertGreater(worst, 0.999 * math.sqrt(t / (2 * math.e)))

    def test_general_threshold(self):
        delta = threshold_delta(1000, 0.3, 0.05)
        self.assertEqual(general_threshold(1000, 0.3, 0.05, 0.0), delta)
        self.assertGreater(general_threshold(1000, 0.3, 0.05, 1e-3), delta)


class TestRunTest(unittest.TestCase):

    def setUp(self):
        set_verbose(False)
        self.scene = make_hypothesis_scene("H0")
        self.cloud = sample_uniform(self.scene, n_total=2000, seed=11)
        self.v = ProbeDirection.normalized([0.0, 0.6, 0.8])

    def test_reject_matches_threshold(self):
        report = run_test(self.cloud, TestConfig(x0=np.zeros(3)), self.v)
        self.assertEqual(report.reject, report.T > report.delta)
        self.assertEqual(report.n, 2000)
        self.assertGreater(report.n_in_ball, 0)
        self.assertAlmostEqual(report.t_used, power_bandwidth(2000, 0.05))
        self.assertFalse(report.reject)

    def test_t_override(self):
        report = run_test(self.cloud, TestConfig(x0=np.zeros(3), t_override=0.1), self.v)
        self.assertEqual(report.t_used, 0.1)
        assert_allclose(report.delta, threshold_delta(2000, 0.1, 0.05))

    def test_empty_ball(self):
        with self.assertRaises(PreconditionError):
            run_test(self.cloud, TestConfig(x0=np.array([0.0, 0.0, 5.0]), radius=0.5), self.v)

    def test_report_consistency(self):
        with self.assertRaises(PreconditionError):
            TestReport(T=1.0, delta=2.0, t_used=0.3, n=10, n_in_ball=3, reject=True, v=self.v, alpha=0.05)

    def test_config_validation(self):
        with self.assertRaises(PreconditionError):
            TestConfig(alpha=1.5)
        with self.assertRaises(PreconditionError):
            TestConfig(radius=0.0)

    def test_statistic_is_independent_of_sample_order(self):
        config = TestConfig(x0=np.zeros(3), t_override=0.3)
        report = run_test(self.cloud, config, self.v)
        perm = np.random.default_rng(4).permutation(self.cloud.n)
        shuffled = self.cloud.subset(perm)
        again = run_test(shuffled, config, self.v)
        self.assertEqual(report.T, again.T)
        self.assertEqual(report.n_in_ball, again.n_in_ball)
        self.assertGreaterEqual(report.extra["n_refined"], 1)

    def test_trials_are_reproducible_and_null_holds(self):
        rows = [run_trial(self.scene, 2000, np.random.SeedSequence([3, k])) for k in range(5)]
        again = run_trial(self.scene, 2000, np.random.SeedSequence([3, 0]))
        self.assertEqual(rows[0]["T"], again["T"])
        self.assertFalse(any(row["reject"] for row in rows))


class TestPower(unittest.TestCase):

    def test_conditions_report_both_sides(self):
        check = power_conditions_check(0.05, 2, 1.0, math.pi / 4)
        self.assertEqual(set(check), {"first", "second", "satisfied"})
        self.assertTrue(check["satisfied"])
        self.assertFalse(power_conditions_check(0.5, 2, 1.0, math.pi / 4)["second"]["ok"])

    def test_required_sample_size_scaling(self):
        ratios = []
        for s in (0.1, 0.05, 0.025):
            n = required_sample_size(2, 1.0, math.asin(s))
            self.assertTrue(power_conditions_check(power_bandwidth(n, 0.05), 2, 1.0, math.asin(s))["satisfied"])
            ratios.append(n / math.log(n) * s ** 4)
        self.assertLess(max(ratios) / min(ratios), 1.5)

    def test_required_sample_size_decreases_with_angle(self):
        sizes = [required_sample_size(2, 1.0, a) for a in (math.pi / 16, math.pi / 8, math.pi / 4)]
        self.assertTrue(all(a > b for a, b in zip(sizes, sizes[1:])))

    def test_lambert_radii(self):
        out = lambert_sample_bounds(40000, 0.05, 2, 1.0, math.pi / 2)
        self.assertLess(out["inner"], out["outer"])
        self.assertLessEqual(out["inner"], out["inner_relaxed"])
        self.assertGreaterEqual(out["outer"], out["outer_relaxed"])
        assert_allclose(out["inner_relaxed"],
                        math.sqrt(math.e) * out["delta"] / (out["t"] * math.pi / 2.0), rtol=1e-12)
        for r in (out["inner"], out["outer"]):
            u2 = 2.0 * r * r / out["t"]
            assert_allclose(u2 * math.exp(-u2), out["rho"], rtol=1e-10)

    def test_lambert_radii_need_visible_signal(self):
        with self.assertRaises(PreconditionError):
            lambert_sample_bounds(100, 0.05, 2, 1.0, math.pi / 2, density=0.05)

    def test_ball_mass_and_power_bound(self):
        scene = make_hypothesis_scene("H1", math.pi / 2)
        r = 2.0 / 3.0
        expected = sum(p.weight * math.pi * r * r for p in scene.pieces) / sum(p.weight * p.area for p in scene.pieces)
        assert_allclose(ball_mass(scene, scene.x0, r), expected, rtol=1e-12)
        bounds = [power_lower_bound(n, 0.05, scene) for n in (10, 100, 40000)]
        self.assertTrue(all(a < b for a, b in zip(bounds, bounds[1:])))
        assert_allclose(bounds[-1], 0.95, atol=1e-12)
        with self.assertRaises(PreconditionError):
            power_lower_bound(100, 0.05, make_hypothesis_scene("H0"))


class TestConcentration(unittest.TestCase):

    def setUp(self):
        set_verbose(False)

    def test_small_run(self):
        table, log = run_concentration_experiment(n=500, trials=4, seed=2)
        self.assertEqual(list(table["level"]), [0.9, 0.5, 0.1])
        self.assertEqual(len(log), 4)
        self.assertTrue((log["max_deviation"] > 0.0).all())
        t = power_bandwidth(500, 0.05)
        for _, row in table.iterrows():
            assert_allclose(row["epsilon"], epsilon_for_level(500, t, row["level"]), rtol=1e-15)
            assert_allclose(row["bound"], row["level"], rtol=1e-12)
        self.assertTrue(table["ok"].all())
        # 小 n 时 ε 远大于典型偏差
        self.assertEqual(float(table["empirical"].max()), 0.0)
        _, again = run_concentration_experiment(n=500, trials=4, seed=2, threads=2)
        self.assertTrue(log.equals(again))

    @unittest.skipUnless(os.getenv("SINGLAP_SLOW"), "n=10⁴ 的 100 次重复耗时较长，设置 SINGLAP_SLOW=1 运行")
    def test_full_scale_within_bound(self):
        table, log = run_concentration_experiment(threads=4)
        self.assertEqual(len(log), 100)
        self.assertTrue((table["empirical"] <= table["bound"]).all())


class TestExperimentTable(unittest.TestCase):

    def setUp(self):
        set_verbose(False)

    def test_small_table(self):
        table, log = run_experiment_table([2000], [math.pi / 2], trials=3, seed=5)
        self.assertEqual(list(table.columns), ["n", "H0", "H1_theta_1.570796"])
        self.assertEqual(len(log), 6)
        self.assertEqual(table.loc[0, "H0"], 0.0)
        again, _ = run_experiment_table([2000], [math.pi / 2], trials=3, seed=5, threads=2)
        self.assertTrue(table.equals(again))

    @unittest.skipUnless(os.getenv("SINGLAP_SLOW"), "完整拒绝率表耗时较长，设置 SINGLAP_SLOW=1 运行")
    def test_full_table_h0_level(self):
        table, _ = run_experiment_table(trials=20, threads=4)
        self.assertTrue((table["H0"] <= 0.05).all())
        self.assertGreaterEqual(table["H1_theta_1.570796"].iloc[-1], table["H1_theta_1.570796"].iloc[0])


if __name__ == "__main__":
    unittest.main()
