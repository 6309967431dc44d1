import math
import unittest

import numpy as np
from numpy.testing import assert_allclose
from scipy.special import erf

from singlap.quadrature import composite_rule, tensor_rule


class TestQuadrature(unittest.TestCase):

    def test_node_count_rounds_up_to_panels(self):
        nodes, weights = composite_rule(0.0, 1.0, 40)
        self.assertEqual(len(nodes), 48)
        assert_allclose(np.sum(weights), 1.0, rtol=1e-14)
        self.assertTrue(np.all((nodes > 0.0) & (nodes < 1.0)))

    def test_gaussian_integral(self):
        nodes, weights = composite_rule(-1.0, 2.0, 64)
        value = float(np.sum(weights * np.exp(-nodes * nodes)))
        expected = 0.5 * math.sqrt(math.pi) * (erf(2.0) + erf(1.0))
        assert_allclose(value, expected, rtol=1e-14)

    def test_tensor_rule_moments(self):
        nodes, weights = tensor_rule([0.0, -1.0], [2.0, 1.0], 32)
        self.assertEqual(nodes.shape, (32 * 32, 2))
        assert_allclose(np.sum(weights), 4.0, rtol=1e-14)
        assert_allclose(np.sum(weights * nodes[:, 0] ** 2 * nodes[:, 1] ** 2), (8.0 / 3.0) * (2.0 / 3.0),
                        rtol=1e-13)


if __name__ == "__main__":
    unittest.main()
