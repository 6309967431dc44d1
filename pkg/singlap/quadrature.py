"""
复合 Gauss-Legendre 求积规则（张量积）
"""
import math
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=16)
def _reference_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    z, w = leggauss(order)
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


def composite_rule(lo: float, hi: float, n_nodes: int, panel_order: int = 16) -> Tuple[np.ndarray, np.ndarray]:
    """
    [lo, hi] 上的复合 Gauss-Legendre 节点与权重

    参数:
        n_nodes: 期望节点数，向上取整到 panel_order 的倍数
    """
    panels = max(1, math.ceil(n_nodes / panel_order))
    z, w = _reference_rule(panel_order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * z[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def tensor_rule(lower: Sequence[float], upper: Sequence[float], n_nodes: int,
                panel_order: int = 16) -> Tuple[np.ndarray, np.ndarray]:
    """盒子 ∏[lower_k, upper_k] 上的张量积规则，返回 (M×d 节点, M 权重)"""
    axes = [composite_rule(lo, hi, n_nodes, panel_order) for lo, hi in zip(lower, upper)]
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return nodes, weights
