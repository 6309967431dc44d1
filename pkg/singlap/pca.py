"""PCA 投影：零点集中心点云 6 → 3 维等"""
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
import pandas as pd

from .errors import require

_RANK_TOL = 1e-12


@dataclass
class PCAModel:
    mean: np.ndarray
    components: np.ndarray           # (target_dim, N)，按特征值降序
    eigenvalues: np.ndarray          # 全部 N 个，降序
    rank: int

    @property
    def target_dim(self) -> int:
        return self.components.shape[0]

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        total = float(np.sum(self.eigenvalues))
        if total <= 0.0:
            return np.zeros(self.target_dim)
        return self.eigenvalues[: self.target_dim] / total

    def to_dict(self) -> Dict[str, Any]:
        return {
            "target_dim": self.target_dim,
            "rank": self.rank,
            "eigenvalues": self.eigenvalues.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "mean": self.mean.tolist(),
        }


def fit_pca(points: np.ndarray, target_dim: int) -> PCAModel:
    """
    中心化后对协方差矩阵做特征分解，取前 target_dim 个特征向量

    协方差退化（秩 < target_dim）时不报错，rank 字段给出数值秩
    """
    X = np.asarray(points, dtype=float)
    require(X.ndim == 2 and X.shape[0] >= 2, f"至少需要 2 个点: shape={X.shape}")
    require(1 <= target_dim <= X.shape[1], f"目标维数必须在 [1, N]: {target_dim}, N={X.shape[1]}",
            "target_dim <= N")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    e_val, e_vec = np.linalg.eigh(cov)
    order = np.argsort(-e_val, kind="stable")
    e_val = np.clip(e_val[order], 0.0, None)
    e_vec = e_vec[:, order]
    # 固定符号：每个主方向绝对值最大的分量取正
    signs = np.sign(e_vec[np.argmax(np.abs(e_vec), axis=0), np.arange(e_vec.shape[1])])
    signs[signs == 0] = 1.0
    e_vec = e_vec * signs
    scale = max(float(e_val[0]), 1.0)
    rank = int(np.sum(e_val > _RANK_TOL * scale))
    return PCAModel(mean, e_vec[:, :target_dim].T.copy(), e_val, rank)


def project(model: PCAModel, points: np.ndarray) -> np.ndarray:
    return (np.asarray(points, dtype=float) - model.mean) @ model.components.T


def reconstruct(model: PCAModel, coords: np.ndarray) -> np.ndarray:
    return np.asarray(coords, dtype=float) @ model.components + model.mean


def projection_frame(model: PCAModel, points: np.ndarray) -> pd.DataFrame:
    coords = project(model, points)
    return pd.DataFrame(coords, columns=[f"pc{i}" for i in range(model.target_dim)])
