"""
全局配置

沿用字典常量的写法；少数字段允许用 SINGLAP_* 环境变量覆盖。
不读取任何配置文件，.env 只有在 CLI 显式传入 --env-file 时才加载（见 cli.py）。
"""
import math
import os
import sys

# 求积 oracle：复合张量 Gauss-Legendre
QUAD_CFG = {
    "panel_order": 16,        # 每个子区间的 Gauss-Legendre 节点数
    "resolution": int(os.getenv("SINGLAP_QUAD_RESOLUTION", "96")),  # 每轴节点数（≥ 64）
    "min_resolution": 64,
    "window": 12.0,           # 积分窗口半宽，单位 √t
    "tol": 1e-9,              # 相对误差容限，超过则结果被标记
    "max_refinements": 2,     # 分辨率最多再翻倍的次数
}

# 经验图拉普拉斯
LAPLACIAN_CFG = {
    "matrix_cap": int(os.getenv("SINGLAP_MATRIX_CAP", "6000")),  # 稠密 W 矩阵允许的最大 n
    "chunk": 2048,            # 批量求值时每块的评估点数
}

# 理论包络
THEORY_CFG = {
    "slack": 1e-12,
    "a_convention": "limit",          # A 的中心值约定，见 theory.A_CONVENTIONS
    "a_lower_variant": "proof",       # A 下界："statement" | "proof"
    "boundary_convention": "rederived",  # 边界项："rederived" | "as-stated"
}

# 假设检验与功效实验
HYPTEST_CFG = {
    "alpha": 0.05,
    "radius": 1.0,
    "n_candidates": 64,
    "select_fraction": 0.2,
    "sample_sizes": [20000, 30000, 40000, 55000, 60000, 65000, 70000],
    "angles": [math.pi / 4, math.pi / 2],
    "trials": 100,
    "plane_half_width": 2.5,   # H0 平面的半宽
    "cube_half_width": 1.7,    # H1' 两片平面被裁剪到的环境立方体半宽
    "N": 3,
    "d": 2,
    "refine_margin": 1e-9,     # 分块求和的最大值附近，用 fsum 重算的候选窗口
    "concentration_n": 10000,
    "concentration_levels": [0.9, 0.5, 0.1],
    "concentration_v": [0.0, 0.6, 0.8],
}

# 噪声 Monte-Carlo
NOISE_CFG = {
    "draws": 100000,
    "draw_chunk": 2000,
    "accept_z": 3.0,
    "reject_z": 5.0,
}

# 零点集构造
ZEROSET_CFG = {
    "box_half_width": 10.0,
    "width_cap": 0.01,
    "budget": 1_000_000,
    "n_inputs": 100,
    "delta": 0.01,
    "delta_machine": sys.float_info.epsilon,
    "ulps": 4,
    "min_contraction": 0.01,
    "max_rounds": 50,
    "checkpoint_every": 10000,
    "checkpoint_version": 1,
}

# 估计器实验
ESTIMATE_CFG = {
    "t": 1e-3,
    "n_per_piece": 20000,
    "m": 1000,
    "half_width": 0.5,
    "curve_half_length": 0.3,
    "angles": [math.pi / 2, math.pi / 4, math.pi / 8, math.pi / 16],
    "runs": 100,
}

RUN_CFG = {
    "verbose": os.getenv("SINGLAP_VERBOSE", "1") != "0",
    "threads": int(os.getenv("SINGLAP_THREADS", "1")),
    "artifact_version": "1.0.0",
}


def refresh_from_env() -> None:
    """--env-file 加载之后重新读取可被环境变量覆盖的字段（原地更新字典）"""
    QUAD_CFG["resolution"] = int(os.getenv("SINGLAP_QUAD_RESOLUTION", str(QUAD_CFG["resolution"])))
    LAPLACIAN_CFG["matrix_cap"] = int(os.getenv("SINGLAP_MATRIX_CAP", str(LAPLACIAN_CFG["matrix_cap"])))
    RUN_CFG["verbose"] = os.getenv("SINGLAP_VERBOSE", "1" if RUN_CFG["verbose"] else "0") != "0"
    RUN_CFG["threads"] = int(os.getenv("SINGLAP_THREADS", str(RUN_CFG["threads"])))
