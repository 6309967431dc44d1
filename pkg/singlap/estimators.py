"""
交点与交角估计

在探测曲线 Γ 上取响应剖面 P：
    ŝ = (argmax P + argmin P)/2，r̂ = ‖ŝ − argmax P‖/√t，θ̂ = arcsin(1/(√2 r̂))
"""
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import OptimizeWarning, curve_fit

from .config import ESTIMATE_CFG
from .errors import EstimationError, PreconditionError, require
from .io_utils import progress
from .laplacian import LaplacianResponse, ProbeDirection, response_at
from .manifold_gen import PointCloud, ProbeCurve, make_intersection_scene, make_probe_curve, sample_uniform


@dataclass
class EstimateReport:
    s_hat: np.ndarray
    r_max_hat: float
    theta_hat: float
    argmax_point: np.ndarray
    argmin_point: np.ndarray
    t_used: float
    argmax_index: int = -1
    argmin_index: int = -1
    refined: bool = False
    clipped: bool = False
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        require(0.0 < self.theta_hat <= math.pi / 2 + 1e-15, f"θ̂ 必须在 (0, π/2]: {self.theta_hat}")
        mid = 0.5 * (np.asarray(self.argmax_point) + np.asarray(self.argmin_point))
        require(np.allclose(mid, self.s_hat, rtol=0.0, atol=1e-12), "ŝ 必须是极大点与极小点的中点")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "s_hat": np.asarray(self.s_hat).tolist(),
            "r_max_hat": self.r_max_hat,
            "theta_hat": self.theta_hat,
            "argmax_point": np.asarray(self.argmax_point).tolist(),
            "argmin_point": np.asarray(self.argmin_point).tolist(),
            "argmax_index": self.argmax_index,
            "argmin_index": self.argmin_index,
            "t_used": self.t_used,
            "refined": self.refined,
            "clipped": self.clipped,
            **self.meta,
        }


def _refine(points: np.ndarray, values: np.ndarray, i: int) -> np.ndarray:
    """三点抛物线插值的亚格点位置；端点处不细化"""
    if i == 0 or i == len(values) - 1:
        return points[i].copy()
    y0, y1, y2 = values[i - 1], values[i], values[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0.0:
        return points[i].copy()
    off = 0.5 * (y0 - y2) / denom
    off = max(-0.5, min(0.5, off))
    if off >= 0.0:
        return points[i] + off * (points[i + 1] - points[i])
    return points[i] + off * (points[i] - points[i - 1])


def _extrema(response: LaplacianResponse, refine: bool) -> Tuple[np.ndarray, np.ndarray, int, int]:
    require(response.m >= 3, f"剖面至少需要 3 个点: m={response.m}", "m >= 3")
    values = response.values
    i_max = int(np.argmax(values))
    i_min = int(np.argmin(values))
    if not (values[i_max] > 0.0 > values[i_min]):
        raise EstimationError("no sign change：剖面的极大值与极小值同号，曲线上看不到交点",
                              max=float(values[i_max]), min=float(values[i_min]))
    pts = response.eval_points
    if refine:
        return _refine(pts, values, i_max), _refine(pts, -values, i_min), i_max, i_min
    return pts[i_max].copy(), pts[i_min].copy(), i_max, i_min


def estimate_crossing(response: LaplacianResponse, refine: bool = False) -> np.ndarray:
    """ŝ = (argmax P + argmin P)/2"""
    p_max, p_min, _, _ = _extrema(response, refine)
    return 0.5 * (p_max + p_min)


def estimate_angle(response: LaplacianResponse, s_hat: np.ndarray, t: float, refine: bool = False,
                   clip: bool = False) -> Tuple[float, float]:
    """
    r̂ = ‖ŝ − argmax P‖/√t，θ̂ = arcsin(1/(√2 r̂))

    1/(√2 r̂) > 1 时抛出 EstimationError；clip=True 时改为返回 θ̂ = π/2
    """
    require(t > 0.0, f"带宽必须为正: t={t}", "t > 0")
    p_max, _, _, _ = _extrema(response, refine)
    r_hat = float(np.linalg.norm(np.asarray(s_hat) - p_max)) / math.sqrt(t)
    arg = 1.0 / (math.sqrt(2.0) * r_hat) if r_hat > 0.0 else math.inf
    if arg > 1.0:
        if clip:
            return r_hat, math.pi / 2
        raise EstimationError("angle unresolvable at this bandwidth：剖面峰值离 ŝ 不足 1/√2（按 √t 缩放）",
                              r_max_hat=r_hat)
    return r_hat, math.asin(arg)


def estimate(response: LaplacianResponse, t: Optional[float] = None, refine: bool = False,
             clip: bool = False) -> EstimateReport:
    """估计 ŝ、r̂、θ̂；t 缺省时取剖面自带的带宽"""
    t = response.params.t if t is None else t
    p_max, p_min, i_max, i_min = _extrema(response, refine)
    s_hat = 0.5 * (p_max + p_min)
    r_hat, theta_hat = estimate_angle(response, s_hat, t, refine, clip)
    clipped = clip and r_hat * math.sqrt(2.0) < 1.0
    return EstimateReport(s_hat, r_hat, theta_hat, p_max, p_min, t, i_max, i_min, refine, clipped)


def _arc_length(points: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def _shape(u, c1, c2):
    return c1 * u * np.exp(-c2 * u * u)


def profile_fit_diagnostics(response: LaplacianResponse, scale: float = 1.0) -> Dict[str, Any]:
    """
    以 ŝ 为原点的弧长 u（除以 scale）拟合 c₁·u·e^{−c₂u²}

    返回:
        c1、c2、residual_ratio = ‖P − 拟合‖/‖P‖、singular（拟合失败或协方差不可用）
    """
    if response.m < 10:
        raise PreconditionError(f"拟合至少需要 10 个点: m={response.m}", inequality="m >= 10")
    values = response.values
    arc = _arc_length(response.eval_points) / scale
    norm = float(np.linalg.norm(values))
    report = {"c1": None, "c2": None, "residual_ratio": None, "singular": True, "m": response.m}
    if norm == 0.0:
        return report
    i_max, i_min = int(np.argmax(values)), int(np.argmin(values))
    center = 0.5 * (arc[i_max] + arc[i_min])
    u = arc - center
    u_peak = abs(arc[i_max] - center)
    if u_peak == 0.0:
        return report
    c2_0 = 1.0 / (2.0 * u_peak * u_peak)
    c1_0 = math.copysign(values[i_max] * math.exp(0.5) / u_peak, arc[i_max] - center)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", OptimizeWarning)
            (c1, c2), cov = curve_fit(_shape, u, values, p0=(c1_0, c2_0),
                                      ftol=1e-14, xtol=1e-14, gtol=1e-14, maxfev=20000)
    except (RuntimeError, OptimizeWarning, ValueError):
        return report
    if not np.all(np.isfinite(cov)):
        return report
    resid = float(np.linalg.norm(values - _shape(u, c1, c2)))
    report.update({"c1": float(c1), "c2": float(c2), "residual_ratio": resid / norm, "singular": False})
    return report


def response_along_curve(cloud: PointCloud, curve: ProbeCurve, v: ProbeDirection, t: float,
                         threads: int = 1) -> LaplacianResponse:
    """在 Γ 的各点上求 L_{n,t}f，元数据带上曲线的弧长与交点"""
    meta = {"piece_index": curve.piece_index, "crossing_arc": curve.crossing_arc,
            "scene_hash": cloud.meta.get("scene_hash")}
    return response_at(cloud, curve.points, v, t, meta, threads)


def run_estimator_experiment(theta: float, runs: Optional[int] = None, seed: int = 0,
                             flat_or_curved: str = "flat", L: float = 0.5,
                             t: Optional[float] = None, n_per_piece: Optional[int] = None,
                             m: Optional[int] = None, threads: int = 1) -> pd.DataFrame:
    """
    交角 θ 的两片场景上重复估计（每次重新采样并随机抽取 v），
    返回逐次的 ‖ŝ − s_true‖、θ̂ 与 |θ̂ − θ|

    θ̂ 无法解析（r̂ < 1/√2）时按 θ̂ = π/2 计，并记 clipped = True
    """
    runs = runs or ESTIMATE_CFG["runs"]
    t = t or ESTIMATE_CFG["t"]
    n_per_piece = n_per_piece or ESTIMATE_CFG["n_per_piece"]
    m = m or ESTIMATE_CFG["m"]
    scene = make_intersection_scene(3, 2, theta, flat_or_curved, L if flat_or_curved == "curved" else 0.0,
                                    extent=ESTIMATE_CFG["half_width"])
    curve = make_probe_curve(scene, 0, scene.x0, m, ESTIMATE_CFG["curve_half_length"])
    s_true = curve.crossing_point
    rows = [None] * runs

    def work(run: int) -> None:
        s_cloud, s_dir = np.random.SeedSequence([seed, run]).spawn(2)
        cloud = sample_uniform(scene, n_per_piece, seed=s_cloud)
        v = ProbeDirection.random(scene.N, np.random.default_rng(s_dir))
        row = {"run": run, "theta": theta}
        try:
            rep = estimate(response_along_curve(cloud, curve, v, t), t, clip=True)
            row.update({"s_error": float(np.linalg.norm(rep.s_hat - s_true)),
                        "theta_hat": rep.theta_hat, "theta_error": abs(rep.theta_hat - theta),
                        "clipped": rep.clipped, "failed": False})
        except EstimationError:
            row.update({"s_error": math.nan, "theta_hat": math.nan, "theta_error": math.nan,
                        "clipped": False, "failed": True})
        rows[run] = row

    with progress(total=runs, desc=f"估计 θ={theta:.4f}", unit="次") as bar:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for _ in pool.map(work, range(runs)):
                    bar.update(1)
        else:
            for run in range(runs):
                work(run)
                bar.update(1)
    return pd.DataFrame(rows)
