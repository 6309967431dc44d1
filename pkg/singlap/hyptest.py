"""
奇异点假设检验

- 统计量 T = max_{X_m ∈ B_radius(x0)} |L_{n,t}f(X_m)|，阈值 δ 只依赖 (n, t, α)
- 带宽：检验条件与功效定理两条公式分开提供，实验默认用功效定理的取值
- 集中不等式、功效条件、Lambert W 给出的样本半径区间、功效下界
- 批量实验：样本量 × 角度 × 重复次数的拒绝率表
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import HYPTEST_CFG
from .errors import ConvergenceError, PreconditionError, require
from .io_utils import echo, progress
from .laplacian import (ProbeDirection, expected_laplacian_flat_scene, graph_laplacian_apply, graph_laplacian_apply_many,
                        select_direction)
from .manifold_gen import PointCloud, Scene, make_intersection_scene, make_plane_scene, sample_uniform
from .special_functions import lambert_w0, lambert_wm1, unit_ball_volume


@dataclass
class TestConfig:
    alpha: float = HYPTEST_CFG["alpha"]
    x0: Optional[np.ndarray] = None
    radius: float = HYPTEST_CFG["radius"]
    t_override: Optional[float] = None

    __test__ = False  # pytest 不要把它当测试类收集

    def __post_init__(self):
        require(0.0 < self.alpha < 1.0, f"检验水平必须在 (0,1): alpha={self.alpha}", "0 < alpha < 1")
        require(self.radius > 0.0, f"检验球半径必须为正: radius={self.radius}")
        if self.t_override is not None:
            require(self.t_override > 0.0, f"带宽必须为正: t={self.t_override}", "t > 0")
        if self.x0 is not None:
            self.x0 = np.asarray(self.x0, dtype=float)


@dataclass
class TestReport:
    T: float
    delta: float
    t_used: float
    n: int
    n_in_ball: int
    reject: bool
    v: ProbeDirection
    alpha: float
    independent_selection: bool = True
    delta_general: Optional[float] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    __test__ = False

    def __post_init__(self):
        require(self.reject == (self.T > self.delta), "reject 必须等价于 T > δ")

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "T": self.T, "delta": self.delta, "t_used": self.t_used, "n": self.n,
            "n_in_ball": self.n_in_ball, "reject": self.reject, "v": self.v.v.tolist(),
            "alpha": self.alpha, "independent_selection": self.independent_selection,
            "delta_general": self.delta_general,
        }
        out.update(self.extra)
        return out


def _bandwidth(n: int, alpha: float, inner_factor: float) -> float:
    require(n >= 3, f"样本量至少为 3: n={n}", "n >= 3")
    require(0.0 < alpha < 1.0, f"检验水平必须在 (0,1): alpha={alpha}", "0 < alpha < 1")
    arg = math.e * (n - 1) / (inner_factor * math.log(2.0 * n / alpha))
    if arg <= 1.0:
        raise PreconditionError(f"n={n} 太小，带宽公式中对数的自变量 {arg:.4g} ≤ 1",
                                inequality="e(n-1)/log(2n/alpha) > 1", n=n)
    return min(1.0, 2.0 / math.log(arg))


def hypothesis_bandwidth(n: int, alpha: float) -> float:
    """检验条件的带宽上限 min{1, 2/log(e(n−1)/(2 log(2n/α)))}"""
    return _bandwidth(n, alpha, 2.0)


def power_bandwidth(n: int, alpha: float) -> float:
    """功效定理的带宽 t(n,α) = min{1, 2/log(e(n−1)/log(2n/α))}"""
    return _bandwidth(n, alpha, 1.0)


def bandwidth_for_test(n: int, alpha: float) -> float:
    """取功效定理的 t(n,α)，并确认它满足检验条件"""
    t = power_bandwidth(n, alpha)
    cap = hypothesis_bandwidth(n, alpha)
    require(t <= cap, f"t(n,α)={t:.6g} 不满足检验条件 t ≤ {cap:.6g}", "t <= hypothesis bandwidth")
    return t


def threshold_delta(n: int, t: float, alpha: float) -> float:
    """δ = √(t/(e(n−1)) · log(2n/α))"""
    require(n >= 2, f"样本量至少为 2: n={n}", "n >= 2")
    require(t > 0.0, f"带宽必须为正: t={t}", "t > 0")
    require(0.0 < alpha < 1.0, f"检验水平必须在 (0,1): alpha={alpha}", "0 < alpha < 1")
    return math.sqrt(t / (math.e * (n - 1)) * math.log(2.0 * n / alpha))


def concentration_bound(n: int, t: float, epsilon: float) -> float:
    """ℙ(max_m |L_{n,t}f(X_m) − ((n−1)/n)L_tf(X_m)| > ε) ≤ 2n exp(−4e(n−1)ε²/t)，截断到 [0,1]"""
    require(n >= 1 and t > 0.0 and epsilon >= 0.0, f"参数必须为正: n={n}, t={t}, epsilon={epsilon}")
    return min(1.0, 2.0 * n * math.exp(-4.0 * math.e * (n - 1) * epsilon * epsilon / t))


def epsilon_for_level(n: int, t: float, level: float) -> float:
    """使 concentration_bound(n, t, ε) = level 的 ε"""
    require(0.0 < level < 1.0 and n >= 2, f"level 必须在 (0,1): {level}")
    return math.sqrt(t * math.log(2.0 * n / level) / (4.0 * math.e * (n - 1)))


def run_test(cloud: PointCloud, config: TestConfig, v: ProbeDirection,
             independent_selection: bool = True, threads: int = 1) -> TestReport:
    """
    在 B_radius(x0) 内的样本上计算 T，与 δ 比较

    v 应在与 cloud 不相交的子样本上选出；调用方通过 independent_selection 声明，写入报告
    """
    points = cloud.points
    n = points.shape[0]
    x0 = config.x0 if config.x0 is not None else np.zeros(points.shape[1])
    in_ball = np.linalg.norm(points - x0[None, :], axis=1) <= config.radius
    n_in_ball = int(np.sum(in_ball))
    if n_in_ball == 0:
        raise PreconditionError(f"B_{config.radius}(x0) 内没有样本", inequality="n_in_ball >= 1")
    t = config.t_override if config.t_override is not None else bandwidth_for_test(n, config.alpha)
    ball = points[in_ball]
    screen = np.abs(graph_laplacian_apply_many(points, ball, v, t, threads=threads))
    # 分块求和只用来筛选；最大值附近的候选用 fsum 重算，T 与样本顺序无关
    margin = HYPTEST_CFG["refine_margin"] * max(float(np.max(screen)), 1.0)
    near = np.flatnonzero(screen >= np.max(screen) - margin)
    T = max(abs(graph_laplacian_apply(points, ball[i], v, t)) for i in near)
    delta = threshold_delta(n, t, config.alpha)
    return TestReport(T, delta, t, n, n_in_ball, T > delta, v, config.alpha, independent_selection,
                      extra={"n_refined": int(near.size)})


def general_threshold(n: int, t: float, alpha: float, error: float) -> float:
    """(L,R)-正则零假设下放大的阈值 δ + sup|L_tⁱf|（error 由 theory.error_bound 给出）"""
    return threshold_delta(n, t, alpha) + error


def power_conditions_check(t: float, d: int, v_n: float, theta1: float) -> Dict[str, Any]:
    """
    功效定理对 n 的两条要求，逐条给出两边取值

        t((d+1)log(1/t) + log(2/(π^d v_n²))) ≤ 2(1 − sin²θ₁)
        t ≤ 1/(d/2 + log(16²e²/(π^d v_n² sin²θ₁)))
    """
    require(t > 0.0 and d >= 1, f"参数非法: t={t}, d={d}")
    require(abs(v_n) > 0.0, "|v_n| 必须为正", "|v_n| > 0")
    require(0.0 < theta1 <= math.pi / 2 + 1e-15, f"θ₁ 必须在 (0, π/2]: {theta1}", "0 < theta1 <= pi/2")
    s2 = math.sin(theta1) ** 2
    pid = math.pi ** d
    lhs1 = t * ((d + 1) * math.log(1.0 / t) + math.log(2.0 / (pid * v_n * v_n)))
    rhs1 = 2.0 * (1.0 - s2)
    rhs2 = 1.0 / (d / 2.0 + math.log(256.0 * math.e ** 2 / (pid * v_n * v_n * s2)))
    first = {"lhs": lhs1, "rhs": rhs1, "ok": lhs1 <= rhs1}
    second = {"lhs": t, "rhs": rhs2, "ok": t <= rhs2}
    return {"first": first, "second": second, "satisfied": first["ok"] and second["ok"]}


def required_sample_size(d: int, v_n: float, theta1: float, alpha: float = 0.05,
                         n_max: float = 1e300) -> float:
    """
    t = t(n,α) 时满足两条功效条件的最小 n（连续值）

    t(n,α) 对 n 单调递减，两条条件在 t 足够小时成立，对 log n 二分
    """
    def ok(log_n: float) -> bool:
        n = math.exp(log_n)
        return power_conditions_check(power_bandwidth(n, alpha), d, v_n, theta1)["satisfied"]

    lo = math.log(64.0)
    hi = math.log(n_max)
    if ok(lo):
        return math.exp(lo)
    if not ok(hi):
        raise ConvergenceError(f"n ≤ {n_max:.3g} 内无法满足功效条件", d=d, v_n=v_n, theta1=theta1)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-12:
            break
    return math.exp(hi)


def lambert_sample_bounds(n: int, alpha: float, d: int, v_n: float, theta1: float,
                          t: Optional[float] = None, density: float = 1.0) -> Dict[str, float]:
    """
    功效证明中 |L_t¹f| 超过阈值的样本距离区间

    记 G(u) = u e^{−u²}，C = pπ^{d/2}|v_n|/2，ρ = 2δ²/(t^{d+1}C²)，则
        inner = √(−t W₀(−ρ))/(√2 sinθ₁)，outer = √(−t W₋₁(−ρ))/(√2 sinθ₁)
    同时给出由 −W₀(−ρ) ≤ eρ、−W₋₁(−ρ) ≥ log(1/ρ) 得到的松弛值
    """
    t = power_bandwidth(n, alpha) if t is None else t
    delta = threshold_delta(n, t, alpha)
    C = density * math.pi ** (d / 2.0) * abs(v_n) / 2.0
    require(C > 0.0, "|v_n| 必须为正", "|v_n| > 0")
    s = math.sin(theta1)
    require(s > 0.0, f"θ₁ 必须为正: {theta1}", "theta1 > 0")
    rho = 2.0 * delta * delta / (t ** (d + 1) * C * C)
    if rho > math.exp(-1.0):
        raise PreconditionError(f"信号峰值不超过阈值：ρ={rho:.4g} > 1/e", inequality="rho <= 1/e", rho=rho)
    root = math.sqrt(2.0) * s
    return {
        "t": t, "delta": delta, "rho": rho,
        "inner": math.sqrt(-t * lambert_w0(rho)) / root,
        "outer": math.sqrt(-t * lambert_wm1(rho)) / root,
        "inner_relaxed": math.sqrt(t * math.e * rho) / root,
        "outer_relaxed": math.sqrt(t * math.log(1.0 / rho)) / root,
    }


def ball_mass(scene: Scene, x0: np.ndarray, radius: float) -> float:
    """均匀分布下 ℙ(X ∈ B_radius(x0))；要求经过 x0 的平坦片都完整包含该球"""
    x0 = np.asarray(x0, dtype=float)
    total = sum(p.weight * p.area for p in scene.pieces)
    inside = 0.0
    for piece in scene.pieces:
        if float(piece.residual(x0)[0]) > 1e-10:
            continue
        require(piece.kind == "flat", "球内质量只对平坦片解析计算")
        u = piece.chart(x0)[0]
        require(bool(np.all(u - radius >= piece.lower) and np.all(u + radius <= piece.upper)),
                f"B_{radius}(x0) 超出片的坐标盒")
        inside += piece.weight * unit_ball_volume(piece.d) * radius ** piece.d
    return inside / total


def power_lower_bound(n: int, alpha: float, scene: Scene, x0: Optional[np.ndarray] = None,
                      R: float = 2.0) -> float:
    """ℙ(T > δ | H₁′) ≥ 1 − α − ℙ(X ∉ B_{R/3}(x0))^n"""
    require(0.0 < alpha < 1.0, f"检验水平必须在 (0,1): alpha={alpha}", "0 < alpha < 1")
    require(len(scene.pieces) >= 2, "功效下界需要相交场景")
    x0 = scene.x0 if x0 is None else x0
    mass = ball_mass(scene, x0, R / 3.0)
    return 1.0 - alpha - (1.0 - mass) ** n


def make_hypothesis_scene(kind: str, theta: Optional[float] = None) -> Scene:
    """H0：ℝ³ 中半宽 2.5 的平面；H1：交角 θ 的两片平面，裁剪到 [−1.7, 1.7]³"""
    N, d = HYPTEST_CFG["N"], HYPTEST_CFG["d"]
    if kind == "H0":
        return make_plane_scene(N, d, HYPTEST_CFG["plane_half_width"])
    require(kind == "H1" and theta is not None, f"未知的场景类型: {kind}")
    return make_intersection_scene(N, d, theta, ambient_cube=HYPTEST_CFG["cube_half_width"])


def run_trial(scene: Scene, n: int, seed_seq: np.random.SeedSequence,
              config: Optional[TestConfig] = None) -> Dict[str, Any]:
    """
    一次检验：独立抽取检验样本与 20% 的选方向样本，在后者上选 v，在前者上检验
    """
    config = config or TestConfig(x0=scene.x0)
    s_test, s_select, s_dir = seed_seq.spawn(3)
    t = config.t_override if config.t_override is not None else bandwidth_for_test(n, config.alpha)
    test_cloud = sample_uniform(scene, n_total=n, seed=s_test)
    n_select = max(1, int(math.ceil(HYPTEST_CFG["select_fraction"] * n)))
    select_cloud = sample_uniform(scene, n_total=n_select, seed=s_select)
    x0 = config.x0 if config.x0 is not None else np.zeros(scene.N)
    sel_pts = select_cloud.points
    sel_ball = sel_pts[np.linalg.norm(sel_pts - x0[None, :], axis=1) <= config.radius]
    v = select_direction(sel_pts, sel_ball, t, HYPTEST_CFG["n_candidates"], seed=s_dir)
    report = run_test(test_cloud, TestConfig(config.alpha, x0, config.radius, t), v)
    return report.to_dict()


def _column_name(kind: str, theta: Optional[float]) -> str:
    return "H0" if kind == "H0" else f"H1_theta_{theta:.6f}"


def run_experiment_table(sample_sizes: Optional[Sequence[int]] = None,
                         angles: Optional[Sequence[float]] = None,
                         trials: Optional[int] = None, seed: int = 0, threads: int = 1,
                         alpha: Optional[float] = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    拒绝率表：行 = 样本量，列 = H0 与各角度的 H1

    每个 (样本量, 列, trial) 的随机流由 SeedSequence([seed, trial, n, 列号]) 派生，
    与调度顺序无关。返回 (拒绝率表, 逐次记录)
    """
    sample_sizes = list(sample_sizes or HYPTEST_CFG["sample_sizes"])
    angles = list(angles or HYPTEST_CFG["angles"])
    trials = trials or HYPTEST_CFG["trials"]
    alpha = alpha or HYPTEST_CFG["alpha"]
    columns: List[Tuple[str, Optional[float]]] = [("H0", None)] + [("H1", a) for a in angles]
    scenes = [make_hypothesis_scene(k, a) for k, a in columns]

    jobs = []
    for n in sample_sizes:
        for c, (kind, theta) in enumerate(columns):
            for trial in range(trials):
                jobs.append((n, c, trial))
    rows: List[Optional[Dict[str, Any]]] = [None] * len(jobs)

    def work(i: int) -> None:
        n, c, trial = jobs[i]
        kind, theta = columns[c]
        ss = np.random.SeedSequence([seed, trial, n, c])
        config = TestConfig(alpha=alpha, x0=scenes[c].x0)
        row = run_trial(scenes[c], n, ss, config)
        row.update({"n": n, "column": _column_name(kind, theta), "trial": trial})
        rows[i] = row

    with progress(total=len(jobs), desc="假设检验实验", unit="次") as bar:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for _ in pool.map(work, range(len(jobs))):
                    bar.update(1)
        else:
            for i in range(len(jobs)):
                work(i)
                bar.update(1)

    log = pd.DataFrame(rows)
    log = log.drop(columns=["v"]).sort_values(["n", "column", "trial"], kind="mergesort")
    table = (log.groupby(["n", "column"], sort=True)["reject"].mean()
             .unstack("column").reindex(columns=[_column_name(k, a) for k, a in columns]))
    table = table.reset_index()
    table.columns.name = None
    echo(f"拒绝率表完成：{len(sample_sizes)} 个样本量 × {len(columns)} 列 × {trials} 次", "ok")
    return table, log.reset_index(drop=True)


def run_concentration_experiment(n: Optional[int] = None, trials: Optional[int] = None,
                                 levels: Optional[Sequence[float]] = None, seed: int = 0,
                                 threads: int = 1, alpha: Optional[float] = None,
                                 t: Optional[float] = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    在 H0 平面上核对集中不等式

    每次抽 n 个样本，在全部样本点上计算
        D = max_m |L_{n,t}f(X_m) − ((n−1)/n)L_tf(X_m)|
    其中 L_tf 用平坦片的闭式期望算子。对每个 level 取 ε = epsilon_for_level(n, t, level)，
    统计 D > ε 的经验频率，与界 concentration_bound(n, t, ε) 对比。
    返回 (每个 level 一行的汇总表, 每次 trial 的 D)
    """
    n = n or HYPTEST_CFG["concentration_n"]
    trials = trials or HYPTEST_CFG["trials"]
    levels = list(levels or HYPTEST_CFG["concentration_levels"])
    alpha = alpha or HYPTEST_CFG["alpha"]
    t = power_bandwidth(n, alpha) if t is None else t
    require(t > 0.0, f"带宽必须为正: t={t}", "t > 0")
    scene = make_hypothesis_scene("H0")
    v = ProbeDirection.normalized(HYPTEST_CFG["concentration_v"])
    deviations = np.empty(trials)

    def work(trial: int) -> None:
        cloud = sample_uniform(scene, n_total=n, seed=np.random.SeedSequence([seed, trial, n]))
        empirical = graph_laplacian_apply_many(cloud.points, cloud.points, v, t)
        expected = (n - 1) / n * expected_laplacian_flat_scene(scene, cloud.points, v, t)
        deviations[trial] = float(np.max(np.abs(empirical - expected)))

    with progress(total=trials, desc="集中不等式", unit="次") as bar:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for _ in pool.map(work, range(trials)):
                    bar.update(1)
        else:
            for trial in range(trials):
                work(trial)
                bar.update(1)

    rows = []
    for level in levels:
        eps = epsilon_for_level(n, t, level)
        bound = concentration_bound(n, t, eps)
        empirical = float(np.mean(deviations > eps))
        rows.append({"level": level, "epsilon": eps, "bound": bound, "empirical": empirical,
                     "ok": empirical <= bound})
    table = pd.DataFrame(rows)
    log = pd.DataFrame({"trial": np.arange(trials), "n": n, "t": t, "max_deviation": deviations})
    echo(f"集中不等式：n={n}, t={t:.4g}, {trials} 次，最大偏差 {deviations.max():.3e}",
         "ok" if bool(table["ok"].all()) else "warn")
    return table, log
