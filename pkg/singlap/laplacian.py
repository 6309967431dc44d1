"""
图拉普拉斯算子

- 经验算子 L_{n,t}f(x) = (1/n) Σⱼ K_t(x,Xⱼ)(f(x) − f(Xⱼ))，K_t(x,y) = exp(−‖x−y‖²/t)
- 限制在单片上的期望算子 L_tⁱ（坐标盒上的张量 Gauss-Legendre 求积，含体积形式）
- 平坦片的闭式期望算子（erf），用作独立的对照
- 带噪声样本的算子及其期望

不做 t^{−(d+1)/2} 归一化：维数 d 事先未知。
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import erf, erfc

from .config import LAPLACIAN_CFG, NOISE_CFG, QUAD_CFG
from .errors import PreconditionError, require
from .io_utils import progress, read_csv, read_json, write_csv, write_json
from .manifold_gen import ManifoldPiece, PointCloud, Scene
from .quadrature import tensor_rule


@dataclass(frozen=True)
class KernelParams:
    t: float
    sigma: float = 0.0

    def __post_init__(self):
        require(self.t > 0.0, f"带宽必须为正: t={self.t}", "t > 0")
        require(self.sigma >= 0.0, f"噪声标准差不能为负: sigma={self.sigma}", "sigma ≥ 0")


@dataclass
class ProbeDirection:
    v: np.ndarray
    score: Optional[float] = None

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float).ravel()
        norm = float(np.linalg.norm(self.v))
        require(abs(norm - 1.0) <= 1e-12, f"探测方向必须是单位向量: ‖v‖={norm!r}", "‖v‖ = 1")

    @classmethod
    def normalized(cls, v: Sequence[float]) -> "ProbeDirection":
        v = np.asarray(v, dtype=float)
        norm = np.linalg.norm(v)
        require(norm > 0.0, "零向量不能作为探测方向")
        return cls(v / norm)

    @classmethod
    def random(cls, N: int, rng: np.random.Generator) -> "ProbeDirection":
        return cls.normalized(rng.normal(size=N))

    def __neg__(self) -> "ProbeDirection":
        return ProbeDirection(-self.v, self.score)


@dataclass
class LaplacianResponse:
    eval_points: np.ndarray
    values: np.ndarray
    params: KernelParams
    direction: ProbeDirection
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.eval_points = np.atleast_2d(np.asarray(self.eval_points, dtype=float))
        self.values = np.asarray(self.values, dtype=float).ravel()
        require(self.eval_points.shape[0] == self.values.shape[0], "评估点数与取值个数不一致")
        require(bool(np.all(np.isfinite(self.values))), "响应中出现非有限值")

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.eval_points, columns=[f"x{i}" for i in range(self.eval_points.shape[1])])
        df["value"] = self.values
        return df

    def save(self, path: str) -> List[str]:
        """CSV（坐标列 + value）与 JSON 元数据（t、v、seed、scene hash）"""
        csv_path = write_csv(self.to_frame(), path)
        meta = dict(self.meta)
        meta.update({"t": self.params.t, "sigma": self.params.sigma, "v": self.direction.v.tolist()})
        json_path = write_json(meta, path[:-4] + ".json" if path.endswith(".csv") else path + ".json")
        return [csv_path, json_path]

    @classmethod
    def load(cls, path: str) -> "LaplacianResponse":
        df = read_csv(path)
        meta = read_json(path[:-4] + ".json" if path.endswith(".csv") else path + ".json")
        cols = [c for c in df.columns if c.startswith("x")]
        params = KernelParams(meta.pop("t"), meta.pop("sigma", 0.0))
        direction = ProbeDirection(meta.pop("v"))
        return cls(df[cols].to_numpy(dtype=float), df["value"].to_numpy(dtype=float), params, direction, meta)


@dataclass
class OracleResult:
    value: float
    error: float
    flagged: bool
    n_nodes: int

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "error": self.error, "flagged": self.flagged, "n_nodes": self.n_nodes}


def kernel(x: np.ndarray, y: np.ndarray, t: float) -> float:
    """K_t(x,y) = exp(−‖x−y‖²/t)"""
    require(t > 0.0, f"带宽必须为正: t={t}", "t > 0")
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return math.exp(-float(np.dot(diff, diff)) / t)


def _points_of(cloud) -> np.ndarray:
    return cloud.points if isinstance(cloud, PointCloud) else np.atleast_2d(np.asarray(cloud, dtype=float))


def graph_laplacian_apply(cloud, x: np.ndarray, v: np.ndarray, t: float) -> float:
    """
    单点求值 L_{n,t}f(x)，f(x) = v·x

    逐项求和使用 math.fsum（精确舍入），结果与样本顺序无关
    """
    points = _points_of(cloud)
    if points.shape[0] == 0:
        raise PreconditionError("点云为空，无法计算图拉普拉斯")
    require(t > 0.0, f"带宽必须为正: t={t}", "t > 0")
    v = _unit(v)
    x = np.asarray(x, dtype=float).ravel()
    diff = x[None, :] - points
    # 逐行归约：每一项只依赖 (x, Xⱼ)，与行的位置无关
    weights = np.exp(-(diff * diff).sum(axis=1) / t)
    terms = weights * (diff * v[None, :]).sum(axis=1)
    return math.fsum(terms.tolist()) / points.shape[0]


def _unit(v) -> np.ndarray:
    if isinstance(v, ProbeDirection):
        return v.v
    v = np.asarray(v, dtype=float).ravel()
    norm = float(np.linalg.norm(v))
    require(abs(norm - 1.0) <= 1e-12, f"探测方向必须是单位向量: ‖v‖={norm!r}", "‖v‖ = 1")
    return v


def _field_block(y: np.ndarray, xc: np.ndarray, sq_x: np.ndarray, t: float, col_block: int) -> np.ndarray:
    """(1/n)Σⱼ K_t(y,Xⱼ)(y − Xⱼ)，按列块做 Neumaier 补偿累加"""
    total = np.zeros_like(y)
    comp = np.zeros_like(y)
    sq_y = np.einsum("ij,ij->i", y, y)
    for start in range(0, xc.shape[0], col_block):
        xb = xc[start:start + col_block]
        sq = sq_y[:, None] + sq_x[None, start:start + col_block] - 2.0 * (y @ xb.T)
        np.maximum(sq, 0.0, out=sq)
        w = np.exp(-sq / t)
        part = y * w.sum(axis=1)[:, None] - w @ xb
        nxt = total + part
        big = np.abs(total) >= np.abs(part)
        comp += np.where(big, (total - nxt) + part, (part - nxt) + total)
        total = nxt
    return (total + comp) / xc.shape[0]


def kernel_field(cloud, eval_points: np.ndarray, t: float, chunk: Optional[int] = None,
                 threads: int = 1) -> np.ndarray:
    """
    向量场 g(x) = (1/n)Σⱼ K_t(x,Xⱼ)(x − Xⱼ)，形状 (m, N)

    L_{n,t}f(x) = v·g(x) 对 v 线性，同一组评估点上可一次求出所有方向的响应。
    评估点分块，各块写入各自的输出槽位，可用线程池并行。
    """
    points = _points_of(cloud)
    if points.shape[0] == 0:
        raise PreconditionError("点云为空，无法计算图拉普拉斯")
    require(t > 0.0, f"带宽必须为正: t={t}", "t > 0")
    chunk = chunk or LAPLACIAN_CFG["chunk"]
    ev = np.atleast_2d(np.asarray(eval_points, dtype=float))
    # 平移到点云中心以减小 |x|² + |y|² − 2x·y 的抵消误差
    center = points.mean(axis=0)
    xc = points - center
    yc = ev - center
    sq_x = np.einsum("ij,ij->i", xc, xc)
    out = np.empty_like(yc)
    col_block = max(1, (1 << 22) // max(min(chunk, len(yc)), 1))
    slices = [slice(s, min(s + chunk, len(yc))) for s in range(0, len(yc), chunk)]

    def work(sl: slice) -> None:
        out[sl] = _field_block(yc[sl], xc, sq_x, t, col_block)

    if threads > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, slices))
    else:
        for sl in slices:
            work(sl)
    return out


def graph_laplacian_apply_many(cloud, eval_points: np.ndarray, v, t: float,
                               chunk: Optional[int] = None, threads: int = 1) -> np.ndarray:
    """批量求值 L_{n,t}f 于多个评估点"""
    return kernel_field(cloud, eval_points, t, chunk, threads) @ _unit(v)


def response_at(cloud, eval_points: np.ndarray, direction: ProbeDirection, t: float,
                meta: Optional[Dict[str, Any]] = None, threads: int = 1) -> LaplacianResponse:
    values = graph_laplacian_apply_many(cloud, eval_points, direction, t, threads=threads)
    return LaplacianResponse(eval_points, values, KernelParams(t), direction, meta or {})


def graph_laplacian_matrix(cloud, t: float):
    """
    稠密权重矩阵 W（Wᵢⱼ = K_t(Xᵢ,Xⱼ)/n，含对角线）与度向量 D（行和）

    L_{n,t} = D − W；n 超过 LAPLACIAN_CFG["matrix_cap"] 时拒绝构造
    """
    points = _points_of(cloud)
    n = points.shape[0]
    require(n >= 1, "点云为空", "n ≥ 1")
    require(t > 0.0, f"带宽必须为正: t={t}", "t > 0")
    cap = LAPLACIAN_CFG["matrix_cap"]
    require(n <= cap, f"n={n} 超过稠密矩阵上限 {cap}，请改用逐点求值", f"n ≤ {cap}")
    diff = points[:, None, :] - points[None, :, :]
    weights = np.exp(-np.einsum("ijk,ijk->ij", diff, diff) / t) / n
    degrees = weights.sum(axis=1)
    return weights, degrees


def laplacian_matrix_apply(weights: np.ndarray, degrees: np.ndarray, f: np.ndarray) -> np.ndarray:
    """(D − W) f"""
    return degrees * f - weights @ f


def _window_box(piece: ManifoldPiece, x: np.ndarray, t: float, window: float):
    u_x = piece.chart(x)[0]
    half = window * math.sqrt(t)
    lower = np.maximum(piece.lower, u_x - half)
    upper = np.minimum(piece.upper, u_x + half)
    return lower, upper


def _piece_rule(piece: ManifoldPiece, x: np.ndarray, t: float, resolution: int):
    """窗口截断后的求积节点（环境坐标）与 权重×密度×体积形式"""
    lower, upper = _window_box(piece, x, t, QUAD_CFG["window"])
    if np.any(lower >= upper):
        return np.zeros((0, piece.N)), np.zeros(0)
    nodes, weights = tensor_rule(lower, upper, resolution, QUAD_CFG["panel_order"])
    return piece.embed(nodes), weights * piece.volume_factor(nodes) * piece.density


def _quad_sum(x: np.ndarray, v: np.ndarray, t: float, ys: np.ndarray, ws: np.ndarray) -> float:
    if ys.shape[0] == 0:
        return 0.0
    diff = x[None, :] - ys
    integrand = np.exp(-np.einsum("ij,ij->i", diff, diff) / t) * (diff @ v)
    return math.fsum((ws * integrand).tolist())


def _oracle_flag(value: float, error: float, t: float, d: int, density: float, tol: float) -> bool:
    return error > tol * _oracle_scale(value, t, d, density)


def _oracle_scale(value: float, t: float, d: int, density: float) -> float:
    return max(abs(value), t ** ((d + 1) / 2.0) * density)


def _richardson(values: List[float], panel_order: int):
    """
    逐级翻倍分辨率的结果序列 → (外推值, 误差估计)

    只有两级时误差取两级之差；三级及以上按最后两次差值之比估计收敛阶 p
    （截断到 [1, 2·panel_order]），误差估计为 |Δ|/(2^p − 1)
    """
    last = values[-1] - values[-2]
    if len(values) == 2 or last == 0.0:
        return values[-1], abs(last)
    prev = values[-2] - values[-3]
    ratio = abs(prev) / abs(last)
    p = math.log2(ratio) if ratio > 0.0 else 1.0
    p = min(max(p, 1.0), 2.0 * panel_order)
    correction = last / (2.0 ** p - 1.0)
    return values[-1] + correction, abs(correction)


def _adaptive_quadrature(evaluate, res: int, tol: float, t: float, d: int, density: float) -> OracleResult:
    """从分辨率 res 起逐级翻倍，直到 Richardson 误差估计 ≤ tol·尺度或达到翻倍上限"""
    values, n_nodes = [], 0
    for level in range(QUAD_CFG["max_refinements"] + 2):
        value, n_nodes = evaluate(res * 2 ** level)
        values.append(value)
        if len(values) < 2:
            continue
        estimate, error = _richardson(values, QUAD_CFG["panel_order"])
        if not _oracle_flag(estimate, error, t, d, density, tol):
            return OracleResult(estimate, error, False, n_nodes)
    return OracleResult(estimate, error, True, n_nodes)


def expected_laplacian_oracle(scene: Scene, piece_index: int, x: np.ndarray, v, t: float,
                              quad_resolution: Optional[int] = None,
                              tol: Optional[float] = None) -> OracleResult:
    """
    限制期望算子 L_tⁱf(x) = ∫_{Ωᵢ} K_t(x,y)(f(x) − f(y)) p dy

    在坐标盒上用复合张量 Gauss-Legendre 积分 f∘α · V(Dα)；积分域截断到
    |u − u_x|∞ ≤ 12√t（截断尾部 ≤ e^{−144}）。分辨率从 quad_resolution 起逐级翻倍，
    误差由 Richardson 外推估计；翻倍 QUAD_CFG["max_refinements"] 次仍超出 tol 时结果被标记。
    x 可以不在片上，不做投影。
    """
    piece = scene.pieces[piece_index]
    res = quad_resolution or QUAD_CFG["resolution"]
    require(res >= QUAD_CFG["min_resolution"],
            f"求积分辨率至少为 {QUAD_CFG['min_resolution']}: {res}", "quad_resolution ≥ 64")
    require(t > 0.0, f"带宽必须为正: t={t}", "t > 0")
    tol = QUAD_CFG["tol"] if tol is None else tol
    v = _unit(v)
    x = np.asarray(x, dtype=float).ravel()

    def evaluate(r: int):
        ys, ws = _piece_rule(piece, x, t, r)
        return _quad_sum(x, v, t, ys, ws), len(ws)

    return _adaptive_quadrature(evaluate, res, tol, t, piece.d, piece.density)


def expected_laplacian_full(scene: Scene, x: np.ndarray, v, t: float,
                            quad_resolution: Optional[int] = None,
                            tol: Optional[float] = None) -> OracleResult:
    """
    全算子 L_t f(x)：把所有片的求积节点叠在一起做一次求和
    （与逐片 expected_laplacian_oracle 相加是两条独立路径）
    """
    res = quad_resolution or QUAD_CFG["resolution"]
    require(res >= QUAD_CFG["min_resolution"],
            f"求积分辨率至少为 {QUAD_CFG['min_resolution']}: {res}", "quad_resolution ≥ 64")
    tol = QUAD_CFG["tol"] if tol is None else tol
    v = _unit(v)
    x = np.asarray(x, dtype=float).ravel()

    def evaluate(r: int):
        rules = [_piece_rule(p, x, t, r) for p in scene.pieces]
        ys = np.vstack([ru[0] for ru in rules])
        ws = np.concatenate([ru[1] for ru in rules])
        return _quad_sum(x, v, t, ys, ws), len(ws)

    density = max(p.density for p in scene.pieces)
    return _adaptive_quadrature(evaluate, res, tol, t, scene.d, density)


def _erf_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """erf(b) − erf(a)，两端同号时改用 erfc 避免抵消"""
    pos = a > 0
    neg = b < 0
    mid = erf(b) - erf(a)
    return np.where(pos, erfc(a) - erfc(b), np.where(neg, erfc(-b) - erfc(-a), mid))


def expected_laplacian_flat(piece: ManifoldPiece, eval_points: np.ndarray, v, t: float) -> np.ndarray:
    """
    平坦片坐标盒上的闭式期望算子（逐点向量化）

    记 x = anchor + F u_x + h，则
        L_tⁱf(x) = p e^{−|h|²/t} [ v·h ∏ I0_k + Σ_k (Fᵀv)_k I1_k ∏_{j≠k} I0_j ]
    其中 I0_k = ∫ e^{−(s−c)²/t} ds，I1_k = ∫ (c − s) e^{−(s−c)²/t} ds，积分区间为盒子第 k 维。
    """
    require(piece.kind == "flat", "闭式期望算子只适用于平坦片")
    v = _unit(v)
    x = np.atleast_2d(np.asarray(eval_points, dtype=float))
    u = piece.chart(x)
    h = x - piece.embed(u)
    sqrt_t = math.sqrt(t)
    a = (piece.lower[None, :] - u) / sqrt_t
    b = (piece.upper[None, :] - u) / sqrt_t
    i0 = 0.5 * math.sqrt(math.pi * t) * _erf_diff(a, b)
    i1 = 0.5 * t * (np.exp(-b * b) - np.exp(-a * a))
    w = piece.frame.T @ v
    prod_all = np.prod(i0, axis=1)
    tangential = np.zeros(x.shape[0])
    for k in range(piece.d):
        others = np.prod(np.delete(i0, k, axis=1), axis=1)
        tangential += w[k] * i1[:, k] * others
    normal_part = (h @ v) * prod_all
    decay = np.exp(-np.einsum("ij,ij->i", h, h) / t)
    return piece.density * decay * (normal_part + tangential)


def expected_laplacian_flat_scene(scene: Scene, eval_points: np.ndarray, v, t: float) -> np.ndarray:
    """全平坦场景的闭式 L_t = Σᵢ L_tⁱ"""
    total = np.zeros(np.atleast_2d(eval_points).shape[0])
    for piece in scene.pieces:
        total += expected_laplacian_flat(piece, eval_points, v, t)
    return total


def noisy_laplacian_apply(cloud, noise_draws: np.ndarray, x: np.ndarray, v, t: float) -> float:
    """带噪声样本的经验算子 L_{n,t,ε}f(x)，一次噪声实现"""
    points = _points_of(cloud)
    noise_draws = np.asarray(noise_draws, dtype=float)
    if noise_draws.shape != points.shape:
        raise PreconditionError(f"噪声形状 {noise_draws.shape} 与点云形状 {points.shape} 不一致")
    return graph_laplacian_apply(points + noise_draws, x, v, t)


NOISE_FACTORS = {
    "proof": 1.0,       # (t/(2σ²+t))^{N/2+1}
    "statement": 2.0,   # 2(t/(2σ²+t))^{N/2+1}
}
NOISE_FACTOR_DEFAULT = "proof"


def noise_expectation(cloud, x: np.ndarray, v, t: float, sigma: float,
                      factor: str = NOISE_FACTOR_DEFAULT) -> float:
    """
    噪声期望 E_ε L_{n,t,ε}f(x) = c·(t/(t+2σ²))^{N/2+1}·L_{n,t+2σ²}f(x)

    c 取 NOISE_FACTORS[factor]；noise_check 的 Monte-Carlo 选出 c = 1
    """
    points = _points_of(cloud)
    N = points.shape[1]
    t_eff = t + 2.0 * sigma * sigma
    scale = NOISE_FACTORS[factor] * (t / t_eff) ** (N / 2.0 + 1.0)
    return scale * graph_laplacian_apply(points, x, v, t_eff)


@dataclass
class NoiseCheckReport:
    means: np.ndarray
    std_errors: np.ndarray
    predictions: Dict[str, np.ndarray]
    z_scores: Dict[str, np.ndarray]
    selected: Optional[str]
    draws: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "draws": self.draws,
            "selected": self.selected,
            "max_abs_z": {k: float(np.max(np.abs(z))) for k, z in self.z_scores.items()},
            "means": self.means.tolist(),
            "std_errors": self.std_errors.tolist(),
            "predictions": {k: p.tolist() for k, p in self.predictions.items()},
        }


def noise_check(cloud, eval_points: np.ndarray, v, t: float, sigma: float,
                draws: Optional[int] = None, seed: Optional[int] = None) -> NoiseCheckReport:
    """
    噪声期望常数的 Monte-Carlo 判定

    对每个评估点估计 E_ε L_{n,t,ε}f(x) 的均值与标准误，与各候选常数的闭式预测比较；
    某候选在所有点上 |z| ≤ accept_z、其余候选至少一点 |z| > reject_z 时判为选中
    """
    points = _points_of(cloud)
    v = _unit(v)
    ev = np.atleast_2d(np.asarray(eval_points, dtype=float))
    draws = draws or NOISE_CFG["draws"]
    chunk = NOISE_CFG["draw_chunk"]
    rng = np.random.default_rng(seed)
    n, N = points.shape
    total = np.zeros(len(ev))
    total_sq = np.zeros(len(ev))
    done = 0
    with progress(total=draws, desc="噪声 Monte-Carlo", unit="次") as bar:
        while done < draws:
            c = min(chunk, draws - done)
            noisy = points[None, :, :] + rng.normal(0.0, sigma, size=(c, n, N))
            for i, x in enumerate(ev):
                diff = x[None, None, :] - noisy
                w = np.exp(-np.einsum("cnk,cnk->cn", diff, diff) / t)
                vals = np.einsum("cn,cn->c", w, diff @ v) / n
                total[i] += vals.sum()
                total_sq[i] += np.dot(vals, vals)
            done += c
            bar.update(c)
    means = total / draws
    var = np.maximum(total_sq / draws - means ** 2, 0.0) * draws / max(draws - 1, 1)
    se = np.sqrt(var / draws)
    predictions, z_scores = {}, {}
    for name in NOISE_FACTORS:
        pred = np.array([noise_expectation(points, x, v, t, sigma, name) for x in ev])
        predictions[name] = pred
        z_scores[name] = (means - pred) / np.where(se > 0, se, np.inf)
    accepted = [k for k, z in z_scores.items() if np.max(np.abs(z)) <= NOISE_CFG["accept_z"]]
    selected = None
    if len(accepted) == 1:
        others = [k for k in z_scores if k != accepted[0]]
        if all(np.max(np.abs(z_scores[k])) > NOISE_CFG["reject_z"] for k in others):
            selected = accepted[0]
    return NoiseCheckReport(means, se, predictions, z_scores, selected, draws)


def select_direction(cloud_subsample, candidate_points: np.ndarray, t: float,
                     n_candidates: int = 64, seed: Optional[int] = None,
                     candidates: Optional[np.ndarray] = None) -> ProbeDirection:
    """
    在 n_candidates 个随机单位方向中选出使 max_m |L_{n,t}f(X_m)| 最大的 v

    评估在与检验样本独立的子样本上进行；并列时取第一个
    """
    points = _points_of(cloud_subsample)
    ev = np.atleast_2d(np.asarray(candidate_points, dtype=float))
    if candidates is None:
        require(n_candidates >= 1, "候选方向集合为空", "n_candidates ≥ 1")
        rng = np.random.default_rng(seed)
        candidates = rng.normal(size=(n_candidates, points.shape[1]))
        candidates /= np.linalg.norm(candidates, axis=1, keepdims=True)
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[0] == 0:
        raise PreconditionError("候选方向集合为空")
    if ev.shape[0] == 0:
        raise PreconditionError("没有用于选择方向的评估点")
    g = kernel_field(points, ev, t)
    scores = np.max(np.abs(g @ candidates.T), axis=0)
    best = int(np.argmax(scores))
    return ProbeDirection(candidates[best], float(scores[best]))
