"""
合成流形场景：平坦片与曲面片（切平面上的高度函数图像）、交角可控的相交场景、
带边界的半空间场景；均匀采样、探测曲线 Γ 与各向同性高斯噪声。

所有片都以坐标盒 [lower, upper] ⊂ ℝ^d 为参数域，嵌入映射为
    α(u) = anchor + F u + g(u) n
其中 F 为 N×d 正交标架，n 为与 F 正交的单位法向，g 为高度函数（平坦片 g ≡ 0）。
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .config import QUAD_CFG
from .errors import PreconditionError, require
from .io_utils import params_hash, read_csv, read_json, write_csv, write_json
from .quadrature import tensor_rule

PROFILES = ("quadratic", "sine")
ON_PIECE_TOL = 1e-10


@dataclass
class ManifoldPiece:
    kind: str                       # "flat" | "curved"
    anchor: np.ndarray              # (N,)
    frame: np.ndarray               # (N, d)，列正交
    lower: np.ndarray               # (d,)
    upper: np.ndarray               # (d,)
    normal: Optional[np.ndarray] = None   # (N,)，曲面片的高度方向
    profile: Optional[str] = None         # "quadratic" | "sine"
    L: float = 0.0                        # 认证的曲率常数
    weight: float = 1.0                   # 采样权重，密度 = weight / 面积

    def __post_init__(self):
        self.anchor = np.asarray(self.anchor, dtype=float)
        self.frame = np.asarray(self.frame, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.frame.ndim != 2 or self.frame.shape[0] != self.anchor.shape[0]:
            raise PreconditionError(f"标架形状不匹配: {self.frame.shape}")
        require(self.d <= self.N, f"内在维数不能超过环境维数: d={self.d}, N={self.N}", "d ≤ N")
        gram = self.frame.T @ self.frame
        require(np.max(np.abs(gram - np.eye(self.d))) <= 1e-12, "标架列必须正交归一")
        require(bool(np.all(self.lower <= self.upper)), "坐标盒下界必须不大于上界")
        if self.kind == "curved":
            require(self.normal is not None, "曲面片必须给出高度方向 normal")
            require(self.profile in PROFILES, f"未知的高度函数: {self.profile}")
            require(self.L > 0.0, "曲面片的曲率常数 L 必须为正", "L > 0")
            self.normal = np.asarray(self.normal, dtype=float)
            require(abs(np.linalg.norm(self.normal) - 1.0) <= 1e-12, "normal 必须为单位向量")
            require(np.max(np.abs(self.frame.T @ self.normal)) <= 1e-12, "normal 必须与标架正交")
        elif self.kind != "flat":
            raise PreconditionError(f"未知的片类型: {self.kind}")
        self._area: Optional[float] = None

    @property
    def N(self) -> int:
        return self.anchor.shape[0]

    @property
    def d(self) -> int:
        return self.frame.shape[1]

    @property
    def is_bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def height(self, u: np.ndarray) -> np.ndarray:
        u = np.atleast_2d(u)
        if self.kind == "flat":
            return np.zeros(u.shape[0])
        if self.profile == "quadratic":
            return self.L * np.sum(u * u, axis=1)
        return 2.0 * self.L * (1.0 - np.cos(u[:, 0]))

    def height_grad(self, u: np.ndarray) -> np.ndarray:
        u = np.atleast_2d(u)
        if self.kind == "flat":
            return np.zeros_like(u)
        if self.profile == "quadratic":
            return 2.0 * self.L * u
        grad = np.zeros_like(u)
        grad[:, 0] = 2.0 * self.L * np.sin(u[:, 0])
        return grad

    def volume_factor(self, u: np.ndarray) -> np.ndarray:
        """体积形式 V(Dα) = √(1 + |∇g|²)"""
        grad = self.height_grad(u)
        return np.sqrt(1.0 + np.sum(grad * grad, axis=1))

    def embed(self, u: np.ndarray) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        points = self.anchor[None, :] + u @ self.frame.T
        if self.kind == "curved":
            points = points + self.height(u)[:, None] * self.normal[None, :]
        return points

    def chart(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return (points - self.anchor[None, :]) @ self.frame

    def residual(self, points: np.ndarray) -> np.ndarray:
        """‖p − α(Fᵀ(p − anchor))‖，片上的点为 0"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.linalg.norm(points - self.embed(self.chart(points)), axis=1)

    def tangent_basis(self, u: np.ndarray) -> np.ndarray:
        """各点切空间的正交基，形状 (m, N, d)"""
        u = np.atleast_2d(u)
        jac = np.broadcast_to(self.frame, (u.shape[0], self.N, self.d)).copy()
        if self.kind == "curved":
            jac += self.normal[None, :, None] * self.height_grad(u)[:, None, :]
        q, _ = np.linalg.qr(jac)
        return q

    @property
    def area(self) -> float:
        """|Ωᵢ|，平坦片解析计算，曲面片用张量 Gauss-Legendre 积分体积形式"""
        require(self.is_bounded, "无界坐标盒没有有限面积")
        if self._area is None:
            if self.kind == "flat":
                self._area = float(np.prod(self.upper - self.lower))
            else:
                nodes, weights = tensor_rule(self.lower, self.upper, QUAD_CFG["min_resolution"],
                                             QUAD_CFG["panel_order"])
                self._area = float(np.sum(weights * self.volume_factor(nodes)))
        return self._area

    @property
    def density(self) -> float:
        return self.weight / self.area

    def nearest_boundary(self, u: np.ndarray) -> Dict[str, Any]:
        """
        坐标盒上距 u 最近的面

        返回:
            axis, side(±1)、外法向（环境坐标，平坦片）、有符号距离 K（盒内为负）
            以及该面上的投影点 u_boundary
        """
        u = np.asarray(u, dtype=float).ravel()
        dist_low = u - self.lower
        dist_high = self.upper - u
        dists = np.concatenate([dist_low, dist_high])
        k = int(np.argmin(dists))
        axis = k % self.d
        side = -1.0 if k < self.d else 1.0
        u_b = u.copy()
        u_b[axis] = self.lower[axis] if side < 0 else self.upper[axis]
        return {
            "axis": axis,
            "side": side,
            "outward_normal": side * self.frame[:, axis],
            "K": -float(dists[k]),
            "u_boundary": u_b,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "anchor": self.anchor.tolist(),
            "frame": self.frame.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "normal": None if self.normal is None else self.normal.tolist(),
            "profile": self.profile,
            "L": self.L,
            "weight": self.weight,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ManifoldPiece":
        return cls(**data)


@dataclass
class Scene:
    pieces: List[ManifoldPiece]
    x0: Optional[np.ndarray] = None
    theta: Optional[float] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        require(len(self.pieces) > 0, "场景至少需要一片")
        if self.x0 is not None:
            self.x0 = np.asarray(self.x0, dtype=float)
            for i, piece in enumerate(self.pieces):
                res = float(piece.residual(self.x0)[0])
                require(res <= ON_PIECE_TOL, f"x0 不在第 {i} 片上: 残差 {res:.3e}")

    @property
    def N(self) -> int:
        return self.pieces[0].N

    @property
    def d(self) -> int:
        return self.pieces[0].d

    @property
    def diameter(self) -> float:
        """场景直径的上界：各片坐标盒角点嵌入后的最大两两距离（平坦片精确）"""
        corners = []
        for piece in self.pieces:
            grids = np.meshgrid(*[[lo, hi] for lo, hi in zip(piece.lower, piece.upper)], indexing="ij")
            u = np.stack([g.ravel() for g in grids], axis=1)
            pts = piece.embed(u)
            if piece.kind == "curved":
                # 高度方向上再加上最大高度，保证是上界
                hmax = float(np.max(piece.height(u))) if piece.profile == "quadratic" else 4.0 * piece.L
                pts = np.vstack([pts, pts + hmax * piece.normal[None, :]])
            corners.append(pts)
        allpts = np.vstack(corners)
        diffs = allpts[:, None, :] - allpts[None, :, :]
        return float(np.max(np.linalg.norm(diffs, axis=2)))

    def scene_hash(self) -> str:
        return params_hash(self.to_dict())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pieces": [p.to_dict() for p in self.pieces],
            "x0": None if self.x0 is None else self.x0.tolist(),
            "theta": self.theta,
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Scene":
        return cls(
            pieces=[ManifoldPiece.from_dict(p) for p in data["pieces"]],
            x0=data.get("x0"),
            theta=data.get("theta"),
            params=data.get("params", {}),
        )


@dataclass
class PointCloud:
    points: np.ndarray
    labels: Optional[np.ndarray] = None
    seed: Optional[int] = None
    sigma: float = 0.0
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.array(self.points, dtype=float, copy=True)
        if self.points.ndim != 2:
            raise PreconditionError(f"点云必须是 n×N 数组: {self.points.shape}")
        self.points.setflags(write=False)
        if self.labels is not None:
            self.labels = np.array(self.labels, dtype=int, copy=True)
            require(self.labels.shape == (self.points.shape[0],), "标签数与点数不一致")
            self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def N(self) -> int:
        return self.points.shape[1]

    def subset(self, index: np.ndarray) -> "PointCloud":
        labels = None if self.labels is None else self.labels[index]
        return PointCloud(self.points[index], labels, self.seed, self.sigma, dict(self.meta))

    def check_on_pieces(self, scene: Scene) -> float:
        """返回带标签点到所属片的最大残差；超出噪声容限时抛出 PreconditionError"""
        require(self.labels is not None, "点云没有片标签")
        codim = max(self.N - scene.d, 1)
        tol = 6.0 * self.sigma * math.sqrt(codim) if self.sigma > 0 else ON_PIECE_TOL
        worst = 0.0
        for i, piece in enumerate(scene.pieces):
            mask = self.labels == i
            if np.any(mask):
                res = piece.residual(self.points[mask])
                worst = max(worst, float(np.max(res)))
        require(worst <= tol, f"带标签点偏离所属片: 最大残差 {worst:.3e} > {tol:.3e}")
        return worst


@dataclass
class ProbeCurve:
    points: np.ndarray        # (m, N)
    arc: np.ndarray           # (m,)，以经过点为 0 的弧长参数
    piece_index: int
    crossing_arc: Optional[float] = None
    crossing_point: Optional[np.ndarray] = None

    @property
    def m(self) -> int:
        return self.points.shape[0]


def _basis(N: int) -> np.ndarray:
    return np.eye(N)


def _box(d: int, half_width: Union[float, Sequence[float]]):
    hw = np.broadcast_to(np.asarray(half_width, dtype=float), (d,)).copy()
    return -hw, hw


def make_intersection_scene(N: int, d: int, theta: float, flat_or_curved: str = "flat",
                            L: float = 0.0, extent: Union[float, Sequence[float]] = 1.0,
                            profile: str = "quadratic",
                            ambient_cube: Optional[float] = None) -> Scene:
    """
    两片在 x0 = 0 处以二面角 theta 相交的场景

    第 1 片标架 (e1, …, ed)；第 2 片标架 (cosθ e1 + sinθ e_{d+1}, e2, …, ed)，
    交集沿 e2…ed 方向，维数 d−1。曲面片的高度函数在 x0 处值与梯度均为 0，
    因此 x0 处两切平面夹角恰为 theta。

    参数:
        extent: 每片坐标盒的半宽（标量或长度 d 的序列）
        ambient_cube: 若给出，把两片平面都裁剪到环境立方体 [−c, c]^N，
                      倾斜片沿 u1 的半宽变为 c / max(cosθ, sinθ)
    """
    require(isinstance(d, (int, np.integer)) and d >= 1, f"内在维数必须 ≥ 1: d={d}")
    require(d < N, f"相交场景需要 d < N: d={d}, N={N}", "d < N")
    if not (0.0 < theta <= math.pi / 2 + 1e-15):
        raise PreconditionError(
            f"交角必须满足 0 < θ ≤ π/2: theta={theta}；θ = 0 时两片相切，等同同一流形",
            inequality="0 < theta <= pi/2", theta=theta)
    require(flat_or_curved in ("flat", "curved"), f"未知的片类型: {flat_or_curved}")
    if flat_or_curved == "curved":
        require(L > 0.0, f"曲面场景需要 L > 0: L={L}", "L > 0")
        require(ambient_cube is None, "环境立方体裁剪只用于平坦场景")

    e = _basis(N)
    c, s = math.cos(theta), math.sin(theta)
    frame1 = e[:, :d].copy()
    normal1 = e[:, d].copy()
    frame2 = e[:, :d].copy()
    frame2[:, 0] = c * e[:, 0] + s * e[:, d]
    normal2 = -s * e[:, 0] + c * e[:, d]

    if ambient_cube is not None:
        lower1, upper1 = _box(d, ambient_cube)
        lower2, upper2 = _box(d, ambient_cube)
        stretch = ambient_cube / max(abs(c), s)
        lower2[0], upper2[0] = -stretch, stretch
    else:
        lower1, upper1 = _box(d, extent)
        lower2, upper2 = lower1.copy(), upper1.copy()

    kind = flat_or_curved
    curved_args = dict(profile=profile, L=L) if kind == "curved" else {}
    piece1 = ManifoldPiece(kind, np.zeros(N), frame1, lower1, upper1,
                           normal=normal1 if kind == "curved" else None, **curved_args)
    piece2 = ManifoldPiece(kind, np.zeros(N), frame2, lower2, upper2,
                           normal=normal2 if kind == "curved" else None, **curved_args)
    params = {"type": "intersection", "N": N, "d": d, "theta": theta, "kind": kind, "L": L,
              "extent": np.asarray(extent, dtype=float).tolist(), "profile": profile,
              "ambient_cube": ambient_cube}
    return Scene([piece1, piece2], x0=np.zeros(N), theta=theta, params=params)


def make_plane_scene(N: int, d: int, half_width: float = 1.0) -> Scene:
    """单片平坦场景（H0 场景）"""
    require(d <= N, f"内在维数不能超过环境维数: d={d}, N={N}", "d ≤ N")
    lower, upper = _box(d, half_width)
    piece = ManifoldPiece("flat", np.zeros(N), _basis(N)[:, :d], lower, upper)
    params = {"type": "plane", "N": N, "d": d, "half_width": half_width}
    return Scene([piece], x0=np.zeros(N), params=params)


def make_boundary_scene(N: int, d: int, half_width: float = 1.0) -> Scene:
    """
    半空间场景：坐标盒 [0, 2h] × [−h, h]^{d−1}，x0 = 0 位于边界面 u1 = 0 上，
    边界外法向为 −e1
    """
    require(d <= N, f"内在维数不能超过环境维数: d={d}, N={N}", "d ≤ N")
    lower, upper = _box(d, half_width)
    lower[0], upper[0] = 0.0, 2.0 * half_width
    piece = ManifoldPiece("flat", np.zeros(N), _basis(N)[:, :d], lower, upper)
    params = {"type": "boundary", "N": N, "d": d, "half_width": half_width}
    return Scene([piece], x0=np.zeros(N), params=params)


def _envelope_sup(piece: ManifoldPiece, grid: int = 65) -> float:
    """网格搜索 sup V(Dα)，作为拒绝采样的包络"""
    axes = [np.linspace(lo, hi, grid) for lo, hi in zip(piece.lower, piece.upper)]
    if piece.profile == "sine":
        # 正弦剖面的极大点 u1 = ±π/2 若落在盒内则加入网格
        extra = [v for v in (-math.pi / 2, math.pi / 2) if piece.lower[0] <= v <= piece.upper[0]]
        axes[0] = np.sort(np.concatenate([axes[0], extra]))
    grids = np.meshgrid(*axes, indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    return float(np.max(piece.volume_factor(u)))


def _sample_piece(piece: ManifoldPiece, n: int, rng: np.random.Generator) -> np.ndarray:
    require(piece.is_bounded, "无界坐标盒无法均匀采样")
    if n == 0:
        return np.zeros((0, piece.d))
    if piece.kind == "flat":
        return rng.uniform(piece.lower, piece.upper, size=(n, piece.d))
    vmax = _envelope_sup(piece)
    accepted: List[np.ndarray] = []
    count = 0
    while count < n:
        batch = max(2 * (n - count), 1024)
        u = rng.uniform(piece.lower, piece.upper, size=(batch, piece.d))
        keep = rng.uniform(0.0, vmax, size=batch) < piece.volume_factor(u)
        accepted.append(u[keep])
        count += int(np.sum(keep))
    return np.vstack(accepted)[:n]


def sample_uniform(scene: Scene, n_per_piece: Union[int, Sequence[int], None] = None,
                   seed: Optional[int] = None, n_total: Optional[int] = None) -> PointCloud:
    """
    在各片上均匀采样

    参数:
        n_per_piece: 每片样本数（标量对所有片相同）
        n_total: 若给出，则按 面积×权重 的多项分布把样本分到各片，
                 即在 Ω = ∪Ωᵢ 上独立同分布采样
    """
    rng = np.random.default_rng(seed)
    k = len(scene.pieces)
    if n_total is not None:
        require(n_total > 0, f"样本数必须为正: {n_total}")
        mass = np.array([p.weight * p.area for p in scene.pieces])
        counts = rng.multinomial(n_total, mass / mass.sum())
    else:
        require(n_per_piece is not None, "必须给出 n_per_piece 或 n_total")
        counts = np.broadcast_to(np.asarray(n_per_piece, dtype=int), (k,)).copy()
        require(bool(np.all(counts > 0)), f"每片样本数必须为正: {counts.tolist()}")
    points, labels = [], []
    for i, (piece, c) in enumerate(zip(scene.pieces, counts)):
        u = _sample_piece(piece, int(c), rng)
        points.append(piece.embed(u) if len(u) else np.zeros((0, scene.N)))
        labels.append(np.full(int(c), i))
    meta = {"scene_hash": scene.scene_hash(), "counts": [int(c) for c in counts]}
    return PointCloud(np.vstack(points), np.concatenate(labels), seed, 0.0, meta)


def add_noise(cloud: PointCloud, sigma: float, seed: Optional[int] = None) -> PointCloud:
    """各点加 N(0, σ²I) 噪声，标签保留"""
    require(sigma >= 0.0, f"噪声标准差不能为负: sigma={sigma}", "sigma ≥ 0")
    if sigma == 0.0:
        return PointCloud(cloud.points, cloud.labels, cloud.seed, cloud.sigma, dict(cloud.meta))
    rng = np.random.default_rng(seed)
    noisy = cloud.points + rng.normal(0.0, sigma, size=cloud.points.shape)
    meta = dict(cloud.meta)
    meta["noise_seed"] = seed
    return PointCloud(noisy, cloud.labels, cloud.seed, math.hypot(cloud.sigma, sigma), meta)


def make_probe_curve(scene: Scene, piece: int, through: np.ndarray, m: int,
                     half_length: float = 0.3, direction: Optional[np.ndarray] = None,
                     require_crossing: bool = True) -> ProbeCurve:
    """
    探测曲线 Γ：第 piece 片上经过 through、沿坐标方向 direction（默认 u1）的坐标线，
    按弧长重新参数化为 m 个等距点

    曲面片上不求测地线，直接提升坐标线；所有点严格位于片上。
    """
    require(m >= 2, f"探测曲线至少需要 2 个点: m={m}")
    owner = scene.pieces[piece]
    through = np.asarray(through, dtype=float)
    res = float(owner.residual(through)[0])
    require(res <= ON_PIECE_TOL, f"经过点不在第 {piece} 片上: 残差 {res:.3e}")
    u0 = owner.chart(through)[0]
    e = np.zeros(owner.d)
    e[0] = 1.0
    if direction is not None:
        e = np.asarray(direction, dtype=float)
        e = e / np.linalg.norm(e)
    ends = u0[None, :] + np.array([[-half_length], [half_length]]) * e[None, :]
    if not np.all((ends >= owner.lower - ON_PIECE_TOL) & (ends <= owner.upper + ON_PIECE_TOL)):
        raise PreconditionError(
            f"探测曲线超出第 {piece} 片的坐标盒: half_length={half_length}",
            inequality="u0 ± half_length·e inside piece box", half_length=half_length)

    if owner.kind == "flat":
        s = np.linspace(-half_length, half_length, m)
        arc = s.copy()
    else:
        # 稠密采样坐标线，累积弧长后反插值得到等弧长参数
        dense = np.linspace(-half_length, half_length, 40 * m + 1)
        pts = owner.embed(u0[None, :] + dense[:, None] * e[None, :])
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        cum -= np.interp(0.0, dense, cum)
        arc = np.linspace(cum[0], cum[-1], m)
        s = np.interp(arc, cum, dense)
    points = owner.embed(u0[None, :] + s[:, None] * e[None, :])

    crossing_arc, crossing_point = _find_crossing(scene, piece, points, arc)
    if require_crossing and crossing_arc is None:
        raise PreconditionError("探测曲线没有穿过交集（curve misses intersection）")
    return ProbeCurve(points, arc, piece, crossing_arc, crossing_point)


def _find_crossing(scene: Scene, piece: int, points: np.ndarray, arc: np.ndarray):
    for j, other in enumerate(scene.pieces):
        if j == piece:
            continue
        resid = points - other.embed(other.chart(points))
        norms = np.linalg.norm(resid, axis=1)
        hit = np.flatnonzero(norms <= ON_PIECE_TOL)
        if hit.size:
            k = int(hit[0])
            return float(arc[k]), points[k].copy()
        ref = resid[int(np.argmax(norms))] / np.max(norms)
        signed = resid @ ref
        flips = np.flatnonzero(signed[:-1] * signed[1:] < 0)
        if flips.size:
            k = int(flips[0])
            w = signed[k] / (signed[k] - signed[k + 1])
            a = float(arc[k] + w * (arc[k + 1] - arc[k]))
            return a, points[k] + w * (points[k + 1] - points[k])
    return None, None


def regularity_audit(piece: ManifoldPiece, n_pairs: int = 10000, radius: float = 0.1,
                     seed: Optional[int] = None) -> Dict[str, float]:
    """
    (L,r)-正则性的经验检查

    bound1: ‖y − π(y)‖ / ‖x − π(y)‖²，x 为片上随机点，y 在其半径 radius 的坐标邻域内，
            π 为到 x 处切平面的正交投影
    bound2: |V(Dα) − 1| / ‖x − π(y)‖²，x 取 anchor
    """
    rng = np.random.default_rng(seed)
    d = piece.d
    ux = rng.uniform(piece.lower, piece.upper, size=(n_pairs, d))
    direction = rng.normal(size=(n_pairs, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    rad = radius * rng.uniform(0.05, 1.0, size=(n_pairs, 1)) ** (1.0 / d)
    uy = ux + rad * direction

    x = piece.embed(ux)
    y = piece.embed(uy)
    basis = piece.tangent_basis(ux)
    diff = y - x
    tangential = np.einsum("mnd,mn->md", basis, diff)
    proj = x + np.einsum("mnd,md->mn", basis, tangential)
    normal_dist = np.linalg.norm(y - proj, axis=1)
    base_dist2 = np.sum((x - proj) ** 2, axis=1)
    ratio1 = normal_dist / base_dist2

    uy0 = rad * direction
    ratio2 = np.abs(piece.volume_factor(uy0) - 1.0) / np.sum(uy0 * uy0, axis=1)
    return {
        "declared_L": piece.L,
        "bound1_max": float(np.max(ratio1)),
        "bound2_max": float(np.max(ratio2)),
        "n_pairs": n_pairs,
        "radius": radius,
    }


def save_cloud(cloud: PointCloud, path: str, scene: Optional[Scene] = None) -> List[str]:
    """点云写成 CSV（列 x0..x{N-1}[, label]），参数与标签来源写入同名 JSON 侧车"""
    df = pd.DataFrame(cloud.points, columns=[f"x{i}" for i in range(cloud.N)])
    if cloud.labels is not None:
        df["label"] = cloud.labels
    csv_path = write_csv(df, path)
    sidecar = {
        "N": cloud.N,
        "n": cloud.n,
        "seed": cloud.seed,
        "sigma": cloud.sigma,
        "meta": cloud.meta,
        "scene": None if scene is None else scene.to_dict(),
    }
    json_path = write_json(sidecar, _sidecar_path(path))
    return [csv_path, json_path]


def load_cloud(path: str):
    """读取 save_cloud 写出的点云；返回 (PointCloud, Scene 或 None)"""
    df = read_csv(path)
    coord_cols = [c for c in df.columns if c.startswith("x")]
    labels = df["label"].to_numpy(dtype=int) if "label" in df.columns else None
    scene = None
    seed, sigma, meta = None, 0.0, {}
    sidecar_path = _sidecar_path(path)
    try:
        sidecar = read_json(sidecar_path)
    except FileNotFoundError:
        sidecar = None
    if sidecar is not None:
        seed, sigma, meta = sidecar.get("seed"), sidecar.get("sigma", 0.0), sidecar.get("meta", {})
        if sidecar.get("scene") is not None:
            scene = Scene.from_dict(sidecar["scene"])
    cloud = PointCloud(df[coord_cols].to_numpy(dtype=float), labels, seed, sigma, meta)
    return cloud, scene


def _sidecar_path(path: str) -> str:
    return path[:-4] + ".json" if path.endswith(".csv") else path + ".json"
