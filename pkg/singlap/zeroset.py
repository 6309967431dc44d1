"""
球面神经网络零点集的区间构造

f_W(x) = Σᵢ aᵢ (wᵢ·x)₊，x ∈ 𝕊¹，W = (w₁, …, w_k) ∈ ℝ^{2k}
可行集 Ω̂_δ = {W : |f_W(xⱼ) − f_{W*}(xⱼ)| ≤ δ, ∀xⱼ ∈ 𝒟}

- 区间算术：每个基本运算的结果向外扩 ulps 个 ulp
- 前向–后向收缩（HC4）：前向求表达式树各节点的区间，后向把约束区间投影回叶子
- 分支收缩：收缩后二分最宽坐标，宽度 ≤ width_cap 的盒子接受
- 每个变量在表达式中只出现一次，前向区间就是值域本身（至多差外扩的几个 ulp）
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import ZEROSET_CFG
from .errors import PreconditionError, require
from .io_utils import echo, progress, read_json, write_csv, write_json
from .manifold_gen import PointCloud

ULPS = ZEROSET_CFG["ulps"]
_TINY_INPUT = 1e-12


def _down(x):
    x = np.asarray(x, dtype=float)
    for _ in range(ULPS):
        x = np.nextafter(x, -np.inf)
    return x


def _up(x):
    x = np.asarray(x, dtype=float)
    for _ in range(ULPS):
        x = np.nextafter(x, np.inf)
    return x


# ---- 数组形式的区间运算（lo, hi 同形） ----

def _add(alo, ahi, blo, bhi):
    return _down(alo + blo), _up(ahi + bhi)


def _sub(alo, ahi, blo, bhi):
    return _down(alo - bhi), _up(ahi - blo)


def _scale(lo, hi, c):
    p, q = lo * c, hi * c
    return _down(np.minimum(p, q)), _up(np.maximum(p, q))


def _div_scalar(lo, hi, c):
    p, q = lo / c, hi / c
    return _down(np.minimum(p, q)), _up(np.maximum(p, q))


def _relu(lo, hi):
    return np.maximum(lo, 0.0), np.maximum(hi, 0.0)


def _sign(lo, hi, a):
    # a ∈ {−1, +1}，广播到最后一维
    neg = a < 0
    return np.where(neg, -hi, lo), np.where(neg, -lo, hi)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        require(not (math.isnan(self.lo) or math.isnan(self.hi)), "区间端点不能为 NaN")
        require(self.lo <= self.hi, f"区间下界大于上界: [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(float(x), float(x))

    @staticmethod
    def _make(lo, hi) -> "Interval":
        return Interval(float(lo), float(hi))

    def __add__(self, other) -> "Interval":
        other = other if isinstance(other, Interval) else Interval.point(other)
        return self._make(*_add(self.lo, self.hi, other.lo, other.hi))

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        other = other if isinstance(other, Interval) else Interval.point(other)
        return self._make(*_sub(self.lo, self.hi, other.lo, other.hi))

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other) -> "Interval":
        if not isinstance(other, Interval):
            return self._make(*_scale(self.lo, self.hi, float(other)))
        prods = [self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi]
        prods = [p for p in prods if not math.isnan(p)]
        return self._make(_down(min(prods)), _up(max(prods)))

    __rmul__ = __mul__

    def relu(self) -> "Interval":
        return Interval(max(self.lo, 0.0), max(self.hi, 0.0))

    def __abs__(self) -> "Interval":
        if self.lo >= 0.0:
            return self
        if self.hi <= 0.0:
            return -self
        return Interval(0.0, max(-self.lo, self.hi))

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)


def dot(intervals: Sequence[Interval], x: Sequence[float]) -> Interval:
    """Σ [wᵢ]·xᵢ，逐项外扩"""
    total = Interval.point(0.0)
    for w, xi in zip(intervals, x):
        total = total + w * float(xi)
    return total


@dataclass
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float).ravel()
        self.hi = np.asarray(self.hi, dtype=float).ravel()
        require(self.lo.shape == self.hi.shape, "盒子上下界维数不一致")
        require(bool(np.all(self.lo <= self.hi)), "盒子下界大于上界")
        bound = ZEROSET_CFG["box_half_width"]
        require(bool(np.all(self.lo >= -bound) and np.all(self.hi <= bound)),
                f"盒子必须位于 [−{bound}, {bound}]^{self.dim} 内")

    @classmethod
    def cube(cls, dim: int, half_width: float, center: Optional[np.ndarray] = None) -> "Box":
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        return cls(c - half_width, c + half_width)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def max_width(self) -> float:
        return float(np.max(self.widths))

    @property
    def centroid(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def intervals(self) -> List[Interval]:
        return [Interval(float(a), float(b)) for a, b in zip(self.lo, self.hi)]

    def contains(self, W: np.ndarray) -> np.ndarray:
        W = np.atleast_2d(W)
        return np.all((W >= self.lo) & (W <= self.hi), axis=1)

    def bisect(self) -> Tuple["Box", "Box"]:
        """沿最宽坐标二分，并列时取下标最小者"""
        k = int(np.argmax(self.widths))
        mid = 0.5 * (self.lo[k] + self.hi[k])
        left_hi = self.hi.copy()
        left_hi[k] = mid
        right_lo = self.lo.copy()
        right_lo[k] = mid
        return Box(self.lo.copy(), left_hi), Box(right_lo, self.hi.copy())


@dataclass
class SphericalNet:
    a: np.ndarray            # (k,) ∈ {−1, +1}
    w_star: np.ndarray       # (k, 2)，目标权重
    inputs: np.ndarray       # (m, 2)，𝕊¹ 上的样本

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float).ravel()
        self.w_star = np.asarray(self.w_star, dtype=float).reshape(-1, 2)
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        require(bool(np.all(np.abs(self.a) == 1.0)), f"aᵢ 必须为 ±1: {self.a.tolist()}")
        require(self.w_star.shape[0] == self.a.shape[0], "权重个数与 a 的长度不一致")
        require(self.inputs.shape[1] == 2, "输入必须位于 𝕊¹ ⊂ ℝ²")
        norms = np.linalg.norm(self.inputs, axis=1)
        require(bool(np.all(np.abs(norms - 1.0) <= 1e-12)), "输入必须是单位向量")
        self._target = self.evaluate(self.w_star.ravel())

    @property
    def k(self) -> int:
        return self.a.shape[0]

    @property
    def dim(self) -> int:
        return 2 * self.k

    @property
    def target(self) -> np.ndarray:
        """g(xⱼ) = f_{W*}(xⱼ)"""
        return self._target

    def evaluate(self, W: np.ndarray, x: Optional[np.ndarray] = None) -> np.ndarray:
        """f_W(x)，W 为 (2k,) 或 (M, 2k)；返回 (m,) 或 (M, m)"""
        x = self.inputs if x is None else np.atleast_2d(x)
        W = np.asarray(W, dtype=float)
        single = W.ndim == 1
        W = np.atleast_2d(W).reshape(W.shape[0] if not single else 1, self.k, 2)
        pre = np.einsum("bkc,mc->bmk", W, x)
        out = np.einsum("bmk,k->bm", np.maximum(pre, 0.0), self.a)
        return out[0] if single else out

    def to_dict(self) -> Dict[str, Any]:
        return {"a": self.a.tolist(), "w_star": self.w_star.tolist(), "inputs": self.inputs.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SphericalNet":
        return cls(data["a"], data["w_star"], data["inputs"])


def make_target_net(k: int = 3, n_inputs: Optional[int] = None,
                    w: Sequence[float] = (0.6, 0.8)) -> SphericalNet:
    """
    目标网络：所有 wᵢ 相同，a = (−1, +1, …, +1)（k = 1 时 a = (+1)），
    𝒟 为 𝕊¹ 上 n_inputs 个等距点
    """
    require(k >= 1, f"节点数必须 ≥ 1: k={k}")
    n_inputs = n_inputs or ZEROSET_CFG["n_inputs"]
    a = np.ones(k)
    if k >= 2:
        a[0] = -1.0
    angles = 2.0 * np.pi * np.arange(n_inputs) / n_inputs
    inputs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return SphericalNet(a, np.tile(np.asarray(w, dtype=float), (k, 1)), inputs)


def _forward(lo: np.ndarray, hi: np.ndarray, net: SphericalNet) -> Dict[str, Any]:
    """各节点的区间，数组形状 (m, k)；total 形状 (m,)"""
    wlo, whi = lo.reshape(net.k, 2), hi.reshape(net.k, 2)
    c = net.inputs[:, 0][:, None]
    s = net.inputs[:, 1][:, None]
    px = _scale(wlo[None, :, 0], whi[None, :, 0], c)
    py = _scale(wlo[None, :, 1], whi[None, :, 1], s)
    d = _add(px[0], px[1], py[0], py[1])
    r = _relu(*d)
    term = _sign(r[0], r[1], net.a[None, :])
    tot_lo, tot_hi = term[0][:, 0], term[1][:, 0]
    for i in range(1, net.k):
        tot_lo, tot_hi = _add(tot_lo, tot_hi, term[0][:, i], term[1][:, i])
    return {"px": px, "py": py, "d": d, "r": r, "term": term, "total": (tot_lo, tot_hi)}


def interval_eval_net(box: Box, net: SphericalNet, x: Optional[np.ndarray] = None) -> Interval:
    """{f_W(x) : W ∈ box} 的区间包含；x 缺省时取 𝒟 的第一个点"""
    require(box.dim == net.dim, f"盒子维数 {box.dim} 与网络参数维数 {net.dim} 不一致")
    if x is not None:
        net = SphericalNet(net.a, net.w_star, np.asarray(x, dtype=float).reshape(1, 2))
    tot_lo, tot_hi = _forward(box.lo, box.hi, net)["total"]
    return Interval(float(tot_lo[0]), float(tot_hi[0]))


def _backward(lo, hi, net: SphericalNet, fw: Dict[str, Any], lo_c, hi_c):
    """
    一次后向扫描；lo_c/hi_c 为约束区间 [g − δ, g + δ]
    返回收缩后的 (lo, hi)，不可行时返回 None
    """
    t_lo = np.maximum(fw["total"][0], lo_c)
    t_hi = np.minimum(fw["total"][1], hi_c)
    if np.any(t_lo > t_hi):
        return None
    term_lo, term_hi = fw["term"]
    k = net.k
    new_term_lo = term_lo.copy()
    new_term_hi = term_hi.copy()
    for i in range(k):
        others = [j for j in range(k) if j != i]
        if others:
            rest_lo, rest_hi = term_lo[:, others[0]], term_hi[:, others[0]]
            for j in others[1:]:
                rest_lo, rest_hi = _add(rest_lo, rest_hi, term_lo[:, j], term_hi[:, j])
            cand_lo, cand_hi = _sub(t_lo, t_hi, rest_lo, rest_hi)
        else:
            cand_lo, cand_hi = t_lo, t_hi
        new_term_lo[:, i] = np.maximum(term_lo[:, i], cand_lo)
        new_term_hi[:, i] = np.minimum(term_hi[:, i], cand_hi)
    if np.any(new_term_lo > new_term_hi):
        return None
    # aᵢ·r → r
    r_lo, r_hi = _sign(new_term_lo, new_term_hi, net.a[None, :])
    r_lo = np.maximum(r_lo, fw["r"][0])
    r_hi = np.minimum(r_hi, fw["r"][1])
    if np.any(r_lo > r_hi):
        return None
    # ReLU：r > 0 时 d = r，否则 d ≤ r.hi
    d_lo, d_hi = fw["d"]
    d_lo = np.where(r_lo > 0.0, np.maximum(d_lo, r_lo), d_lo)
    d_hi = np.minimum(d_hi, r_hi)
    if np.any(d_lo > d_hi):
        return None
    # d = wx·c + wy·s
    px_lo, px_hi = fw["px"]
    py_lo, py_hi = fw["py"]
    cx_lo, cx_hi = _sub(d_lo, d_hi, py_lo, py_hi)
    px_lo, px_hi = np.maximum(px_lo, cx_lo), np.minimum(px_hi, cx_hi)
    cy_lo, cy_hi = _sub(d_lo, d_hi, px_lo, px_hi)
    py_lo, py_hi = np.maximum(py_lo, cy_lo), np.minimum(py_hi, cy_hi)
    if np.any(px_lo > px_hi) or np.any(py_lo > py_hi):
        return None

    wlo = lo.reshape(k, 2).copy()
    whi = hi.reshape(k, 2).copy()
    for col, (p_lo, p_hi) in enumerate(((px_lo, px_hi), (py_lo, py_hi))):
        coef = net.inputs[:, col]
        usable = np.abs(coef) > _TINY_INPUT
        if not np.any(usable):
            continue
        q_lo, q_hi = _div_scalar(p_lo[usable], p_hi[usable], coef[usable][:, None])
        wlo[:, col] = np.maximum(wlo[:, col], np.max(q_lo, axis=0))
        whi[:, col] = np.minimum(whi[:, col], np.min(q_hi, axis=0))
    new_lo, new_hi = wlo.ravel(), whi.ravel()
    if np.any(new_lo > new_hi):
        return None
    return new_lo, new_hi


def _feasible(lo, hi, net: SphericalNet, lo_c, hi_c) -> bool:
    tot_lo, tot_hi = _forward(lo, hi, net)["total"]
    return not (np.any(tot_hi < lo_c) or np.any(tot_lo > hi_c))


def contract(box: Box, net: SphericalNet, delta: float) -> Optional[Box]:
    """
    在约束 |f_W(xⱼ) − f_{W*}(xⱼ)| ≤ δ（∀xⱼ ∈ 𝒟）下收缩 box

    约束取闭集：|f_W − g| = δ 的点保留，所以 δ = 0 给出精确零点集，δ > 0 时结果包含开集 {|f_W − g| < δ}。

    重复前向+后向，直到一轮的相对收缩量 < min_contraction；返回 None 表示不可行。
    返回的盒子再做一次前向检查，保证每个约束的区间都与 [g − δ, g + δ] 相交。
    """
    require(delta >= 0.0, f"容差不能为负: delta={delta}", "delta >= 0")
    require(box.dim == net.dim, f"盒子维数 {box.dim} 与网络参数维数 {net.dim} 不一致")
    lo_c = _down(net.target - delta)
    hi_c = _up(net.target + delta)
    lo, hi = box.lo.copy(), box.hi.copy()
    for _ in range(ZEROSET_CFG["max_rounds"]):
        fw = _forward(lo, hi, net)
        if np.any(fw["total"][1] < lo_c) or np.any(fw["total"][0] > hi_c):
            return None
        before = float(np.sum(hi - lo))
        out = _backward(lo, hi, net, fw, lo_c, hi_c)
        if out is None:
            return None
        lo, hi = np.maximum(lo, out[0]), np.minimum(hi, out[1])
        after = float(np.sum(hi - lo))
        if before == 0.0 or (before - after) / before < ZEROSET_CFG["min_contraction"]:
            break
    if not _feasible(lo, hi, net, lo_c, hi_c):
        return None
    return Box(lo, hi)


@dataclass
class Paving:
    accepted_lo: np.ndarray
    accepted_hi: np.ndarray
    rejected_count: int
    undecided_count: int
    width_cap: float
    delta: float
    processed: int = 0
    partial: bool = False
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.accepted_lo = np.atleast_2d(np.asarray(self.accepted_lo, dtype=float))
        self.accepted_hi = np.atleast_2d(np.asarray(self.accepted_hi, dtype=float))
        require(self.accepted_lo.shape == self.accepted_hi.shape, "接受盒子的上下界形状不一致")
        if len(self.accepted_lo):
            widths = self.accepted_hi - self.accepted_lo
            require(float(np.max(widths)) <= self.width_cap, "接受的盒子宽度超过 width_cap")
            order = np.lexsort(np.hstack([self.accepted_lo, self.accepted_hi]).T[::-1])
            self.accepted_lo = self.accepted_lo[order]
            self.accepted_hi = self.accepted_hi[order]

    @property
    def n_accepted(self) -> int:
        return self.accepted_lo.shape[0]

    @property
    def accepted(self) -> List[Box]:
        return [Box(lo, hi) for lo, hi in zip(self.accepted_lo, self.accepted_hi)]

    def to_frame(self) -> pd.DataFrame:
        dim = self.accepted_lo.shape[1] if self.n_accepted else 0
        cols = {f"lo{i}": self.accepted_lo[:, i] for i in range(dim)}
        cols.update({f"hi{i}": self.accepted_hi[:, i] for i in range(dim)})
        return pd.DataFrame(cols)

    def summary(self) -> Dict[str, Any]:
        return {"accepted": self.n_accepted, "rejected": self.rejected_count,
                "undecided": self.undecided_count, "processed": self.processed,
                "partial": self.partial, "width_cap": self.width_cap, "delta": self.delta}

    def save(self, path: str) -> List[str]:
        csv_path = write_csv(self.to_frame(), path)
        json_path = write_json({**self.summary(), **self.meta},
                               path[:-4] + ".json" if path.endswith(".csv") else path + ".json")
        return [csv_path, json_path]


def save_checkpoint(path: str, net: SphericalNet, delta: float, width_cap: float,
                    stack: List[Tuple[np.ndarray, np.ndarray]], accepted: List[Tuple[np.ndarray, np.ndarray]],
                    rejected: int, processed: int) -> str:
    """JSON 检查点：版本号、参数、待处理栈（自底向上）、已接受盒子与计数"""
    state = {
        "version": ZEROSET_CFG["checkpoint_version"],
        "net": net.to_dict(),
        "delta": delta,
        "width_cap": width_cap,
        "stack": [[lo.tolist(), hi.tolist()] for lo, hi in stack],
        "accepted": [[lo.tolist(), hi.tolist()] for lo, hi in accepted],
        "rejected": rejected,
        "processed": processed,
    }
    return write_json(state, path)


def load_checkpoint(path: str) -> Dict[str, Any]:
    state = read_json(path)
    version = state.get("version")
    if version != ZEROSET_CFG["checkpoint_version"]:
        raise PreconditionError(f"检查点版本不匹配: {version} != {ZEROSET_CFG['checkpoint_version']}")
    return {
        "net": SphericalNet.from_dict(state["net"]),
        "delta": state["delta"],
        "width_cap": state["width_cap"],
        "stack": [(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)) for lo, hi in state["stack"]],
        "accepted": [(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)) for lo, hi in state["accepted"]],
        "rejected": int(state["rejected"]),
        "processed": int(state["processed"]),
    }


def pave(net: SphericalNet, delta: float, width_cap: Optional[float] = None,
         budget: Optional[int] = None, root: Optional[Box] = None,
         checkpoint_path: Optional[str] = None, resume: bool = False) -> Paving:
    """
    分支收缩铺砌

    深度优先栈：弹出盒子 → 收缩 → 空则拒绝，宽度 ≤ width_cap 则接受，否则沿最宽坐标二分。
    处理的盒子数达到 budget 时停止，结果标记为 partial，栈中剩余盒子计入 undecided。
    给出 checkpoint_path 时每 checkpoint_every 个盒子写一次检查点；resume=True 时从检查点继续。
    """
    width_cap = width_cap or ZEROSET_CFG["width_cap"]
    budget = int(budget or ZEROSET_CFG["budget"])
    require(width_cap > 0.0, f"宽度上限必须为正: {width_cap}", "width_cap > 0")
    require(budget >= 1, f"预算必须为正: {budget}")
    if resume:
        require(checkpoint_path is not None, "续跑需要检查点路径")
        state = load_checkpoint(checkpoint_path)
        net, delta, width_cap = state["net"], state["delta"], state["width_cap"]
        stack, accepted = state["stack"], state["accepted"]
        rejected, processed = state["rejected"], state["processed"]
        echo(f"从检查点继续：已处理 {processed} 个盒子，栈中 {len(stack)} 个", "info")
    else:
        require(delta >= 0.0, f"容差不能为负: delta={delta}", "delta >= 0")
        if root is None:
            root = Box.cube(net.dim, ZEROSET_CFG["box_half_width"])
        stack = [(root.lo.copy(), root.hi.copy())]
        accepted, rejected, processed = [], 0, 0

    every = ZEROSET_CFG["checkpoint_every"]
    with progress(total=budget, desc="铺砌", unit="盒") as bar:
        bar.update(processed)
        while stack and processed < budget:
            lo, hi = stack.pop()
            processed += 1
            bar.update(1)
            box = contract(Box(lo, hi), net, delta)
            if box is None:
                rejected += 1
            elif box.max_width <= width_cap:
                accepted.append((box.lo, box.hi))
            else:
                left, right = box.bisect()
                stack.append((right.lo, right.hi))
                stack.append((left.lo, left.hi))
            if checkpoint_path is not None and processed % every == 0:
                save_checkpoint(checkpoint_path, net, delta, width_cap, stack, accepted, rejected, processed)

    partial = bool(stack)
    if partial:
        echo(f"预算 {budget} 用尽，{len(stack)} 个盒子未决", "warn")
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, net, delta, width_cap, stack, accepted, rejected, processed)
    dim = net.dim
    acc_lo = np.array([a[0] for a in accepted]).reshape(-1, dim)
    acc_hi = np.array([a[1] for a in accepted]).reshape(-1, dim)
    return Paving(acc_lo, acc_hi, rejected, len(stack), width_cap, delta, processed, partial,
                  {"k": net.k, "n_inputs": int(net.inputs.shape[0])})


def centroids(paving: Paving) -> PointCloud:
    """每个接受盒子的中心；每个中心距 Ω̂_δ 至多 (width_cap/2)·√(2k)"""
    if paving.n_accepted == 0:
        raise PreconditionError("铺砌为空，没有中心点", inequality="n_accepted >= 1")
    points = 0.5 * (paving.accepted_lo + paving.accepted_hi)
    meta = {"source": "zeroset", "width_cap": paving.width_cap, "delta": paving.delta,
            "distance_bound": 0.5 * paving.width_cap * math.sqrt(points.shape[1])}
    return PointCloud(points, meta=meta)


def centroid_residuals(paving: Paving, net: SphericalNet) -> Tuple[np.ndarray, np.ndarray]:
    """
    各中心的 max_j |f_c(xⱼ) − g(xⱼ)| 与对应的允许值 δ + √k·半对角线

    f_W 对 W 的 Lipschitz 常数为 √k（‖x‖ = 1）；接受盒子在每个约束上都与 [g − δ, g + δ]
    相交且前向区间即值域，所以中心满足上述允许值
    """
    pts = 0.5 * (paving.accepted_lo + paving.accepted_hi)
    resid = np.max(np.abs(net.evaluate(pts) - net.target[None, :]), axis=1)
    half_diag = 0.5 * np.linalg.norm(paving.accepted_hi - paving.accepted_lo, axis=1)
    allowed = paving.delta + math.sqrt(net.k) * half_diag + 1e-9
    return resid, allowed
