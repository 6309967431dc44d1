"""
闭式预测与误差包络

- 平坦片内部：L_tⁱf(x) = t^{(d+1)/2}(A v_n sinθ r e^{−sin²θ r²} + B e^{−r₀²})
- 平坦片边界：Â₁ 信号项 + Â₂ 边界项 + 尾项
- 一般流形（(L,R)-正则）：Â 的相对误差 (1+3C_{L,R})，曲率项与尾项
- 两片相交处 L_t = L_t¹ + L_t² 的和包络

这里的 A、Â 都已乘上密度 p，平坦极限为 A = pπ^{d/2}。
包络的上下界各加一个固定 slack（THEORY_CFG["slack"]）。
超出定理假设区域时直接拒绝，不外推。
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .config import THEORY_CFG
from .errors import PreconditionError, UnsupportedDimensionError, require
from .manifold_gen import Scene
from .quadrature import composite_rule
from .special_functions import gamma_complete, gamma_lower, gamma_upper, sphere_area

# A 的中心值约定：相对 pπ^{d/2} 的倍数
A_CONVENTIONS = {
    "limit": 1.0,     # A → pπ^{d/2}（r₀ → ∞）
    "doubled": 2.0,   # A → 2pπ^{d/2}
}
A_LOWER_VARIANTS = ("statement", "proof")
J_LOWER_VARIANTS = ("proof", "remark")
BOUNDARY_CONVENTIONS = ("rederived", "as-stated")

_BOUNDARY_NODES = 128


@dataclass
class LocalGeometry:
    x0: np.ndarray
    x: np.ndarray
    piece_index: int
    r: float
    theta: float
    v_n: float
    r0: float
    d: int
    x_hat: Optional[np.ndarray] = None
    t: Optional[float] = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        require(self.r >= 0.0, f"r 不能为负: r={self.r}")
        require(-1e-15 <= self.theta <= math.pi / 2 + 1e-15, f"θ 必须在 [0, π/2]: theta={self.theta}")
        require(abs(self.v_n) <= 1.0 + 1e-12, f"|v_n| 不能超过 1: v_n={self.v_n}")
        require(self.r0 > 0.0, f"r0 必须为正: r0={self.r0}")
        require(isinstance(self.d, (int, np.integer)) and self.d >= 1, f"内在维数必须 ≥ 1: d={self.d}", "d ≥ 1")
        if self.t is not None:
            dist = float(np.linalg.norm(self.x - self.x0))
            require(abs(dist - self.r * math.sqrt(self.t)) <= 1e-12 * max(1.0, dist),
                    "‖x − x0‖ 与 r√t 不一致")
            if self.x_hat is not None:
                off = float(np.linalg.norm(self.x - np.asarray(self.x_hat)))
                require(abs(off - self.r * math.sqrt(self.t) * math.sin(self.theta)) <= 1e-12 * max(1.0, dist),
                        "‖x̂ − x‖ 与 r√t·sinθ 不一致")

    @property
    def signal_shape(self) -> float:
        """v_n sinθ r e^{−sin²θ r²}"""
        s = math.sin(self.theta)
        return self.v_n * s * self.r * math.exp(-(s * self.r) ** 2)

    def to_dict(self) -> Dict[str, Any]:
        return {"x0": self.x0.tolist(), "x": self.x.tolist(), "piece_index": self.piece_index,
                "r": self.r, "theta": self.theta, "v_n": self.v_n, "r0": self.r0, "d": int(self.d)}


@dataclass
class BoundaryGeometry:
    k0: float
    delta0: float
    v_n_boundary: float
    r: Optional[float] = None
    theta: Optional[float] = None
    r0: Optional[float] = None

    def __post_init__(self):
        require(self.delta0 > 0.0, f"δ0 必须为正: delta0={self.delta0}")
        tol = 1e-12 * self.delta0
        if not (-self.delta0 - tol <= self.k0 <= self.delta0 + tol):
            raise PreconditionError(
                f"k0 必须落在 [−δ0, δ0]: k0={self.k0}, delta0={self.delta0}",
                inequality="-delta0 <= k0 <= delta0")
        self.k0 = min(max(self.k0, -self.delta0), self.delta0)
        require(abs(self.v_n_boundary) <= 1.0 + 1e-12, f"|v_n∂| 不能超过 1: {self.v_n_boundary}")
        if self.r is not None and self.theta is not None and self.r0 is not None:
            lhs = self.delta0 ** 2 + (self.r * math.sin(self.theta)) ** 2
            require(abs(lhs - self.r0 ** 2) <= 1e-12 * max(1.0, self.r0 ** 2), "δ0² + r²sin²θ ≠ r0²")

    def to_dict(self) -> Dict[str, Any]:
        return {"k0": self.k0, "delta0": self.delta0, "v_n_boundary": self.v_n_boundary}


@dataclass
class PredictionEnvelope:
    central: float
    lower: float
    upper: float
    terms: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        require(self.lower <= self.central <= self.upper,
                f"包络不满足 lower ≤ central ≤ upper: {self.lower!r}, {self.central!r}, {self.upper!r}")

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def to_dict(self) -> Dict[str, Any]:
        return {"central": self.central, "lower": self.lower, "upper": self.upper, "terms": dict(self.terms)}


def local_geometry(scene: Scene, piece_index: int, x: np.ndarray, v: np.ndarray, t: float,
                   R: float) -> LocalGeometry:
    """
    从场景求 x 相对第 piece_index 片的局部坐标 (r, θ, v_n, r₀)

    x̂ 是 x 到该片在 x0 处切平面的正交投影（平坦片即该片本身），
    v_n = v·(x − x̂)/‖x − x̂‖，x 在切平面上时取 0
    """
    require(scene.x0 is not None, "场景没有奇异点 x0")
    require(t > 0.0 and R > 0.0, f"t 与 R 必须为正: t={t}, R={R}")
    piece = scene.pieces[piece_index]
    x = np.asarray(x, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    x0 = scene.x0
    basis = piece.tangent_basis(piece.chart(x0))[0]
    dx = x - x0
    x_hat = x0 + basis @ (basis.T @ dx)
    h = x - x_hat
    dist = float(np.linalg.norm(dx))
    off = float(np.linalg.norm(h))
    sin_theta = min(off / dist, 1.0) if dist > 0.0 else 0.0
    v_n = float(v @ h) / off if off > 1e-300 else 0.0
    return LocalGeometry(x0, x, piece_index, dist / math.sqrt(t), math.asin(sin_theta),
                         max(-1.0, min(1.0, v_n)), R / math.sqrt(t), piece.d, x_hat, t)


def boundary_geometry(scene: Scene, geom: LocalGeometry, v: np.ndarray, t: float) -> BoundaryGeometry:
    """k0 = K/√t（x̂ 到最近边界面的有符号距离，内部为负），δ0 = √(r₀² − r²sin²θ)"""
    piece = scene.pieces[geom.piece_index]
    x_hat = geom.x_hat if geom.x_hat is not None else geom.x
    face = piece.nearest_boundary(piece.chart(x_hat)[0])
    s = math.sin(geom.theta)
    delta0 = math.sqrt(max(geom.r0 ** 2 - (geom.r * s) ** 2, 0.0))
    v_nb = float(np.asarray(v, dtype=float) @ face["outward_normal"])
    return BoundaryGeometry(face["K"] / math.sqrt(t), delta0, max(-1.0, min(1.0, v_nb)),
                            geom.r, geom.theta, geom.r0)


def check_hypotheses(geom: LocalGeometry, t: float) -> None:
    """平坦定理的假设：r₀ > 2，t ≤ R²/(d/2+1)，r < r₀/2"""
    require(geom.d >= 1, f"内在维数必须 ≥ 1: d={geom.d}", "d >= 1")
    require(t > 0.0, f"带宽必须为正: t={t}", "t > 0")
    require(geom.r0 > 2.0, f"需要 r0 > 2: r0={geom.r0}", "r0 > 2", r0=geom.r0)
    require(geom.r0 ** 2 >= geom.d / 2.0 + 1.0,
            f"需要 t ≤ R²/(d/2+1): r0²={geom.r0 ** 2}, d={geom.d}", "t <= R^2/(d/2+1)", r0=geom.r0)
    require(geom.r < geom.r0 / 2.0, f"需要 r < r0/2: r={geom.r}, r0={geom.r0}", "r < r0/2",
            r=geom.r, r0=geom.r0)


def check_curvature_hypothesis(L: float, R: float, t: float) -> None:
    require(L >= 0.0, f"曲率常数不能为负: L={L}", "L >= 0")
    lhs = 4.0 * L * R * R / math.sqrt(t)
    require(lhs <= 0.5, f"需要 4LR²/√t ≤ 1/2: 实际 {lhs:.6g}", "4 L R^2 / sqrt(t) <= 1/2",
            L=L, R=R, t=t)


def signal_profile(u):
    """信号形状 u·e^{−u²}，在 u = ±1/√2 取极值"""
    u = np.asarray(u, dtype=float)
    out = u * np.exp(-u * u)
    return float(out) if out.ndim == 0 else out


def signal_argmax(theta: float) -> float:
    """固定 θ 时 r e^{−sin²θ r²} 的极大点 r = 1/(√2 sinθ)"""
    s = math.sin(theta)
    require(s > 0.0, f"θ = 0 时信号恒为 0，没有极大点: theta={theta}", "sin(theta) > 0")
    return 1.0 / (math.sqrt(2.0) * s)


def a_bounds(d: int, r0: float, density: float, variant: Optional[str] = None,
             convention: Optional[str] = None) -> Tuple[float, float]:
    """A 的区间 [A_lo, A_hi]（已乘密度与约定倍数）"""
    variant = variant or THEORY_CFG["a_lower_variant"]
    convention = convention or THEORY_CFG["a_convention"]
    require(variant in A_LOWER_VARIANTS, f"未知的 A 下界版本: {variant}")
    require(convention in A_CONVENTIONS, f"未知的 A 约定: {convention}")
    full = math.pi ** (d / 2.0)
    area = sphere_area(d)
    if variant == "statement":
        other = 2.0 * full - area * 2.0 ** (d / 2.0) * r0 ** (d - 1) * math.exp(1.0 - r0 * r0)
    else:
        other = 2.0 * full - area * r0 ** (d - 2) * math.exp(-r0 * r0)
    factor = A_CONVENTIONS[convention] * density
    return factor * 0.5 * max(full, other), factor * full


def tail_bound(d: int, r0: float, density: float) -> float:
    """|B| e^{−r₀²} 的上界 ((d+1)/4) r₀^d |𝕊^{d−1}| p e^{−r₀²}"""
    return (d + 1) / 4.0 * r0 ** d * sphere_area(d) * density * math.exp(-r0 * r0)


def exact_a(d: int, delta0: float, density: float) -> float:
    """球 |z| ≤ δ0 内的 p∫e^{−|z|²}dz = p(π^{d/2} − ½|𝕊^{d−1}|Γ(d/2, δ0²))"""
    return density * (math.pi ** (d / 2.0) - 0.5 * sphere_area(d) * gamma_upper(d / 2.0, delta0 * delta0))


def _scaled(lo_hi: Tuple[float, float], s: float) -> Tuple[float, float]:
    a, b = lo_hi[0] * s, lo_hi[1] * s
    return (a, b) if a <= b else (b, a)


def _assemble(central: float, parts: List[Tuple[float, float]], terms: Dict[str, Any]) -> PredictionEnvelope:
    slack = THEORY_CFG["slack"]
    lower = math.fsum(p[0] for p in parts) - slack
    upper = math.fsum(p[1] for p in parts) + slack
    return PredictionEnvelope(central, min(lower, central), max(upper, central), terms)


def predict_flat_interior(geom: LocalGeometry, t: float, area: float, weight: float = 1.0,
                          convention: Optional[str] = None,
                          lower_variant: Optional[str] = None) -> PredictionEnvelope:
    """平坦片内部（远离边界）的预测；p = weight/area"""
    check_hypotheses(geom, t)
    require(area > 0.0, f"面积必须为正: area={area}")
    density = weight / area
    convention = convention or THEORY_CFG["a_convention"]
    d = geom.d
    scale = t ** ((d + 1) / 2.0)
    shape = geom.signal_shape
    a_lo, a_hi = a_bounds(d, geom.r0, density, lower_variant, convention)
    a_central = A_CONVENTIONS[convention] * density * math.pi ** (d / 2.0)
    tail = scale * tail_bound(d, geom.r0, density)
    signal = _scaled((a_lo, a_hi), scale * shape)
    central = scale * a_central * shape
    delta0 = math.sqrt(max(geom.r0 ** 2 - (geom.r * math.sin(geom.theta)) ** 2, 0.0))
    terms = {
        "signal": central, "signal_range": list(signal), "tail": tail,
        "A": a_central, "A_lower": a_lo, "A_upper": a_hi,
        "A_exact": A_CONVENTIONS[convention] * exact_a(d, delta0, density),
        "convention": convention,
    }
    return _assemble(central, [signal, (-tail, tail)], terms)


def boundary_exact_a1(bgeom: BoundaryGeometry, d: int, density: float) -> float:
    """
    Â₁ = p(|𝕊^{d−2}|/2) J，J = ∫_{k0}^{δ0} e^{−h²} γ((d−1)/2, δ0² − h²) dh

    代换 h = δ0 cos φ 消去 h = δ0 处的端点奇异性后做复合 Gauss-Legendre
    """
    if d == 1:
        raise UnsupportedDimensionError("边界定理在 d = 1 时退化（γ(0, ·) 无定义）",
                                        inequality="d >= 2", d=d)
    a = (d - 1) / 2.0
    delta0, k0 = bgeom.delta0, bgeom.k0
    phi_max = math.acos(max(-1.0, min(1.0, k0 / delta0)))
    if phi_max == 0.0:
        return 0.0
    nodes, weights = composite_rule(0.0, phi_max, _BOUNDARY_NODES)
    h = delta0 * np.cos(nodes)
    q = (delta0 * np.sin(nodes)) ** 2
    gam = np.array([gamma_lower(a, float(qi)) for qi in q])
    integrand = np.exp(-h * h) * gam * delta0 * np.sin(nodes)
    j = math.fsum((weights * integrand).tolist())
    return density * 0.5 * sphere_area(d - 1) * j


def boundary_a1_bounds(bgeom: BoundaryGeometry, d: int, density: float,
                       variant: str = "proof") -> Tuple[float, float]:
    """Â₁ 的区间；variant="remark" 时下界第二项不带 e^{−δ0²}"""
    if d == 1:
        raise UnsupportedDimensionError("边界定理在 d = 1 时退化", inequality="d >= 2", d=d)
    require(variant in J_LOWER_VARIANTS, f"未知的 J 下界版本: {variant}")
    a = (d - 1) / 2.0
    delta0, k0 = bgeom.delta0, bgeom.k0
    q = max(delta0 * delta0 - k0 * k0, 0.0)
    damp = math.exp(-delta0 * delta0) if variant == "proof" else 1.0
    j_lo = (math.exp(-k0 * k0) * gamma_lower(a, q) - 2.0 * damp * q ** a / (d - 1)) / (2.0 * delta0)
    j_hi = gamma_complete(a) * math.sqrt(math.pi)
    c = density * 0.5 * sphere_area(d - 1)
    return c * max(j_lo, 0.0), c * j_hi


def boundary_term(bgeom: BoundaryGeometry, d: int, t: float, theta: float, r: float, density: float,
                  convention: Optional[str] = None) -> float:
    """
    Â₂ 边界项

    "rederived": p t^{(d+1)/2} v_n∂ (|𝕊^{d−2}|/2)[½e^{−k0²}γ(a, δ0²−k0²) − e^{−δ0²}(δ0²−k0²)^a/(d−1)] e^{−sin²θ r²}
    "as-stated": t^{d/2} v_n∂ (|𝕊^{d−2}|/2)[e^{−δ0²}(δ0²−k0²)^a/(d−1) + ½e^{−k0²}γ(a, δ0²−k0²)] e^{−sin²θ r²}
    """
    if d == 1:
        raise UnsupportedDimensionError("边界定理在 d = 1 时退化", inequality="d >= 2", d=d)
    convention = convention or THEORY_CFG["boundary_convention"]
    require(convention in BOUNDARY_CONVENTIONS, f"未知的边界项约定: {convention}")
    a = (d - 1) / 2.0
    delta0, k0 = bgeom.delta0, bgeom.k0
    q = max(delta0 * delta0 - k0 * k0, 0.0)
    gam_part = 0.5 * math.exp(-k0 * k0) * gamma_lower(a, q) if q > 0.0 else 0.0
    rem_part = math.exp(-delta0 * delta0) * q ** a / (d - 1)
    decay = math.exp(-(math.sin(theta) * r) ** 2)
    half_sphere = 0.5 * sphere_area(d - 1)
    if convention == "rederived":
        return density * t ** ((d + 1) / 2.0) * bgeom.v_n_boundary * half_sphere * (gam_part - rem_part) * decay
    return t ** (d / 2.0) * bgeom.v_n_boundary * half_sphere * (rem_part + gam_part) * decay


def predict_flat_boundary(geom: LocalGeometry, bgeom: BoundaryGeometry, t: float, area: float,
                          weight: float = 1.0, j_variant: str = "proof",
                          convention: Optional[str] = None) -> PredictionEnvelope:
    """
    平坦片边界附近的三项包络：Â₁ 信号项、Â₂ 边界项、尾项

    中心值用 Â₁ 的精确积分；信号项区间取 Â₁ 的上下界
    """
    if geom.d == 1:
        raise UnsupportedDimensionError("边界定理在 d = 1 时退化（(d−1)/2 = 0）",
                                        inequality="d >= 2", d=1)
    check_hypotheses(geom, t)
    require(area > 0.0, f"面积必须为正: area={area}")
    density = weight / area
    d = geom.d
    scale = t ** ((d + 1) / 2.0)
    shape = geom.signal_shape
    a1 = boundary_exact_a1(bgeom, d, density)
    a1_lo, a1_hi = boundary_a1_bounds(bgeom, d, density, j_variant)
    a1_lo, a1_hi = min(a1_lo, a1), max(a1_hi, a1)
    b_term = boundary_term(bgeom, d, t, geom.theta, geom.r, density, convention)
    tail = scale * tail_bound(d, geom.r0, density)
    signal = _scaled((a1_lo, a1_hi), scale * shape)
    central = scale * a1 * shape + b_term
    terms = {
        "signal": scale * a1 * shape, "signal_range": list(signal), "boundary": b_term, "tail": tail,
        "A1": a1, "A1_lower": a1_lo, "A1_upper": a1_hi,
        "k0": bgeom.k0, "delta0": bgeom.delta0,
        "convention": convention or THEORY_CFG["boundary_convention"],
    }
    return _assemble(central, [signal, (b_term, b_term), (-tail, tail)], terms)


def curvature_constant(L: float, R: float, t: float) -> float:
    """C_{L,R} 的上界 4(4LR²)²R/t + LR²(1 + 4LR²)"""
    q = 4.0 * L * R * R
    return 4.0 * q * q * R / t + L * R * R * (1.0 + q)


def _general_parts(geom: LocalGeometry, t: float, L: float, R: float, density: float,
                   convention: Optional[str], lower_variant: Optional[str]):
    check_hypotheses(geom, t)
    check_curvature_hypothesis(L, R, t)
    require(abs(R / math.sqrt(t) - geom.r0) <= 1e-9 * geom.r0, f"R/√t 与 r0 不一致: R={R}, r0={geom.r0}")
    d = geom.d
    a_lo, a_hi = a_bounds(d, geom.r0, density, lower_variant, convention)
    C = curvature_constant(L, R, t)
    if L == 0.0:
        ahat = (a_lo, a_hi)
    else:
        # |A − Â| ≤ (1+3C)A 且 Â ≥ 0
        ahat = (max(0.0, -3.0 * C * a_hi), (2.0 + 3.0 * C) * a_hi)
    convention = convention or THEORY_CFG["a_convention"]
    a_central = A_CONVENTIONS[convention] * density * math.pi ** (d / 2.0)
    return d, C, ahat, a_central


def predict_general(geom: LocalGeometry, t: float, L: float, R: float, diam: float,
                    area: float, weight: float = 1.0, convention: Optional[str] = None,
                    lower_variant: Optional[str] = None) -> PredictionEnvelope:
    """
    (L,2R)-正则流形的包络

    L_tⁱf(x) = t^{(d+1)/2} Â v_n r sinθ e^{−r²sin²θ} + t^{d/2} C_{L,R} 4pπ^{d/2} + D e^{−r₀²}
    L = 0 时退化为平坦片的 A 区间
    """
    require(area > 0.0 and diam >= 0.0, f"面积必须为正、直径非负: area={area}, diam={diam}")
    density = weight / area
    d, C, ahat, a_central = _general_parts(geom, t, L, R, density, convention, lower_variant)
    scale = t ** ((d + 1) / 2.0)
    shape = geom.signal_shape
    signal = _scaled(ahat, scale * shape)
    curvature = t ** (d / 2.0) * C * 4.0 * density * math.pi ** (d / 2.0)
    tail = diam * math.exp(-geom.r0 ** 2)
    if L == 0.0:
        tail += scale * tail_bound(d, geom.r0, density)
    central = scale * a_central * shape
    terms = {
        "signal": central, "signal_range": list(signal), "curvature": curvature, "tail": tail,
        "C_LR": C, "A_hat_lower": ahat[0], "A_hat_upper": ahat[1],
    }
    return _assemble(central, [signal, (-curvature, curvature), (-tail, tail)], terms)


def error_bound(geom: LocalGeometry, t: float, L: float, R: float, diam: float, area: float,
                weight: float = 1.0) -> float:
    """
    x 位于该片上时 |L_tⁱf(x)| 的上界
    t^{d/2}(Â_max L R² + C_{L,R} 4pπ^{d/2}) + diam·e^{−r₀²}
    """
    density = weight / area
    d, C, ahat, _ = _general_parts(geom, t, L, R, density, None, None)
    return (t ** (d / 2.0) * (ahat[1] * L * R * R + C * 4.0 * density * math.pi ** (d / 2.0))
            + diam * math.exp(-geom.r0 ** 2) + THEORY_CFG["slack"])


def predict_intersection_sum(geom: LocalGeometry, t: float, L: float, R: float, diam: float,
                             area: float, weight: float = 1.0, convention: Optional[str] = None,
                             lower_variant: Optional[str] = None) -> PredictionEnvelope:
    """
    x ∈ Ω₂ 处全算子 L_t f(x) 的包络，geom 为 x 相对 Ω₁ 的局部坐标

    L_t f(x) = t^{(d+1)/2} Â v_n r sinθ₁ e^{−r²sin²θ₁} + t^{d/2} Â L R²
               + t^{d/2} C_{L,R} 8pπ^{d/2} + 2e^{−r₀²} D
    """
    require(geom.r < geom.r0, "x 必须位于 B_R(x0) 内", "||x - x0|| < R")
    require(area > 0.0 and diam >= 0.0, f"面积必须为正、直径非负: area={area}, diam={diam}")
    density = weight / area
    d, C, ahat, a_central = _general_parts(geom, t, L, R, density, convention, lower_variant)
    scale = t ** ((d + 1) / 2.0)
    shape = geom.signal_shape
    signal = _scaled(ahat, scale * shape)
    chart = t ** (d / 2.0) * ahat[1] * L * R * R
    curvature = t ** (d / 2.0) * C * 8.0 * density * math.pi ** (d / 2.0)
    tail = 2.0 * math.exp(-geom.r0 ** 2) * diam
    if L == 0.0:
        tail += 2.0 * scale * tail_bound(d, geom.r0, density)
    central = scale * a_central * shape
    terms = {
        "signal": central, "signal_range": list(signal), "chart": chart, "curvature": curvature,
        "tail": tail, "C_LR": C,
    }
    return _assemble(central, [signal, (-chart, chart), (-curvature, curvature), (-tail, tail)], terms)


def calibrate_a_convention(scene: Scene, piece_index: int, points: np.ndarray, v: np.ndarray,
                           t: float, R: float, quad_resolution: Optional[int] = None) -> Dict[str, Any]:
    """
    用求积 oracle 在若干点上比较各 A 约定的中心值，选最大误差最小的那个

    返回:
        {"errors": {约定: 最大绝对误差}, "selected": 约定名}
    """
    from .laplacian import expected_laplacian_oracle

    piece = scene.pieces[piece_index]
    errors = {name: 0.0 for name in A_CONVENTIONS}
    for x in np.atleast_2d(points):
        geom = local_geometry(scene, piece_index, x, v, t, R)
        oracle = expected_laplacian_oracle(scene, piece_index, x, v, t, quad_resolution).value
        for name in A_CONVENTIONS:
            pred = predict_flat_interior(geom, t, piece.area, piece.weight, convention=name)
            errors[name] = max(errors[name], abs(pred.central - oracle))
    selected = min(errors, key=errors.get)
    return {"errors": errors, "selected": selected}
