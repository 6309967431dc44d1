"""
特殊函数：完全/不完全 gamma、Lambert W 两支、球面面积

不完全 gamma 的实现按 x < a+1 走级数、否则走连分式（Lentz 算法）。
两者返回的都是非正则化的值，另一个通过 Γ(a) 相减得到，因此
γ(a,x) + Γ(a,x) = Γ(a) 在舍入误差内恒成立。
"""
import math
import numbers
import sys
from dataclasses import dataclass
from typing import Dict, Optional

from .errors import ConvergenceError, require_domain

EPS = sys.float_info.epsilon
TINY = sys.float_info.min / EPS
INV_E = math.exp(-1.0)

SERIES_MAX_ITER = 1000
CF_MAX_ITER = 500
ACCURACY = 1e-16


@dataclass(frozen=True)
class GammaArgs:
    a: float
    x: float

    def __post_init__(self):
        _check_gamma_args(self.a, self.x)


@dataclass(frozen=True)
class LambertInput:
    rho: float

    def __post_init__(self):
        _check_rho(self.rho)


def _check_gamma_args(a: float, x: float) -> None:
    require_domain(a > 0.0, f"gamma 形状参数必须为正: a={a}", a=a)
    require_domain(x >= 0.0, f"gamma 截断点不能为负: x={x}", x=x)


def gamma_complete(a: float) -> float:
    """Γ(a)，a > 0"""
    require_domain(a > 0.0, f"gamma 形状参数必须为正: a={a}", a=a)
    return math.gamma(a)


def _lower_series(a: float, x: float) -> float:
    # γ(a,x) = x^a e^{-x} Σ x^n / (a(a+1)…(a+n))
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(SERIES_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * ACCURACY:
            return total * math.exp(-x + a * math.log(x))
    raise ConvergenceError(f"不完全 gamma 级数未收敛: a={a}, x={x}", a=a, x=x)


def _upper_continued_fraction(a: float, x: float) -> float:
    # Γ(a,x) = x^a e^{-x} · 1/(x+1-a- 1·(1-a)/(x+3-a- …))
    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, CF_MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return math.exp(-x + a * math.log(x)) * h
    raise ConvergenceError(f"不完全 gamma 连分式未收敛: a={a}, x={x}", a=a, x=x)


def gamma_lower(a: float, x: float) -> float:
    """下不完全 gamma γ(a,x) = ∫₀ˣ t^{a-1}e^{-t} dt"""
    _check_gamma_args(a, x)
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return _lower_series(a, x)
    return max(math.gamma(a) - _upper_continued_fraction(a, x), 0.0)


def gamma_upper(a: float, x: float) -> float:
    """上不完全 gamma Γ(a,x) = ∫ₓ^∞ t^{a-1}e^{-t} dt"""
    _check_gamma_args(a, x)
    if x == 0.0:
        return math.gamma(a)
    if x < a + 1.0:
        return max(math.gamma(a) - _lower_series(a, x), 0.0)
    return _upper_continued_fraction(a, x)


def gamma_regularized_lower(a: float, x: float) -> float:
    """P(a,x) = γ(a,x)/Γ(a)"""
    return gamma_lower(a, x) / math.gamma(a)


def gamma_regularized_upper(a: float, x: float) -> float:
    """Q(a,x) = Γ(a,x)/Γ(a)"""
    return gamma_upper(a, x) / math.gamma(a)


def gamma_bound_checks(a: float, x: float) -> Dict[str, Optional[bool]]:
    """
    逐条检查 gamma 函数的三个不等式

    返回:
        键为不等式名，值为 True/False；不适用时为 None
        - upper_lower_bound: a ≥ 1 时 Γ(a,x) ≥ x^{a-1}e^{-x}
        - upper_upper_bound: a ≥ 1 且 e^x > 2^a 时 Γ(a,x) ≤ a·x^{a-1}e^{-x}
        - lower_half: γ(a,a) ≥ Γ(a)/2
    """
    _check_gamma_args(a, x)
    upper = gamma_upper(a, x)
    checks: Dict[str, Optional[bool]] = {
        "upper_lower_bound": None,
        "upper_upper_bound": None,
        "lower_half": gamma_lower(a, a) >= 0.5 * math.gamma(a) * (1.0 - 1e-14),
    }
    if a >= 1.0:
        ref = _power_exp(a - 1.0, x)
        checks["upper_lower_bound"] = upper >= ref * (1.0 - 1e-13)
        # 对 a < 1 该上界不成立（例如 a=0.5, x=0.5），仅在 a ≥ 1 时检查
        if x > a * math.log(2.0):
            checks["upper_upper_bound"] = upper <= a * ref * (1.0 + 1e-13)
    return checks


def _power_exp(p: float, x: float) -> float:
    """x^p e^{-x}，约定 0^0 = 1"""
    if x == 0.0:
        return 1.0 if p == 0.0 else 0.0
    return math.exp(p * math.log(x) - x)


def _check_rho(rho: float) -> None:
    require_domain(0.0 < rho <= INV_E * (1.0 + 4 * EPS),
                   f"Lambert W 参数必须满足 0 < ρ ≤ 1/e: rho={rho}", rho=rho)


def _halley(w: float, rho: float) -> float:
    # 解 w e^w = -rho
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew + rho
        w1 = w + 1.0
        if w1 == 0.0 or f == 0.0:
            return w
        dw = f / (ew * w1 - (w + 2.0) * f / (2.0 * w1))
        w -= dw
        if abs(dw) <= 1e-15 * (2.0 + abs(w)):
            return w
    ew = math.exp(w)
    if abs(w * ew + rho) <= 1e-14:
        return w
    raise ConvergenceError(f"Lambert W 的 Halley 迭代未收敛: rho={rho}", rho=rho)


def _branch_point_series(rho: float, sign: float) -> float:
    p = sign * math.sqrt(max(2.0 * (1.0 - math.e * rho), 0.0))
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3


def lambert_w0(rho: float) -> float:
    """主支 W₀(−ρ)，取值于 [−1, 0)"""
    _check_rho(rho)
    if abs(rho - INV_E) <= 4 * EPS * INV_E:
        return -1.0
    if math.e * rho > 0.5:
        w = _branch_point_series(rho, 1.0)
    else:
        w = -rho - rho * rho - 1.5 * rho ** 3
    return max(_halley(w, rho), -1.0)


def lambert_wm1(rho: float) -> float:
    """下支 W₋₁(−ρ)，取值于 (−∞, −1]"""
    _check_rho(rho)
    if abs(rho - INV_E) <= 4 * EPS * INV_E:
        return -1.0
    if math.e * rho > 0.5:
        w = _branch_point_series(rho, -1.0)
    else:
        l1 = math.log(rho)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
    return min(_halley(w, rho), -1.0)


def sphere_area(d: int) -> float:
    """单位 (d−1) 维球面面积 |𝕊^{d−1}| = 2π^{d/2}/Γ(d/2)"""
    require_domain(isinstance(d, numbers.Integral) and not isinstance(d, bool) and d >= 1,
                   f"维数必须是正整数: d={d}", d=d)
    d = int(d)
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def unit_ball_volume(d: int) -> float:
    """单位 d 维球体积 π^{d/2}/Γ(d/2+1)"""
    require_domain(isinstance(d, numbers.Integral) and not isinstance(d, bool) and d >= 1,
                   f"维数必须是正整数: d={d}", d=d)
    d = int(d)
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)
