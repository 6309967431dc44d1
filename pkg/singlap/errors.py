"""
singlap 异常层级

所有对外抛出的异常都继承 SinglapError，CLI 据此把错误映射为退出码 2，
并以 JSON 形式写到 stderr。
"""
from typing import Any, Dict, Optional


class SinglapError(Exception):
    """根异常"""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        payload = {"error": type(self).__name__, "message": self.message}
        payload.update(self.details)
        return payload


class DomainError(SinglapError, ValueError):
    """函数参数落在定义域之外（a ≤ 0、ρ ∉ (0, 1/e]、d < 1 等）"""


class PreconditionError(SinglapError, ValueError):
    """定理假设或操作前置条件不成立"""

    def __init__(self, message: str, inequality: Optional[str] = None, **details: Any):
        if inequality is not None:
            details["inequality"] = inequality
        super().__init__(message, **details)
        self.inequality = inequality


class UnsupportedDimensionError(PreconditionError):
    """边界公式在 d = 1 时退化"""


class ConvergenceError(SinglapError, RuntimeError):
    """迭代在最大步数内未达到精度"""


class EstimationError(SinglapError, ValueError):
    """剖面无法给出交点或角度估计"""


def require(condition: bool, message: str, inequality: Optional[str] = None, **details: Any) -> None:
    """前置条件检查，失败时抛出 PreconditionError"""
    if not condition:
        raise PreconditionError(message, inequality=inequality, **details)


def require_domain(condition: bool, message: str, **details: Any) -> None:
    """定义域检查，失败时抛出 DomainError"""
    if not condition:
        raise DomainError(message, **details)
