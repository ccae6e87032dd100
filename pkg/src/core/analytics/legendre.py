"""
离散 Legendre 变换：x ↦ sup_t (t·x − λ(t))，取样本网格上的上确界。
"""

from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from observability.logger import get_logger

logger = get_logger(__name__)

CONVEXITY_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class LegendreTransform:
    """
    网格上的 Legendre 变换。

    Attributes:
        ts: 升序 t 网格
        values: λ(t) 样本
        convex: 输入在容差内是否凸
        max_violation: 最大凸性违反量（插值值与样本之差的最大负偏离）
        symmetric: 网格是否关于 0 对称
    """

    ts: np.ndarray
    values: np.ndarray
    convex: bool
    max_violation: float
    symmetric: bool

    def __call__(self, x: Union[float, Sequence[float], np.ndarray]):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        result = np.max(np.outer(xs, self.ts) - self.values[np.newaxis, :], axis=1)
        if np.ndim(x) == 0:
            return float(result[0])
        return result


def legendre(
    samples: Sequence[Tuple[float, float]],
    tolerance: float = CONVEXITY_TOLERANCE,
) -> LegendreTransform:
    """
    由 (t, λ(t)) 样本构造离散 Legendre 变换。

    非凸或非对称网格不报错，只在结果中置标志并记录 WARNING。

    Args:
        samples: (t, value) 列表，至少一个点
        tolerance: 凸性容差

    Returns:
        LegendreTransform: 可调用对象
    """
    if not samples:
        raise ValueError("legendre needs at least one sample")
    pairs = sorted((float(t), float(v)) for t, v in samples)
    ts = np.array([t for t, _ in pairs])
    values = np.array([v for _, v in pairs])

    max_violation = 0.0
    for i in range(1, len(ts) - 1):
        span = ts[i + 1] - ts[i - 1]
        if span <= 0:
            continue
        weight = (ts[i + 1] - ts[i]) / span
        chord = weight * values[i - 1] + (1.0 - weight) * values[i + 1]
        max_violation = max(max_violation, float(values[i] - chord))
    convex = max_violation <= tolerance
    symmetric = bool(np.allclose(ts, -ts[::-1], rtol=0.0, atol=1e-12))

    if not convex:
        logger.warning("legendre input is not convex (max violation %.3e)", max_violation)
    if not symmetric:
        logger.warning("legendre grid is not symmetric about 0")

    return LegendreTransform(
        ts=ts, values=values, convex=convex, max_violation=max_violation, symmetric=symmetric
    )
