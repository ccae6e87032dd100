"""
对数凸性检查：f(x) = E m_0(t)^x · m_0(α + βx)。
"""

import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from libs.environment import EnvironmentModel

from .rates import AnalyticsError

CONVEXITY_TOLERANCE = 1e-10
EQUALITY_TOLERANCE = 1e-12


@dataclass
class ConvexityReport:
    """
    Attributes:
        convex: 所有相邻三元组满足中点对数凸性（容差 1e-10）
        max_violation: log f(x_mid) − 弦值 的最大值
        equality_points: 取等（|差| ≤ 1e-12）的中点
        x_grid: 检查网格
        log_f: 网格上的 log f
    """

    convex: bool
    max_violation: float
    equality_points: List[float] = field(default_factory=list)
    x_grid: List[float] = field(default_factory=list)
    log_f: List[float] = field(default_factory=list)


def log_f_value(model: EnvironmentModel, t: float, alpha: float, beta: float, x: float) -> float:
    """log E m(t)^x m(α + βx)，对数域精确加权和。"""
    return model.log_expectation(
        lambda law: x * law.log_laplace(t) + law.log_laplace(alpha + beta * x)
    )


def log_convexity_check(
    model: EnvironmentModel,
    t: float,
    alpha: float,
    beta: float,
    x_grid: Sequence[float],
    tolerance: float = CONVEXITY_TOLERANCE,
) -> ConvexityReport:
    """
    在 x 网格的每个相邻三元组上检查 log f 的中点凸性。

    Raises:
        AnalyticsError: 网格少于 3 点或某个取值非有限
    """
    xs = sorted(float(x) for x in x_grid)
    if len(xs) < 3:
        raise AnalyticsError("log-convexity check needs at least 3 grid points")
    values = [log_f_value(model, t, alpha, beta, x) for x in xs]
    for x, v in zip(xs, values):
        if not math.isfinite(v):
            raise AnalyticsError(f"log f({x}) is not finite")

    max_violation = -math.inf
    equality: List[float] = []
    for i in range(1, len(xs) - 1):
        weight = (xs[i + 1] - xs[i]) / (xs[i + 1] - xs[i - 1])
        chord = weight * values[i - 1] + (1.0 - weight) * values[i + 1]
        gap = values[i] - chord
        max_violation = max(max_violation, gap)
        if abs(gap) <= EQUALITY_TOLERANCE:
            equality.append(xs[i])

    return ConvexityReport(
        convex=bool(max_violation <= tolerance),
        max_violation=float(max_violation),
        equality_points=equality,
        x_grid=xs,
        log_f=[float(v) for v in np.asarray(values)],
    )
