"""
Analytics - 定理陈述中全部临界量与区域检验的闭式 / 确定性计算。
"""

from .convexity import ConvexityReport, log_convexity_check, log_f_value
from .legendre import LegendreTransform, legendre
from .rates import (
    DEFAULT_SEARCH_BOUND,
    AnalyticsError,
    CenteringError,
    CriticalInterval,
    check_annealed_centering,
    check_quenched_centering,
    check_weighted_centering,
    critical_gap,
    critical_interval,
    lambda_fn,
    lambda_prime,
    require_normalized,
    rho_0,
    rho_c,
    sigma2,
    tilde_sigma2,
)
from .regions import GAMMA_GRID, RateReport, RegionFlags, build_rate_report, region_tests

__all__ = [
    "DEFAULT_SEARCH_BOUND",
    "GAMMA_GRID",
    "AnalyticsError",
    "CenteringError",
    "CriticalInterval",
    "ConvexityReport",
    "LegendreTransform",
    "RateReport",
    "RegionFlags",
    "lambda_fn",
    "lambda_prime",
    "critical_gap",
    "critical_interval",
    "require_normalized",
    "rho_c",
    "rho_0",
    "sigma2",
    "tilde_sigma2",
    "check_quenched_centering",
    "check_weighted_centering",
    "check_annealed_centering",
    "region_tests",
    "build_rate_report",
    "legendre",
    "log_convexity_check",
    "log_f_value",
]
