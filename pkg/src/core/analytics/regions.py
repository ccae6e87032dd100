"""
区域检验与速率报告。

区域检验用有限 γ 网格代替符号化的 "∃γ>1"：结论可靠但不完备，
网格在 γ = 1 附近加密。Ω_1'、Ω_2 按律族解析判定：两个律族的
Z̃_1(t) 在 m 有限处各阶矩都有限。
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from libs.environment import EnvironmentModel
from libs.offspring import BaseOffspringLaw, FiniteTableLaw, PoissonGaussianLaw
from observability.logger import get_logger

from .rates import (
    DEFAULT_SEARCH_BOUND,
    AnalyticsError,
    CriticalInterval,
    critical_gap,
    critical_interval,
    rho_0,
    rho_c,
    sigma2,
    tilde_sigma2,
)

logger = get_logger(__name__)

GAMMA_GRID = (1.01, 1.05, 1.1, 1.25, 1.5, 2.0)

# 这些律族的 Z̃_1(t) 在 m 有限处具有全部阶矩
_ALL_MOMENTS_FINITE = (PoissonGaussianLaw, FiniteTableLaw)


@dataclass(frozen=True)
class RegionFlags:
    """
    单个 t 处的区域检验结果。

    Attributes:
        t: 检验点
        in_I: t ∈ (t_-, t_+)
        in_I_prime: 存在网格 γ 使 E[m(γt)/m(t)^γ] < 1
        in_Omega1: E log E_ξ W_1(t)² < ∞
        in_Omega1_prime: 存在 γ > 1 使 E Z̃_1(t)^γ < ∞
        in_Omega2: E Z̃_1(t) log⁺ Z̃_1(t) < ∞
        gamma_witness: 使 in_I_prime 成立的最小网格 γ
    """

    t: float
    in_I: bool
    in_I_prime: bool
    in_Omega1: bool
    in_Omega1_prime: bool
    in_Omega2: bool
    gamma_witness: Optional[float] = None


def _moments_finite(law: BaseOffspringLaw, t: float) -> bool:
    return isinstance(law, _ALL_MOMENTS_FINITE) and math.isfinite(law.log_laplace(t))


def region_tests(
    model: EnvironmentModel,
    t: float,
    interval: Optional[CriticalInterval] = None,
    search_bound: float = DEFAULT_SEARCH_BOUND,
) -> RegionFlags:
    """
    计算 t 处的全部区域标志。

    Args:
        model: 环境模型
        t: 检验点
        interval: 预先算好的临界区间（批量检验时复用）
        search_bound: 未给出 interval 时的搜索半径

    Returns:
        RegionFlags: 检验结果；非超临界模型的 in_I 为 False
    """
    if interval is None:
        try:
            interval = critical_interval(model, search_bound)
        except AnalyticsError:
            interval = None
    in_i = interval is not None and interval.contains(t)

    witness = None
    for gamma in GAMMA_GRID:
        log_mean = model.log_expectation(
            lambda law: law.log_laplace(gamma * t) - gamma * law.log_laplace(t)
        )
        if log_mean < 0:
            witness = gamma
            break

    states = model.active_states()
    try:
        omega1 = math.isfinite(model.expectation(lambda law: law.log_w1_moment(t, 2.0)))
    except (ArithmeticError, ValueError):
        omega1 = False
    families_finite = all(_moments_finite(state.law, t) for state in states)

    return RegionFlags(
        t=float(t),
        in_I=in_i,
        in_I_prime=witness is not None,
        in_Omega1=omega1,
        in_Omega1_prime=families_finite,
        in_Omega2=families_finite,
        gamma_witness=witness,
    )


@dataclass
class RateReport:
    """
    解析临界量汇总。

    Attributes:
        t_minus, t_plus: 临界区间端点（可为 ±inf）
        rho_c: 归一化模型的 ρ_c
        rho_0: p -> ρ_0(p)（仅 i.i.d. 环境）
        sigma2, tilde_sigma2: 中心化不成立时为 None
        regions: t 网格上逐点区域标志
        gaps: t 网格上逐点 g(t)
        notes: 不适用项的说明
    """

    t_minus: float
    t_plus: float
    rho_c: float
    rho_0: Dict[float, float] = field(default_factory=dict)
    sigma2: Optional[float] = None
    tilde_sigma2: Optional[float] = None
    regions: List[RegionFlags] = field(default_factory=list)
    gaps: List[float] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        """每个 t 网格点一行。"""
        rows = []
        for flags, gap in zip(self.regions, self.gaps):
            row = asdict(flags)
            row.pop("gamma_witness")
            row["gap"] = gap
            rows.append(row)
        columns = ["t", "gap", "in_I", "in_I_prime", "in_Omega1", "in_Omega1_prime", "in_Omega2"]
        return pd.DataFrame(rows, columns=columns)

    def to_summary(self) -> Dict[str, Any]:
        return {
            "t_minus": self.t_minus,
            "t_plus": self.t_plus,
            "rho_c": self.rho_c,
            "rho_0": {float(p): v for p, v in self.rho_0.items()},
            "sigma2": self.sigma2,
            "tilde_sigma2": self.tilde_sigma2,
            "notes": list(self.notes),
        }


def build_rate_report(
    model: EnvironmentModel,
    t_grid: Sequence[float],
    p_values: Sequence[float] = (2.0,),
    t_star: float = 1.0,
    search_bound: float = DEFAULT_SEARCH_BOUND,
) -> RateReport:
    """
    汇总临界区间、ρ_c、ρ_0、σ²、σ̃² 与区域标志。

    ρ_c、ρ_0 在 t* 处归一化后的模型上计算。

    Raises:
        AnalyticsError: 模型非超临界
        EnvironmentModelError: 模型无法在 t* 处归一化（libs.environment）
    """
    interval = critical_interval(model, search_bound)
    normalized = model.normalize_at(t_star)
    notes: List[str] = []

    rho_zero: Dict[float, float] = {}
    if model.is_iid:
        for p in p_values:
            rho_zero[float(p)] = rho_0(normalized, p)
    else:
        notes.append(f"rho_0 not reported: '{model.process.kind}' environment is not iid")

    try:
        s2: Optional[float] = sigma2(model)
    except AnalyticsError as e:
        s2 = None
        notes.append(f"sigma2 not reported: {e}")
    try:
        ts2: Optional[float] = tilde_sigma2(model)
    except AnalyticsError as e:
        ts2 = None
        notes.append(f"tilde_sigma2 not reported: {e}")

    regions = [region_tests(model, t, interval=interval) for t in t_grid]
    gaps = [critical_gap(model, t) for t in t_grid]
    for note in notes:
        logger.info(note)

    return RateReport(
        t_minus=interval.t_minus,
        t_plus=interval.t_plus,
        rho_c=rho_c(normalized),
        rho_0=rho_zero,
        sigma2=s2,
        tilde_sigma2=ts2,
        regions=regions,
        gaps=gaps,
        notes=notes,
    )
