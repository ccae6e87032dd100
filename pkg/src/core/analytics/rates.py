"""
临界量计算模块。

此模块提供：
- Λ(t) = E log m_0(t) 与 Λ'(t) = E m_0'(t)/m_0(t)（对平稳权重的精确加权和）
- 临界区间 (t_-, t_+)：g(t) = tΛ'(t) − Λ(t) 的两个根
- ρ_c、ρ_0(p)（归一化模型）
- σ²、σ̃² 及中心化检查
"""

import math
from typing import NamedTuple, Optional

from scipy.optimize import brentq

from libs.environment import EnvironmentModel

DEFAULT_SEARCH_BOUND = 50.0
ROOT_XTOL = 1e-12
NORMALIZATION_TOLERANCE = 1e-9
CENTERING_TOLERANCE = 1e-10


class AnalyticsError(Exception):
    """解析量前提不满足时抛出的错误。"""
    pass


class CenteringError(AnalyticsError):
    """
    位移中心化条件不成立。

    Attributes:
        state_id: 违反条件的状态 id（退火条件违反时为 None）
    """

    def __init__(self, message: str, state_id: Optional[str] = None):
        super().__init__(message)
        self.state_id = state_id


class CriticalInterval(NamedTuple):
    """临界区间 I = (t_-, t_+)，端点可为 ±inf。"""

    t_minus: float
    t_plus: float

    @property
    def minus_infinite(self) -> bool:
        return math.isinf(self.t_minus)

    @property
    def plus_infinite(self) -> bool:
        return math.isinf(self.t_plus)

    def contains(self, t: float) -> bool:
        return self.t_minus < t < self.t_plus


def lambda_fn(model: EnvironmentModel, t: float) -> float:
    """Λ(t) = E log m_ξ(t)。"""
    return model.expectation(lambda law: law.log_laplace(t))


def lambda_prime(model: EnvironmentModel, t: float) -> float:
    """Λ'(t) = E m_ξ'(t)/m_ξ(t)。"""
    return model.expectation(lambda law: law.log_derivative(t))


def critical_gap(model: EnvironmentModel, t: float) -> float:
    """g(t) = tΛ'(t) − Λ(t)。"""
    return t * lambda_prime(model, t) - lambda_fn(model, t)


def critical_interval(
    model: EnvironmentModel, search_bound: float = DEFAULT_SEARCH_BOUND
) -> CriticalInterval:
    """
    求 g(t) = 0 在 (0, bound] 与 [−bound, 0) 上的根。

    g 在 t > 0 上单调增、在 t < 0 上单调减（Λ 凸），每侧至多一个根；
    若整个半区间上 g ≤ 0，则该端点报告为 ±inf。

    Args:
        model: 环境模型
        search_bound: 搜索半径

    Returns:
        CriticalInterval: (t_-, t_+)

    Raises:
        AnalyticsError: Λ(0) ≤ 0（非超临界）或 search_bound ≤ 0
    """
    if not search_bound > 0:
        raise AnalyticsError(f"search_bound must be > 0, got {search_bound}")
    lambda_zero = lambda_fn(model, 0.0)
    if not lambda_zero > 0:
        raise AnalyticsError(
            f"critical interval needs a supercritical model, Lambda(0)={lambda_zero}"
        )

    def root(sign: float) -> float:
        def gap(u: float) -> float:
            return critical_gap(model, sign * u)

        if gap(search_bound) <= 0:
            return sign * math.inf
        return sign * brentq(gap, 0.0, search_bound, xtol=ROOT_XTOL)

    return CriticalInterval(t_minus=root(-1.0), t_plus=root(1.0))


def require_normalized(model: EnvironmentModel) -> None:
    """
    检查每个状态都满足 m̄(1) = 1。

    Raises:
        AnalyticsError: 某状态未归一化
    """
    for state in model.active_states():
        log_m = state.law.log_laplace(1.0)
        if abs(log_m) > NORMALIZATION_TOLERANCE:
            raise AnalyticsError(
                f"model is not normalized: state '{state.state_id}' has log m(1) = {log_m}"
            )


def rho_c(model: EnvironmentModel) -> float:
    """ρ_c = exp(−Λ(2)/2)，要求模型已归一化。"""
    require_normalized(model)
    return math.exp(-0.5 * lambda_fn(model, 2.0))


def rho_0(model: EnvironmentModel, p: float) -> float:
    """
    ρ_0 = min{(E m̄(p))^{−1/p}, (E m̄(2)^{p/2})^{−1/p}}。

    Raises:
        AnalyticsError: p < 2、环境非 i.i.d. 或模型未归一化
    """
    if not p >= 2:
        raise AnalyticsError(f"rho_0 needs p >= 2, got {p}")
    if not model.is_iid:
        raise AnalyticsError(
            f"rho_0 is defined for iid environments only, got '{model.process.kind}'"
        )
    require_normalized(model)
    log_mean_p = model.log_expectation(lambda law: law.log_laplace(p))
    log_mean_2 = model.log_expectation(lambda law: 0.5 * p * law.log_laplace(2.0))
    return math.exp(-max(log_mean_p, log_mean_2) / p)


def check_quenched_centering(model: EnvironmentModel) -> None:
    """逐状态检查 E_ξ Σ L_i = 0。

    Raises:
        CenteringError: 携带违反条件的状态 id
    """
    for state in model.active_states():
        drift = state.law.displacement_sum_mean()
        if abs(drift) > CENTERING_TOLERANCE:
            raise CenteringError(
                f"state '{state.state_id}' is not centered: E_xi sum L = {drift}",
                state_id=state.state_id,
            )


def check_weighted_centering(model: EnvironmentModel) -> None:
    """检查 E (1/π_0) Σ L_i = 0。"""
    drift = model.expectation(lambda law: law.displacement_sum_mean() / law.mean_count)
    if abs(drift) > CENTERING_TOLERANCE:
        raise CenteringError(f"model is not centered: E (1/pi) sum L = {drift}")


def check_annealed_centering(model: EnvironmentModel) -> None:
    """检查 E Σ L_i = 0。"""
    drift = model.expectation(lambda law: law.displacement_sum_mean())
    if abs(drift) > CENTERING_TOLERANCE:
        raise CenteringError(f"model is not centered: E sum L = {drift}")


def sigma2(model: EnvironmentModel) -> float:
    """σ² = E[(1/π_0) Σ L_i²]，要求逐状态中心化。"""
    check_quenched_centering(model)
    return model.expectation(lambda law: law.second_displacement_moment())


def tilde_sigma2(model: EnvironmentModel) -> float:
    """σ̃² = E Σ L_i² / E π_0，要求退火中心化。"""
    check_annealed_centering(model)
    numerator = model.expectation(lambda law: law.mean_count * law.second_displacement_moment())
    return numerator / model.expectation(lambda law: law.mean_count)
