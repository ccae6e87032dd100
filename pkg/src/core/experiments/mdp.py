"""
中偏差缩放累积量（不模拟树）。

a_n = n^θ，u = a_n t / n：
- 淬火：Λ̂_n(t) = (n/a_n²) Σ_{i<n} log(m_{ξ_i}(u)/π_{ξ_i})，沿一条采样的环境路径
- 退火 weighted：Λ̂_n(t) = (n²/a_n²) log E[m_0(u)/π_0]，目标 σ²t²/2
- 退火 plain：Λ̂_n(t) = (n²/a_n²) log(E m_0(u) / E π_0)，目标 σ̃²t²/2

最大 n 处另在对称细网格上做离散 Legendre 变换，与 x²/(2σ²) 在 x ∈ {0.5, 1} 对照。
"""

import math
from abc import abstractmethod
from dataclasses import replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.analytics import (
    AnalyticsError,
    check_weighted_centering,
    legendre,
    sigma2,
    tilde_sigma2,
)
from core.settings import RunConfig
from libs.environment import EnvironmentModel, EnvironmentPath

from .base_experiment import (
    BaseExperiment,
    ExperimentError,
    ExperimentReport,
    ExperimentStatus,
    MDPEstimate,
)

LEGENDRE_POINTS = (0.5, 1.0)
EXP_MOMENT_DELTA = 1.0

# (n, u) -> λ_n 在 u = a_n t/n 处的值
CumulantFn = Callable[[int, float], float]


def scaling(n: int, theta: float) -> float:
    return float(n) ** theta


def _estimate(
    cumulant: CumulantFn,
    theta: float,
    t_grid: Sequence[float],
    n_list: Sequence[int],
    sigma_sq: float,
    variant: str,
) -> MDPEstimate:
    n_sorted = sorted(int(n) for n in n_list)
    t_values = [float(t) for t in t_grid]
    a_values = [scaling(n, theta) for n in n_sorted]
    target = [0.5 * sigma_sq * t * t for t in t_values]
    scaled = np.empty((len(n_sorted), len(t_values)))
    for i, (n, a_n) in enumerate(zip(n_sorted, a_values)):
        for j, t in enumerate(t_values):
            scaled[i, j] = n / (a_n * a_n) * cumulant(n, a_n * t / n)
    deviation = [
        float(np.max(np.abs(scaled[i] - np.array(target)))) if t_values else 0.0
        for i in range(len(n_sorted))
    ]
    return MDPEstimate(
        theta=float(theta),
        t_grid=t_values,
        n_list=n_sorted,
        a_n=a_values,
        scaled=scaled,
        target=target,
        sigma2=float(sigma_sq),
        deviation=deviation,
        variant=variant,
    )


def _require_exp_moment(model: EnvironmentModel) -> None:
    for state in model.active_states():
        if not math.isfinite(state.law.exp_abs_moment(EXP_MOMENT_DELTA)):
            raise ExperimentError(
                f"state '{state.state_id}' has no finite exponential moment of |L|"
            )


def quenched_cumulant(model: EnvironmentModel, path: EnvironmentPath) -> CumulantFn:
    """λ_n(u) = Σ_{i<n} log(m_{ξ_i}(u)/π_{ξ_i})，按状态计数合并。"""
    indices = np.asarray(path.indices, dtype=np.int64)
    laws = model.laws

    def cumulant(n: int, u: float) -> float:
        counts = np.bincount(indices[:n], minlength=len(laws))
        return math.fsum(
            int(c) * laws[s].log_tilt_ratio(u) for s, c in enumerate(counts) if c > 0
        )

    return cumulant


def weighted_cumulant(model: EnvironmentModel) -> CumulantFn:
    """n·log E[m_0(u)/π_0]，以 log1p/expm1 保留小 u 处的精度。"""

    def cumulant(n: int, u: float) -> float:
        mean_excess = model.expectation(lambda law: math.expm1(law.log_tilt_ratio(u)))
        return n * math.log1p(mean_excess)

    return cumulant


def plain_cumulant(model: EnvironmentModel) -> CumulantFn:
    """n·(log E m_0(u) − log E π_0)。"""
    log_mean_pi = model.log_expectation(lambda law: law.log_laplace(0.0))

    def cumulant(n: int, u: float) -> float:
        return n * (model.log_expectation(lambda law: law.log_laplace(u)) - log_mean_pi)

    return cumulant


def legendre_cross_check(
    cumulant: CumulantFn, theta: float, n: int, sigma_sq: float, t_max: float, step: float
) -> List[Dict[str, float]]:
    """最大 n 处 Λ̂_n 的离散 Legendre 变换对 x²/(2σ²)。"""
    a_n = scaling(n, theta)
    half = int(round(t_max / step))
    ts = [k * step for k in range(-half, half + 1)]
    samples = [(t, n / (a_n * a_n) * cumulant(n, a_n * t / n)) for t in ts]
    transform = legendre(samples)
    rows = []
    for x in LEGENDRE_POINTS:
        observed = float(transform(x))
        expected = x * x / (2.0 * sigma_sq)
        rows.append({"x": x, "legendre": observed, "rate": expected, "difference": observed - expected})
    return rows


class _MDPExperiment(BaseExperiment):
    """缩放累积量实验的公共部分：状态由 sup 偏差与 mdp.tolerance 比较得出。"""

    @abstractmethod
    def build(self) -> Tuple[CumulantFn, float, str, Dict[str, Any]]:
        """返回 (累积量函数, 目标方差, 变体名, 附加摘要)。"""
        pass

    def estimate(self) -> MDPEstimate:
        cumulant, sigma_sq, variant, _ = self.build()
        mdp = self.config.mdp
        return _estimate(cumulant, mdp.theta, mdp.t_grid, mdp.n_list, sigma_sq, variant)

    def execute(self) -> Tuple[pd.DataFrame, Dict[str, Any], ExperimentStatus]:
        mdp = self.config.mdp
        cumulant, sigma_sq, variant, extra = self.build()
        est = _estimate(cumulant, mdp.theta, mdp.t_grid, mdp.n_list, sigma_sq, variant)
        largest = est.n_list[-1]
        summary: Dict[str, Any] = {
            "variant": variant,
            "theta": est.theta,
            "sigma2": est.sigma2,
            "n_list": est.n_list,
            "sup_deviation": dict(zip(est.n_list, est.deviation)),
            "tolerance": mdp.tolerance,
            "legendre": legendre_cross_check(
                cumulant, mdp.theta, largest, sigma_sq, mdp.legendre_t_max, mdp.legendre_step
            ),
            **extra,
        }
        passed = est.deviation[-1] <= mdp.tolerance
        return est.to_frame(), summary, ExperimentStatus.PASS if passed else ExperimentStatus.FAIL


class MDPQuenchedExperiment(_MDPExperiment):
    """沿固定环境路径的淬火缩放累积量。"""

    experiment_id = "mdp-quenched"

    def build(self) -> Tuple[CumulantFn, float, str, Dict[str, Any]]:
        try:
            sigma_sq = sigma2(self.model)
        except AnalyticsError as e:
            raise ExperimentError(f"mdp-quenched refused: {e}") from e
        _require_exp_moment(self.model)
        path = self.environment_path(max(self.config.mdp.n_list))
        return quenched_cumulant(self.model, path), sigma_sq, "quenched", {"path_seed": path.seed}


class MDPAnnealedExperiment(_MDPExperiment):
    """i.i.d. 环境的退火缩放累积量（确定性，无蒙特卡罗噪声）。"""

    experiment_id = "mdp-annealed"

    def build(self) -> Tuple[CumulantFn, float, str, Dict[str, Any]]:
        if not self.model.is_iid:
            raise ExperimentError(
                f"mdp-annealed needs an iid environment, got '{self.model.process.kind}'"
            )
        form = self.config.mdp.annealed_form
        try:
            if form == "weighted":
                check_weighted_centering(self.model)
                sigma_sq = self.model.expectation(lambda law: law.second_displacement_moment())
                cumulant = weighted_cumulant(self.model)
            else:
                sigma_sq = tilde_sigma2(self.model)
                cumulant = plain_cumulant(self.model)
        except AnalyticsError as e:
            raise ExperimentError(f"mdp-annealed refused: {e}") from e
        return cumulant, sigma_sq, form, {}


def _with_mdp(
    config: RunConfig,
    theta: Optional[float],
    t_grid: Optional[Sequence[float]],
    n_list: Optional[Sequence[int]],
) -> RunConfig:
    updates: Dict[str, Any] = {}
    if theta is not None:
        updates["theta"] = float(theta)
    if t_grid is not None:
        updates["t_grid"] = [float(t) for t in t_grid]
    if n_list is not None:
        updates["n_list"] = [int(n) for n in n_list]
    return replace(config, mdp=replace(config.mdp, **updates)) if updates else config


def run_mdp_quenched_means(
    config: RunConfig,
    theta: Optional[float] = None,
    t_grid: Optional[Sequence[float]] = None,
    n_list: Optional[Sequence[int]] = None,
) -> MDPEstimate:
    return MDPQuenchedExperiment(_with_mdp(config, theta, t_grid, n_list)).estimate()


def run_mdp_annealed_means(
    config: RunConfig,
    theta: Optional[float] = None,
    t_grid: Optional[Sequence[float]] = None,
    n_list: Optional[Sequence[int]] = None,
    form: Optional[str] = None,
) -> MDPEstimate:
    config = _with_mdp(config, theta, t_grid, n_list)
    if form is not None:
        config = replace(config, mdp=replace(config.mdp, annealed_form=form))
    return MDPAnnealedExperiment(config).estimate()


def run_mdp_report(config: RunConfig, annealed: bool = False) -> ExperimentReport:
    cls = MDPAnnealedExperiment if annealed else MDPQuenchedExperiment
    return cls(config).run()
