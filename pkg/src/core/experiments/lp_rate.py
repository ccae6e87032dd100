"""
淬火 Lᵖ 收敛速率。

模型在 t* 处归一化后取 t = 1。固定一条环境路径，以 W_N（N = n_max）代替极限 W，
e_n = (mean |W_n − W_N|^p)^{1/p}，在窗口 [N//3, 2N//3] 上对 log e_n 做线性回归。
最后三分之一不参与回归：W_N 作为代理会使 e_n 偏小。
"""

import math
from dataclasses import replace
from functools import partial
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.stats import linregress

from core.analytics import region_tests, rho_c
from core.settings import RunConfig
from core.simulator import a_hat_partial_sums, run_replicates

from .base_experiment import BaseExperiment, ExperimentError, ExperimentReport, ExperimentStatus
from .workers import GridRun, grid_replicate

SLOPE_SE_MULTIPLIER = 3.0
DIAGNOSTIC_FACTORS = (0.9, 1.5)
STABLE_RATIO = 2.0
DIVERGENT_RATIO = 10.0
# 低于此值的 e_n 视为舍入噪声
ERROR_FLOOR = 1e-12
COLUMNS = ["n", "e_n", "log_e_n", "in_window"]


def fit_window(n_max: int) -> List[int]:
    return list(range(n_max // 3, 2 * n_max // 3 + 1))


def lp_errors(runs: List[GridRun], p: float) -> np.ndarray:
    """e_n，n = 0..N−1。"""
    values = np.array([run.values[:, 0] for run in runs])
    diffs = np.abs(values[:, :-1] - values[:, -1:])
    return np.mean(diffs**p, axis=0) ** (1.0 / p)


def a_hat_ratio(w: List[float], rho: float) -> Optional[float]:
    """后半段 max|Â_n| 与前半段之比；两段都为 0 时返回 None。"""
    sums = np.abs(a_hat_partial_sums(w, rho))
    half = len(sums) // 2
    if half == 0:
        return None
    first, last = sums[:half].max(), sums[half:].max()
    if first == 0:
        return None if last == 0 else math.inf
    return float(last / first)


def classify_ratio(ratio: Optional[float]) -> str:
    if ratio is None:
        return "undetermined"
    if ratio < STABLE_RATIO:
        return "stable"
    if ratio > DIVERGENT_RATIO:
        return "divergent"
    return "undetermined"


def a_hat_diagnostic(runs: List[GridRun], critical_rate: float) -> List[Dict[str, Any]]:
    entries = []
    for factor in DIAGNOSTIC_FACTORS:
        rho = max(1.0, factor * critical_rate)
        ratios = [a_hat_ratio([float(v) for v in run.values[:, 0]], rho) for run in runs]
        ratios = [r for r in ratios if r is not None]
        median = float(np.median(ratios)) if ratios else None
        entries.append(
            {
                "factor": factor,
                "rho": rho,
                "median_ratio": median,
                "classification": classify_ratio(median),
            }
        )
    return entries


class LpRateExperiment(BaseExperiment):
    """拟合斜率 β̂ 与预测速率 −log ρ_c 的比较。"""

    experiment_id = "lp-rate"

    def execute(self) -> Tuple[pd.DataFrame, Dict[str, Any], ExperimentStatus]:
        sim, lp = self.config.simulation, self.config.lp
        if lp.p < 2:
            raise ExperimentError(f"lp-rate needs p >= 2, got {lp.p}")
        normalized = self.model.normalize_at(lp.t_star)
        flags = region_tests(normalized, 1.0, search_bound=self.config.rates.search_bound)
        if not flags.in_I:
            raise ExperimentError(
                f"t=1 is outside the critical interval of the model normalized at t_star={lp.t_star} (in_I=False)"
            )
        if not flags.in_Omega1_prime:
            raise ExperimentError("moment condition fails at t=1 (in_Omega1_prime=False)")
        window = fit_window(sim.n_max)
        if len(window) < 3 or sim.n_max < 3:
            raise ExperimentError(f"n_max={sim.n_max} leaves fewer than 3 points in the fit window")

        critical_rate = rho_c(normalized)
        path = self.environment_path(sim.n_max, normalized)
        runs = run_replicates(
            partial(grid_replicate, path, normalized, [1.0], sim.n_max, sim.cap),
            sim.replicates,
            self.seed,
            self.threads,
        )
        self.check_cap(runs, lambda reached: pd.DataFrame(columns=COLUMNS))

        errors = lp_errors(runs, lp.p)
        with np.errstate(divide="ignore"):
            log_errors = np.log(errors)
        table = pd.DataFrame(
            {
                "n": np.arange(sim.n_max),
                "e_n": errors,
                "log_e_n": log_errors,
                "in_window": [n in window for n in range(sim.n_max)],
            },
            columns=COLUMNS,
        )

        summary: Dict[str, Any] = {
            "p": lp.p,
            "t_star": lp.t_star,
            "n_max": sim.n_max,
            "replicates": sim.replicates,
            "environment": list(path.states),
            "rho_c": critical_rate,
            "predicted_slope": -math.log(critical_rate),
            "window": [window[0], window[-1]],
            "slope": None,
            "slope_se": None,
            "a_hat": a_hat_diagnostic(runs, critical_rate),
        }

        if np.all(errors <= ERROR_FLOOR):
            summary["note"] = "errors vanish up to rounding"
            return table, summary, ExperimentStatus.PASS

        points = [(n, log_errors[n]) for n in window if errors[n] > ERROR_FLOOR]
        if len(points) < 3:
            summary["note"] = "fewer than 3 positive errors in the fit window"
            return table, summary, ExperimentStatus.INCONCLUSIVE
        fit = linregress([n for n, _ in points], [v for _, v in points])
        summary["slope"] = float(fit.slope)
        summary["slope_se"] = float(fit.stderr)

        bound = -math.log(critical_rate) + SLOPE_SE_MULTIPLIER * fit.stderr
        if critical_rate <= 1.0:
            # 不预测指数衰减，只检查斜率上界
            summary["note"] = "rho_c <= 1: no exponential rate predicted"
            passed = fit.slope <= bound
        else:
            passed = fit.slope <= bound and fit.slope < 0
        return table, summary, ExperimentStatus.PASS if passed else ExperimentStatus.FAIL


def run_lp_rate(
    config: RunConfig, threads: int = 1, p: Optional[float] = None, t_star: Optional[float] = None
) -> ExperimentReport:
    lp = config.lp
    if p is not None or t_star is not None:
        lp = replace(lp, p=lp.p if p is None else p, t_star=lp.t_star if t_star is None else t_star)
        config = replace(config, lp=lp)
    return LpRateExperiment(config, threads).run()
