"""
种群中偏差：Y_n = (n/a_n²) log(Z_n(a_n A)/Z_n(ℝ)) 对 −inf_{x∈A} x²/(2σ²)。

只接受 P(N ≥ 1) = 1 的模型，从而无需对存活取条件。
最大 n 处中位数落在相对带内（目标为 0 时用绝对带），且最后三个 n 上
|中位数 − 目标| 不增，则通过。
"""

from dataclasses import replace
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.analytics import AnalyticsError, region_tests, sigma2
from core.settings import RunConfig
from core.simulator import run_replicates

from .base_experiment import BaseExperiment, ExperimentError, ExperimentReport, ExperimentStatus
from .mdp import scaling
from .workers import PopulationRun, population_replicate

TREND_POINTS = 3
MONOTONE_TOLERANCE = 1e-12
COLUMNS = ["n", "a_n", "median_Y", "neg_inf_fraction", "target", "deviation"]


def population_target(interval: Sequence[float], sigma_sq: float) -> float:
    """−inf_{x∈[a,b]} x²/(2σ²)；0 ∈ [a, b] 时为 0。"""
    a, b = float(interval[0]), float(interval[1])
    if a <= 0.0 <= b:
        return 0.0
    nearest = a if a > 0 else b
    return -nearest * nearest / (2.0 * sigma_sq)


def within_band(median: float, target: float, band: float) -> bool:
    if not np.isfinite(median):
        return False
    if target == 0.0:
        return abs(median) <= band
    return abs(median - target) <= band * abs(target)


def trending(medians: Sequence[float], target: float) -> bool:
    gaps = [abs(m - target) for m in medians[-TREND_POINTS:]]
    if not all(np.isfinite(gaps)):
        return False
    return all(b <= a + MONOTONE_TOLERANCE for a, b in zip(gaps, gaps[1:]))


def _table(
    runs: List[PopulationRun], n_list: List[int], a_values: List[float], target: float, upto: int
) -> pd.DataFrame:
    rows = []
    for j, (n, a_n) in enumerate(zip(n_list, a_values)):
        if n >= upto:
            break
        scaled = np.array([n / (a_n * a_n) * run.log_ratios[j] for run in runs])
        median = float(np.median(scaled))
        rows.append(
            {
                "n": n,
                "a_n": a_n,
                "median_Y": median,
                "neg_inf_fraction": float(np.mean(np.isneginf(scaled))),
                "target": target,
                "deviation": median - target,
            }
        )
    return pd.DataFrame(rows, columns=COLUMNS)


class MDPPopulationExperiment(BaseExperiment):
    """固定环境路径上模拟 Z_n(a_n A)/Z_n(ℝ)。"""

    experiment_id = "mdp-population"

    def _check_preconditions(self) -> float:
        for state in self.model.active_states():
            if state.law.extinction_probability > 0:
                raise ExperimentError(
                    f"state '{state.state_id}' has P(N=0)={state.law.extinction_probability:.6g} > 0; "
                    "mdp-population needs laws without extinction"
                )
        if not region_tests(self.model, 0.0).in_Omega1:
            raise ExperimentError("0 is outside Omega1 (in_Omega1=False)")
        try:
            return sigma2(self.model)
        except AnalyticsError as e:
            raise ExperimentError(f"mdp-population refused: {e}") from e

    def execute(self) -> Tuple[pd.DataFrame, Dict[str, Any], ExperimentStatus]:
        sim, mdp = self.config.simulation, self.config.mdp
        n_list = sorted(set(int(n) for n in mdp.n_list))
        if len(n_list) < TREND_POINTS:
            raise ExperimentError(f"mdp-population needs at least {TREND_POINTS} distinct n values")
        sigma_sq = self._check_preconditions()
        target = population_target(mdp.interval, sigma_sq)
        a_values = [scaling(n, mdp.theta) for n in n_list]
        lo, hi = mdp.interval
        horizons = [(n, a_n * lo, a_n * hi) for n, a_n in zip(n_list, a_values)]

        path = self.environment_path(n_list[-1])
        runs = run_replicates(
            partial(population_replicate, path, self.model, horizons, sim.cap),
            sim.replicates,
            self.seed,
            self.threads,
        )
        self.check_cap(runs, lambda reached: _table(runs, n_list, a_values, target, reached))

        table = _table(runs, n_list, a_values, target, n_list[-1] + 1)
        medians = table["median_Y"].tolist()
        in_band = within_band(medians[-1], target, mdp.relative_band)
        trend = trending(medians, target)

        summary = {
            "theta": mdp.theta,
            "interval": [float(lo), float(hi)],
            "sigma2": sigma_sq,
            "target": target,
            "relative_band": mdp.relative_band,
            "replicates": sim.replicates,
            "final_median": medians[-1],
            "within_band": in_band,
            "monotone_trend": trend,
        }
        passed = in_band and trend
        return table, summary, ExperimentStatus.PASS if passed else ExperimentStatus.FAIL


def run_mdp_population(
    config: RunConfig,
    threads: int = 1,
    theta: Optional[float] = None,
    A: Optional[Tuple[float, float]] = None,
    n_list: Optional[Sequence[int]] = None,
) -> ExperimentReport:
    updates: Dict[str, Any] = {}
    if theta is not None:
        updates["theta"] = float(theta)
    if A is not None:
        updates["interval"] = [float(A[0]), float(A[1])]
    if n_list is not None:
        updates["n_list"] = [int(n) for n in n_list]
    if updates:
        config = replace(config, mdp=replace(config.mdp, **updates))
    return MDPPopulationExperiment(config, threads).run()
