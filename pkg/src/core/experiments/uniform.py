"""
紧区间 K 上的一致收敛。

D_n = sup_{t ∈ 网格} |W_n(t) − W_N(t)|。窗口 [N//3, 3N//4] 上各 n 的重复中位数不增，
且窗口末端的中位数 < ε 则通过。网格步长减半时的相对变化只报告不判定。
"""

from dataclasses import replace
from functools import partial
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from core.analytics import AnalyticsError, critical_interval, region_tests
from core.settings import RunConfig
from core.simulator import run_replicates

from .base_experiment import BaseExperiment, ExperimentError, ExperimentReport, ExperimentStatus
from .workers import GridRun, grid_replicate

MONOTONE_TOLERANCE = 1e-12
COLUMNS = ["n", "median_D", "median_D_refined", "mean_D", "in_window"]


def refined_grid(k_min: float, k_max: float, step: float) -> np.ndarray:
    """步长为 step/2 的网格；偶数位置即步长为 step 的网格。"""
    count = int(round((k_max - k_min) / (step / 2.0)))
    if count % 2:
        count += 1
    return np.linspace(k_min, k_max, count + 1)


def window(n_max: int) -> List[int]:
    return list(range(n_max // 3, 3 * n_max // 4 + 1))


def sup_deviation(runs: List[GridRun], columns: slice) -> np.ndarray:
    """形状 (R, N+1)：每个重复每代的 D_n。"""
    values = np.array([run.values[:, columns] for run in runs])
    return np.abs(values - values[:, -1:, :]).max(axis=2)


def non_increasing(values) -> bool:
    values = list(values)
    return all(b <= a + MONOTONE_TOLERANCE for a, b in zip(values, values[1:]))


class UniformExperiment(BaseExperiment):
    """验证 K ⊂ I ∩ Ω_1 后模拟 D_n。"""

    experiment_id = "uniform"

    def _check_region(self, grid: np.ndarray) -> None:
        try:
            interval = critical_interval(self.model, self.config.rates.search_bound)
        except AnalyticsError as e:
            raise ExperimentError(f"uniform convergence refused: {e}") from e
        for t in grid:
            flags = region_tests(self.model, float(t), interval=interval)
            for name in ("in_I", "in_Omega1"):
                if not getattr(flags, name):
                    raise ExperimentError(f"K is outside the verified region: {name}=False at t={t:.6g}")

    def execute(self) -> Tuple[pd.DataFrame, Dict[str, Any], ExperimentStatus]:
        sim, uni = self.config.simulation, self.config.uniform
        if not uni.k_min <= uni.k_max:
            raise ExperimentError(f"K=[{uni.k_min}, {uni.k_max}] is empty")
        if sim.n_max < 4:
            raise ExperimentError(f"uniform needs n_max >= 4, got {sim.n_max}")
        grid = refined_grid(uni.k_min, uni.k_max, uni.grid_step)
        self._check_region(grid)

        path = self.environment_path(sim.n_max)
        runs = run_replicates(
            partial(grid_replicate, path, self.model, [float(t) for t in grid], sim.n_max, sim.cap),
            sim.replicates,
            self.seed,
            self.threads,
        )
        self.check_cap(runs, lambda reached: pd.DataFrame(columns=COLUMNS))

        coarse = sup_deviation(runs, slice(None, None, 2))
        refined = sup_deviation(runs, slice(None))
        medians = np.median(coarse, axis=0)
        medians_refined = np.median(refined, axis=0)
        fit_window = window(sim.n_max)
        table = pd.DataFrame(
            {
                "n": np.arange(sim.n_max + 1),
                "median_D": medians,
                "median_D_refined": medians_refined,
                "mean_D": coarse.mean(axis=0),
                "in_window": [n in fit_window for n in range(sim.n_max + 1)],
            },
            columns=COLUMNS,
        )

        last = fit_window[-1]
        final = float(medians[last])
        refinement_change: Optional[float] = None
        if final > 0:
            refinement_change = float(abs(medians_refined[last] - final) / final)
        decreasing = non_increasing(medians[fit_window])

        summary = {
            "K": [uni.k_min, uni.k_max],
            "grid_step": uni.grid_step,
            "epsilon": uni.epsilon,
            "n_max": sim.n_max,
            "replicates": sim.replicates,
            "environment": list(path.states),
            "window": [fit_window[0], last],
            "final_median": final,
            "decreasing": decreasing,
            "refinement_change": refinement_change,
        }
        passed = decreasing and final < uni.epsilon
        return table, summary, ExperimentStatus.PASS if passed else ExperimentStatus.FAIL


def run_uniform_convergence(
    config: RunConfig,
    threads: int = 1,
    K: Optional[Tuple[float, float]] = None,
    grid_step: Optional[float] = None,
) -> ExperimentReport:
    uni = config.uniform
    if K is not None:
        uni = replace(uni, k_min=float(K[0]), k_max=float(K[1]))
    if grid_step is not None:
        uni = replace(uni, grid_step=float(grid_step))
    return UniformExperiment(replace(config, uniform=uni), threads).run()
