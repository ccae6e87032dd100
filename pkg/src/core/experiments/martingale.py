"""
鞅性检验：固定环境路径下 E_ξ W_n(t) = 1。

每个 (n, t) 单元的通过条件为 |mean − 1| < 4·SE，或 |mean − 1| ≤ 1e-9
（确定性律的 SE 只剩舍入噪声）。
simulation.quenched_mean_bias 把 P_n(t) 乘以 (1+bias)^n，用作必然失败的对照。
"""

from functools import partial
from typing import Any, Dict, List, Tuple

import pandas as pd

from core.settings import RunConfig
from core.simulator import run_replicates

from .base_experiment import (
    BaseExperiment,
    ExperimentReport,
    ExperimentStatus,
    mean_and_se,
)
from .workers import GridRun, grid_replicate

SE_MULTIPLIER = 4.0
EXACT_TOLERANCE = 1e-9
COLUMNS = ["n", "t", "mean_W", "se", "deviation", "pass"]


def cell_passes(mean: float, se: float) -> bool:
    deviation = abs(mean - 1.0)
    return deviation <= EXACT_TOLERANCE or deviation < SE_MULTIPLIER * se


def _table(runs: List[GridRun], t_grid: List[float], n_upto: int, bias: float) -> pd.DataFrame:
    rows = []
    for n in range(n_upto):
        scale = (1.0 + bias) ** n
        for j, t in enumerate(t_grid):
            mean, se = mean_and_se([run.values[n, j] / scale for run in runs])
            rows.append(
                {
                    "n": n,
                    "t": t,
                    "mean_W": mean,
                    "se": se,
                    "deviation": mean - 1.0,
                    "pass": cell_passes(mean, se),
                }
            )
    return pd.DataFrame(rows, columns=COLUMNS)


class MartingaleExperiment(BaseExperiment):
    """固定路径上逐单元检验 W_n(t) 的重复均值。"""

    experiment_id = "martingale"

    def execute(self) -> Tuple[pd.DataFrame, Dict[str, Any], ExperimentStatus]:
        sim = self.config.simulation
        path = self.environment_path(sim.n_max)
        runs = run_replicates(
            partial(grid_replicate, path, self.model, sim.t_grid, sim.n_max, sim.cap),
            sim.replicates,
            self.seed,
            self.threads,
        )
        bias = sim.quenched_mean_bias
        self.check_cap(runs, lambda reached: _table(runs, sim.t_grid, reached, bias))

        table = _table(runs, sim.t_grid, sim.n_max + 1, bias)
        failed = table[~table["pass"]]

        # 分支一致性：Z_{n+1}/Z_n 的均值 ≈ π_{ξ_n}
        growth = []
        for n in range(sim.n_max):
            ratios = [
                run.populations[n + 1] / run.populations[n] for run in runs if run.populations[n] > 0
            ]
            if ratios:
                mean, se = mean_and_se(ratios)
                growth.append(
                    {
                        "n": n,
                        "mean_ratio": mean,
                        "se": se,
                        "pi": float(self.model.law_at(path, n).mean_count),
                    }
                )

        summary = {
            "n_max": sim.n_max,
            "replicates": sim.replicates,
            "t_grid": [float(t) for t in sim.t_grid],
            "quenched_mean_bias": bias,
            "environment": list(path.states),
            "cells": int(len(table)),
            "failed_cells": int(len(failed)),
            "first_failing_n": int(failed["n"].min()) if len(failed) else None,
            "branching_consistency": growth,
        }
        status = ExperimentStatus.PASS if failed.empty else ExperimentStatus.FAIL
        return table, summary, status


def run_martingale_test(config: RunConfig, threads: int = 1) -> ExperimentReport:
    return MartingaleExperiment(config, threads).run()
