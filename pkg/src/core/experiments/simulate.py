"""
simulate 子命令：固定环境路径上的原始 (replicate, n, t) 表。
"""

from functools import partial
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from core.settings import RunConfig
from core.simulator import run_replicates

from .base_experiment import BaseExperiment, ExperimentReport, ExperimentStatus
from .workers import GridRun, grid_replicate

COLUMNS = ["replicate", "n", "t", "population", "log_Ztilde", "log_P", "W"]


def _rows(runs: List[GridRun], t_grid: List[float], n_upto: int) -> pd.DataFrame:
    rows = []
    for r, run in enumerate(runs):
        for n in range(n_upto):
            for j, t in enumerate(t_grid):
                rows.append(
                    {
                        "replicate": r,
                        "n": n,
                        "t": t,
                        "population": int(run.populations[n]),
                        "log_Ztilde": float(run.log_Ztilde[n, j]),
                        "log_P": float(run.log_P[n, j]),
                        "W": float(run.values[n, j]),
                    }
                )
    return pd.DataFrame(rows, columns=COLUMNS)


class SimulateExperiment(BaseExperiment):
    """逐重复输出 log Z̃_n(t)、log P_n(t)、W_n(t)；不做统计判定。"""

    experiment_id = "simulate"

    def execute(self) -> Tuple[pd.DataFrame, Dict[str, Any], ExperimentStatus]:
        sim = self.config.simulation
        path = self.environment_path(sim.n_max)
        runs = run_replicates(
            partial(grid_replicate, path, self.model, sim.t_grid, sim.n_max, sim.cap),
            sim.replicates,
            self.seed,
            self.threads,
        )
        self.check_cap(runs, lambda reached: _rows(runs, sim.t_grid, reached))

        final = np.array([run.values[sim.n_max] for run in runs])
        summary = {
            "n_max": sim.n_max,
            "replicates": sim.replicates,
            "environment": list(path.states),
            "extinct_fraction": float(np.mean([run.populations[sim.n_max] == 0 for run in runs])),
            "mean_final_W": {float(t): float(final[:, j].mean()) for j, t in enumerate(sim.t_grid)},
        }
        return _rows(runs, sim.t_grid, sim.n_max + 1), summary, ExperimentStatus.PASS


def run_simulate(config: RunConfig, threads: int = 1) -> ExperimentReport:
    return SimulateExperiment(config, threads).run()
