"""
退火 Lᵖ 有界性二分：sup_n E W_n^p < ∞ 当且仅当 E m̄_0(p) < 1（i.i.d. 环境，E W_1^p 有限）。

每个重复抽一条新的环境路径。序列 Ê W_n^p 后三分之一均值与前三分之一均值之比
超过 ratio_threshold 判为增长，否则判为有界；结论与 E m̄_0(p) − 1 的符号一致则通过。
"""

import math
from dataclasses import replace
from functools import partial
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd

from core.settings import RunConfig
from core.simulator import run_replicates

from .base_experiment import (
    BaseExperiment,
    ExperimentError,
    ExperimentReport,
    ExperimentStatus,
    mean_and_se,
)
from .workers import annealed_grid_replicate

BOUNDARY_TOLERANCE = 1e-9
COLUMNS = ["n", "mean_W_p", "se"]


def third_ratio(estimates: np.ndarray) -> float:
    """后三分之一均值 / 前三分之一均值。"""
    k = max(1, len(estimates) // 3)
    first = float(np.mean(estimates[:k]))
    last = float(np.mean(estimates[-k:]))
    if first == 0:
        return math.inf if last > 0 else 1.0
    return last / first


class AnnealedLpExperiment(BaseExperiment):
    """模拟 Ê W_n^p 的增长并与精确的 E m̄_0(p) 对照。"""

    experiment_id = "annealed-lp"

    def execute(self) -> Tuple[pd.DataFrame, Dict[str, Any], ExperimentStatus]:
        sim, lp = self.config.simulation, self.config.lp
        if lp.p <= 1:
            raise ExperimentError(f"annealed-lp needs p > 1, got {lp.p}")
        if not self.model.is_iid:
            raise ExperimentError(
                f"annealed-lp needs an iid environment, got '{self.model.process.kind}'"
            )
        if sim.n_max < 3:
            raise ExperimentError(f"annealed-lp needs n_max >= 3, got {sim.n_max}")
        normalized = self.model.normalize_at(lp.t_star)
        log_mean_p = normalized.log_expectation(lambda law: law.log_laplace(lp.p))
        mean_p = math.exp(log_mean_p)

        runs = run_replicates(
            partial(annealed_grid_replicate, normalized, [1.0], sim.n_max, sim.cap),
            sim.replicates,
            self.seed,
            self.threads,
        )

        def moments(n_upto: int) -> pd.DataFrame:
            rows = []
            for n in range(n_upto):
                mean, se = mean_and_se([run.values[n, 0] ** lp.p for run in runs])
                rows.append({"n": n, "mean_W_p": mean, "se": se})
            return pd.DataFrame(rows, columns=COLUMNS)

        self.check_cap(runs, moments)
        table = moments(sim.n_max + 1)
        ratio = third_ratio(table["mean_W_p"].to_numpy())
        observed = "growing" if ratio > lp.ratio_threshold else "bounded"

        summary: Dict[str, Any] = {
            "p": lp.p,
            "t_star": lp.t_star,
            "n_max": sim.n_max,
            "replicates": sim.replicates,
            "mean_m_bar_p": mean_p,
            "ratio": ratio,
            "ratio_threshold": lp.ratio_threshold,
            "observed": observed,
        }
        if abs(mean_p - 1.0) < BOUNDARY_TOLERANCE:
            summary["predicted"] = None
            summary["note"] = "E m_bar(p) = 1: boundary case, no prediction"
            return table, summary, ExperimentStatus.INCONCLUSIVE

        predicted = "bounded" if mean_p < 1.0 else "growing"
        summary["predicted"] = predicted
        status = ExperimentStatus.PASS if predicted == observed else ExperimentStatus.FAIL
        return table, summary, status


def run_annealed_lp(config: RunConfig, threads: int = 1, p: Optional[float] = None) -> ExperimentReport:
    if p is not None:
        config = replace(config, lp=replace(config.lp, p=p))
    return AnnealedLpExperiment(config, threads).run()
