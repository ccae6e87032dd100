"""
rates 子命令：解析临界量、区域标志与对数凸性检查（无随机性）。
"""

import math
from typing import Any, Dict, List, Tuple

import pandas as pd

from core.analytics import build_rate_report, log_convexity_check
from core.settings import RunConfig

from .base_experiment import BaseExperiment, ExperimentReport, ExperimentStatus


class RatesExperiment(BaseExperiment):
    """t_±、ρ_c、ρ_0、σ²、σ̃² 与 t 网格上的区域表。"""

    experiment_id = "rates"

    def execute(self) -> Tuple[pd.DataFrame, Dict[str, Any], ExperimentStatus]:
        rates = self.config.rates
        report = build_rate_report(
            self.model,
            rates.t_grid,
            p_values=rates.p_values,
            t_star=rates.t_star,
            search_bound=rates.search_bound,
        )
        convexity = log_convexity_check(
            self.model,
            rates.convexity_t,
            rates.convexity_alpha,
            rates.convexity_beta,
            rates.convexity_x_grid,
        )

        violations: List[str] = []
        if not (report.t_minus < 0 < report.t_plus):
            violations.append(f"critical interval ({report.t_minus}, {report.t_plus}) does not contain 0")
        for p, value in report.rho_0.items():
            if value > report.rho_c * (1 + 1e-12):
                violations.append(f"rho_0({p})={value} exceeds rho_c={report.rho_c}")
        if not convexity.convex:
            violations.append(f"log-convexity violated by {convexity.max_violation:.3e}")

        summary = report.to_summary()
        summary["log_rho_c"] = math.log(report.rho_c)
        summary["convexity"] = {
            "t": rates.convexity_t,
            "alpha": rates.convexity_alpha,
            "beta": rates.convexity_beta,
            "convex": convexity.convex,
            "max_violation": convexity.max_violation,
            "equality_points": convexity.equality_points,
        }
        summary["violations"] = violations
        status = ExperimentStatus.FAIL if violations else ExperimentStatus.PASS
        return report.to_frame(), summary, status


def run_rates(config: RunConfig, threads: int = 1) -> ExperimentReport:
    return RatesExperiment(config, threads).run()
