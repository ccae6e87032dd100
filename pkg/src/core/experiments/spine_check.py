"""
spine-check 子命令：脊柱分解的各项蒙特卡罗与精确检查。

- W 恒等式：Q 侧与 P 侧的 95% 置信区间相交；可枚举时 P 侧在 3·SE 内等于精确值
- 独立性：|corr| < 4/√R
- Radon–Nikodym：E_Q Z_n(ℝ) 与 E_P Z_n(ℝ) W_n(t)
- 逐状态尺寸偏置采样器对拒绝采样对照的 KS 检验（后代数、脊柱子节点位移）
- FiniteTable 状态在 t = 0 的尺寸偏置后代数分布精确等于 n·p_n/π
"""

import math
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd
from scipy.special import logsumexp
from scipy.stats import ks_2samp

from core.settings import RunConfig
from core.simulator import AUXILIARY_STREAM, replicate_rng
from core.spine import (
    expected_population_under_q,
    rejection_size_biased_offspring,
    sample_size_biased_offspring,
    size_biased_count_law,
    verify_independence,
    verify_w_identity,
)
from libs.offspring import BaseOffspringLaw, FiniteTableLaw
from observability.logger import get_logger

from .base_experiment import BaseExperiment, ExperimentReport, ExperimentStatus

logger = get_logger(__name__)

COLUMNS = ["check", "state", "t", "n", "k", "g", "lhs", "rhs", "se_lhs", "se_rhs", "exact", "overlap"]
EXACT_SE_MULTIPLIER = 3.0
COUNT_LAW_TOLERANCE = 1e-12
EXACT_FLOOR = 1e-9


def _envelope(law: BaseOffspringLaw, t: float, default: float) -> float:
    """FiniteTable 的 Σe^{tL}/m(t) 有界，直接用精确上界。"""
    if not isinstance(law, FiniteTableLaw):
        return default
    log_m = law.log_laplace(t)
    bound = max(
        float(logsumexp(t * np.asarray(atom.displacements))) - log_m
        for atom in law.atoms
        if atom.prob > 0 and atom.n_children > 0
    )
    return math.exp(bound)


def _oracle_rows(
    state_id: str, law: BaseOffspringLaw, t: float, samples: int, envelope: float, seed: int, salt: int
) -> List[Dict[str, Any]]:
    direct_rng = replicate_rng(seed, AUXILIARY_STREAM, 1 + 2 * salt)
    oracle_rng = replicate_rng(seed, AUXILIARY_STREAM, 2 + 2 * salt)
    direct = [sample_size_biased_offspring(law, t, direct_rng) for _ in range(samples)]
    oracle = [
        rejection_size_biased_offspring(law, t, oracle_rng, _envelope(law, t, envelope))
        for _ in range(samples)
    ]

    rows = []
    for check, pick in (
        ("ks_count", lambda draw: draw[0]),
        ("ks_spine_displacement", lambda draw: draw[1][draw[2]]),
    ):
        result = ks_2samp([pick(d) for d in direct], [pick(d) for d in oracle])
        rows.append(
            {
                "check": check,
                "state": state_id,
                "t": t,
                "n": 1,
                "lhs": float(result.statistic),
                "rhs": float(result.pvalue),
            }
        )
    return rows


def _count_law_row(state_id: str, law: FiniteTableLaw) -> Dict[str, Any]:
    biased = size_biased_count_law(law, 0.0)
    expected: Dict[int, float] = {}
    for atom in law.atoms:
        if atom.prob > 0 and atom.n_children > 0:
            expected[atom.n_children] = expected.get(atom.n_children, 0.0) + (
                atom.n_children * atom.prob / law.mean_count
            )
    diff = max(abs(biased.get(c, 0.0) - expected.get(c, 0.0)) for c in set(biased) | set(expected))
    return {
        "check": "count_marginal",
        "state": state_id,
        "t": 0.0,
        "n": 1,
        "lhs": diff,
        "rhs": 0.0,
        "exact": 0.0,
        "overlap": diff <= COUNT_LAW_TOLERANCE,
    }


class SpineCheckExperiment(BaseExperiment):
    """固定环境路径上的脊柱恒等式检查。"""

    experiment_id = "spine-check"

    def execute(self) -> Tuple[pd.DataFrame, Dict[str, Any], ExperimentStatus]:
        spine = self.config.spine
        sim = self.config.simulation
        path = self.environment_path(max(spine.n, spine.radon_nikodym_n))
        common = dict(replicates=sim.replicates, seed=self.seed, cap=sim.cap, threads=self.threads)

        identity = verify_w_identity(path, self.model, spine.t, spine.n, spine.k, spine.g, **common)
        independence = verify_independence(path, self.model, spine.t, spine.n, spine.k, **common)
        radon = expected_population_under_q(path, self.model, spine.t, spine.radon_nikodym_n, **common)

        rows: List[Dict[str, Any]] = []
        failures: List[str] = []

        identity_row = identity.to_row()
        rows.append(identity_row)
        if not identity.overlap:
            failures.append("w_identity: Q-side and P-side confidence intervals do not overlap")
        if identity.exact_rhs is not None:
            gap = abs(identity.rhs - identity.exact_rhs)
            allowed = max(EXACT_SE_MULTIPLIER * identity.se_rhs, EXACT_FLOOR)
            if gap > allowed:
                failures.append(f"w_identity: P-side misses the exact value by {gap:.3e}")

        rows.append(independence.to_row())
        if not independence.independent:
            failures.append(f"independence: |corr|={abs(independence.corr):.4f} >= {independence.bound:.4f}")

        rows.append(radon.to_row())
        if not radon.overlap:
            failures.append("radon_nikodym: confidence intervals do not overlap")

        for salt, state in enumerate(self.model.active_states()):
            for row in _oracle_rows(
                state.state_id,
                state.law,
                spine.t,
                spine.oracle_samples,
                spine.oracle_envelope,
                self.seed,
                salt,
            ):
                row["overlap"] = row["rhs"] > spine.ks_level
                if not row["overlap"]:
                    failures.append(f"{row['check']} ({state.state_id}): p-value {row['rhs']:.4g}")
                rows.append(row)
            if isinstance(state.law, FiniteTableLaw):
                row = _count_law_row(state.state_id, state.law)
                if not row["overlap"]:
                    failures.append(f"count_marginal ({state.state_id}): off by {row['lhs']:.3e}")
                rows.append(row)

        table = pd.DataFrame(rows, columns=COLUMNS)
        summary = {
            "t": spine.t,
            "n": spine.n,
            "k": spine.k,
            "g": spine.g,
            "replicates": sim.replicates,
            "environment": list(path.states),
            "w_identity_degenerate": identity.degenerate,
            "independence_p_value": independence.p_value,
            "failures": failures,
        }
        for failure in failures:
            logger.info("spine-check: %s", failure)
        status = ExperimentStatus.FAIL if failures else ExperimentStatus.PASS
        return table, summary, status


def run_spine_check(config: RunConfig, threads: int = 1) -> ExperimentReport:
    return SpineCheckExperiment(config, threads).run()
