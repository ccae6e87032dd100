"""
U 递推不等式检查（i.i.d. 环境，r > 2）。

U_n(s, r) = E P_n(t)^s W_n(t)^r，q = 1/(r−1)：

    U_n(s,r)^q ≤ A^q U_{n−1}(s,r)^q + B^q U_{n−1}(s,r−1)^q
    A = E m_0(t)^{s−r} m_0(tr)，B = E m_0(t)^s W_1(t)^r

U 由退火蒙特卡罗估计，SE 用 delta 方法传播。B 在全部状态为 FiniteTable 时精确，
否则在辅助流上抽样。n ≤ exact_depth 时另用精确枚举检查不等式与 U_1 = B。
"""

import math
from dataclasses import replace
from functools import partial
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from core.settings import RunConfig
from core.simulator import (
    AUXILIARY_STREAM,
    exact_annealed_expectation,
    log_quenched_mean,
    replicate_rng,
    run_replicates,
)
from libs.environment import EnvironmentModel, EnvironmentPath
from libs.offspring import FiniteTableLaw
from observability.logger import get_logger

from .base_experiment import (
    BaseExperiment,
    ExperimentError,
    ExperimentReport,
    ExperimentStatus,
    combine_status,
    mean_and_se,
)
from .workers import GridRun, annealed_grid_replicate

logger = get_logger(__name__)

SE_MULTIPLIER = 2.0
EXACT_TOLERANCE = 1e-12
COLUMNS = [
    "n",
    "U",
    "se_U",
    "lhs",
    "rhs",
    "se_lhs",
    "se_rhs",
    "exact_U",
    "exact_lhs",
    "exact_rhs",
    "status",
]


def factor_a(model: EnvironmentModel, t: float, s: float, r: float) -> float:
    """A = E m_0(t)^{s−r} m_0(tr)。"""
    return math.exp(
        model.log_expectation(lambda law: (s - r) * law.log_laplace(t) + law.log_laplace(t * r))
    )


def exact_factor_b(model: EnvironmentModel, t: float, s: float, r: float) -> float:
    """B = E m_0(t)^s E_ξ W_1(t)^r（闭式）。"""
    return math.exp(
        model.log_expectation(lambda law: s * law.log_laplace(t) + law.log_w1_moment(t, r))
    )


def sampled_factor_b(
    model: EnvironmentModel, t: float, s: float, r: float, samples: int, rng: np.random.Generator
) -> Tuple[float, float]:
    """B 的蒙特卡罗估计：先按平稳权重抽状态，再抽一代后代。"""
    states = model.states
    weights = model.stationary_weights
    picks = rng.choice(len(states), size=samples, p=weights)
    values = np.empty(samples)
    for i, index in enumerate(picks):
        law = states[int(index)].law
        log_m = law.log_laplace(t)
        _, displacements = law.sample_offspring(rng)
        if displacements.size == 0:
            values[i] = 0.0
            continue
        log_w = float(logsumexp(t * displacements)) - log_m
        values[i] = math.exp(s * log_m + r * log_w)
    return mean_and_se(values)


def exact_u(model: EnvironmentModel, t: float, s: float, r: float, n: int) -> float:
    """精确枚举的 U_n(s, r)。"""

    def fn(path: EnvironmentPath, positions: np.ndarray) -> float:
        log_p = log_quenched_mean(path, model, n, t)
        if positions.size == 0:
            return 0.0
        log_w = float(logsumexp(t * positions)) - log_p
        return math.exp(s * log_p + r * log_w)

    return exact_annealed_expectation(model, n, fn)


def u_samples(runs: List[GridRun], n: int, s: float, r: float) -> np.ndarray:
    return np.array([math.exp(s * run.log_P[n, 0]) * run.values[n, 0] ** r for run in runs])


def _power_se(value: float, se: float, q: float) -> float:
    """delta 方法：se(U^q) = q U^{q−1} se(U)。"""
    if value <= 0 or se == 0:
        return 0.0
    return q * value ** (q - 1.0) * se


def recursion_sides(
    a: float,
    b: Tuple[float, float],
    u_n: Tuple[float, float],
    u_prev: Tuple[float, float],
    u_prev_lower: Tuple[float, float],
    r: float,
) -> Tuple[float, float, float, float]:
    """(lhs, se_lhs, rhs, se_rhs)；每个参数为 (估计, SE)。"""
    q = 1.0 / (r - 1.0)
    b_value, b_se = b
    lhs = u_n[0] ** q
    se_lhs = _power_se(u_n[0], u_n[1], q)
    first = a**q * u_prev[0] ** q
    second = b_value**q * u_prev_lower[0] ** q
    se_rhs = math.sqrt(
        (a**q * _power_se(u_prev[0], u_prev[1], q)) ** 2
        + (b_value**q * _power_se(u_prev_lower[0], u_prev_lower[1], q)) ** 2
        + (u_prev_lower[0] ** q * _power_se(b_value, b_se, q)) ** 2
    )
    return lhs, se_lhs, first + second, se_rhs


class URecursionExperiment(BaseExperiment):
    """逐 n 检查递推不等式。"""

    experiment_id = "u-check"

    def _factor_b(self) -> Tuple[float, float, bool]:
        rec = self.config.recursion
        if all(isinstance(state.law, FiniteTableLaw) for state in self.model.active_states()):
            return exact_factor_b(self.model, rec.t, rec.s, rec.r), 0.0, True
        rng = replicate_rng(self.seed, AUXILIARY_STREAM, 0)
        value, se = sampled_factor_b(self.model, rec.t, rec.s, rec.r, rec.w1_samples, rng)
        return value, se, False

    def execute(self) -> Tuple[pd.DataFrame, Dict[str, Any], ExperimentStatus]:
        sim, rec = self.config.simulation, self.config.recursion
        if rec.r <= 2:
            raise ExperimentError(f"u-check needs r > 2, got {rec.r}")
        if not self.model.is_iid:
            raise ExperimentError(f"u-check needs an iid environment, got '{self.model.process.kind}'")
        if sim.n_max < 1:
            raise ExperimentError(f"u-check needs n_max >= 1, got {sim.n_max}")
        a = factor_a(self.model, rec.t, rec.s, rec.r)
        b_value, b_se, b_exact = self._factor_b()
        if not (math.isfinite(a) and math.isfinite(b_value)):
            raise ExperimentError(f"recursion factors are not finite: A={a}, B={b_value}")

        runs = run_replicates(
            partial(annealed_grid_replicate, self.model, [rec.t], sim.n_max, sim.cap),
            sim.replicates,
            self.seed,
            self.threads,
        )
        self.check_cap(runs, lambda reached: pd.DataFrame(columns=COLUMNS))

        u_r = [mean_and_se(u_samples(runs, n, rec.s, rec.r)) for n in range(sim.n_max + 1)]
        u_lower = [mean_and_se(u_samples(runs, n, rec.s, rec.r - 1.0)) for n in range(sim.n_max + 1)]

        exact_depth = min(rec.exact_depth, sim.n_max) if b_exact else -1
        exact_r: Dict[int, float] = {}
        exact_lower: Dict[int, float] = {}
        for n in range(exact_depth + 1):
            exact_r[n] = exact_u(self.model, rec.t, rec.s, rec.r, n)
            exact_lower[n] = exact_u(self.model, rec.t, rec.s, rec.r - 1.0, n)

        rows: List[Dict[str, Any]] = []
        statuses: List[ExperimentStatus] = []
        for n in range(1, sim.n_max + 1):
            lhs, se_lhs, rhs, se_rhs = recursion_sides(
                a, (b_value, b_se), u_r[n], u_r[n - 1], u_lower[n - 1], rec.r
            )
            noisy = any(
                value > 0 and se / value > rec.max_relative_se
                for value, se in (u_r[n], u_r[n - 1], u_lower[n - 1], (b_value, b_se))
            )
            if lhs > rhs + SE_MULTIPLIER * math.sqrt(se_lhs**2 + se_rhs**2):
                status = ExperimentStatus.FAIL
            elif noisy:
                status = ExperimentStatus.INCONCLUSIVE
            else:
                status = ExperimentStatus.PASS

            exact_lhs: Optional[float] = None
            exact_rhs: Optional[float] = None
            if n in exact_r:
                exact_lhs, _, exact_rhs, _ = recursion_sides(
                    a,
                    (b_value, 0.0),
                    (exact_r[n], 0.0),
                    (exact_r[n - 1], 0.0),
                    (exact_lower[n - 1], 0.0),
                    rec.r,
                )
                if exact_lhs > exact_rhs + EXACT_TOLERANCE * max(1.0, exact_rhs):
                    status = ExperimentStatus.FAIL
            if status is ExperimentStatus.INCONCLUSIVE:
                logger.warning("u-check: relative SE above %.2f at n=%d", rec.max_relative_se, n)
            statuses.append(status)
            rows.append(
                {
                    "n": n,
                    "U": u_r[n][0],
                    "se_U": u_r[n][1],
                    "lhs": lhs,
                    "rhs": rhs,
                    "se_lhs": se_lhs,
                    "se_rhs": se_rhs,
                    "exact_U": exact_r.get(n),
                    "exact_lhs": exact_lhs,
                    "exact_rhs": exact_rhs,
                    "status": status.value,
                }
            )

        summary: Dict[str, Any] = {
            "t": rec.t,
            "s": rec.s,
            "r": rec.r,
            "n_max": sim.n_max,
            "replicates": sim.replicates,
            "A": a,
            "B": b_value,
            "B_se": b_se,
            "B_exact": b_exact,
            "exact_depth": exact_depth if b_exact else None,
        }
        overall = combine_status(statuses)
        if 1 in exact_r:
            gap = abs(exact_r[1] - b_value)
            summary["u1_minus_B"] = gap
            if gap > EXACT_TOLERANCE * max(1.0, b_value):
                overall = ExperimentStatus.FAIL
        return pd.DataFrame(rows, columns=COLUMNS), summary, overall


def run_u_recursion_check(
    config: RunConfig,
    threads: int = 1,
    s: Optional[float] = None,
    r: Optional[float] = None,
    n_max: Optional[int] = None,
) -> ExperimentReport:
    rec_updates: Dict[str, Any] = {}
    if s is not None:
        rec_updates["s"] = float(s)
    if r is not None:
        rec_updates["r"] = float(r)
    if rec_updates:
        config = replace(config, recursion=replace(config.recursion, **rec_updates))
    if n_max is not None:
        config = replace(config, simulation=replace(config.simulation, n_max=int(n_max)))
    return URecursionExperiment(config, threads).run()
