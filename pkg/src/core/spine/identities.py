"""
脊柱恒等式的蒙特卡罗检查。

- verify_w_identity：E_Q g(W_{n−k,ω_k}(t)) = E_{T^kξ} W_{n−k}(t) g(W_{n−k}(t))
- verify_independence：Q 下 X̃_{ω_k}(t) 与 W_{n−k,ω_k}(t) 的样本相关
- expected_population_under_q：E_Q Z_n(ℝ) = E_P Z_n(ℝ) W_n(t)

左侧来自脊柱树，右侧来自普通模拟；路径前 n 步全为 FiniteTable 时
右侧另给出精确枚举值。
"""

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from core.simulator import (
    AUXILIARY_STREAM,
    DEFAULT_CAP,
    REPLICATE_STREAM,
    SimulationError,
    exact_quenched_expectation,
    is_enumerable,
    iter_generations,
    log_partition,
    log_quenched_mean,
    replicate_rng,
    run_replicates,
)
from libs.environment import EnvironmentModel, EnvironmentPath
from observability.logger import get_logger

from .size_biased import SpineError
from .spine_tree import sample_spine_tree

logger = get_logger(__name__)

Z_95 = 1.959963984540054
PERMUTATIONS = 200
# 两侧 SE 都只剩舍入噪声时的绝对容差
OVERLAP_FLOOR = 1e-9
# 左右两侧使用不同的流
SPINE_STREAM = REPLICATE_STREAM
ORDINARY_STREAM = REPLICATE_STREAM + 10


def g_one(x: float) -> float:
    return 1.0


def g_identity(x: float) -> float:
    return x


def g_square(x: float) -> float:
    return x * x


def g_sqrt(x: float) -> float:
    return math.sqrt(x)


def g_log1p(x: float) -> float:
    return math.log1p(x)


G_FUNCTIONS: Dict[str, Callable[[float], float]] = {
    "one": g_one,
    "identity": g_identity,
    "square": g_square,
    "sqrt": g_sqrt,
    "log1p": g_log1p,
}


def resolve_g(name: str) -> Callable[[float], float]:
    """
    Raises:
        SpineError: 未知的 g 名称
    """
    try:
        return G_FUNCTIONS[name]
    except KeyError:
        available = ", ".join(sorted(G_FUNCTIONS))
        raise SpineError(f"Unknown g function '{name}'. Available: {available}") from None


def _mean_se(values: np.ndarray) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def _intervals_overlap(m1: float, se1: float, m2: float, se2: float) -> bool:
    return abs(m1 - m2) <= max(Z_95 * (se1 + se2), OVERLAP_FLOOR)


def _check_levels(path: EnvironmentPath, n: int, k: int) -> None:
    if not 1 <= k <= n:
        raise SpineError(f"need 1 <= k <= n, got k={k}, n={n}")
    if n > len(path):
        raise SimulationError(f"n={n} exceeds environment path length {len(path)}")


# ---------------------------------------------------------------------------
# 单次重复（模块级，供进程池 pickle）
# ---------------------------------------------------------------------------


def _spine_sample(
    path: EnvironmentPath,
    model: EnvironmentModel,
    t: float,
    n: int,
    k: int,
    cap: int,
    rng: np.random.Generator,
) -> Tuple[float, float, int, float]:
    """(X̃_{ω_k}, W_{n−k,ω_k}, Z_n(ℝ), W_n) under Q。"""
    spine = sample_spine_tree(path, model, t, n, cap, rng)
    return (
        float(spine.tilde_x_spine[k]),
        math.exp(spine.subtree_log_w(k)),
        spine.population(),
        math.exp(spine.log_w()),
    )


def _ordinary_sample(
    path: EnvironmentPath,
    model: EnvironmentModel,
    t: float,
    depth: int,
    cap: int,
    rng: np.random.Generator,
) -> Tuple[float, int]:
    """(W_depth(t), Z_depth(ℝ)) under P。"""
    last = None
    for last in iter_generations(path, model, depth, cap, rng):
        pass
    log_z = log_partition(last, t)
    if log_z == -math.inf:
        return 0.0, 0
    return math.exp(log_z - log_quenched_mean(path, model, depth, t)), last.population


def _exact_w_expectation(
    path: EnvironmentPath,
    model: EnvironmentModel,
    t: float,
    depth: int,
    statistic: Callable[[float, int], float],
) -> float:
    log_p = log_quenched_mean(path, model, depth, t)

    def fn(positions: np.ndarray) -> float:
        if positions.size == 0:
            return statistic(0.0, 0)
        w = float(np.exp(t * positions - log_p).sum())
        return statistic(w, int(positions.size))

    return exact_quenched_expectation(path, model, depth, fn)


# ---------------------------------------------------------------------------
# 报告
# ---------------------------------------------------------------------------


@dataclass
class IdentityReport:
    """
    Attributes:
        lhs, se_lhs: Q 侧均值与标准误
        rhs, se_rhs: P 侧均值与标准误
        overlap: 两个 95% 置信区间是否相交
        exact_rhs: 精确枚举的右侧（不可枚举时为 None）
        degenerate: g 在全部样本上取 0
    """

    t: float
    n: int
    k: int
    g: str
    replicates: int
    lhs: float
    se_lhs: float
    rhs: float
    se_rhs: float
    overlap: bool
    exact_rhs: Optional[float] = None
    degenerate: bool = False

    def to_row(self) -> Dict[str, object]:
        return {
            "check": "w_identity",
            "t": self.t,
            "n": self.n,
            "k": self.k,
            "g": self.g,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "se_lhs": self.se_lhs,
            "se_rhs": self.se_rhs,
            "exact": self.exact_rhs,
            "overlap": self.overlap,
        }


@dataclass
class IndependenceReport:
    """
    Attributes:
        corr: X̃_{ω_k}(t) 与 W_{n−k,ω_k}(t) 的样本相关（任一侧为常数时为 0）
        bound: 4/√R
        independent: |corr| < bound
        p_value: 置换检验 p 值
    """

    t: float
    n: int
    k: int
    replicates: int
    corr: float
    bound: float
    independent: bool
    p_value: float

    def to_row(self) -> Dict[str, object]:
        return {
            "check": "independence",
            "t": self.t,
            "n": self.n,
            "k": self.k,
            "g": None,
            "lhs": self.corr,
            "rhs": 0.0,
            "se_lhs": self.bound / 4.0,
            "se_rhs": 0.0,
            "exact": None,
            "overlap": self.independent,
        }


@dataclass
class RadonNikodymReport:
    """
    Attributes:
        q_mean, q_se: E_Q Z_n(ℝ) 的估计
        p_mean, p_se: E_P Z_n(ℝ) W_n(t) 的估计；精确枚举时 p_se = 0
        exact: P 侧是否来自精确枚举
        overlap: 置信区间是否相交
    """

    t: float
    n: int
    replicates: int
    q_mean: float
    q_se: float
    p_mean: float
    p_se: float
    exact: bool
    overlap: bool

    def to_row(self) -> Dict[str, object]:
        return {
            "check": "radon_nikodym",
            "t": self.t,
            "n": self.n,
            "k": 0,
            "g": None,
            "lhs": self.q_mean,
            "rhs": self.p_mean,
            "se_lhs": self.q_se,
            "se_rhs": self.p_se,
            "exact": self.p_mean if self.exact else None,
            "overlap": self.overlap,
        }


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return 0.0
    return float(np.corrcoef(x, y)[0, 1])


# ---------------------------------------------------------------------------
# 检查入口
# ---------------------------------------------------------------------------


def verify_w_identity(
    path: EnvironmentPath,
    model: EnvironmentModel,
    t: float,
    n: int,
    k: int,
    g: str,
    replicates: int,
    seed: int,
    cap: int = DEFAULT_CAP,
    threads: int = 1,
) -> IdentityReport:
    """
    比较 E_Q g(W_{n−k,ω_k}(t)) 与 E_{T^kξ} W_{n−k}(t) g(W_{n−k}(t))。

    Args:
        path: 环境路径（长度 ≥ n）
        model: 环境模型
        t: 倾斜参数
        n: 树高
        k: 子树根所在代，1 ≤ k ≤ n
        g: G_FUNCTIONS 中的名称
        replicates: 每侧重复次数
        seed: 主种子
        cap: 种群上限
        threads: 进程数

    Raises:
        SpineError: k 越界或 g 未知
    """
    _check_levels(path, n, k)
    g_fn = resolve_g(g)
    shifted = path.shift(k)
    depth = n - k

    spine = run_replicates(
        partial(_spine_sample, path, model, t, n, k, cap), replicates, seed, threads, SPINE_STREAM
    )
    ordinary = run_replicates(
        partial(_ordinary_sample, shifted, model, t, depth, cap),
        replicates,
        seed,
        threads,
        ORDINARY_STREAM,
    )
    lhs_values = np.array([g_fn(w) for _, w, _, _ in spine])
    g_ordinary = np.array([g_fn(w) for w, _ in ordinary])
    rhs_values = np.array([w for w, _ in ordinary]) * g_ordinary

    lhs, se_lhs = _mean_se(lhs_values)
    rhs, se_rhs = _mean_se(rhs_values)
    degenerate = not lhs_values.any() and not g_ordinary.any()
    if degenerate:
        logger.warning("g='%s' is identically 0 on all samples", g)

    exact_rhs = None
    if is_enumerable(shifted, model, depth):
        exact_rhs = _exact_w_expectation(shifted, model, t, depth, lambda w, _: w * g_fn(w))

    return IdentityReport(
        t=float(t),
        n=n,
        k=k,
        g=g,
        replicates=replicates,
        lhs=lhs,
        se_lhs=se_lhs,
        rhs=rhs,
        se_rhs=se_rhs,
        overlap=_intervals_overlap(lhs, se_lhs, rhs, se_rhs),
        exact_rhs=exact_rhs,
        degenerate=degenerate,
    )


def verify_independence(
    path: EnvironmentPath,
    model: EnvironmentModel,
    t: float,
    n: int,
    k: int,
    replicates: int,
    seed: int,
    cap: int = DEFAULT_CAP,
    threads: int = 1,
) -> IndependenceReport:
    """
    Q 下 X̃_{ω_k}(t) 与 W_{n−k,ω_k}(t) 的相关性，附置换检验。

    Raises:
        SpineError: k 越界
    """
    _check_levels(path, n, k)
    spine = run_replicates(
        partial(_spine_sample, path, model, t, n, k, cap), replicates, seed, threads, SPINE_STREAM
    )
    x = np.array([row[0] for row in spine])
    w = np.array([row[1] for row in spine])
    corr = _pearson(x, w)

    if corr == 0.0:
        p_value = 1.0
    else:
        rng = replicate_rng(seed, AUXILIARY_STREAM, 0)
        exceed = sum(
            abs(_pearson(x, rng.permutation(w))) >= abs(corr) for _ in range(PERMUTATIONS)
        )
        p_value = (1 + exceed) / (1 + PERMUTATIONS)

    bound = 4.0 / math.sqrt(replicates)
    return IndependenceReport(
        t=float(t),
        n=n,
        k=k,
        replicates=replicates,
        corr=corr,
        bound=bound,
        independent=abs(corr) < bound,
        p_value=float(p_value),
    )


def expected_population_under_q(
    path: EnvironmentPath,
    model: EnvironmentModel,
    t: float,
    n: int,
    replicates: int,
    seed: int,
    cap: int = DEFAULT_CAP,
    threads: int = 1,
) -> RadonNikodymReport:
    """
    Radon–Nikodym 一致性：E_Q Z_n(ℝ) 对 E_P[Z_n(ℝ) W_n(t)]。

    P 侧在可枚举时精确计算，否则用普通模拟估计。
    """
    if not 0 <= n <= len(path):
        raise SimulationError(f"n={n} outside [0, {len(path)}]")
    spine = run_replicates(
        partial(_spine_sample, path, model, t, n, 0, cap), replicates, seed, threads, SPINE_STREAM
    )
    q_mean, q_se = _mean_se(np.array([row[2] for row in spine], dtype=float))

    exact = is_enumerable(path, model, n)
    if exact:
        p_mean = _exact_w_expectation(path, model, t, n, lambda w, z: z * w)
        p_se = 0.0
    else:
        ordinary: List[Tuple[float, int]] = run_replicates(
            partial(_ordinary_sample, path, model, t, n, cap),
            replicates,
            seed,
            threads,
            ORDINARY_STREAM,
        )
        p_mean, p_se = _mean_se(np.array([w * z for w, z in ordinary], dtype=float))

    return RadonNikodymReport(
        t=float(t),
        n=n,
        replicates=replicates,
        q_mean=q_mean,
        q_se=q_se,
        p_mean=p_mean,
        p_se=p_se,
        exact=exact,
        overlap=_intervals_overlap(q_mean, q_se, p_mean, p_se),
    )
