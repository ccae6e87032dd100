"""
Q_ξ 下的脊柱树。

第 k 代脊柱节点按 ξ_k 的尺寸偏置律繁殖；每个非脊柱子节点在
T^{k+1}ξ 下生成独立的普通（P 测度）子树，深度 n−k−1。
只记录子树摘要（位移、log W、粒子数），不保存整棵树。
"""

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.special import logsumexp

from core.simulator import (
    GenerationSnapshot,
    SimulationError,
    iter_generations,
    log_partition,
    log_quenched_mean,
)
from libs.environment import EnvironmentModel, EnvironmentPath

from .size_biased import sample_size_biased_offspring


@dataclass(frozen=True)
class SiblingSubtree:
    """
    脊柱节点 ω_level 的一个非脊柱子节点及其后代子树。

    Attributes:
        level: 父节点所在代 k（子节点在 k+1 代）
        displacement: 子节点相对父节点的位移
        log_w: 子树在第 n 代的 log W_{n−k−1}(t)（T^{k+1}ξ 下）；灭绝为 −inf
        population: 子树在第 n 代的粒子数
    """

    level: int
    displacement: float
    log_w: float
    population: int


@dataclass(frozen=True, eq=False)
class SpineRealization:
    """
    一次脊柱树采样。

    Attributes:
        t: 倾斜参数
        horizon: n
        spine_displacements: 脊柱增量，长度 n
        spine_positions: S_{ω_0}..S_{ω_n}，长度 n+1
        log_P_prefix: log P_0(t)..log P_n(t)
        siblings: 全部非脊柱子节点摘要
    """

    t: float
    horizon: int
    spine_displacements: np.ndarray
    spine_positions: np.ndarray
    log_P_prefix: np.ndarray
    siblings: List[SiblingSubtree] = field(default_factory=list)

    @property
    def tilde_x_spine(self) -> np.ndarray:
        """X̃_{ω_k}(t) = e^{t S_{ω_k}} / P_k(t)，k = 0..n。"""
        return np.exp(self.t * self.spine_positions - self.log_P_prefix)

    def subtree_log_w(self, k: int) -> float:
        """
        log W_{n−k, ω_k}(t)：以 ω_k 为根、在 T^kξ 下的子树鞅值。

        Raises:
            SimulationError: k 不在 [0, n]
        """
        if not 0 <= k <= self.horizon:
            raise SimulationError(f"k={k} outside [0, {self.horizon}]")
        n = self.horizon
        s, log_p, t = self.spine_positions, self.log_P_prefix, self.t
        terms = [t * (s[n] - s[k]) - (log_p[n] - log_p[k])]
        for sib in self.siblings:
            if sib.level < k or sib.log_w == -math.inf:
                continue
            terms.append(
                t * (s[sib.level] + sib.displacement - s[k])
                - (log_p[sib.level + 1] - log_p[k])
                + sib.log_w
            )
        return float(logsumexp(terms))

    def log_w(self) -> float:
        """整棵树的 log W_n(t)。"""
        return self.subtree_log_w(0)

    def population(self) -> int:
        """第 n 代粒子数 Z_n(ℝ)（脊柱末端计 1）。"""
        return 1 + sum(sib.population for sib in self.siblings)


def _ordinary_subtree(
    path: EnvironmentPath,
    model: EnvironmentModel,
    depth: int,
    cap: int,
    rng: np.random.Generator,
) -> GenerationSnapshot:
    last = None
    for last in iter_generations(path, model, depth, cap, rng):
        pass
    return last


def sample_spine_tree(
    path: EnvironmentPath,
    model: EnvironmentModel,
    t: float,
    n: int,
    cap: int,
    rng: np.random.Generator,
) -> SpineRealization:
    """
    在 Q_ξ 下采样 n 代脊柱树。

    Raises:
        SimulationError: n 超出路径长度
        PopulationCapExceeded: 某个兄弟子树超过 cap
        SpineError: 某代的 m(t) 非有限
    """
    if not 0 <= n <= len(path):
        raise SimulationError(f"n={n} outside [0, {len(path)}]")

    spine_displacements = np.zeros(n)
    siblings: List[SiblingSubtree] = []
    for k in range(n):
        law = model.law_at(path, k)
        count, displacements, spine_index = sample_size_biased_offspring(law, t, rng)
        spine_displacements[k] = displacements[spine_index]

        depth = n - k - 1
        shifted = path.shift(k + 1)
        log_p_sub = log_quenched_mean(shifted, model, depth, t)
        for j in range(count):
            if j == spine_index:
                continue
            leaf = _ordinary_subtree(shifted, model, depth, cap, rng)
            log_w = log_partition(leaf, t)
            siblings.append(
                SiblingSubtree(
                    level=k,
                    displacement=float(displacements[j]),
                    log_w=log_w - log_p_sub if log_w != -math.inf else -math.inf,
                    population=leaf.population,
                )
            )

    spine_positions = np.concatenate(([0.0], np.cumsum(spine_displacements)))
    log_P_prefix = np.array([log_quenched_mean(path, model, k, t) for k in range(n + 1)])
    return SpineRealization(
        t=float(t),
        horizon=n,
        spine_displacements=spine_displacements,
        spine_positions=spine_positions,
        log_P_prefix=log_P_prefix,
        siblings=siblings,
    )
