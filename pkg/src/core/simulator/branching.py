"""
前向模拟模块。

第 k 代每个粒子按 η_{ξ_k} 独立繁殖，子代位置为 S_u + L_i(u)。
默认只保留当前代；evolve(keep_history=True) 返回全部历史。
"""

from typing import Iterator, List

import numpy as np

from libs.environment import EnvironmentModel, EnvironmentPath
from libs.offspring import BaseOffspringLaw, ChildLimitExceeded
from observability.logger import get_logger

from .snapshot import GenerationSnapshot, PopulationCapExceeded, SimulationError

logger = get_logger(__name__)

# 上限针对不同站点数，而非粒子总数
DEFAULT_CAP = 10_000_000


def _check_horizon(path: EnvironmentPath, n_max: int, cap: int) -> None:
    if n_max < 0:
        raise SimulationError(f"n_max must be >= 0, got {n_max}")
    if n_max > len(path):
        raise SimulationError(f"n_max={n_max} exceeds environment path length {len(path)}")
    if cap < 1:
        raise SimulationError(f"cap must be >= 1, got {cap}")


def step_generation(
    snapshot: GenerationSnapshot,
    law: BaseOffspringLaw,
    rng: np.random.Generator,
    cap: int,
) -> GenerationSnapshot:
    """
    由第 n 代按给定繁殖律生成第 n+1 代。

    Raises:
        PopulationCapExceeded: 下一代站点数超过 cap
    """
    next_generation = snapshot.generation + 1
    if snapshot.extinct:
        return GenerationSnapshot(
            generation=next_generation,
            positions=np.empty(0),
            multiplicities=np.empty(0, dtype=np.int64),
        )
    try:
        positions, multiplicities = law.sample_children(
            snapshot.positions, snapshot.multiplicities, rng, cap
        )
    except ChildLimitExceeded as e:
        raise PopulationCapExceeded(next_generation, e.size, cap) from e
    return GenerationSnapshot(
        generation=next_generation, positions=positions, multiplicities=multiplicities
    )


def iter_generations(
    path: EnvironmentPath,
    model: EnvironmentModel,
    n_max: int,
    cap: int,
    rng: np.random.Generator,
) -> Iterator[GenerationSnapshot]:
    """
    逐代产出第 0..n_max 代快照，内存只占当前代。

    Raises:
        SimulationError: n_max 超出路径长度或参数非法
        PopulationCapExceeded: 任一代超过 cap
    """
    _check_horizon(path, n_max, cap)
    snapshot = GenerationSnapshot.root()
    yield snapshot
    for k in range(n_max):
        snapshot = step_generation(snapshot, model.law_at(path, k), rng, cap)
        logger.debug(
            "generation %d: %d particles on %d sites",
            snapshot.generation,
            snapshot.population,
            snapshot.n_sites,
        )
        yield snapshot


def evolve(
    path: EnvironmentPath,
    model: EnvironmentModel,
    n_max: int,
    cap: int,
    rng: np.random.Generator,
    keep_history: bool = True,
) -> List[GenerationSnapshot]:
    """
    模拟到第 n_max 代。

    Args:
        path: 环境路径（长度 ≥ n_max）
        model: 环境模型
        n_max: 最大代数
        cap: 每代站点数上限
        rng: 随机流
        keep_history: True 返回第 0..n_max 代全部快照，False 仅返回最后一代

    Returns:
        List[GenerationSnapshot]: 快照列表
    """
    if keep_history:
        return list(iter_generations(path, model, n_max, cap, rng))
    last = None
    for last in iter_generations(path, model, n_max, cap, rng):
        pass
    return [last]
