"""
单次重复的模块级 worker（可被进程池 pickle）。
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from core.simulator import PopulationCapExceeded, count_in_interval, iter_generations, iter_grid_rows
from libs.environment import EnvironmentModel, EnvironmentPath


@dataclass
class GridRun:
    """
    一次重复在 (n, t) 网格上的结果；超限时未到达的行为 NaN。

    Attributes:
        values: W_n(t)
        log_P: log P_n(t)
        log_Ztilde: log Z̃_n(t)
        populations: Z_n(ℝ)（未到达为 −1）
        path_states: 该重复使用的环境状态下标
        failed_generation: 超限的代数（未超限为 None）
        failed_size: 超限时的站点数
    """

    values: np.ndarray
    log_P: np.ndarray
    log_Ztilde: np.ndarray
    populations: np.ndarray
    path_states: tuple
    failed_generation: Optional[int] = None
    failed_size: Optional[int] = None

    @property
    def completed(self) -> bool:
        return self.failed_generation is None


def grid_replicate(
    path: EnvironmentPath,
    model: EnvironmentModel,
    t_grid: Sequence[float],
    n_max: int,
    cap: int,
    rng: np.random.Generator,
) -> GridRun:
    """固定环境路径上的一次重复。"""
    shape = (n_max + 1, len(t_grid))
    run = GridRun(
        values=np.full(shape, np.nan),
        log_P=np.full(shape, np.nan),
        log_Ztilde=np.full(shape, np.nan),
        populations=np.full(n_max + 1, -1, dtype=np.int64),
        path_states=tuple(path.indices[:n_max]),
    )
    try:
        for row in iter_grid_rows(path, model, t_grid, n_max, cap, rng):
            run.values[row.n] = row.values
            run.log_P[row.n] = row.log_P
            run.log_Ztilde[row.n] = row.log_Ztilde
            run.populations[row.n] = row.population
    except PopulationCapExceeded as e:
        run.failed_generation = e.generation
        run.failed_size = e.size
    return run


def annealed_grid_replicate(
    model: EnvironmentModel,
    t_grid: Sequence[float],
    n_max: int,
    cap: int,
    rng: np.random.Generator,
) -> GridRun:
    """每次重复先用同一随机流抽一条新的环境路径（退火）。"""
    indices = model.process.sample_indices(n_max, rng)
    path = EnvironmentPath.from_indices(model, indices)
    return grid_replicate(path, model, t_grid, n_max, cap, rng)


@dataclass
class PopulationRun:
    """
    一次重复在各 n 上的 log(Z_n([lo, hi]) / Z_n(ℝ))；计数为 0 时为 −inf，未到达为 NaN。
    """

    log_ratios: np.ndarray
    failed_generation: Optional[int] = None
    failed_size: Optional[int] = None

    @property
    def completed(self) -> bool:
        return self.failed_generation is None


def population_replicate(
    path: EnvironmentPath,
    model: EnvironmentModel,
    horizons: Sequence[Tuple[int, float, float]],
    cap: int,
    rng: np.random.Generator,
) -> PopulationRun:
    """horizons 为升序的 (n, lo, hi)。"""
    run = PopulationRun(log_ratios=np.full(len(horizons), np.nan))
    targets = {n: j for j, (n, _, _) in enumerate(horizons)}
    try:
        for snapshot in iter_generations(path, model, horizons[-1][0], cap, rng):
            j = targets.get(snapshot.generation)
            if j is None:
                continue
            _, lo, hi = horizons[j]
            count = count_in_interval(snapshot, lo, hi)
            if count == 0 or snapshot.extinct:
                run.log_ratios[j] = -np.inf
            else:
                run.log_ratios[j] = math.log(count) - math.log(snapshot.population)
    except PopulationCapExceeded as e:
        run.failed_generation = e.generation
        run.failed_size = e.size
    return run


Run = Union[GridRun, PopulationRun]


def first_failure(runs: Sequence[Run]) -> Optional[Run]:
    """最早超限的重复（无超限返回 None）。"""
    failed = [run for run in runs if not run.completed]
    if not failed:
        return None
    return min(failed, key=lambda run: run.failed_generation)
