"""
加性鞅模块。

W_n(t) = Z̃_n(t) / P_n(t)，P_n(t) = Π_{i<n} m_{ξ_i}(t)。
所有乘积与求和在对数域完成，最后一步才取指数。
"""

import math
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple, Sequence, Tuple

import numpy as np

from libs.environment import EnvironmentModel, EnvironmentPath

from .branching import iter_generations
from .snapshot import GenerationSnapshot, SimulationError, log_partition


class GridRow(NamedTuple):
    """单代在 t 网格上的 log Z̃、log P 与 W。"""

    n: int
    population: int
    log_Ztilde: np.ndarray
    log_P: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class MartingalePath:
    """
    一棵树在 (n, t) 网格上的鞅值。

    Attributes:
        t_grid: t 网格
        values: W_n(t)，形状 (N+1, T)
        log_P: log P_n(t)，形状 (N+1, T)
        log_Ztilde: log Z̃_n(t)，形状 (N+1, T)
        populations: Z_n(ℝ)，长度 N+1
    """

    t_grid: Tuple[float, ...]
    values: np.ndarray
    log_P: np.ndarray
    log_Ztilde: np.ndarray
    populations: np.ndarray

    @property
    def n_max(self) -> int:
        return self.values.shape[0] - 1

    def column(self, t: float) -> int:
        """t 在网格中的下标。

        Raises:
            SimulationError: t 不在网格中
        """
        for j, grid_t in enumerate(self.t_grid):
            if grid_t == t:
                return j
        raise SimulationError(f"t={t} is not on the martingale grid {list(self.t_grid)}")


def log_quenched_mean(
    path: EnvironmentPath, model: EnvironmentModel, n: int, t: float
) -> float:
    """
    log P_n(t) = Σ_{i<n} log m_{ξ_i}(t)；n = 0 返回 0。

    Raises:
        SimulationError: n 超出路径长度
    """
    if not 0 <= n <= len(path):
        raise SimulationError(f"n={n} outside [0, {len(path)}]")
    return math.fsum(model.law_at(path, i).log_laplace(t) for i in range(n))


def w_value(
    snapshot: GenerationSnapshot,
    path: EnvironmentPath,
    model: EnvironmentModel,
    t: float,
) -> float:
    """W_n(t)；灭绝时为 0。"""
    log_z = log_partition(snapshot, t)
    if log_z == -np.inf:
        return 0.0
    return math.exp(log_z - log_quenched_mean(path, model, snapshot.generation, t))


def iter_grid_rows(
    path: EnvironmentPath,
    model: EnvironmentModel,
    t_grid: Sequence[float],
    n_max: int,
    cap: int,
    rng: np.random.Generator,
) -> Iterator[GridRow]:
    """
    逐代产出 (n, t) 网格的一行；超限时已产出的行仍然有效。

    Raises:
        PopulationCapExceeded: 任一代超过 cap
    """
    t_grid = tuple(float(t) for t in t_grid)
    for snapshot in iter_generations(path, model, n_max, cap, rng):
        n = snapshot.generation
        yield GridRow(
            n=n,
            population=snapshot.population,
            log_Ztilde=np.array([log_partition(snapshot, t) for t in t_grid]),
            log_P=np.array([log_quenched_mean(path, model, n, t) for t in t_grid]),
            values=np.array([w_value(snapshot, path, model, t) for t in t_grid]),
        )


def w_path_on_grid(
    path: EnvironmentPath,
    model: EnvironmentModel,
    t_grid: Sequence[float],
    n_max: int,
    cap: int,
    rng: np.random.Generator,
) -> MartingalePath:
    """
    一次遍历填满全部 (n, t) 单元，与逐次调用 w_value 的算术完全一致。

    Raises:
        PopulationCapExceeded: 任一代超过 cap
    """
    t_grid = tuple(float(t) for t in t_grid)
    shape = (n_max + 1, len(t_grid))
    values = np.zeros(shape)
    log_P = np.zeros(shape)
    log_Z = np.zeros(shape)
    populations = np.zeros(n_max + 1, dtype=np.int64)

    for row in iter_grid_rows(path, model, t_grid, n_max, cap, rng):
        populations[row.n] = row.population
        log_Z[row.n] = row.log_Ztilde
        log_P[row.n] = row.log_P
        values[row.n] = row.values
    return MartingalePath(
        t_grid=t_grid, values=values, log_P=log_P, log_Ztilde=log_Z, populations=populations
    )


def a_hat_partial_sums(w: Sequence[float], rho: float) -> List[float]:
    """
    Â_n = Σ_{k≤n} ρ^k (W_{k+1} − W_k)，n = 0..N−1，按 k 递增顺序累加。

    Raises:
        SimulationError: ρ < 1
    """
    if not rho >= 1:
        raise SimulationError(f"rho must be >= 1, got {rho}")
    sums: List[float] = []
    total = 0.0
    for k in range(len(w) - 1):
        total += rho**k * (w[k + 1] - w[k])
        sums.append(total)
    return sums


def a_hat_path(mp: MartingalePath, t: float, rho: float) -> List[float]:
    """记录路径上 t 列的 Â_0..Â_{N−1}。"""
    column = mp.values[:, mp.column(t)]
    return a_hat_partial_sums([float(v) for v in column], rho)
