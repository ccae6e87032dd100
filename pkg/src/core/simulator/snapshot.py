"""
代快照模块。

GenerationSnapshot 以 (站点位置, 多重度) 的压缩形式保存第 n 代全部粒子：
同一位置上的粒子可交换，合并存储在律上是精确的。
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp


class SimulationError(Exception):
    """模拟过程中的错误。"""
    pass


class PopulationCapExceeded(SimulationError):
    """
    某一代将超过种群上限时抛出（硬中止，不做子采样）。

    Attributes:
        generation: 超限的代数
        size: 该代将要保存的站点数
        cap: 上限
    """

    def __init__(self, generation: int, size: int, cap: int):
        super().__init__(
            f"Population cap exceeded at generation {generation}: {size} sites > cap {cap}"
        )
        self.generation = generation
        self.size = size
        self.cap = cap


@dataclass(frozen=True, eq=False)
class GenerationSnapshot:
    """
    第 n 代粒子的不可变快照。

    Attributes:
        generation: 代数 n ≥ 0
        positions: 各站点位置 S_u（float64，只读）
        multiplicities: 各站点上的粒子数（int64，只读，均 ≥ 1）
    """

    generation: int
    positions: np.ndarray
    multiplicities: np.ndarray

    def __post_init__(self) -> None:
        positions = np.array(self.positions, dtype=float)
        multiplicities = np.array(self.multiplicities, dtype=np.int64)
        if positions.shape != multiplicities.shape or positions.ndim != 1:
            raise SimulationError("positions and multiplicities must be 1-d arrays of equal length")
        if self.generation < 0:
            raise SimulationError(f"generation must be >= 0, got {self.generation}")
        if multiplicities.size and multiplicities.min() < 1:
            raise SimulationError("multiplicities must be >= 1")
        positions.setflags(write=False)
        multiplicities.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "multiplicities", multiplicities)

    @classmethod
    def root(cls) -> "GenerationSnapshot":
        """第 0 代：唯一粒子位于 0。"""
        return cls(generation=0, positions=np.zeros(1), multiplicities=np.ones(1, dtype=np.int64))

    @classmethod
    def from_positions(cls, generation: int, positions) -> "GenerationSnapshot":
        """由逐粒子位置列表构造（多重度均为 1）。"""
        positions = np.asarray(positions, dtype=float)
        return cls(
            generation=generation,
            positions=positions,
            multiplicities=np.ones(positions.size, dtype=np.int64),
        )

    @property
    def extinct(self) -> bool:
        return self.positions.size == 0

    @property
    def population(self) -> int:
        """Z_n(ℝ)。"""
        return int(self.multiplicities.sum())

    @property
    def n_sites(self) -> int:
        return int(self.positions.size)

    def expanded_positions(self) -> np.ndarray:
        """逐粒子展开的位置（升序）；仅用于小规模检查。"""
        order = np.argsort(self.positions, kind="stable")
        return np.repeat(self.positions[order], self.multiplicities[order])


def log_partition(snapshot: GenerationSnapshot, t: float) -> float:
    """
    log Z̃_n(t) = log Σ_u e^{t·S_u}，log-sum-exp 计算。

    Returns:
        float: 灭绝时返回 −inf
    """
    if snapshot.extinct:
        return -np.inf
    return float(logsumexp(t * snapshot.positions, b=snapshot.multiplicities))


def count_in_interval(snapshot: GenerationSnapshot, a: float, b: float) -> int:
    """
    Z_n([a, b])：位于闭区间 [a, b] 内的粒子数。

    Raises:
        SimulationError: a > b
    """
    if a > b:
        raise SimulationError(f"interval lower bound {a} exceeds upper bound {b}")
    mask = (snapshot.positions >= a) & (snapshot.positions <= b)
    return int(snapshot.multiplicities[mask].sum())
