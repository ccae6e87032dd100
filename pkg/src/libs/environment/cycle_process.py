"""
周期环境过程：按固定顺序循环，起点偏移均匀随机（平稳遍历化）。
"""

from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from .base_process import BaseEnvironmentProcess, EnvironmentModelError


@dataclass(frozen=True)
class CycleProcess(BaseEnvironmentProcess):
    """
    周期环境。

    Attributes:
        sequence: 一个周期内的状态下标序列
        n_total: 模型中的状态总数（未出现在周期中的状态权重为 0）
    """

    sequence: Tuple[int, ...]
    n_total: int

    kind = "cycle"

    def __post_init__(self) -> None:
        if not self.sequence:
            raise EnvironmentModelError("cycle sequence must not be empty")
        for i, index in enumerate(self.sequence):
            if not 0 <= index < self.n_total:
                raise EnvironmentModelError(
                    f"sequence[{i}] refers to state index {index}, "
                    f"model has {self.n_total} states"
                )

    @classmethod
    def from_dict(cls, data: Dict[str, Any], state_ids: Sequence[str]) -> "CycleProcess":
        lookup = {state_id: i for i, state_id in enumerate(state_ids)}
        sequence = []
        for i, state_id in enumerate(data["sequence"]):
            if str(state_id) not in lookup:
                raise EnvironmentModelError(f"sequence[{i}]: unknown state id '{state_id}'")
            sequence.append(lookup[str(state_id)])
        return cls(sequence=tuple(sequence), n_total=len(state_ids))

    @property
    def n_states(self) -> int:
        return self.n_total

    def stationary_distribution(self) -> np.ndarray:
        counts = np.bincount(np.array(self.sequence), minlength=self.n_total)
        return counts / len(self.sequence)

    def sample_indices(self, horizon: int, rng: np.random.Generator) -> np.ndarray:
        cycle = np.array(self.sequence, dtype=np.int64)
        offset = int(rng.integers(len(cycle)))
        return cycle[(offset + np.arange(horizon)) % len(cycle)]

    def to_dict(self, state_ids: Sequence[str]) -> Dict[str, Any]:
        return {"kind": self.kind, "sequence": [state_ids[i] for i in self.sequence]}
