"""
i.i.d. 环境过程：每一步按固定权重独立抽取状态。
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from .base_process import BaseEnvironmentProcess, EnvironmentModelError

WEIGHT_SUM_TOLERANCE = 1e-10


@dataclass(frozen=True)
class IIDProcess(BaseEnvironmentProcess):
    """
    i.i.d. 环境。

    Attributes:
        weights: 各状态的抽取概率，非负且和为 1
    """

    weights: Tuple[float, ...]
    _pvals: np.ndarray = field(init=False, repr=False, compare=False)

    kind = "iid"

    def __post_init__(self) -> None:
        if not self.weights:
            raise EnvironmentModelError("iid weights must not be empty")
        for i, w in enumerate(self.weights):
            if not math.isfinite(w) or w < 0:
                raise EnvironmentModelError(f"weights[{i}] must be finite and >= 0, got {w}")
        total = math.fsum(self.weights)
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise EnvironmentModelError(f"iid weights must sum to 1, got {total!r}")
        pvals = np.array(self.weights, dtype=float)
        object.__setattr__(self, "_pvals", pvals / pvals.sum())

    @classmethod
    def from_dict(cls, data: Dict[str, Any], state_ids: Sequence[str]) -> "IIDProcess":
        weights = data.get("weights")
        if weights is None:
            # 缺省权重：单状态模型
            if len(state_ids) != 1:
                raise EnvironmentModelError("iid process needs weights for multi-state models")
            weights = [1.0]
        return cls(weights=tuple(float(w) for w in weights))

    @property
    def n_states(self) -> int:
        return len(self.weights)

    @property
    def is_iid(self) -> bool:
        return True

    def stationary_distribution(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)

    def sample_indices(self, horizon: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.n_states, size=horizon, p=self._pvals).astype(np.int64)

    def to_dict(self, state_ids: Sequence[str]) -> Dict[str, Any]:
        return {"kind": self.kind, "weights": list(self.weights)}
