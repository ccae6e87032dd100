"""
Markov 链环境过程。

平稳分布通过求解平衡方程得到（不做 burn-in），路径从平稳分布起步。
构造时拒绝可约转移矩阵。
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .base_process import BaseEnvironmentProcess, EnvironmentModelError

ROW_SUM_TOLERANCE = 1e-10
BALANCE_TOLERANCE = 1e-10


def solve_stationary(matrix: np.ndarray) -> np.ndarray:
    """
    求解 πP = π, Σπ = 1。

    用全 1 行替换 (P^T − I) 的最后一行得到非奇异方程组（不可约时）。
    """
    n = matrix.shape[0]
    system = matrix.T - np.eye(n)
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    return np.linalg.solve(system, rhs)


@dataclass(frozen=True)
class MarkovProcess(BaseEnvironmentProcess):
    """
    有限状态 Markov 链环境。

    Attributes:
        matrix: 行随机转移矩阵（不可约）
    """

    matrix: Tuple[Tuple[float, ...], ...]
    _transition: np.ndarray = field(init=False, repr=False, compare=False)
    _cumulative: np.ndarray = field(init=False, repr=False, compare=False)
    _stationary: np.ndarray = field(init=False, repr=False, compare=False)

    kind = "markov"

    def __post_init__(self) -> None:
        n = len(self.matrix)
        if n == 0:
            raise EnvironmentModelError("markov matrix must not be empty")
        for i, row in enumerate(self.matrix):
            if len(row) != n:
                raise EnvironmentModelError(
                    f"matrix[{i}] has length {len(row)}, expected {n} (square matrix)"
                )
            for j, p in enumerate(row):
                if not math.isfinite(p) or p < 0:
                    raise EnvironmentModelError(
                        f"matrix[{i}][{j}] must be finite and >= 0, got {p}"
                    )
            total = math.fsum(row)
            if abs(total - 1.0) > ROW_SUM_TOLERANCE:
                raise EnvironmentModelError(f"matrix[{i}] must sum to 1, got {total!r}")

        transition = np.array(self.matrix, dtype=float)
        n_components, _ = connected_components(
            csr_matrix(transition > 0), directed=True, connection="strong"
        )
        if n_components != 1:
            raise EnvironmentModelError(
                f"markov matrix is reducible ({n_components} communicating classes)"
            )

        stationary = solve_stationary(transition)
        residual = float(np.max(np.abs(stationary @ transition - stationary)))
        if residual > BALANCE_TOLERANCE or np.any(stationary < -BALANCE_TOLERANCE):
            raise EnvironmentModelError(
                f"stationary distribution fails balance equations (residual {residual:.3e})"
            )
        stationary = np.clip(stationary, 0.0, None)
        stationary = stationary / stationary.sum()

        object.__setattr__(self, "_transition", transition)
        object.__setattr__(self, "_cumulative", np.cumsum(transition, axis=1))
        object.__setattr__(self, "_stationary", stationary)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], state_ids: Sequence[str]) -> "MarkovProcess":
        return cls(matrix=tuple(tuple(float(p) for p in row) for row in data["matrix"]))

    @property
    def n_states(self) -> int:
        return len(self.matrix)

    def stationary_distribution(self) -> np.ndarray:
        return self._stationary.copy()

    def sample_indices(self, horizon: int, rng: np.random.Generator) -> np.ndarray:
        indices = np.empty(horizon, dtype=np.int64)
        if horizon == 0:
            return indices
        state = int(rng.choice(self.n_states, p=self._stationary))
        indices[0] = state
        uniforms = rng.random(horizon - 1)
        last = self.n_states - 1
        for k, u in enumerate(uniforms, start=1):
            state = min(int(np.searchsorted(self._cumulative[state], u, side="right")), last)
            indices[k] = state
        return indices

    def to_dict(self, state_ids: Sequence[str]) -> Dict[str, Any]:
        return {"kind": self.kind, "matrix": [list(row) for row in self.matrix]}
