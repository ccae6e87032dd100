"""
环境模型与环境路径。

此模块提供：
- EnvironmentModel：状态表 (state id, 繁殖律) + 平稳遍历的环境过程
- EnvironmentPath：一次带种子的环境实现 ξ_0..ξ_{n-1}
- sample_env_path()：按种子确定性地采样路径
- normalize_at()：位移变换 t*·L − log m(t*)，得到 m̄(1) = 1 的模型
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from libs.offspring import BaseOffspringLaw, OffspringLawError, OffspringLawFactory

from .base_process import BaseEnvironmentProcess, EnvironmentModelError
from .iid_process import IIDProcess
from .process_factory import EnvironmentProcessFactory

SEED_BOUND = 2**64


@dataclass(frozen=True)
class EnvironmentState:
    """一个环境状态：id 与该状态下的繁殖律。"""

    state_id: str
    law: BaseOffspringLaw


@dataclass(frozen=True)
class EnvironmentModel:
    """
    环境模型。

    Attributes:
        states: 状态元组（按下标顺序）
        process: 环境过程（iid / markov / cycle）
    """

    states: Tuple[EnvironmentState, ...]
    process: BaseEnvironmentProcess
    _weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.states:
            raise EnvironmentModelError("model needs at least one state")
        ids = [state.state_id for state in self.states]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise EnvironmentModelError(f"duplicate state ids: {', '.join(duplicates)}")
        if self.process.n_states != len(self.states):
            raise EnvironmentModelError(
                f"process describes {self.process.n_states} states, model has {len(self.states)}"
            )
        object.__setattr__(self, "_weights", self.process.stationary_distribution())

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EnvironmentModel":
        """
        从模型描述字典构建模型（遇到第一个错误即抛出）。

        完整的逐字段错误收集在 core.settings 中完成。

        Raises:
            EnvironmentModelError: 过程或状态表非法
            OffspringLawError: 繁殖律参数非法
        """
        raw_states = data.get("states") or []
        states = tuple(
            EnvironmentState(state_id=str(item["id"]), law=OffspringLawFactory.create(item))
            for item in raw_states
        )
        state_ids = [state.state_id for state in states]
        process_data = data.get("process") or {"kind": "iid"}
        process = EnvironmentProcessFactory.create(process_data, state_ids)
        return cls(states=states, process=process)

    @classmethod
    def constant(cls, law: BaseOffspringLaw, state_id: str = "s0") -> "EnvironmentModel":
        """单状态（常数环境）模型。"""
        return cls(states=(EnvironmentState(state_id, law),), process=IIDProcess(weights=(1.0,)))

    # 查询 -----------------------------------------------------------------

    @property
    def state_ids(self) -> Tuple[str, ...]:
        return tuple(state.state_id for state in self.states)

    @property
    def laws(self) -> Tuple[BaseOffspringLaw, ...]:
        return tuple(state.law for state in self.states)

    @property
    def stationary_weights(self) -> np.ndarray:
        """ξ_0 的分布；Markov 环境取平稳分布。"""
        return self._weights.copy()

    @property
    def is_iid(self) -> bool:
        return self.process.is_iid

    def index_of(self, state_id: str) -> int:
        try:
            return self.state_ids.index(state_id)
        except ValueError:
            raise EnvironmentModelError(f"unknown state id '{state_id}'") from None

    def law_at(self, path: "EnvironmentPath", k: int) -> BaseOffspringLaw:
        """第 k 代使用的繁殖律 η_{ξ_k}。"""
        return self.states[path.indices[k]].law

    def expectation(self, fn: Callable[[BaseOffspringLaw], float]) -> float:
        """E f(ξ_0)：对平稳权重的精确加权和，跳过零权重状态。"""
        return math.fsum(
            w * fn(state.law) for w, state in zip(self._weights, self.states) if w > 0
        )

    def log_expectation(self, log_fn: Callable[[BaseOffspringLaw], float]) -> float:
        """log E exp(g(ξ_0))，其中 log_fn 返回 g；对数域求和。"""
        terms = [
            math.log(w) + log_fn(state.law)
            for w, state in zip(self._weights, self.states)
            if w > 0
        ]
        return float(logsumexp(terms))

    def active_states(self) -> Tuple[EnvironmentState, ...]:
        """平稳权重为正的状态。"""
        return tuple(state for w, state in zip(self._weights, self.states) if w > 0)

    # 变换与序列化 -----------------------------------------------------------

    def normalize_at(self, t_star: float) -> "EnvironmentModel":
        """逐状态归一化；任一状态 m(t*) 非有限则拒绝。"""
        try:
            states = tuple(
                EnvironmentState(state.state_id, state.law.normalized(t_star))
                for state in self.states
            )
        except OffspringLawError as e:
            raise EnvironmentModelError(f"cannot normalize at t_star={t_star}: {e}") from e
        return EnvironmentModel(states=states, process=self.process)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "states": [{"id": s.state_id, **s.law.to_dict()} for s in self.states],
            "process": self.process.to_dict(self.state_ids),
        }


@dataclass(frozen=True)
class EnvironmentPath:
    """
    一次环境实现。

    Attributes:
        seed: 生成该路径的 64 位种子
        states: 状态 id 序列 ξ_0..ξ_{n-1}
        indices: 对应的状态下标
    """

    seed: int
    states: Tuple[str, ...]
    indices: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.indices)

    @classmethod
    def from_indices(
        cls, model: EnvironmentModel, indices: Sequence[int], seed: int = 0
    ) -> "EnvironmentPath":
        ids = model.state_ids
        return cls(
            seed=int(seed),
            states=tuple(ids[int(i)] for i in indices),
            indices=tuple(int(i) for i in indices),
        )

    @classmethod
    def from_state_ids(
        cls, model: EnvironmentModel, state_ids: Sequence[str], seed: int = 0
    ) -> "EnvironmentPath":
        return cls.from_indices(model, [model.index_of(s) for s in state_ids], seed)

    def shift(self, k: int) -> "EnvironmentPath":
        """平移算子 T^k ξ。"""
        return EnvironmentPath(seed=self.seed, states=self.states[k:], indices=self.indices[k:])


def sample_env_path(model: EnvironmentModel, horizon: int, seed: int) -> EnvironmentPath:
    """
    采样环境路径。

    Markov 链从平稳分布出发；周期环境取均匀随机偏移；i.i.d. 按权重抽取。
    给定 (model, seed) 结果确定。

    Raises:
        EnvironmentModelError: horizon < 0 或 seed 超出 64 位范围
    """
    if horizon < 0:
        raise EnvironmentModelError(f"horizon must be >= 0, got {horizon}")
    if not 0 <= int(seed) < SEED_BOUND:
        raise EnvironmentModelError(f"seed must be a 64-bit unsigned integer, got {seed}")
    rng = np.random.default_rng(int(seed))
    indices = model.process.sample_indices(horizon, rng)
    return EnvironmentPath.from_indices(model, indices, seed)


def normalize_at(model: EnvironmentModel, t_star: float) -> EnvironmentModel:
    """返回在 t* 处归一化的模型，逐状态满足 m̄(1) = 1。"""
    return model.normalize_at(t_star)
