"""
EnvironmentProcess 抽象基类模块。

环境过程生成平稳遍历的状态下标序列 ξ_0, ξ_1, ...。
所有实现都从平稳分布出发，因此路径从第 0 步起即平稳。
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Sequence

import numpy as np


class EnvironmentModelError(Exception):
    """环境模型或环境过程非法时抛出的错误。"""
    pass


class BaseEnvironmentProcess(ABC):
    """
    环境过程抽象基类。

    实现必须是不可变值对象，并以状态下标（而非状态 id）工作。
    """

    kind: str = ""

    @property
    @abstractmethod
    def n_states(self) -> int:
        """过程所作用的状态数。"""
        pass

    @abstractmethod
    def stationary_distribution(self) -> np.ndarray:
        """返回 ξ_0 的分布（长度 n_states）。"""
        pass

    @abstractmethod
    def sample_indices(self, horizon: int, rng: np.random.Generator) -> np.ndarray:
        """
        采样长度为 horizon 的状态下标序列。

        Args:
            horizon: 序列长度（≥ 0）
            rng: 随机流

        Returns:
            np.ndarray: int64 下标数组
        """
        pass

    @abstractmethod
    def to_dict(self, state_ids: Sequence[str]) -> Dict[str, Any]:
        """返回与配置文件格式一致的字典。"""
        pass

    @property
    def is_iid(self) -> bool:
        """环境是否 i.i.d.。"""
        return False
