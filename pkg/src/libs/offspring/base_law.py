"""
OffspringLaw 抽象基类模块。

此模块定义了每个环境状态下的繁殖点过程 (N, L_1, ..., L_N) 必须实现的接口：
- Laplace 变换 m(t) = E_ξ Σ e^{tL_i} 及其对数（所有调用方都走对数域）
- 矩泛函：二阶位移矩、指数绝对矩、W_1(t) 的淬火矩
- 采样：单个粒子的后代、整代向量化采样、尺寸偏置（size-biased）采样
- 在 t* 处归一化

支持可插拔架构，新的律族只需继承 BaseOffspringLaw 并在工厂中注册。
"""

import math
from abc import ABC, abstractmethod
from typing import Any, Dict, Tuple

import numpy as np


class OffspringLawError(Exception):
    """繁殖律参数非法或输入非有限时抛出的错误。"""
    pass


class ChildLimitExceeded(OffspringLawError):
    """整代采样得到的站点数超过调用方给定上限。

    Attributes:
        size: 本代将要保存的站点数
        limit: 调用方给定的上限
    """

    def __init__(self, size: int, limit: int):
        super().__init__(f"Generation would hold {size} sites (limit {limit})")
        self.size = size
        self.limit = limit


def require_finite(value: float, name: str = "t") -> float:
    """校验输入为有限实数并返回 float。

    Raises:
        OffspringLawError: 非有限或无法转换为 float
    """
    try:
        value = float(value)
    except (TypeError, ValueError) as e:
        raise OffspringLawError(f"{name} must be a real number, got {value!r}") from e
    if not math.isfinite(value):
        raise OffspringLawError(f"{name} must be finite, got {value}")
    return value


class BaseOffspringLaw(ABC):
    """
    繁殖律抽象基类。

    所有实现必须是不可变的值对象：构造后可在线程、进程间安全共享；
    随机流始终由调用方显式传入。

    Attributes:
        kind: 配置文件中使用的律族名称（如 "poisson_gaussian"）
    """

    kind: str = ""

    # ------------------------------------------------------------------
    # Laplace 变换
    # ------------------------------------------------------------------

    @abstractmethod
    def log_laplace(self, t: float) -> float:
        """返回 log m(t)，对数域计算，避免 |t| 较大时溢出。"""
        pass

    def laplace(self, t: float) -> float:
        """返回 m(t) = E_ξ Σ e^{tL_i}。"""
        try:
            return math.exp(self.log_laplace(t))
        except OverflowError:
            return math.inf

    @abstractmethod
    def log_derivative(self, t: float) -> float:
        """返回 m'(t)/m(t)。"""
        pass

    def log_tilt_ratio(self, t: float) -> float:
        """返回 log(m(t)/m(0))。子类可覆盖以给出无消去误差的闭式。"""
        return self.log_laplace(t) - self.log_laplace(0.0)

    @property
    def mean_count(self) -> float:
        """π = m(0) = E N。"""
        return math.exp(self.log_laplace(0.0))

    # ------------------------------------------------------------------
    # 矩泛函
    # ------------------------------------------------------------------

    @abstractmethod
    def displacement_sum_mean(self) -> float:
        """返回 E_ξ Σ L_i（中心化检查用）。"""
        pass

    @abstractmethod
    def second_displacement_moment(self) -> float:
        """返回 (1/π) E_ξ Σ L_i²。"""
        pass

    @abstractmethod
    def exp_abs_moment(self, delta: float) -> float:
        """返回 (1/π) E_ξ Σ e^{δ|L_i|}，要求 δ > 0。"""
        pass

    @abstractmethod
    def log_w1_moment(self, t: float, gamma: float) -> float:
        """返回 log E_ξ W_1(t)^γ。

        Raises:
            OffspringLawError: 该律族对给定 γ 没有闭式时抛出
        """
        pass

    @property
    @abstractmethod
    def extinction_probability(self) -> float:
        """P(N = 0)。"""
        pass

    # ------------------------------------------------------------------
    # 采样
    # ------------------------------------------------------------------

    @abstractmethod
    def sample_offspring(self, rng: np.random.Generator) -> Tuple[int, np.ndarray]:
        """采样单个粒子的后代：(后代数, 位移数组)。"""
        pass

    @abstractmethod
    def sample_children(
        self,
        positions: np.ndarray,
        multiplicities: np.ndarray,
        rng: np.random.Generator,
        limit: int,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        整代向量化采样。

        同一站点上的 k 个粒子可交换，因此按多重度一次性采样。

        Args:
            positions: 本代各站点位置
            multiplicities: 各站点上的粒子数（int64）
            rng: 随机流
            limit: 下一代允许保存的最大站点数

        Returns:
            (下一代站点位置, 下一代多重度)

        Raises:
            ChildLimitExceeded: 下一代站点数超过 limit
        """
        pass

    @abstractmethod
    def size_biased_offspring(
        self, t: float, rng: np.random.Generator
    ) -> Tuple[int, np.ndarray, int]:
        """
        在尺寸偏置测度下采样后代向量并选出脊柱子节点。

        后代向量的分布按 Σ e^{tL_i}/m(t) 加权；给定向量后，
        第 i 个子节点以 e^{tL_i}/Σ_j e^{tL_j} 的概率成为脊柱子节点。

        Returns:
            (后代数, 位移数组, 脊柱子节点下标)
        """
        pass

    # ------------------------------------------------------------------
    # 变换与序列化
    # ------------------------------------------------------------------

    @abstractmethod
    def normalized(self, t_star: float) -> "BaseOffspringLaw":
        """返回位移变换为 t*·L_i − log m(t*) 后的律，满足 m̄(1) = 1。"""
        pass

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """返回与配置文件格式一致的字典。"""
        pass

    def _normalizer(self, t_star: float) -> float:
        t_star = require_finite(t_star, "t_star")
        log_m = self.log_laplace(t_star)
        if not math.isfinite(log_m):
            raise OffspringLawError(
                f"m({t_star}) is not finite for {self.kind}; cannot normalize"
            )
        return log_m
