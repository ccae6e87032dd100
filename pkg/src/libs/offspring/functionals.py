"""
繁殖律泛函入口。

按操作名暴露矩泛函与采样，内部委托给具体律族的闭式实现。
对数版本（log_*）是模拟器使用的主入口。
"""

import math
from typing import Tuple

import numpy as np

from .base_law import BaseOffspringLaw


def laplace_m(law: BaseOffspringLaw, t: float) -> float:
    """m(t) = E_ξ Σ e^{tL_i}。"""
    return law.laplace(t)


def log_laplace_m(law: BaseOffspringLaw, t: float) -> float:
    """log m(t)。"""
    return law.log_laplace(t)


def m_log_derivative(law: BaseOffspringLaw, t: float) -> float:
    """m'(t)/m(t)。"""
    return law.log_derivative(t)


def second_displacement_moment(law: BaseOffspringLaw) -> float:
    """(1/π) E_ξ Σ L_i²。"""
    return law.second_displacement_moment()


def exp_abs_moment(law: BaseOffspringLaw, delta: float) -> float:
    """(1/π) E_ξ Σ e^{δ|L_i|}。"""
    return law.exp_abs_moment(delta)


def log_quenched_w1_second_moment(law: BaseOffspringLaw, t: float) -> float:
    """log E_ξ W_1(t)²。"""
    return law.log_w1_moment(t, 2.0)


def quenched_w1_second_moment(law: BaseOffspringLaw, t: float) -> float:
    """E_ξ W_1(t)² = [E N·E e^{2tL} + E N(N−1)·(E e^{tL})²] / m(t)²。"""
    return math.exp(log_quenched_w1_second_moment(law, t))


def sample_offspring(
    law: BaseOffspringLaw, rng: np.random.Generator
) -> Tuple[int, np.ndarray]:
    """采样单个粒子的 (后代数, 位移)。"""
    return law.sample_offspring(rng)
