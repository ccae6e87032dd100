"""
精确枚举模块。

当路径上所有繁殖律都是 FiniteTable 时，第 n 代的律是有限支撑的：
以升序位置元组（多重集）为键、概率为值的字典。
用作蒙特卡罗检查的精确对照（脊柱恒等式、Radon–Nikodym、U 递推）。
"""

import itertools
import math
from typing import Callable, Dict, List, Tuple

import numpy as np

from libs.environment import EnvironmentModel, EnvironmentPath
from libs.offspring import FiniteTableLaw

from .snapshot import SimulationError

GenerationLaw = Dict[Tuple[float, ...], float]

MAX_SUPPORT = 200_000


def _children_law(configuration: Tuple[float, ...], law: FiniteTableLaw) -> GenerationLaw:
    """一代中每个粒子独立选原子；逐粒子卷积并按多重集合并。"""
    partial: GenerationLaw = {(): 1.0}
    options = [
        (atom.prob, atom.displacements) for atom in law.atoms if atom.prob > 0
    ]
    for x in configuration:
        merged: GenerationLaw = {}
        for key, prob in partial.items():
            for p, displacements in options:
                children = tuple(sorted(key + tuple(x + d for d in displacements)))
                merged[children] = merged.get(children, 0.0) + prob * p
        partial = merged
        if len(partial) > MAX_SUPPORT:
            raise SimulationError(f"enumeration support exceeds {MAX_SUPPORT} configurations")
    return partial


def enumerate_generations(
    path: EnvironmentPath, model: EnvironmentModel, n: int
) -> List[GenerationLaw]:
    """
    第 0..n 代的精确律。

    Raises:
        SimulationError: 路径上出现非 FiniteTable 律，或支撑过大
    """
    if not 0 <= n <= len(path):
        raise SimulationError(f"n={n} outside [0, {len(path)}]")
    laws: List[GenerationLaw] = [{(0.0,): 1.0}]
    for k in range(n):
        law = model.law_at(path, k)
        if not isinstance(law, FiniteTableLaw):
            raise SimulationError(
                f"exact enumeration needs finite_table laws, state '{path.states[k]}' is {law.kind}"
            )
        current: GenerationLaw = {}
        for configuration, prob in laws[-1].items():
            for children, p in _children_law(configuration, law).items():
                current[children] = current.get(children, 0.0) + prob * p
        if len(current) > MAX_SUPPORT:
            raise SimulationError(f"enumeration support exceeds {MAX_SUPPORT} configurations")
        laws.append(current)
    return laws


def is_enumerable(path: EnvironmentPath, model: EnvironmentModel, n: int) -> bool:
    """路径前 n 步的律是否全为 FiniteTable。"""
    return n <= len(path) and all(
        isinstance(model.law_at(path, k), FiniteTableLaw) for k in range(n)
    )


def exact_quenched_expectation(
    path: EnvironmentPath,
    model: EnvironmentModel,
    n: int,
    fn: Callable[[np.ndarray], float],
) -> float:
    """
    E_ξ f(第 n 代位置)，f 接收逐粒子位置数组（灭绝时为空数组）。
    """
    law = enumerate_generations(path, model, n)[n]
    return math.fsum(prob * fn(np.array(config, dtype=float)) for config, prob in law.items())


def exact_annealed_expectation(
    model: EnvironmentModel,
    n: int,
    fn: Callable[[EnvironmentPath, np.ndarray], float],
) -> float:
    """
    i.i.d. 环境下 E f(ξ, 第 n 代位置)：对全部长度为 n 的状态序列加权求和。

    Raises:
        SimulationError: 环境不是 i.i.d.
    """
    if not model.is_iid:
        raise SimulationError("annealed enumeration is available for iid environments only")
    weights = model.stationary_weights
    active = [i for i, w in enumerate(weights) if w > 0]
    terms = []
    for sequence in itertools.product(active, repeat=n):
        path = EnvironmentPath.from_indices(model, sequence)
        weight = math.prod(weights[i] for i in sequence)
        terms.append(weight * exact_quenched_expectation(path, model, n, lambda x: fn(path, x)))
    return math.fsum(terms)
