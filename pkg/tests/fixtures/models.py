"""
规范繁殖律的模型描述字典构造器。
"""

from typing import List, Optional


def binary_state(state_id: str = "b") -> dict:
    """确定性二叉律：恰好两个子代，位移 ±1。"""
    return {
        "id": state_id,
        "kind": "finite_table",
        "atoms": [{"prob": 1.0, "n_children": 2, "displacements": [-1.0, 1.0]}],
    }


def scaled_binary_state(scale: float, state_id: str = "b") -> dict:
    """确定性二叉律，位移 ±scale（σ² = scale²）。"""
    return {
        "id": state_id,
        "kind": "finite_table",
        "atoms": [{"prob": 1.0, "n_children": 2, "displacements": [-scale, scale]}],
    }


def mixed_state(state_id: str = "m") -> dict:
    """混合表：1/2 概率两个子代 ±1，1/2 概率一个子代位于 0。"""
    return {
        "id": state_id,
        "kind": "finite_table",
        "atoms": [
            {"prob": 0.5, "n_children": 2, "displacements": [-1.0, 1.0]},
            {"prob": 0.5, "n_children": 1, "displacements": [0.0]},
        ],
    }


def poisson_state(lam: float, mu: float = 0.0, s: float = 1.0, state_id: str = "p") -> dict:
    return {"id": state_id, "kind": "poisson_gaussian", "lambda": lam, "mu": mu, "s": s}


def iid_model(states: List[dict], weights: Optional[List[float]] = None) -> dict:
    if weights is None:
        weights = [1.0 / len(states)] * len(states)
    return {"states": states, "process": {"kind": "iid", "weights": weights}}


def single_state_model(state: dict) -> dict:
    return iid_model([state], [1.0])


def markov_model(states: List[dict], matrix: Optional[List[List[float]]] = None) -> dict:
    """两状态 Markov 环境；缺省转移矩阵 [[0.9, 0.1], [0.2, 0.8]]。"""
    if matrix is None:
        matrix = [[0.9, 0.1], [0.2, 0.8]]
    return {"states": states, "process": {"kind": "markov", "matrix": matrix}}
