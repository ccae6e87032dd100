"""
尺寸偏置繁殖：Q_ξ 下脊柱节点的后代向量与脊柱子节点。

主采样器委托给各律族的 size_biased_offspring（FiniteTable 对重加权原子
做精确类别抽样；PoissonGaussian 为原簇加一个倾斜的额外点）。
rejection_size_biased_offspring 是与之对照的暴力采样器。
"""

import math
from typing import Dict, Tuple

import numpy as np
from scipy.special import logsumexp

from libs.offspring import BaseOffspringLaw, FiniteTableLaw

DEFAULT_MAX_TRIES = 1_000_000


class SpineError(Exception):
    """脊柱采样或恒等式检查的错误。"""
    pass


def sample_size_biased_offspring(
    law: BaseOffspringLaw, t: float, rng: np.random.Generator
) -> Tuple[int, np.ndarray, int]:
    """
    按 Σ e^{tL_i}/m(t) 加权的后代向量，以及按 e^{tL_i} 选出的脊柱子节点。

    Returns:
        (后代数, 位移数组, 脊柱子节点下标)

    Raises:
        SpineError: m(t) 非有限
    """
    if not math.isfinite(law.log_laplace(t)):
        raise SpineError(f"m({t}) is not finite for {law.kind}")
    return law.size_biased_offspring(t, rng)


def size_biased_count_law(law: FiniteTableLaw, t: float) -> Dict[int, float]:
    """FiniteTable 在尺寸偏置下的后代数分布（同一后代数的原子合并）。"""
    law_by_count: Dict[int, float] = {}
    for atom, prob in zip(law.atoms, law.size_biased_atom_probabilities(t)):
        if prob > 0:
            law_by_count[atom.n_children] = law_by_count.get(atom.n_children, 0.0) + float(prob)
    return law_by_count


def rejection_size_biased_offspring(
    law: BaseOffspringLaw,
    t: float,
    rng: np.random.Generator,
    envelope: float,
    max_tries: int = DEFAULT_MAX_TRIES,
) -> Tuple[int, np.ndarray, int]:
    """
    拒绝采样对照：在 P 下抽 X，以 min(1, w/envelope) 接受，
    其中 w = Σ e^{tL_i}/m(t)。

    w 无界的律（PoissonGaussian）在截断处有小偏差，envelope 越大偏差越小。

    Raises:
        SpineError: envelope ≤ 0 或 max_tries 次内未接受
    """
    if not envelope > 0:
        raise SpineError(f"envelope must be > 0, got {envelope}")
    log_m = law.log_laplace(t)
    log_envelope = math.log(envelope)
    for _ in range(max_tries):
        count, displacements = law.sample_offspring(rng)
        if count == 0:
            continue
        tilt = t * np.asarray(displacements, dtype=float)
        log_w = float(logsumexp(tilt)) - log_m
        if rng.random() < math.exp(min(0.0, log_w - log_envelope)):
            weights = np.exp(tilt - logsumexp(tilt))
            spine = int(rng.choice(count, p=weights))
            return count, np.asarray(displacements, dtype=float), spine
    raise SpineError(f"rejection sampler did not accept within {max_tries} draws")
