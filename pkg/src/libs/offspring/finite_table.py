"""
FiniteTable 繁殖律。

有限个原子 (prob, n_children, displacements)，所有泛函均为精确有限和。
整代采样按站点多重度做一次多项分布抽样，并合并重合位置。
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy.special import logsumexp

from .base_law import (
    BaseOffspringLaw,
    ChildLimitExceeded,
    OffspringLawError,
    require_finite,
)

PROB_SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Atom:
    """
    FiniteTable 的一个原子。

    Attributes:
        prob: 原子概率
        n_children: 后代数
        displacements: 每个子节点的位移，长度等于 n_children
    """

    prob: float
    n_children: int
    displacements: Tuple[float, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "prob": self.prob,
            "n_children": self.n_children,
            "displacements": list(self.displacements),
        }


@dataclass(frozen=True)
class FiniteTableLaw(BaseOffspringLaw):
    """
    有限支撑的繁殖律。

    Attributes:
        atoms: 原子元组，概率非负且和为 1（容差 1e-12）
    """

    atoms: Tuple[Atom, ...]

    # 预计算数组，不参与比较
    _pvals: np.ndarray = field(init=False, repr=False, compare=False)
    _entry_disp: np.ndarray = field(init=False, repr=False, compare=False)
    _entry_logp: np.ndarray = field(init=False, repr=False, compare=False)
    _entry_prob: np.ndarray = field(init=False, repr=False, compare=False)

    kind = "finite_table"

    def __post_init__(self) -> None:
        if not self.atoms:
            raise OffspringLawError("finite_table needs at least one atom")
        for i, atom in enumerate(self.atoms):
            require_finite(atom.prob, f"atoms[{i}].prob")
            if atom.prob < 0:
                raise OffspringLawError(f"atoms[{i}].prob must be >= 0, got {atom.prob}")
            if atom.n_children < 0:
                raise OffspringLawError(
                    f"atoms[{i}].n_children must be >= 0, got {atom.n_children}"
                )
            if len(atom.displacements) != atom.n_children:
                raise OffspringLawError(
                    f"atoms[{i}].displacements has length {len(atom.displacements)}, "
                    f"expected n_children={atom.n_children}"
                )
            for j, d in enumerate(atom.displacements):
                require_finite(d, f"atoms[{i}].displacements[{j}]")

        total = math.fsum(atom.prob for atom in self.atoms)
        if abs(total - 1.0) > PROB_SUM_TOLERANCE:
            raise OffspringLawError(f"atom probabilities must sum to 1, got {total!r}")

        probs = np.array([atom.prob for atom in self.atoms], dtype=float)
        disp: List[float] = []
        prob: List[float] = []
        for atom in self.atoms:
            if atom.prob > 0:
                disp.extend(atom.displacements)
                prob.extend([atom.prob] * atom.n_children)
        if not disp:
            raise OffspringLawError("finite_table has mean offspring count 0 (pi = 0)")

        object.__setattr__(self, "_pvals", probs / probs.sum())
        object.__setattr__(self, "_entry_disp", np.array(disp, dtype=float))
        object.__setattr__(self, "_entry_prob", np.array(prob, dtype=float))
        object.__setattr__(self, "_entry_logp", np.log(np.array(prob, dtype=float)))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FiniteTableLaw":
        atoms = tuple(
            Atom(
                prob=float(item["prob"]),
                n_children=int(item["n_children"]),
                displacements=tuple(float(d) for d in item.get("displacements", [])),
            )
            for item in data["atoms"]
        )
        return cls(atoms=atoms)

    # Laplace 变换 ---------------------------------------------------------

    def log_laplace(self, t: float) -> float:
        t = require_finite(t)
        return float(logsumexp(t * self._entry_disp + self._entry_logp))

    def log_derivative(self, t: float) -> float:
        t = require_finite(t)
        exponents = t * self._entry_disp + self._entry_logp
        weights = np.exp(exponents - logsumexp(exponents))
        return float(np.dot(weights, self._entry_disp))

    @property
    def mean_count(self) -> float:
        return math.fsum(atom.prob * atom.n_children for atom in self.atoms)

    # 矩泛函 ---------------------------------------------------------------

    def displacement_sum_mean(self) -> float:
        return math.fsum(atom.prob * d for atom in self.atoms for d in atom.displacements)

    def second_displacement_moment(self) -> float:
        total = math.fsum(
            atom.prob * d * d for atom in self.atoms for d in atom.displacements
        )
        return total / self.mean_count

    def exp_abs_moment(self, delta: float) -> float:
        delta = require_finite(delta, "delta")
        if delta <= 0:
            raise OffspringLawError(f"delta must be > 0, got {delta}")
        log_terms = delta * np.abs(self._entry_disp) + self._entry_logp
        return float(np.exp(logsumexp(log_terms) - math.log(self.mean_count)))

    def log_w1_moment(self, t: float, gamma: float) -> float:
        """精确枚举：log Σ_a p_a (Σ_i e^{tL_ai})^γ − γ log m(t)。"""
        t = require_finite(t)
        gamma = require_finite(gamma, "gamma")
        if gamma <= 0:
            raise OffspringLawError(f"gamma must be > 0, got {gamma}")
        terms = [
            math.log(atom.prob) + gamma * float(logsumexp(t * np.asarray(atom.displacements)))
            for atom in self.atoms
            if atom.prob > 0 and atom.n_children > 0
        ]
        return float(logsumexp(terms)) - gamma * self.log_laplace(t)

    @property
    def extinction_probability(self) -> float:
        return math.fsum(atom.prob for atom in self.atoms if atom.n_children == 0)

    def size_biased_atom_probabilities(self, t: float) -> np.ndarray:
        """尺寸偏置后各原子的概率 p_a Σ_i e^{tL_ai} / m(t)；空原子概率为 0。"""
        t = require_finite(t)
        log_m = self.log_laplace(t)
        probs = np.zeros(len(self.atoms))
        for a, atom in enumerate(self.atoms):
            if atom.prob > 0 and atom.n_children > 0:
                lse = float(logsumexp(t * np.asarray(atom.displacements)))
                probs[a] = math.exp(math.log(atom.prob) + lse - log_m)
        return probs

    # 采样 -----------------------------------------------------------------

    def sample_offspring(self, rng: np.random.Generator) -> Tuple[int, np.ndarray]:
        atom = self.atoms[int(rng.choice(len(self.atoms), p=self._pvals))]
        return atom.n_children, np.array(atom.displacements, dtype=float)

    def sample_children(
        self,
        positions: np.ndarray,
        multiplicities: np.ndarray,
        rng: np.random.Generator,
        limit: int,
    ) -> Tuple[np.ndarray, np.ndarray]:
        choices = rng.multinomial(multiplicities, self._pvals)
        site_blocks: List[np.ndarray] = []
        mult_blocks: List[np.ndarray] = []
        for a, atom in enumerate(self.atoms):
            if atom.n_children == 0:
                continue
            picked = choices[:, a]
            mask = picked > 0
            if not mask.any():
                continue
            base = positions[mask]
            for d in atom.displacements:
                site_blocks.append(base + d)
                mult_blocks.append(picked[mask])

        if not site_blocks:
            return np.empty(0, dtype=float), np.empty(0, dtype=np.int64)

        sites = np.concatenate(site_blocks)
        counts = np.concatenate(mult_blocks).astype(np.int64)
        merged_sites, inverse = np.unique(sites, return_inverse=True)
        if merged_sites.size > limit:
            raise ChildLimitExceeded(int(merged_sites.size), limit)
        merged_counts = np.zeros(merged_sites.size, dtype=np.int64)
        np.add.at(merged_counts, inverse.ravel(), counts)
        return merged_sites, merged_counts

    def size_biased_offspring(
        self, t: float, rng: np.random.Generator
    ) -> Tuple[int, np.ndarray, int]:
        probs = self.size_biased_atom_probabilities(t)
        atom = self.atoms[int(rng.choice(len(self.atoms), p=probs / probs.sum()))]
        displacements = np.array(atom.displacements, dtype=float)
        tilt = t * displacements
        weights = np.exp(tilt - logsumexp(tilt))
        spine = int(rng.choice(atom.n_children, p=weights))
        return atom.n_children, displacements, spine

    # 变换与序列化 -----------------------------------------------------------

    def normalized(self, t_star: float) -> "FiniteTableLaw":
        log_m = self._normalizer(t_star)
        return FiniteTableLaw(
            atoms=tuple(
                Atom(
                    prob=atom.prob,
                    n_children=atom.n_children,
                    displacements=tuple(t_star * d - log_m for d in atom.displacements),
                )
                for atom in self.atoms
            )
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "atoms": [atom.to_dict() for atom in self.atoms]}
