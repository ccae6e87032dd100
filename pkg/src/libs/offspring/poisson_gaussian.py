"""
PoissonGaussian 繁殖律。

后代数 N ~ Poisson(λ)，给定 N 后位移 i.i.d. ~ Gaussian(μ, s²)。
所有泛函均有闭式：m(t) = λ·exp(μt + s²t²/2)。
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np
from scipy.stats import norm

from .base_law import (
    BaseOffspringLaw,
    ChildLimitExceeded,
    OffspringLawError,
    require_finite,
)


@dataclass(frozen=True)
class PoissonGaussianLaw(BaseOffspringLaw):
    """
    Poisson 计数 + Gaussian 位移的繁殖律。

    Attributes:
        lam: 平均后代数 λ > 0
        mu: 位移均值
        s: 位移标准差 ≥ 0
    """

    lam: float
    mu: float = 0.0
    s: float = 1.0

    kind = "poisson_gaussian"

    def __post_init__(self) -> None:
        for name, value in (("lambda", self.lam), ("mu", self.mu), ("s", self.s)):
            require_finite(value, name)
        if self.lam <= 0:
            raise OffspringLawError(f"lambda must be > 0, got {self.lam}")
        if self.s < 0:
            raise OffspringLawError(f"s must be >= 0, got {self.s}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PoissonGaussianLaw":
        return cls(
            lam=float(data["lambda"]),
            mu=float(data.get("mu", 0.0)),
            s=float(data.get("s", 1.0)),
        )

    # Laplace 变换 ---------------------------------------------------------

    def log_laplace(self, t: float) -> float:
        t = require_finite(t)
        return math.log(self.lam) + self.mu * t + 0.5 * self.s * self.s * t * t

    def log_derivative(self, t: float) -> float:
        t = require_finite(t)
        return self.mu + self.s * self.s * t

    def log_tilt_ratio(self, t: float) -> float:
        t = require_finite(t)
        return self.mu * t + 0.5 * self.s * self.s * t * t

    @property
    def mean_count(self) -> float:
        return self.lam

    # 矩泛函 ---------------------------------------------------------------

    def displacement_sum_mean(self) -> float:
        return self.lam * self.mu

    def second_displacement_moment(self) -> float:
        return self.mu * self.mu + self.s * self.s

    def exp_abs_moment(self, delta: float) -> float:
        """折叠正态的指数矩：E e^{δ|X|}，X ~ N(μ, s²)。"""
        delta = require_finite(delta, "delta")
        if delta <= 0:
            raise OffspringLawError(f"delta must be > 0, got {delta}")
        if self.s == 0:
            return math.exp(delta * abs(self.mu))
        half_var = 0.5 * delta * delta * self.s * self.s
        shift = self.mu / self.s
        upper = math.exp(delta * self.mu + half_var) * norm.cdf(shift + delta * self.s)
        lower = math.exp(-delta * self.mu + half_var) * norm.cdf(-shift + delta * self.s)
        return float(upper + lower)

    def log_w1_moment(self, t: float, gamma: float) -> float:
        """仅 γ = 2 有闭式：E_ξ W_1(t)² = e^{t²s²}/λ + 1。"""
        t = require_finite(t)
        if gamma != 2:
            raise OffspringLawError(
                f"poisson_gaussian has a closed-form W_1 moment only at gamma=2, got {gamma}"
            )
        return float(np.logaddexp(0.0, t * t * self.s * self.s - math.log(self.lam)))

    @property
    def extinction_probability(self) -> float:
        return math.exp(-self.lam)

    # 采样 -----------------------------------------------------------------

    def sample_offspring(self, rng: np.random.Generator) -> Tuple[int, np.ndarray]:
        count = int(rng.poisson(self.lam))
        return count, rng.normal(self.mu, self.s, size=count)

    def sample_children(
        self,
        positions: np.ndarray,
        multiplicities: np.ndarray,
        rng: np.random.Generator,
        limit: int,
    ) -> Tuple[np.ndarray, np.ndarray]:
        # k 个独立 Poisson(λ) 之和仍是 Poisson(kλ)
        counts = rng.poisson(self.lam * multiplicities)
        total = int(counts.sum())
        if total > limit:
            raise ChildLimitExceeded(total, limit)
        parents = np.repeat(positions, counts)
        children = parents + rng.normal(self.mu, self.s, size=total)
        return children, np.ones(total, dtype=np.int64)

    def size_biased_offspring(
        self, t: float, rng: np.random.Generator
    ) -> Tuple[int, np.ndarray, int]:
        """原始 Poisson 簇 + 一个倾斜标记 N(μ + s²t, s²) 的额外点，额外点即脊柱子节点。"""
        t = require_finite(t)
        count = int(rng.poisson(self.lam))
        ordinary = rng.normal(self.mu, self.s, size=count)
        extra = rng.normal(self.mu + self.s * self.s * t, self.s)
        return count + 1, np.append(ordinary, extra), count

    # 变换与序列化 -----------------------------------------------------------

    def normalized(self, t_star: float) -> "PoissonGaussianLaw":
        log_m = self._normalizer(t_star)
        return PoissonGaussianLaw(
            lam=self.lam,
            mu=t_star * self.mu - log_m,
            s=abs(t_star) * self.s,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "lambda": self.lam, "mu": self.mu, "s": self.s}
