"""
Offspring 库模块。

提供统一的繁殖律抽象接口和工厂，支持 PoissonGaussian 与 FiniteTable 两个律族。
"""

from .base_law import (
    BaseOffspringLaw,
    ChildLimitExceeded,
    OffspringLawError,
    require_finite,
)
from .finite_table import Atom, FiniteTableLaw
from .functionals import (
    exp_abs_moment,
    laplace_m,
    log_laplace_m,
    log_quenched_w1_second_moment,
    m_log_derivative,
    quenched_w1_second_moment,
    sample_offspring,
    second_displacement_moment,
)
from .law_factory import OffspringLawFactory
from .poisson_gaussian import PoissonGaussianLaw

# 注册律族到工厂
OffspringLawFactory.register("poisson_gaussian", PoissonGaussianLaw)
OffspringLawFactory.register("finite_table", FiniteTableLaw)

__all__ = [
    "BaseOffspringLaw",
    "ChildLimitExceeded",
    "OffspringLawError",
    "require_finite",
    "Atom",
    "FiniteTableLaw",
    "PoissonGaussianLaw",
    "OffspringLawFactory",
    "laplace_m",
    "log_laplace_m",
    "m_log_derivative",
    "second_displacement_moment",
    "exp_abs_moment",
    "quenched_w1_second_moment",
    "log_quenched_w1_second_moment",
    "sample_offspring",
]
