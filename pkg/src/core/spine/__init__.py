"""
Spine - 尺寸偏置测度 Q_ξ 下的采样与脊柱恒等式检查。
"""

from .identities import (
    G_FUNCTIONS,
    IdentityReport,
    IndependenceReport,
    RadonNikodymReport,
    expected_population_under_q,
    resolve_g,
    verify_independence,
    verify_w_identity,
)
from .size_biased import (
    SpineError,
    rejection_size_biased_offspring,
    sample_size_biased_offspring,
    size_biased_count_law,
)
from .spine_tree import SiblingSubtree, SpineRealization, sample_spine_tree

__all__ = [
    "SpineError",
    "G_FUNCTIONS",
    "IdentityReport",
    "IndependenceReport",
    "RadonNikodymReport",
    "SiblingSubtree",
    "SpineRealization",
    "sample_size_biased_offspring",
    "size_biased_count_law",
    "rejection_size_biased_offspring",
    "sample_spine_tree",
    "resolve_g",
    "verify_w_identity",
    "verify_independence",
    "expected_population_under_q",
]
