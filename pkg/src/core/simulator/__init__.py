"""
Simulator - BRWRE 的精确前向模拟与对数域鞅计算。
"""

from .branching import DEFAULT_CAP, evolve, iter_generations, step_generation
from .enumeration import (
    enumerate_generations,
    exact_annealed_expectation,
    exact_quenched_expectation,
    is_enumerable,
)
from .martingale import (
    GridRow,
    MartingalePath,
    a_hat_partial_sums,
    a_hat_path,
    iter_grid_rows,
    log_quenched_mean,
    w_path_on_grid,
    w_value,
)
from .replicates import (
    AUXILIARY_STREAM,
    ENVIRONMENT_STREAM,
    REPLICATE_STREAM,
    derived_seed,
    replicate_rng,
    run_replicates,
)
from .snapshot import (
    GenerationSnapshot,
    PopulationCapExceeded,
    SimulationError,
    count_in_interval,
    log_partition,
)

__all__ = [
    "DEFAULT_CAP",
    "GenerationSnapshot",
    "GridRow",
    "MartingalePath",
    "PopulationCapExceeded",
    "SimulationError",
    "evolve",
    "iter_generations",
    "step_generation",
    "log_partition",
    "count_in_interval",
    "log_quenched_mean",
    "w_value",
    "w_path_on_grid",
    "iter_grid_rows",
    "a_hat_path",
    "a_hat_partial_sums",
    "enumerate_generations",
    "exact_quenched_expectation",
    "exact_annealed_expectation",
    "is_enumerable",
    "ENVIRONMENT_STREAM",
    "REPLICATE_STREAM",
    "AUXILIARY_STREAM",
    "replicate_rng",
    "derived_seed",
    "run_replicates",
]
