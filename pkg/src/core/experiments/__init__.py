"""
Experiments - 每条定理对应一个可复现、带种子的统计实验。
"""

from .annealed_lp import AnnealedLpExperiment, run_annealed_lp
from .base_experiment import (
    BaseExperiment,
    ExperimentAborted,
    ExperimentError,
    ExperimentReport,
    ExperimentStatus,
    MDPEstimate,
    combine_status,
    mean_and_se,
)
from .experiment_factory import ExperimentFactory
from .lp_rate import LpRateExperiment, run_lp_rate
from .martingale import MartingaleExperiment, run_martingale_test
from .mdp import (
    MDPAnnealedExperiment,
    MDPQuenchedExperiment,
    run_mdp_annealed_means,
    run_mdp_quenched_means,
    run_mdp_report,
)
from .mdp_population import MDPPopulationExperiment, run_mdp_population
from .rates import RatesExperiment, run_rates
from .recursion import URecursionExperiment, run_u_recursion_check
from .simulate import SimulateExperiment, run_simulate
from .spine_check import SpineCheckExperiment, run_spine_check
from .uniform import UniformExperiment, run_uniform_convergence

_EXPERIMENTS = (
    SimulateExperiment,
    RatesExperiment,
    SpineCheckExperiment,
    MartingaleExperiment,
    LpRateExperiment,
    AnnealedLpExperiment,
    UniformExperiment,
    MDPQuenchedExperiment,
    MDPAnnealedExperiment,
    MDPPopulationExperiment,
    URecursionExperiment,
)


def register_experiments() -> None:
    """把内置实验注册到工厂（已注册的跳过）。"""
    for experiment_class in _EXPERIMENTS:
        if not ExperimentFactory.is_registered(experiment_class.experiment_id):
            ExperimentFactory.register(experiment_class.experiment_id, experiment_class)


register_experiments()

__all__ = [
    "BaseExperiment",
    "ExperimentAborted",
    "ExperimentError",
    "ExperimentFactory",
    "ExperimentReport",
    "ExperimentStatus",
    "MDPEstimate",
    "combine_status",
    "mean_and_se",
    "register_experiments",
    "SimulateExperiment",
    "RatesExperiment",
    "SpineCheckExperiment",
    "MartingaleExperiment",
    "LpRateExperiment",
    "AnnealedLpExperiment",
    "UniformExperiment",
    "MDPQuenchedExperiment",
    "MDPAnnealedExperiment",
    "MDPPopulationExperiment",
    "URecursionExperiment",
    "run_simulate",
    "run_rates",
    "run_spine_check",
    "run_martingale_test",
    "run_lp_rate",
    "run_annealed_lp",
    "run_uniform_convergence",
    "run_mdp_quenched_means",
    "run_mdp_annealed_means",
    "run_mdp_report",
    "run_mdp_population",
    "run_u_recursion_check",
]
