"""
Experiment 工厂模块。

按子命令名（如 "martingale"、"lp-rate"）创建实验实例。
"""

from typing import Dict, Type

from core.settings import RunConfig

from .base_experiment import BaseExperiment, ExperimentError


class ExperimentFactory:
    """
    实验工厂类。

    采用注册表模式；CLI 的子命令与注册名一一对应。
    """

    # 注册表：experiment_id -> 实验类
    _registry: Dict[str, Type[BaseExperiment]] = {}

    @classmethod
    def register(cls, experiment_id: str, experiment_class: Type[BaseExperiment]) -> None:
        """
        注册实验。

        Raises:
            ValueError: 名称已注册
            TypeError: 不是 BaseExperiment 的子类
        """
        if experiment_id in cls._registry:
            raise ValueError(f"Experiment '{experiment_id}' is already registered")

        if not isinstance(experiment_class, type) or not issubclass(experiment_class, BaseExperiment):
            raise TypeError(f"{experiment_class} must inherit from BaseExperiment")

        cls._registry[experiment_id] = experiment_class

    @classmethod
    def create(cls, experiment_id: str, config: RunConfig, threads: int = 1) -> BaseExperiment:
        """
        创建实验实例。

        Raises:
            ExperimentError: 名称未注册
        """
        if experiment_id not in cls._registry:
            available = ", ".join(sorted(cls._registry))
            raise ExperimentError(
                f"Unknown experiment: '{experiment_id}'. "
                f"Available experiments: {available or 'none (no experiments registered)'}"
            )
        return cls._registry[experiment_id](config, threads=threads)

    @classmethod
    def list_experiments(cls) -> list[str]:
        """列出所有已注册的实验。"""
        return sorted(cls._registry)

    @classmethod
    def is_registered(cls, experiment_id: str) -> bool:
        return experiment_id in cls._registry

    @classmethod
    def clear_registry(cls) -> None:
        """清空注册表（主要用于测试）。"""
        cls._registry.clear()
