"""
Environment 库模块。

提供环境过程抽象接口、工厂，以及环境模型 / 环境路径类型。
"""

from .base_process import BaseEnvironmentProcess, EnvironmentModelError
from .cycle_process import CycleProcess
from .iid_process import IIDProcess
from .markov_process import MarkovProcess, solve_stationary
from .model import (
    EnvironmentModel,
    EnvironmentPath,
    EnvironmentState,
    normalize_at,
    sample_env_path,
)
from .process_factory import EnvironmentProcessFactory

# 注册环境过程到工厂
EnvironmentProcessFactory.register("iid", IIDProcess)
EnvironmentProcessFactory.register("markov", MarkovProcess)
EnvironmentProcessFactory.register("cycle", CycleProcess)

__all__ = [
    "BaseEnvironmentProcess",
    "EnvironmentModelError",
    "IIDProcess",
    "MarkovProcess",
    "CycleProcess",
    "solve_stationary",
    "EnvironmentProcessFactory",
    "EnvironmentModel",
    "EnvironmentPath",
    "EnvironmentState",
    "sample_env_path",
    "normalize_at",
]
