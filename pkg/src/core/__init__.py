"""
Core 层 - BRWRE 实验室的核心逻辑。

此包包含：
- 运行配置的加载与验证
- 前向模拟与鞅计算（simulator）
- 解析临界量（analytics）
- 脊柱采样与恒等式检查（spine）
- 实验框架（experiments）
"""

from .settings import (
    EXPERIMENT_IDS,
    ConfigError,
    LpSettings,
    MDPSettings,
    ObservabilitySettings,
    RatesSettings,
    RecursionSettings,
    RunConfig,
    SimulationSettings,
    SpineSettings,
    UniformSettings,
    config_from_dict,
    config_hash,
    describe_config,
    load_config,
    parse_config,
)

__all__ = [
    "EXPERIMENT_IDS",
    "ConfigError",
    "RunConfig",
    "SimulationSettings",
    "RatesSettings",
    "LpSettings",
    "SpineSettings",
    "UniformSettings",
    "MDPSettings",
    "RecursionSettings",
    "ObservabilitySettings",
    "config_from_dict",
    "config_hash",
    "describe_config",
    "load_config",
    "parse_config",
]
