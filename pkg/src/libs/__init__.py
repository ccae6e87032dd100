"""
Libs 层 - 可插拔抽象层与工厂模式。

此包提供：
- 所有可插拔组件的抽象基类
- 组件实例化的工厂
- 每种组件类型的默认实现

支持的组件类型：
- Offspring: 每个环境状态下的繁殖点过程（PoissonGaussian、FiniteTable）
- Environment: 平稳遍历环境过程（iid、markov、cycle）与环境模型
"""

from . import offspring, environment

__all__ = ["offspring", "environment"]
