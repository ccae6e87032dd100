"""
EnvironmentProcess 工厂模块。

根据模型描述中 `process.kind` 创建环境过程：iid、markov、cycle。
"""

from typing import Any, Dict, Sequence, Type

from .base_process import BaseEnvironmentProcess, EnvironmentModelError


class EnvironmentProcessFactory:
    """
    环境过程工厂类。

    采用注册表模式，支持动态扩展新的环境过程。
    """

    # 注册表：kind -> 环境过程实现类
    _registry: Dict[str, Type[BaseEnvironmentProcess]] = {}

    @classmethod
    def register(cls, kind: str, process_class: Type[BaseEnvironmentProcess]) -> None:
        """
        注册新的环境过程。

        Raises:
            ValueError: 如果名称已被注册
            TypeError: 如果实现类不是 BaseEnvironmentProcess 的子类
        """
        if kind in cls._registry:
            raise ValueError(f"Environment process '{kind}' is already registered")

        if not isinstance(process_class, type) or not issubclass(
            process_class, BaseEnvironmentProcess
        ):
            raise TypeError(f"{process_class} must inherit from BaseEnvironmentProcess")

        cls._registry[kind] = process_class

    @classmethod
    def create(cls, data: Dict[str, Any], state_ids: Sequence[str]) -> BaseEnvironmentProcess:
        """
        创建环境过程实例。

        Args:
            data: 含 `kind` 及 weights/matrix/sequence 的字典
            state_ids: 模型状态 id（按下标顺序）

        Returns:
            BaseEnvironmentProcess: 环境过程实例

        Raises:
            EnvironmentModelError: kind 未注册、参数缺失或非法
        """
        kind = str(data.get("kind", "")).lower()

        if kind not in cls._registry:
            available = ", ".join(cls._registry.keys())
            raise EnvironmentModelError(
                f"Unknown environment process: '{data.get('kind')}'. "
                f"Available processes: {available or 'none (no processes registered)'}"
            )

        try:
            process = cls._registry[kind].from_dict(data, state_ids)
        except EnvironmentModelError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise EnvironmentModelError(
                f"Failed to create environment process '{kind}': {e}"
            ) from e

        if process.n_states != len(state_ids):
            raise EnvironmentModelError(
                f"process '{kind}' describes {process.n_states} states, "
                f"model has {len(state_ids)}"
            )
        return process

    @classmethod
    def list_processes(cls) -> list[str]:
        """列出所有已注册的环境过程。"""
        return list(cls._registry.keys())

    @classmethod
    def is_registered(cls, kind: str) -> bool:
        """检查环境过程是否已注册。"""
        return kind.lower() in cls._registry

    @classmethod
    def clear_registry(cls) -> None:
        """清空注册表（主要用于测试）。"""
        cls._registry.clear()
