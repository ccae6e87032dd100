"""
OffspringLaw 工厂模块。

此模块实现工厂模式，根据模型描述文件中的 `kind` 字段创建相应的繁殖律实例。
支持的律族：poisson_gaussian、finite_table。
"""

from typing import Any, Dict, Type

from .base_law import BaseOffspringLaw, OffspringLawError


class OffspringLawFactory:
    """
    繁殖律工厂类。

    采用注册表模式，支持动态扩展新的律族。
    """

    # 注册表：kind -> 繁殖律实现类
    _registry: Dict[str, Type[BaseOffspringLaw]] = {}

    @classmethod
    def register(cls, kind: str, law_class: Type[BaseOffspringLaw]) -> None:
        """
        注册新的律族。

        Args:
            kind: 律族名称（如 "poisson_gaussian"）
            law_class: 繁殖律实现类（必须继承 BaseOffspringLaw）

        Raises:
            ValueError: 如果律族名称已被注册
            TypeError: 如果实现类不是 BaseOffspringLaw 的子类
        """
        if kind in cls._registry:
            raise ValueError(f"Offspring law kind '{kind}' is already registered")

        if not isinstance(law_class, type) or not issubclass(law_class, BaseOffspringLaw):
            raise TypeError(f"{law_class} must inherit from BaseOffspringLaw")

        cls._registry[kind] = law_class

    @classmethod
    def create(cls, data: Dict[str, Any]) -> BaseOffspringLaw:
        """
        根据模型描述中的一个状态条目创建繁殖律。

        Args:
            data: 含 `kind` 与该律族参数的字典

        Returns:
            BaseOffspringLaw: 繁殖律实例

        Raises:
            OffspringLawError: kind 未注册、参数缺失或参数非法
        """
        kind = str(data.get("kind", "")).lower()

        if kind not in cls._registry:
            available = ", ".join(cls._registry.keys())
            raise OffspringLawError(
                f"Unknown offspring law kind: '{data.get('kind')}'. "
                f"Available kinds: {available or 'none (no kinds registered)'}"
            )

        law_class = cls._registry[kind]

        try:
            return law_class.from_dict(data)
        except OffspringLawError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise OffspringLawError(
                f"Failed to create offspring law of kind '{kind}': {e}"
            ) from e

    @classmethod
    def list_kinds(cls) -> list[str]:
        """列出所有已注册的律族。"""
        return list(cls._registry.keys())

    @classmethod
    def is_registered(cls, kind: str) -> bool:
        """检查律族是否已注册。"""
        return kind.lower() in cls._registry

    @classmethod
    def clear_registry(cls) -> None:
        """清空注册表（主要用于测试）。"""
        cls._registry.clear()
