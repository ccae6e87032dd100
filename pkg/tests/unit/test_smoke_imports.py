"""
冒烟测试 (Smoke Tests) - 验证关键模块可以正常导入。

这些测试确保项目的基本结构正确，所有关键包都可以被导入。
如果这些测试失败，说明项目的基础设施存在问题。
"""

import logging

import pytest


class TestCoreImports:
    """测试核心模块导入。"""

    @pytest.mark.unit
    def test_import_core_settings(self):
        """验证可以导入 core.settings 模块。"""
        from core import settings
        assert hasattr(settings, "RunConfig")
        assert hasattr(settings, "load_config")

    @pytest.mark.unit
    @pytest.mark.parametrize("package", [
        "core.simulator",
        "core.analytics",
        "core.spine",
        "core.experiments",
    ])
    def test_import_core_subpackages(self, package: str):
        """验证 core 子包可以导入。"""
        import importlib
        module = importlib.import_module(package)
        assert module.__all__


class TestObservabilityImports:
    """测试可观测性模块导入。"""

    @pytest.mark.unit
    def test_import_get_logger(self):
        """验证可以导入 get_logger 函数。"""
        from observability import configure_logging, get_logger
        assert callable(get_logger)
        assert callable(configure_logging)

    @pytest.mark.unit
    def test_get_logger_returns_child_of_root(self):
        """验证 get_logger 返回 brwre 命名空间下的日志器。"""
        from observability import get_logger

        logger = get_logger("test")
        assert isinstance(logger, logging.Logger)
        assert logger.name == "brwre.test"
        assert get_logger().name == "brwre"

    @pytest.mark.unit
    def test_single_handler(self):
        """重复获取不增加 handler。"""
        from observability import get_logger

        get_logger("a")
        get_logger("b")
        assert len(get_logger().handlers) == 1

    @pytest.mark.unit
    def test_configure_logging(self):
        """设置级别；未知级别报错。"""
        from observability import configure_logging, get_logger

        try:
            configure_logging("debug")
            assert get_logger().level == logging.DEBUG
            with pytest.raises(ValueError, match="Unknown log level"):
                configure_logging("LOUD")
        finally:
            configure_logging("INFO")


class TestLibsImports:
    """测试 libs 层模块导入。"""

    @pytest.mark.unit
    def test_offspring_kinds_registered(self):
        """两个律族在导入时注册。"""
        from libs.offspring import OffspringLawFactory
        assert OffspringLawFactory.is_registered("poisson_gaussian")
        assert OffspringLawFactory.is_registered("finite_table")

    @pytest.mark.unit
    def test_environment_processes_registered(self):
        """三种环境过程在导入时注册。"""
        from libs.environment import EnvironmentProcessFactory
        assert sorted(EnvironmentProcessFactory.list_processes()) == ["cycle", "iid", "markov"]


class TestCliImports:
    """测试命令行入口导入。"""

    @pytest.mark.unit
    def test_import_cli(self):
        """验证 cli 包导出主入口。"""
        from cli import build_parser, main
        assert callable(main)
        assert build_parser().prog == "brwre-lab"
