"""
结构化日志器 - brwre-lab 的日志工具。

提供一致的日志接口；日志只写 stderr，从不进入结果文件。
"""

import logging
import sys
from typing import Optional

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
ROOT_LOGGER_NAME = "brwre"


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    获取具有一致配置的日志器实例。

    所有日志器挂在 "brwre" 命名空间下，由 configure_logging 统一调级。

    参数:
        name: 日志器名称。如果为 None，返回 brwre 根日志器。

    返回:
        logging.Logger: 配置好的日志器实例
    """
    root = logging.getLogger(ROOT_LOGGER_NAME)

    # 仅在没有 handler 时配置（避免重复的 handler）
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT))
        root.addHandler(handler)
        root.setLevel(logging.INFO)
        root.propagate = False

    if not name:
        return root
    return root.getChild(name)


def configure_logging(level: str = "INFO") -> None:
    """
    设置 brwre 命名空间的日志级别。

    参数:
        level: 级别名（DEBUG / INFO / WARNING / ERROR）

    异常:
        ValueError: 未知级别名
    """
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        raise ValueError(f"Unknown log level: '{level}'")
    get_logger().setLevel(numeric)
