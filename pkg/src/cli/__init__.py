"""
CLI - 子命令分发、退出码与结果文件写出。
"""

from .main import build_parser, dispatch, main
from .output import report_stem, write_error_summary, write_report

__all__ = [
    "build_parser",
    "dispatch",
    "main",
    "report_stem",
    "write_report",
    "write_error_summary",
]
