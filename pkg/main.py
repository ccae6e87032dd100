#!/usr/bin/env python3
"""
brwre-lab - 主入口文件

把 src 加入导入路径后交给 cli.main，与安装后的 brwre-lab 命令等价。
"""

import sys
from pathlib import Path

# 将 src 添加到 Python 路径以便导入
src_path = Path(__file__).parent / "src"
sys.path.insert(0, str(src_path))


def main() -> int:
    """
    主入口函数。

    返回:
        int: 退出码（0 通过，1 配置错误，2 失败，3 无法判定，4 运行错误）
    """
    from cli.main import main as cli_main

    return cli_main()


if __name__ == "__main__":
    sys.exit(main())
