"""
Pytest 配置和共享 Fixtures

本模块提供：
- 规范繁殖律的模型描述（二叉 ±1、混合表、PoissonGaussian）
- 最小配置字典与临时配置文件
"""

import sys
from pathlib import Path

import pytest
import yaml

# 确保 src 在路径中以便导入
PROJECT_ROOT = Path(__file__).parent
sys.path.insert(0, str(PROJECT_ROOT / "src"))

from tests.fixtures.models import (  # noqa: E402
    binary_state,
    iid_model,
    mixed_state,
    poisson_state,
    single_state_model,
)


@pytest.fixture
def project_root() -> Path:
    """返回项目根目录。"""
    return PROJECT_ROOT


@pytest.fixture
def binary_model_dict() -> dict:
    return single_state_model(binary_state())


@pytest.fixture
def mixed_model_dict() -> dict:
    return single_state_model(mixed_state())


@pytest.fixture
def poisson_model_dict() -> dict:
    return single_state_model(poisson_state(2.0))


@pytest.fixture
def two_state_poisson_dict() -> dict:
    """i.i.d. 两状态 PoissonGaussian：λ ∈ {2, 8}，s² ∈ {1, 4}。"""
    return iid_model([poisson_state(2.0, s=1.0, state_id="a"), poisson_state(8.0, s=2.0, state_id="b")])


@pytest.fixture
def minimal_config_dict(binary_model_dict: dict) -> dict:
    """返回用于测试的最小配置字典。"""
    return {
        "seed": 20240501,
        "model": binary_model_dict,
        "simulation": {"n_max": 4, "replicates": 20, "t_grid": [0.0, 0.5]},
    }


@pytest.fixture
def temp_config_file(tmp_path: Path, minimal_config_dict: dict) -> Path:
    """创建用于测试的临时配置文件。"""
    config_file = tmp_path / "run.yaml"
    with open(config_file, "w", encoding="utf-8") as f:
        yaml.safe_dump(minimal_config_dict, f)
    return config_file
