"""
Experiment 基类与相关数据模型。

每个实验把一条定理变成可复现、带种子的统计检查：
execute() 返回结果表、摘要与状态，run() 负责计时与日志。
"""

import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.settings import RunConfig, config_hash
from core.simulator import ENVIRONMENT_STREAM, derived_seed
from libs.environment import EnvironmentModel, EnvironmentPath, sample_env_path
from observability.logger import get_logger

from .workers import Run, first_failure

logger = get_logger(__name__)


class ExperimentError(Exception):
    """实验前提不满足（拒绝运行）时抛出的错误。"""
    pass


class ExperimentStatus(str, Enum):
    """实验结论；值即摘要文件中的 status 字段。"""

    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"
    ERROR = "error"

    @property
    def exit_code(self) -> int:
        return {"pass": 0, "fail": 2, "inconclusive": 3, "error": 4}[self.value]


def combine_status(statuses: Iterable[ExperimentStatus]) -> ExperimentStatus:
    """任一 FAIL 则 FAIL；否则任一 INCONCLUSIVE 则 INCONCLUSIVE；否则 PASS。"""
    statuses = list(statuses)
    if ExperimentStatus.FAIL in statuses:
        return ExperimentStatus.FAIL
    if ExperimentStatus.INCONCLUSIVE in statuses:
        return ExperimentStatus.INCONCLUSIVE
    return ExperimentStatus.PASS


@dataclass
class ExperimentReport:
    """
    实验报告。

    Attributes:
        experiment_id: 子命令名
        config_hash: 配置哈希
        seed: 主种子
        status: 结论
        table: 逐 n / 逐 t 结果表（写入 CSV）
        summary: 摘要（写入 YAML，不含墙钟时间）
        wall_clock: 运行耗时（秒），只保留在内存与日志中
    """

    experiment_id: str
    config_hash: str
    seed: int
    status: ExperimentStatus
    table: pd.DataFrame
    summary: Dict[str, Any] = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def exit_code(self) -> int:
        return self.status.exit_code

    def to_summary_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment_id,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "status": self.status.value,
            **self.summary,
        }


class ExperimentAborted(ExperimentError):
    """
    运行中途中止（如种群超限），携带中止前已完成部分的报告。

    Attributes:
        report: 部分报告
    """

    def __init__(self, message: str, report: Optional[ExperimentReport] = None):
        super().__init__(message)
        self.report = report


@dataclass
class MDPEstimate:
    """
    缩放累积量估计。

    Attributes:
        theta: a_n = n^θ 的指数
        t_grid: t 网格
        n_list: n 列表（升序）
        a_n: 各 n 的 a_n
        scaled: Λ̂_n(t)，形状 (len(n_list), len(t_grid))
        target: λ(t) = σ²t²/2（或 σ̃²t²/2）
        sigma2: 目标中的方差常数
        deviation: 各 n 的 sup_t |Λ̂_n(t) − λ(t)|
        variant: "quenched" / "weighted" / "plain"
    """

    theta: float
    t_grid: List[float]
    n_list: List[int]
    a_n: List[float]
    scaled: np.ndarray
    target: List[float]
    sigma2: float
    deviation: List[float]
    variant: str

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for i, n in enumerate(self.n_list):
            for j, t in enumerate(self.t_grid):
                rows.append(
                    {
                        "n": n,
                        "a_n": self.a_n[i],
                        "t": t,
                        "scaled_cumulant": float(self.scaled[i, j]),
                        "target": self.target[j],
                        "deviation": float(self.scaled[i, j]) - self.target[j],
                    }
                )
        return pd.DataFrame(rows, columns=["n", "a_n", "t", "scaled_cumulant", "target", "deviation"])


def mean_and_se(values) -> Tuple[float, float]:
    """样本均值与标准误（ddof=1；单样本时 SE 为 0）。"""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


class BaseExperiment(ABC):
    """
    Experiment 抽象基类。

    Args:
        config: 运行配置（seed 必须已给出）
        threads: 重复实验的进程数；结果与其无关
    """

    experiment_id: str = ""

    def __init__(self, config: RunConfig, threads: int = 1):
        if config.seed is None:
            raise ExperimentError("a master seed is required (config 'seed' or --seed)")
        if threads < 1:
            raise ExperimentError(f"threads must be >= 1, got {threads}")
        self.config = config
        self.threads = threads
        self.seed = int(config.seed)
        self.config_hash = config_hash(config)
        self._model: Optional[EnvironmentModel] = None

    @property
    def model(self) -> EnvironmentModel:
        if self._model is None:
            self._model = self.config.environment_model()
        return self._model

    def environment_path(self, horizon: int, model: Optional[EnvironmentModel] = None) -> EnvironmentPath:
        """淬火实验使用的固定环境路径（独立的环境流）。"""
        model = model or self.model
        return sample_env_path(model, horizon, derived_seed(self.seed, ENVIRONMENT_STREAM))

    def make_report(
        self, table: pd.DataFrame, summary: Dict[str, Any], status: ExperimentStatus
    ) -> ExperimentReport:
        return ExperimentReport(
            experiment_id=self.experiment_id,
            config_hash=self.config_hash,
            seed=self.seed,
            status=status,
            table=table,
            summary=summary,
        )

    def check_cap(
        self, runs: Sequence[Run], partial_table: Callable[[int], pd.DataFrame]
    ) -> None:
        """
        任一重复超限时中止，报告中只保留全部重复都已到达的代。

        Raises:
            ExperimentAborted: 携带 status 为 error 的部分报告
        """
        failure = first_failure(runs)
        if failure is None:
            return
        generation = failure.failed_generation
        message = (
            f"Population cap exceeded at generation {generation}: "
            f"{failure.failed_size} sites > cap {self.config.simulation.cap}"
        )
        logger.error("experiment %s aborted: %s", self.experiment_id, message)
        summary = {
            "error": message,
            "failed_generation": int(generation),
            "failed_size": int(failure.failed_size),
            "cap": int(self.config.simulation.cap),
        }
        report = self.make_report(partial_table(generation), summary, ExperimentStatus.ERROR)
        raise ExperimentAborted(message, report)

    @abstractmethod
    def execute(self) -> Tuple[pd.DataFrame, Dict[str, Any], ExperimentStatus]:
        """
        运行实验主体。

        Returns:
            (结果表, 摘要, 结论)

        Raises:
            ExperimentError: 前提不满足
            PopulationCapExceeded: 种群超限
        """
        pass

    def run(self) -> ExperimentReport:
        """运行实验并返回报告。"""
        logger.info(
            "experiment %s started (config %s, seed %d, threads %d)",
            self.experiment_id,
            self.config_hash[:12],
            self.seed,
            self.threads,
        )
        start = time.perf_counter()
        table, summary, status = self.execute()
        report = self.make_report(table, summary, status)
        report.wall_clock = time.perf_counter() - start
        logger.info(
            "experiment %s finished: %s in %.2fs",
            self.experiment_id,
            status.value,
            report.wall_clock,
        )
        return report
