"""
结果文件写出。

每次运行写两个文件，文件名由配置哈希派生：
- <experiment>-<hash12>.csv：逗号分隔，浮点数 17 位有效数字，换行符固定为 \\n
- <experiment>-<hash12>.summary.yaml：摘要与结论，不含墙钟时间

同一配置与种子两次运行的输出逐字节相同。
"""

from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd
import yaml

from core.experiments import ExperimentReport, ExperimentStatus
from core.settings import RunConfig, config_hash
from observability.logger import get_logger

logger = get_logger(__name__)

FLOAT_FORMAT = "%.17g"
HASH_PREFIX = 12


def report_stem(experiment_id: str, digest: str) -> str:
    return f"{experiment_id}-{digest[:HASH_PREFIX]}"


def to_plain(value: Any) -> Any:
    """把 numpy 标量、元组等转换成 safe_dump 可写的内置类型。"""
    if isinstance(value, dict):
        return {to_plain(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, ExperimentStatus):
        return value.value
    return value


def _dump_summary(data: Dict[str, Any], path: Path) -> None:
    text = yaml.safe_dump(to_plain(data), sort_keys=False, allow_unicode=True, default_flow_style=None)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def write_table(table: pd.DataFrame, path: Path) -> None:
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_report(report: ExperimentReport, output_dir: str) -> Tuple[Path, Path]:
    """
    写出结果表与摘要。

    Returns:
        (CSV 路径, 摘要路径)
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = report_stem(report.experiment_id, report.config_hash)
    csv_path = out / f"{stem}.csv"
    summary_path = out / f"{stem}.summary.yaml"

    write_table(report.table, csv_path)
    _dump_summary(report.to_summary_dict(), summary_path)
    logger.info("wrote %s and %s", csv_path, summary_path)
    return csv_path, summary_path


def write_error_summary(
    experiment_id: str, config: RunConfig, message: str, output_dir: Optional[str] = None
) -> Optional[Path]:
    """运行错误时只写摘要（status: error）；输出目录无法创建时返回 None。"""
    out = Path(output_dir or config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        logger.error("cannot create output directory %s: %s", out, e)
        return None
    digest = config_hash(config)
    path = out / f"{report_stem(experiment_id, digest)}.summary.yaml"
    seed = config.seed
    _dump_summary(
        {
            "experiment": experiment_id,
            "config_hash": digest,
            "seed": seed,
            "status": ExperimentStatus.ERROR.value,
            "error": message,
        },
        path,
    )
    return path
