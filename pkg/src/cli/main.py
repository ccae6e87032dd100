"""
brwre-lab 命令行入口。

用法：
    brwre-lab <subcommand> --config PATH [--seed U64] [--out DIR] [--threads N] [--describe]

退出码：0 通过，1 配置错误，2 统计检验失败，3 无法判定，4 运行错误。
"""

import argparse
import sys
from typing import List, Optional

from core.analytics import AnalyticsError
from core.experiments import (
    ExperimentAborted,
    ExperimentError,
    ExperimentFactory,
    ExperimentStatus,
)
from core.settings import EXPERIMENT_IDS, ConfigError, RunConfig, describe_config, load_config
from core.simulator import SimulationError
from core.spine import SpineError
from libs.environment import EnvironmentModelError
from libs.offspring import OffspringLawError
from observability.logger import configure_logging, get_logger

from .output import write_error_summary, write_report

logger = get_logger(__name__)

EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = ExperimentStatus.ERROR.exit_code

# 运行期可预期的错误：写错误摘要，退出码 4
_RUNTIME_ERRORS = (
    ExperimentError,
    AnalyticsError,
    SimulationError,
    SpineError,
    OffspringLawError,
    EnvironmentModelError,
)


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got '{text}'")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64), got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", required=True, help="YAML configuration file")
    common.add_argument("--seed", type=_seed, help="Master seed (overrides the config)")
    common.add_argument("--out", help="Output directory (overrides the config)")
    common.add_argument("--threads", type=int, default=1, help="Worker processes for replicates")
    common.add_argument(
        "--describe",
        action="store_true",
        help="Print the resolved configuration with defaults and exit",
    )

    parser = argparse.ArgumentParser(
        prog="brwre-lab",
        description="Simulation and verification lab for branching random walks in random environments",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="subcommand")
    for experiment_id in EXPERIMENT_IDS:
        subparsers.add_parser(experiment_id, parents=[common], help=f"Run the {experiment_id} experiment")
    return parser


def dispatch(config: RunConfig, experiment_id: str, threads: int = 1) -> int:
    """
    运行实验并写出结果文件。

    Returns:
        int: 退出码
    """
    try:
        experiment = ExperimentFactory.create(experiment_id, config, threads=threads)
        report = experiment.run()
    except ExperimentAborted as e:
        logger.error("%s", e)
        if e.report is not None:
            write_report(e.report, config.output_dir)
        else:
            write_error_summary(experiment_id, config, str(e))
        return EXIT_RUNTIME_ERROR
    except _RUNTIME_ERRORS as e:
        logger.error("experiment %s failed: %s", experiment_id, e)
        write_error_summary(experiment_id, config, str(e))
        return EXIT_RUNTIME_ERROR
    except Exception as e:
        logger.exception("unexpected error in experiment %s", experiment_id)
        write_error_summary(experiment_id, config, f"{type(e).__name__}: {e}")
        return EXIT_RUNTIME_ERROR

    write_report(report, config.output_dir)
    return report.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    """命令行主入口，返回退出码。"""
    args = build_parser().parse_args(argv)
    command = args.command

    try:
        config = load_config(args.config)
        if config.experiment is not None and config.experiment != command:
            raise ConfigError(
                [f"experiment: config is for '{config.experiment}', not '{command}'"]
            )
        config = config.with_overrides(seed=args.seed, output_dir=args.out, experiment=command)
        configure_logging(config.observability.log_level)

        if args.describe:
            sys.stdout.write(describe_config(config))
            return 0
        if config.seed is None:
            raise ConfigError(["seed: a master seed is required (config 'seed' or --seed)"])
        if args.threads < 1:
            raise ConfigError([f"--threads: must be >= 1, got {args.threads}"])
    except ConfigError as e:
        logger.error("%s", e)
        return EXIT_CONFIG_ERROR

    logger.info("loaded %s for '%s'", args.config, command)
    return dispatch(config, command, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
