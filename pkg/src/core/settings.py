"""
设置模块 - 运行配置的加载、验证与规范化。

此模块提供：
- RunConfig 数据类：一次运行的完整配置（模型 + 各实验参数段）
- parse_config() / load_config()：解析 YAML 文本 / 文件并收集全部错误
- config_hash()：规范化内容的 SHA-256，结果文件名由它派生
- describe_config()：输出带默认值的完整配置，可再次被 parse_config 读入
"""

import hashlib
import json
import math
import typing
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from libs.environment import (
    EnvironmentModel,
    EnvironmentModelError,
    EnvironmentProcessFactory,
)
from libs.offspring import OffspringLawError, OffspringLawFactory

from .spine import G_FUNCTIONS

EXPERIMENT_IDS = (
    "simulate",
    "rates",
    "spine-check",
    "martingale",
    "lp-rate",
    "annealed-lp",
    "uniform",
    "mdp-quenched",
    "mdp-annealed",
    "mdp-population",
    "u-check",
)

ANNEALED_FORMS = ("weighted", "plain")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
SEED_BOUND = 2**64
PROB_SUM_TOLERANCE = 1e-12
WEIGHT_SUM_TOLERANCE = 1e-10

# 哈希中不计入的顶层字段
_UNHASHED_KEYS = ("output_dir", "observability")


class ConfigError(Exception):
    """
    配置错误时抛出的异常。

    Attributes:
        errors: 全部错误（带字段路径）
    """

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        message = "Configuration validation failed:\n" + "\n".join(f"  - {e}" for e in self.errors)
        super().__init__(message)


@dataclass
class SimulationSettings:
    """
    前向模拟设置。

    Attributes:
        n_max: 模拟代数
        cap: 每代保存的不同站点数上限；同一位置上的粒子合并为一个站点并记多重度，
            因此 PoissonGaussian 下等于粒子数，格点律下可远小于粒子数
        replicates: 重复次数
        t_grid: W_n(t) 的 t 网格
        quenched_mean_bias: 有偏变体，P_n 乘以 (1 + bias)^n
    """
    n_max: int = 10
    cap: int = 10_000_000
    replicates: int = 1000
    t_grid: List[float] = field(default_factory=lambda: [0.0])
    quenched_mean_bias: float = 0.0


@dataclass
class RatesSettings:
    """解析速率报告设置。"""
    search_bound: float = 50.0
    t_grid: List[float] = field(default_factory=lambda: [-1.0, -0.5, 0.0, 0.5, 1.0])
    p_values: List[float] = field(default_factory=lambda: [2.0])
    t_star: float = 1.0
    convexity_t: float = 1.0
    convexity_alpha: float = 0.0
    convexity_beta: float = 2.0
    convexity_x_grid: List[float] = field(
        default_factory=lambda: [round(0.1 * i, 10) for i in range(21)]
    )


@dataclass
class LpSettings:
    """Lᵖ 收敛速率实验设置。"""
    p: float = 2.0
    t_star: float = 1.0
    ratio_threshold: float = 2.0


@dataclass
class SpineSettings:
    """脊柱检查设置。"""
    t: float = 0.5
    n: int = 5
    k: int = 2
    g: str = "identity"
    radon_nikodym_n: int = 4
    oracle_samples: int = 2000
    oracle_envelope: float = 50.0
    ks_level: float = 0.01


@dataclass
class UniformSettings:
    """一致收敛实验设置。"""
    k_min: float = -0.3
    k_max: float = 0.3
    grid_step: float = 0.05
    epsilon: float = 0.05


@dataclass
class MDPSettings:
    """中偏差实验设置。"""
    theta: float = 0.6
    t_grid: List[float] = field(default_factory=lambda: [-1.0, -0.5, 0.5, 1.0])
    n_list: List[int] = field(default_factory=lambda: [100, 1000, 10000])
    annealed_form: str = "weighted"
    interval: List[float] = field(default_factory=lambda: [1.0, 2.0])
    relative_band: float = 0.3
    tolerance: float = 0.05
    legendre_t_max: float = 5.0
    legendre_step: float = 0.01


@dataclass
class RecursionSettings:
    """U 递推不等式检查设置。"""
    t: float = 1.0
    s: float = 0.0
    r: float = 3.0
    exact_depth: int = 3
    w1_samples: int = 100_000
    max_relative_se: float = 0.2


@dataclass
class ObservabilitySettings:
    """可观测性配置设置。"""
    log_level: str = "INFO"


_SECTIONS = {
    "simulation": SimulationSettings,
    "rates": RatesSettings,
    "lp": LpSettings,
    "spine": SpineSettings,
    "uniform": UniformSettings,
    "mdp": MDPSettings,
    "recursion": RecursionSettings,
    "observability": ObservabilitySettings,
}


@dataclass
class RunConfig:
    """
    一次运行的主配置容器。

    model 保存规范化后的模型描述字典（与 EnvironmentModel.to_dict 一致），
    其余各段是带默认值的设置数据类。
    """
    model: Dict[str, Any]
    seed: Optional[int] = None
    experiment: Optional[str] = None
    output_dir: str = "./results"
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    rates: RatesSettings = field(default_factory=RatesSettings)
    lp: LpSettings = field(default_factory=LpSettings)
    spine: SpineSettings = field(default_factory=SpineSettings)
    uniform: UniformSettings = field(default_factory=UniformSettings)
    mdp: MDPSettings = field(default_factory=MDPSettings)
    recursion: RecursionSettings = field(default_factory=RecursionSettings)
    observability: ObservabilitySettings = field(default_factory=ObservabilitySettings)

    def environment_model(self) -> EnvironmentModel:
        """由模型描述构建 EnvironmentModel。"""
        return EnvironmentModel.from_dict(self.model)

    def with_overrides(
        self,
        seed: Optional[int] = None,
        output_dir: Optional[str] = None,
        experiment: Optional[str] = None,
    ) -> "RunConfig":
        """命令行参数覆盖后的副本。"""
        updates: Dict[str, Any] = {}
        if seed is not None:
            updates["seed"] = int(seed)
        if output_dir is not None:
            updates["output_dir"] = str(output_dir)
        if experiment is not None:
            updates["experiment"] = experiment
        return replace(self, **updates)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "experiment": self.experiment,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "model": self.model,
        }
        for name in _SECTIONS:
            data[name] = asdict(getattr(self, name))
        return data


# ---------------------------------------------------------------------------
# YAML 加载
# ---------------------------------------------------------------------------


class _UniqueKeyLoader(yaml.SafeLoader):
    """拒绝重复映射键的 SafeLoader。"""

    def construct_mapping(self, node, deep=False):
        seen = set()
        for key_node, _ in node.value:
            key = self.construct_object(key_node, deep=deep)
            if key in seen:
                raise yaml.constructor.ConstructorError(
                    None,
                    None,
                    f"duplicate key '{key}' (line {key_node.start_mark.line + 1})",
                    key_node.start_mark,
                )
            seen.add(key)
        return super().construct_mapping(node, deep=deep)


# ---------------------------------------------------------------------------
# 字段级校验工具
# ---------------------------------------------------------------------------


def _is_number(value: Any) -> bool:
    return (
        isinstance(value, (int, float))
        and not isinstance(value, bool)
        and math.isfinite(float(value))
    )


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_keys(data: Dict[str, Any], allowed, path: str, errors: List[str]) -> None:
    for key in data:
        if key not in allowed:
            errors.append(f"{path}.{key}: unknown field")


def _coerce(value: Any, hint: Any, path: str, errors: List[str]) -> Any:
    """按数据类字段类型校验并转换单个值。"""
    if hint is int:
        if not _is_int(value):
            errors.append(f"{path}: must be an integer, got {value!r}")
        return value
    if hint is float:
        if not _is_number(value):
            errors.append(f"{path}: must be a finite number, got {value!r}")
            return value
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            errors.append(f"{path}: must be a string, got {value!r}")
        return value
    if typing.get_origin(hint) in (list, List):
        (item_hint,) = typing.get_args(hint)
        if not isinstance(value, list):
            errors.append(f"{path}: must be a list, got {value!r}")
            return value
        return [_coerce(v, item_hint, f"{path}[{i}]", errors) for i, v in enumerate(value)]
    return value


def _parse_section(
    data: Dict[str, Any], section_name: str, dataclass_type: type, errors: List[str]
) -> Any:
    """
    将配置部分解析为数据类实例；未知字段与类型错误追加到 errors。

    Returns:
        数据类实例（有错误时未出错的字段仍被填入，供后续校验）
    """
    section_data = data.get(section_name)
    if section_data is None:
        return dataclass_type()
    if not isinstance(section_data, dict):
        errors.append(f"{section_name}: must be a mapping")
        return dataclass_type()

    hints = typing.get_type_hints(dataclass_type)
    names = {f.name for f in fields(dataclass_type)}
    _check_keys(section_data, names, section_name, errors)

    values = {}
    for key, value in section_data.items():
        if key not in names:
            continue
        before = len(errors)
        coerced = _coerce(value, hints[key], f"{section_name}.{key}", errors)
        if len(errors) == before:
            values[key] = coerced
    return dataclass_type(**values)


# ---------------------------------------------------------------------------
# 模型描述校验
# ---------------------------------------------------------------------------


def _validate_poisson_gaussian(item: Dict[str, Any], path: str, errors: List[str]) -> None:
    _check_keys(item, ("id", "kind", "lambda", "mu", "s"), path, errors)
    if "lambda" not in item:
        errors.append(f"{path}.lambda: is required")
    elif not _is_number(item["lambda"]) or item["lambda"] <= 0:
        errors.append(f"{path}.lambda: must be a number > 0, got {item['lambda']!r}")
    if "mu" in item and not _is_number(item["mu"]):
        errors.append(f"{path}.mu: must be a finite number, got {item['mu']!r}")
    if "s" in item and (not _is_number(item["s"]) or item["s"] < 0):
        errors.append(f"{path}.s: must be a number >= 0, got {item['s']!r}")


def _validate_finite_table(item: Dict[str, Any], path: str, errors: List[str]) -> None:
    _check_keys(item, ("id", "kind", "atoms"), path, errors)
    atoms = item.get("atoms")
    if not isinstance(atoms, list) or not atoms:
        errors.append(f"{path}.atoms: must be a non-empty list")
        return
    probs = []
    for j, atom in enumerate(atoms):
        apath = f"{path}.atoms[{j}]"
        if not isinstance(atom, dict):
            errors.append(f"{apath}: must be a mapping")
            continue
        _check_keys(atom, ("prob", "n_children", "displacements"), apath, errors)
        prob = atom.get("prob")
        if not _is_number(prob) or prob < 0:
            errors.append(f"{apath}.prob: must be a number >= 0, got {prob!r}")
        else:
            probs.append(float(prob))
        n_children = atom.get("n_children")
        if not _is_int(n_children) or n_children < 0:
            errors.append(f"{apath}.n_children: must be an integer >= 0, got {n_children!r}")
            continue
        displacements = atom.get("displacements", [])
        if not isinstance(displacements, list):
            errors.append(f"{apath}.displacements: must be a list")
            continue
        if len(displacements) != n_children:
            errors.append(
                f"{apath}.displacements: has length {len(displacements)}, "
                f"expected n_children={n_children}"
            )
        for k, d in enumerate(displacements):
            if not _is_number(d):
                errors.append(f"{apath}.displacements[{k}]: must be a finite number, got {d!r}")
    if len(probs) == len(atoms) and abs(math.fsum(probs) - 1.0) > PROB_SUM_TOLERANCE:
        errors.append(f"{path}.atoms: probabilities must sum to 1, got {math.fsum(probs)!r}")


_LAW_VALIDATORS = {
    "poisson_gaussian": _validate_poisson_gaussian,
    "finite_table": _validate_finite_table,
}


def _validate_process(
    process: Any, state_ids: List[str], errors: List[str]
) -> None:
    path = "model.process"
    if not isinstance(process, dict):
        errors.append(f"{path}: must be a mapping")
        return
    kind = process.get("kind")
    kinds = EnvironmentProcessFactory.list_processes()
    if kind not in kinds:
        errors.append(f"{path}.kind: unknown process '{kind}' (expected one of {', '.join(kinds)})")
        return
    n = len(state_ids)
    if kind == "iid":
        _check_keys(process, ("kind", "weights"), path, errors)
        weights = process.get("weights")
        if weights is None:
            if n != 1:
                errors.append(f"{path}.weights: is required for multi-state models")
            return
        if not isinstance(weights, list) or len(weights) != n:
            errors.append(f"{path}.weights: must be a list of {n} numbers")
            return
        for i, w in enumerate(weights):
            if not _is_number(w) or w < 0:
                errors.append(f"{path}.weights[{i}]: must be a number >= 0, got {w!r}")
                return
        if abs(math.fsum(weights) - 1.0) > WEIGHT_SUM_TOLERANCE:
            errors.append(f"{path}.weights: must sum to 1, got {math.fsum(weights)!r}")
    elif kind == "markov":
        _check_keys(process, ("kind", "matrix"), path, errors)
        matrix = process.get("matrix")
        if not isinstance(matrix, list) or len(matrix) != n:
            errors.append(f"{path}.matrix: must be a {n}x{n} list of rows")
            return
        for i, row in enumerate(matrix):
            if not isinstance(row, list) or len(row) != n:
                errors.append(f"{path}.matrix[{i}]: must be a list of {n} numbers")
                continue
            for j, p in enumerate(row):
                if not _is_number(p) or p < 0:
                    errors.append(f"{path}.matrix[{i}][{j}]: must be a number >= 0, got {p!r}")
    elif kind == "cycle":
        _check_keys(process, ("kind", "sequence"), path, errors)
        sequence = process.get("sequence")
        if not isinstance(sequence, list) or not sequence:
            errors.append(f"{path}.sequence: must be a non-empty list of state ids")
            return
        for i, state_id in enumerate(sequence):
            if str(state_id) not in state_ids:
                errors.append(f"{path}.sequence[{i}]: unknown state id '{state_id}'")


def _validate_model(data: Any, errors: List[str]) -> Optional[Dict[str, Any]]:
    """
    逐字段校验模型描述，无误时返回规范化字典。
    """
    if data is None:
        errors.append("model: is required")
        return None
    if not isinstance(data, dict):
        errors.append("model: must be a mapping")
        return None
    _check_keys(data, ("states", "process"), "model", errors)

    states = data.get("states")
    if not isinstance(states, list) or not states:
        errors.append("model.states: must be a non-empty list")
        return None

    before = len(errors)
    state_ids: List[str] = []
    kinds = OffspringLawFactory.list_kinds()
    for i, item in enumerate(states):
        path = f"model.states[{i}]"
        if not isinstance(item, dict):
            errors.append(f"{path}: must be a mapping")
            continue
        if "id" not in item:
            errors.append(f"{path}.id: is required")
        else:
            state_id = str(item["id"])
            if state_id in state_ids:
                errors.append(f"{path}.id: duplicate state id '{state_id}'")
            state_ids.append(state_id)
        kind = item.get("kind")
        if kind not in kinds:
            errors.append(f"{path}.kind: unknown law kind '{kind}' (expected one of {', '.join(kinds)})")
            continue
        _LAW_VALIDATORS[kind](item, path, errors)

    _validate_process(data.get("process", {"kind": "iid"}), state_ids, errors)
    if len(errors) > before:
        return None

    try:
        return EnvironmentModel.from_dict(data).to_dict()
    except (EnvironmentModelError, OffspringLawError) as e:
        errors.append(f"model: {e}")
        return None


# ---------------------------------------------------------------------------
# 段间语义校验
# ---------------------------------------------------------------------------


def _validate_settings(config: RunConfig, errors: List[str]) -> None:
    sim = config.simulation
    if sim.n_max < 0:
        errors.append(f"simulation.n_max: must be >= 0, got {sim.n_max}")
    if sim.cap < 1:
        errors.append(f"simulation.cap: must be >= 1, got {sim.cap}")
    if sim.replicates < 1:
        errors.append(f"simulation.replicates: must be >= 1, got {sim.replicates}")
    if not sim.t_grid:
        errors.append("simulation.t_grid: must not be empty")
    if sim.quenched_mean_bias <= -1:
        errors.append(f"simulation.quenched_mean_bias: must be > -1, got {sim.quenched_mean_bias}")

    if config.rates.search_bound <= 0:
        errors.append(f"rates.search_bound: must be > 0, got {config.rates.search_bound}")
    for i, p in enumerate(config.rates.p_values):
        if p < 2:
            errors.append(f"rates.p_values[{i}]: must be >= 2, got {p}")
    if len(config.rates.convexity_x_grid) < 3:
        errors.append("rates.convexity_x_grid: needs at least 3 points")

    if config.lp.p <= 1:
        errors.append(f"lp.p: must be > 1, got {config.lp.p}")
    if config.lp.ratio_threshold <= 1:
        errors.append(f"lp.ratio_threshold: must be > 1, got {config.lp.ratio_threshold}")

    spine = config.spine
    if not 1 <= spine.k <= spine.n:
        errors.append(f"spine.k: must satisfy 1 <= k <= n={spine.n}, got {spine.k}")
    if spine.g not in G_FUNCTIONS:
        errors.append(
            f"spine.g: unknown function '{spine.g}' (expected one of {', '.join(G_FUNCTIONS)})"
        )
    if spine.radon_nikodym_n < 0:
        errors.append(f"spine.radon_nikodym_n: must be >= 0, got {spine.radon_nikodym_n}")
    if spine.oracle_samples < 2:
        errors.append(f"spine.oracle_samples: must be >= 2, got {spine.oracle_samples}")
    if spine.oracle_envelope <= 0:
        errors.append(f"spine.oracle_envelope: must be > 0, got {spine.oracle_envelope}")
    if not 0 < spine.ks_level < 1:
        errors.append(f"spine.ks_level: must be in (0, 1), got {spine.ks_level}")

    uniform = config.uniform
    if uniform.k_min >= uniform.k_max:
        errors.append(f"uniform.k_min: must be < k_max={uniform.k_max}, got {uniform.k_min}")
    if uniform.grid_step <= 0:
        errors.append(f"uniform.grid_step: must be > 0, got {uniform.grid_step}")
    if uniform.epsilon <= 0:
        errors.append(f"uniform.epsilon: must be > 0, got {uniform.epsilon}")

    mdp = config.mdp
    if not 0.5 < mdp.theta < 1:
        errors.append(f"mdp.theta: must be in (1/2, 1), got {mdp.theta}")
    if not mdp.n_list:
        errors.append("mdp.n_list: must not be empty")
    for i, n in enumerate(mdp.n_list):
        if n < 1:
            errors.append(f"mdp.n_list[{i}]: must be >= 1, got {n}")
    if mdp.annealed_form not in ANNEALED_FORMS:
        errors.append(
            f"mdp.annealed_form: must be one of {', '.join(ANNEALED_FORMS)}, got '{mdp.annealed_form}'"
        )
    if len(mdp.interval) != 2 or mdp.interval[0] > mdp.interval[1]:
        errors.append(f"mdp.interval: must be [a, b] with a <= b, got {mdp.interval}")
    if not mdp.relative_band > 0:
        errors.append(f"mdp.relative_band: must be > 0, got {mdp.relative_band}")
    if not mdp.tolerance > 0:
        errors.append(f"mdp.tolerance: must be > 0, got {mdp.tolerance}")
    if mdp.legendre_t_max <= 0 or mdp.legendre_step <= 0:
        errors.append("mdp.legendre_t_max and mdp.legendre_step: must be > 0")

    rec = config.recursion
    if rec.r <= 2:
        errors.append(f"recursion.r: must be > 2, got {rec.r}")
    if rec.exact_depth < 0:
        errors.append(f"recursion.exact_depth: must be >= 0, got {rec.exact_depth}")
    if rec.w1_samples < 2:
        errors.append(f"recursion.w1_samples: must be >= 2, got {rec.w1_samples}")
    if rec.max_relative_se <= 0:
        errors.append(f"recursion.max_relative_se: must be > 0, got {rec.max_relative_se}")

    level = config.observability.log_level
    if level.upper() not in LOG_LEVELS:
        errors.append(f"observability.log_level: unknown level '{level}'")


# ---------------------------------------------------------------------------
# 入口
# ---------------------------------------------------------------------------


def config_from_dict(data: Any) -> RunConfig:
    """
    由已解析的字典构建并验证 RunConfig。

    Raises:
        ConfigError: 包含全部错误
    """
    if not isinstance(data, dict):
        raise ConfigError(["configuration must be a mapping"])

    errors: List[str] = []
    allowed = ("model", "seed", "experiment", "output_dir", *_SECTIONS)
    for key in data:
        if key not in allowed:
            errors.append(f"{key}: unknown field")

    model = _validate_model(data.get("model"), errors)

    seed = data.get("seed")
    if seed is not None and (not _is_int(seed) or not 0 <= seed < SEED_BOUND):
        errors.append(f"seed: must be an integer in [0, 2^64), got {seed!r}")

    experiment = data.get("experiment")
    if experiment is not None and experiment not in EXPERIMENT_IDS:
        errors.append(f"experiment: unknown experiment '{experiment}'")

    output_dir = data.get("output_dir", "./results")
    if not isinstance(output_dir, str) or not output_dir:
        errors.append("output_dir: must be a non-empty string")

    sections = {name: _parse_section(data, name, cls, errors) for name, cls in _SECTIONS.items()}
    config = RunConfig(
        model=model or {},
        seed=seed if _is_int(seed) else None,
        experiment=experiment,
        output_dir=output_dir if isinstance(output_dir, str) else "./results",
        **sections,
    )
    _validate_settings(config, errors)

    if errors:
        raise ConfigError(errors)
    return config


def parse_config(text: str) -> RunConfig:
    """
    解析 YAML 配置文本。

    Args:
        text: YAML 文本

    Returns:
        RunConfig: 验证并填充默认值后的配置

    Raises:
        ConfigError: YAML 语法错误、重复键或任何字段错误
    """
    try:
        data = yaml.load(text, Loader=_UniqueKeyLoader)
    except yaml.YAMLError as e:
        raise ConfigError([f"Failed to parse configuration: {e}"])
    if data is None:
        raise ConfigError(["Configuration is empty"])
    return config_from_dict(data)


def load_config(path: str) -> RunConfig:
    """
    从 YAML 配置文件加载配置。

    Raises:
        ConfigError: 文件未找到或内容非法
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError([f"Configuration file not found: {path}"])
    return parse_config(config_path.read_text(encoding="utf-8"))


def config_hash(config: RunConfig) -> str:
    """规范化 JSON（排除 output_dir 与 observability）的 SHA-256。"""
    data = {k: v for k, v in config.to_dict().items() if k not in _UNHASHED_KEYS}
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def describe_config(config: RunConfig) -> str:
    """完整配置（含默认值）的 YAML 文本。"""
    return yaml.safe_dump(config.to_dict(), sort_keys=False, default_flow_style=None)
