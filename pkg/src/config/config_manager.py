import os
import yaml
from enum import Enum
from pathlib import Path
from typing import Any, List, Optional, Sequence, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..ensemble.letkf import LocalizationConfig
from ..exceptions import ConfigError
from ..model.state import ModelConfig
from ..robust import Norm, ShrinkMode


class Method(str, Enum):
    VAR3D = "3dvar"
    VAR4D = "4dvar"
    ENSRF = "ensrf"


class DataQuality(str, Enum):
    GOOD = "good"
    BAD = "bad"
    NONE = "none"


DEFAULT_WINDOWS = {Method.VAR3D: 2.0, Method.VAR4D: 0.6, Method.ENSRF: 2.0}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class OutlierSchedule(_Section):
    """离群值注入计划, period 为空表示每个观测时刻都注入"""

    channels: List[int] = Field(default_factory=lambda: [0])
    magnitude_sigma: float = Field(100.0, gt=0)
    period: Optional[float] = Field(0.2, gt=0)
    sign: int = 1

    @field_validator("sign")
    @classmethod
    def _check_sign(cls, v):
        if v not in (1, -1):
            raise ValueError("sign 只能是 1 或 -1")
        return v

    @field_validator("channels")
    @classmethod
    def _check_channels(cls, v):
        if any(c < 0 for c in v):
            raise ValueError("通道编号不能为负")
        return sorted(set(v))


class ObservationConfig(_Section):
    frequency: float = Field(0.1, gt=0)
    noise_frac: float = Field(0.05, ge=0)
    background_frac: float = Field(0.08, gt=0)
    observed_indices: Optional[List[int]] = None
    outliers: OutlierSchedule = Field(default_factory=OutlierSchedule)


class SolverConfig(_Section):
    outer_iters: int = Field(15, ge=1)
    mu0: float = Field(1.0, gt=0)
    rho: float = Field(1.6, gt=1)
    shrink_mode: ShrinkMode = ShrinkMode.ELEMENTWISE
    l1_weight: float = Field(1.0, gt=0)
    laplace_scale: float = Field(2.0, gt=0)
    max_iter: int = Field(200, ge=1)
    tol_grad: Optional[float] = Field(None, gt=0)


class EnsembleSection(_Section):
    n_ens: int = Field(20, ge=2)
    inflation: float = Field(1.0, gt=0)
    localization: LocalizationConfig = Field(default_factory=LocalizationConfig)


class LoggingConfig(_Section):
    level: str = "info"
    directory: str = "logs"
    enabled: bool = True

    @field_validator("level")
    @classmethod
    def _check_level(cls, v):
        v = v.lower()
        if v not in ("debug", "info", "warning", "error", "critical"):
            raise ValueError(f"未知日志级别: {v}")
        return v


class ExperimentConfig(_Section):
    """一次孪生实验的完整配置"""

    method: Method
    label: Optional[str] = None
    norms: List[Norm] = Field(default_factory=lambda: list(Norm), min_length=1)
    tau: float = Field(1.0, gt=0)
    window: Optional[float] = Field(None, gt=0)
    seed: int = Field(0, ge=0)
    data_quality: List[DataQuality] = Field(
        default_factory=lambda: [DataQuality.GOOD, DataQuality.BAD], min_length=1)
    model: ModelConfig = Field(default_factory=ModelConfig)
    observations: ObservationConfig = Field(default_factory=ObservationConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    ensemble: EnsembleSection = Field(default_factory=EnsembleSection)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    @field_validator("norms")
    @classmethod
    def _unique_norms(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("norms 中有重复项")
        return v

    @field_validator("data_quality")
    @classmethod
    def _check_quality(cls, v):
        if DataQuality.NONE in v:
            raise ValueError("data_quality 只能取 good 或 bad")
        if len(set(v)) != len(v):
            raise ValueError("data_quality 中有重复项")
        return v

    @model_validator(mode="after")
    def _check_consistency(self):
        n = self.model.n
        window = self.window_length
        freq = self.observations.frequency
        if freq > window + 1e-12:
            raise ValueError(f"观测频率 {freq} 大于同化窗口 {window}")
        if abs(round(window / freq) * freq - window) > 1e-9:
            raise ValueError(f"观测间隔 {freq} 不能整除窗口长度 {window}")
        indices = self.observations.observed_indices
        if indices is not None:
            if not indices or any(i < 0 or i >= n for i in indices):
                raise ValueError(f"observed_indices 必须是 [0, {n}) 内的非空列表")
        m = n if indices is None else len(indices)
        if any(c >= m for c in self.observations.outliers.channels):
            raise ValueError(f"离群值通道超出观测维数 {m}")
        return self

    @property
    def window_length(self) -> float:
        return self.window if self.window is not None else DEFAULT_WINDOWS[self.method]

    @property
    def run_label(self) -> str:
        if self.label:
            return self.label
        return f"{self.method.value}_f{self.observations.frequency:g}_tau{self.tau:g}_seed{self.seed}"


def _node_line(root: Optional[yaml.Node], loc: Sequence[Union[str, int]]) -> Optional[int]:
    """沿 yaml 节点树查找出错键所在的行号 (从 1 开始); 缺失的键返回其父节点的行号"""
    if root is None:
        return 1
    node = root
    line = node.start_mark.line + 1
    for part in loc:
        if isinstance(node, yaml.MappingNode):
            match = None
            for key_node, value_node in node.value:
                if key_node.value == str(part):
                    match = (key_node, value_node)
                    break
            if match is None:
                return line
            line = match[0].start_mark.line + 1
            node = match[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            node = node.value[part]
            line = node.start_mark.line + 1
        else:
            return line
    return line


class ConfigManager:
    def __init__(self, config_path: Optional[str] = None):
        self.config_path = Path(config_path) if config_path else Path("config.yaml")
        self._config: Optional[ExperimentConfig] = None

    def load_config(self) -> ExperimentConfig:
        """加载并校验实验配置, 失败时抛出带键名和行号的 ConfigError"""
        if not self.config_path.exists():
            raise ConfigError(f"配置文件不存在: {self.config_path}")

        text = self.config_path.read_text(encoding="utf-8")
        try:
            data = yaml.safe_load(text)
            root = yaml.compose(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            raise ConfigError(f"YAML 解析失败: {getattr(e, 'problem', e)}",
                              line=mark.line + 1 if mark else None) from e

        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("配置文件顶层必须是映射", line=1)

        try:
            self._config = ExperimentConfig(**data)
        except ValidationError as e:
            error = e.errors()[0]
            loc = [p for p in error["loc"] if p != "__root__"]
            key = ".".join(str(p) for p in loc) or None
            message = "缺少必需的配置项" if error["type"] == "missing" else error["msg"]
            raise ConfigError(message, key=key, line=_node_line(root, loc)) from e

        return self._config

    def save_config(self, config: Optional[ExperimentConfig] = None):
        """保存配置文件"""
        if config is not None:
            self._config = config
        if self._config is None:
            return

        self.config_path.parent.mkdir(parents=True, exist_ok=True)

        with open(self.config_path, 'w', encoding='utf-8') as f:
            yaml.safe_dump(self._config.model_dump(mode="json"), f,
                           default_flow_style=False, allow_unicode=True, sort_keys=False)

    @property
    def config(self) -> ExperimentConfig:
        """获取配置实例"""
        if self._config is None:
            self._config = self.load_config()
        return self._config

    def get_env_or_config(self, env_key: str, config_value: Any) -> Any:
        """优先使用环境变量，否则使用配置值"""
        return os.getenv(env_key, config_value)
