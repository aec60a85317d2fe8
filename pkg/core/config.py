"""
Configuration Manager
YAML 기반 실험 설정 관리
"""

import hashlib
import json
import math
from pathlib import Path
from typing import Dict, List, Any, Optional
from dataclasses import dataclass, asdict, field

import yaml
from loguru import logger

from core.enums import ExperimentKind, PotentialKind, ScheduleKind, SweepMethod
from core.exceptions import ConfigurationError


DEFAULT_CONFIG_PATH = Path(__file__).parent.parent / "config" / "nrc_default.yaml"


@dataclass
class AppConfig:
    """Application configuration"""
    app_name: str = "fermilab-nrc"
    version: str = "1.0.0"


@dataclass
class PotentialConfig:
    """Pair potential section"""
    kind: str = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    radius: float = 1.0
    table_path: Optional[str] = None
    v_cap: float = 1.0e6


@dataclass
class CouplingConfig:
    """Coupling schedule section (ε ↦ λ_ε)"""
    kind: str = "linear"
    g: float = 1.0
    a: float = 0.0
    c: float = 1.0
    table_path: Optional[str] = None


@dataclass
class SweepConfig:
    """Geometric ε sweep section"""
    eps_start: float = 0.5
    eps_factor: float = 1.0 / math.sqrt(2.0)
    eps_count: int = 10
    z_list: List[float] = field(default_factory=lambda: [1.0])
    method: str = "radial"
    e_target: float = -0.125
    truncation_radius: Optional[float] = None

    @property
    def eps_list(self) -> List[float]:
        return [self.eps_start * self.eps_factor ** i for i in range(self.eps_count)]


@dataclass
class GridConfig:
    """Grid policy section"""
    box_half_length: float = 8.0
    points_per_axis: int = 32
    max_points_per_axis: int = 4096
    offset: float = 0.5
    nodes_per_width: int = 8


@dataclass
class ToleranceConfig:
    """Tolerances"""
    norm: float = 1.0e-6
    solve: float = 1.0e-10
    ground_state: float = 1.0e-8
    calibration: float = 1.0e-8
    max_iters: int = 5000


@dataclass
class OutputConfig:
    """Output section"""
    out_dir: str = "./results"


@dataclass
class ExperimentConfig:
    """검증된 실험 설정 (모든 섹션 포함)"""
    kind: ExperimentKind = ExperimentKind.KK_CHECK
    n_particles: int = 2
    dim: int = 1
    seed: int = 12345
    workers: int = 1
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    coupling: CouplingConfig = field(default_factory=CouplingConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    memory_cap_mb: float = 2048.0

    _SECTIONS = {
        "potential": PotentialConfig,
        "coupling": CouplingConfig,
        "sweep": SweepConfig,
        "grid": GridConfig,
        "tolerances": ToleranceConfig,
        "output": OutputConfig,
    }

    @classmethod
    def from_sections(cls, sections: Dict[str, Any]) -> 'ExperimentConfig':
        """
        YAML 섹션 dict 로부터 설정 생성 및 검증

        Args:
            sections: safe_load 결과 (app/logging 등 무관한 섹션은 무시)

        Returns:
            ExperimentConfig

        Raises:
            ConfigurationError: 필드 이름을 포함한 검증 오류
        """
        sections = sections or {}
        experiment = sections.get("experiment", {}) or {}
        _reject_unknown("experiment", experiment, {"kind", "n_particles", "dim", "seed", "workers"})

        kind_value = experiment.get("kind", cls.kind.value)
        try:
            kind = ExperimentKind(kind_value)
        except ValueError:
            valid = ", ".join(k.value for k in ExperimentKind)
            raise ConfigurationError(f"unknown experiment kind '{kind_value}' (expected one of: {valid})",
                                     field="experiment.kind")

        built = {}
        for name, section_cls in cls._SECTIONS.items():
            values = sections.get(name, {}) or {}
            if not isinstance(values, dict):
                raise ConfigurationError("section must be a mapping", field=name)
            allowed = set(section_cls.__dataclass_fields__)
            _reject_unknown(name, values, allowed)
            try:
                built[name] = section_cls(**values)
            except TypeError as e:
                raise ConfigurationError(str(e), field=name)

        performance = sections.get("performance", {}) or {}
        config = cls(
            kind=kind,
            n_particles=_as_int(experiment.get("n_particles", 2), "experiment.n_particles"),
            dim=_as_int(experiment.get("dim", 1), "experiment.dim"),
            seed=_as_int(experiment.get("seed", 12345), "experiment.seed"),
            workers=_as_int(experiment.get("workers", 1), "experiment.workers"),
            memory_cap_mb=float(performance.get("memory_cap_mb", 2048.0)),
            **built,
        )
        config.validate()
        return config

    def validate(self):
        """범위 검증"""
        if self.dim not in (1, 2, 3):
            raise ConfigurationError(f"dimension must be 1, 2 or 3, got {self.dim}", field="experiment.dim")
        if self.n_particles < 1:
            raise ConfigurationError("at least one particle required", field="experiment.n_particles")
        if self.workers < 1:
            raise ConfigurationError("worker pool needs at least one worker", field="experiment.workers")

        try:
            PotentialKind(self.potential.kind)
        except ValueError:
            raise ConfigurationError(f"unknown potential kind '{self.potential.kind}'", field="potential.kind")
        if self.potential.kind == PotentialKind.TABLE.value and not self.potential.table_path:
            raise ConfigurationError("table potential needs table_path", field="potential.table_path")
        if self.potential.width <= 0 or self.potential.radius <= 0:
            raise ConfigurationError("width and radius must be positive", field="potential.width")

        try:
            ScheduleKind(self.coupling.kind)
        except ValueError:
            raise ConfigurationError(f"unknown coupling kind '{self.coupling.kind}'", field="coupling.kind")
        if self.coupling.kind == ScheduleKind.TABLE.value and not self.coupling.table_path:
            raise ConfigurationError("table schedule needs table_path", field="coupling.table_path")

        sweep = self.sweep
        if sweep.eps_start <= 0:
            raise ConfigurationError("eps_start must be positive", field="sweep.eps_start")
        if not 0 < sweep.eps_factor < 1:
            raise ConfigurationError("eps_factor must lie in (0, 1) so ε strictly decreases",
                                     field="sweep.eps_factor")
        if sweep.eps_count < 1:
            raise ConfigurationError("eps_count must be at least 1", field="sweep.eps_count")
        if not sweep.z_list or any(z <= 0 for z in sweep.z_list):
            raise ConfigurationError("z_list must be a nonempty list of positive values", field="sweep.z_list")
        try:
            SweepMethod(sweep.method)
        except ValueError:
            raise ConfigurationError(f"unknown sweep method '{sweep.method}'", field="sweep.method")

        grid = self.grid
        if grid.box_half_length <= 0:
            raise ConfigurationError("box_half_length must be positive", field="grid.box_half_length")
        if grid.points_per_axis < 2 or grid.points_per_axis % 2:
            raise ConfigurationError("points_per_axis must be an even integer ≥ 2", field="grid.points_per_axis")
        if grid.max_points_per_axis < grid.points_per_axis:
            raise ConfigurationError("max_points_per_axis below points_per_axis", field="grid.max_points_per_axis")
        if not 0 <= grid.offset < 1:
            raise ConfigurationError("offset must lie in [0, 1)", field="grid.offset")

        if self.memory_cap_mb <= 0:
            raise ConfigurationError("memory_cap_mb must be positive", field="performance.memory_cap_mb")

    @property
    def eps_list(self) -> List[float]:
        return self.sweep.eps_list

    def to_dict(self) -> dict:
        """딕셔너리 변환 (manifest 및 해시용)"""
        data = {
            "experiment": {
                "kind": self.kind.value,
                "n_particles": self.n_particles,
                "dim": self.dim,
                "seed": self.seed,
                "workers": self.workers,
            },
            "performance": {"memory_cap_mb": self.memory_cap_mb},
        }
        for name in self._SECTIONS:
            data[name] = asdict(getattr(self, name))
        return data

    def config_hash(self) -> str:
        """워커 수를 제외한 정규화 설정의 SHA-256"""
        data = self.to_dict()
        data["experiment"].pop("workers")
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _reject_unknown(section: str, values: Dict[str, Any], allowed: set):
    for key in values:
        if key not in allowed:
            raise ConfigurationError(f"unknown key '{key}'", field=f"{section}.{key}")


def _as_int(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"expected an integer, got {value!r}", field=name)
    return value


class ConfigManager:
    """
    Singleton class for managing application and experiment configuration (YAML-based)

    Usage:
        config_manager = ConfigManager.get_instance("config/nrc_default.yaml")
        # or
        config_manager = ConfigManager()  # Also returns singleton instance
    """
    _instance: Optional['ConfigManager'] = None
    _initialized: bool = False

    def __new__(cls, *_args, **_kwargs):
        """
        Create or return singleton instance
        """
        if cls._instance is None:
            cls._instance = super(ConfigManager, cls).__new__(cls)
        return cls._instance

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize configuration manager (only once for singleton)

        Args:
            config_path: Path to YAML config (default: config/nrc_default.yaml)
        """
        # 이미 초기화되었으면 다시 초기화하지 않음
        if ConfigManager._initialized:
            return

        self.config_path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
        self.app_config = AppConfig()
        self.experiment = ExperimentConfig()
        self.config: Dict[str, Any] = {}  # 전체 설정 저장
        self.logging_config: Dict[str, Any] = {}  # 로깅 설정 저장

        self.load_config()

        # 초기화 완료 플래그 설정
        ConfigManager._initialized = True
        logger.info(f"ConfigManager singleton instance initialized (config: {self.config_path})")

    @classmethod
    def get_instance(cls, config_path: Optional[str] = None) -> 'ConfigManager':
        """
        Get singleton instance of ConfigManager

        Args:
            config_path: Path to YAML file (only used on first call)

        Returns:
            ConfigManager singleton instance
        """
        if cls._instance is None or not cls._initialized:
            cls._instance = ConfigManager(config_path=config_path)
        return cls._instance

    @classmethod
    def reset_instance(cls):
        """
        Reset singleton instance (mainly for testing)
        """
        cls._instance = None
        cls._initialized = False
        logger.debug("ConfigManager singleton instance reset")

    def load_config(self) -> bool:
        """
        YAML 파일에서 설정 로드

        Returns:
            True if loaded successfully

        Raises:
            ConfigurationError: 파일 누락, YAML 문법 오류, 필드 검증 실패
        """
        if not self.config_path.exists():
            raise ConfigurationError(f"config file not found: {self.config_path}")

        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except yaml.MarkedYAMLError as e:
            line = e.problem_mark.line + 1 if e.problem_mark is not None else None
            raise ConfigurationError(f"YAML syntax error: {e.problem}", line=line)

        if not isinstance(data, dict):
            raise ConfigurationError("top level must be a mapping of sections")

        self.config = data
        self.app_config = AppConfig(**(data.get("app", {}) or {}))
        self.logging_config = data.get("logging", {}) or {}
        self.experiment = ExperimentConfig.from_sections(data)

        logger.info(f"설정이 로드되었습니다: {self.config_path}")
        logger.debug(f"실험 종류: {self.experiment.kind.value}, N={self.experiment.n_particles}, "
                     f"d={self.experiment.dim}, seed={self.experiment.seed}")
        return True

    def apply_overrides(self, workers: Optional[int] = None, seed: Optional[int] = None,
                        out_dir: Optional[str] = None, kind: Optional[str] = None,
                        n_particles: Optional[int] = None, dim: Optional[int] = None):
        """
        CLI 플래그로 설정 덮어쓰기

        Args:
            workers: --workers
            seed: --seed
            out_dir: --out
            kind: 하위 명령 이름
            n_particles: 하위 명령의 --particles
            dim: 하위 명령의 --dim
        """
        if n_particles is not None:
            self.experiment.n_particles = n_particles
        if dim is not None:
            self.experiment.dim = dim
        if kind is not None:
            try:
                self.experiment.kind = ExperimentKind(kind)
            except ValueError:
                raise ConfigurationError(f"unknown experiment kind '{kind}'", field="experiment.kind")
        if workers is not None:
            self.experiment.workers = workers
        if seed is not None:
            self.experiment.seed = seed
        if out_dir is not None:
            self.experiment.output.out_dir = out_dir
        self.experiment.validate()
        logger.debug(f"Applied CLI overrides: kind={kind}, workers={workers}, seed={seed}, out={out_dir}")

    def get_logging_config(self) -> Dict[str, Any]:
        """
        Get logging configuration

        Returns:
            Logging configuration dictionary
        """
        return self.logging_config
