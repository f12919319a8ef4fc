import hashlib
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

from scenegraph.exceptions import ConfigError


DEFAULT_LABEL_VOCABULARY = [
    "near_pedestrian_on_crosswalk",
    "high_magnitude_speed",
    "starting_left_turn",
    "starting_right_turn",
    "on_stopline_traffic_light",
    "stationary",
    "traversing_intersection",
    "following_lane",
    "changing_lane",
    "behind_long_vehicle",
]

FAMILIES = (
    "straight_high_speed",
    "left_turn",
    "right_turn",
    "stop_at_light",
    "overtake",
    "pedestrian_crossing",
)


class SectionModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PathsConfig(SectionModel):
    scenarios: Path = Field(Path("data/scenarios.jsonl"), description="Scenario JSONL file")
    holdout: Optional[Path] = Field(None, description="Optional holdout scenario file (unseen location)")
    cache_dir: Path = Field(Path("work/graphs"), description="Graph cache directory")
    checkpoint_dir: Path = Field(Path("work/checkpoints"), description="Checkpoint directory")
    embedding_dir: Path = Field(Path("work/embeddings"), description="Embedding store directory")
    report_dir: Path = Field(Path("work/reports"), description="Report directory")


class LabelsConfig(SectionModel):
    vocabulary: List[str] = Field(default_factory=lambda: list(DEFAULT_LABEL_VOCABULARY))

    @field_validator("vocabulary")
    def validate_vocabulary(cls, v: List[str]) -> List[str]:
        if len(set(v)) != len(v):
            raise ValueError("Label vocabulary contains duplicates")
        return v


class SyntheticConfig(SectionModel):
    families: List[str] = Field(default_factory=lambda: list(FAMILIES))
    count_per_family: int = Field(50, ge=1)
    location: str = Field("boston", description="Location preset for generated scenes")
    # Separability margins between family means of the ego signature
    heading_margin_rad: float = Field(0.5, gt=0)
    speed_margin_mps: float = Field(2.0, gt=0)
    lateral_margin_m: float = Field(1.5, gt=0)

    @field_validator("families")
    def validate_families(cls, v: List[str]) -> List[str]:
        unknown = sorted(set(v) - set(FAMILIES))
        if unknown:
            raise ValueError(f"Unknown families {unknown}; allowed: {list(FAMILIES)}")
        return v


class BuilderConfig(SectionModel):
    temporal_reach: int = Field(4, ge=1, description="Max past hops of temporal edges")
    o2o_radius: float = Field(50.0, gt=0, description="Obstacle pair radius in meters")
    road_buffer: float = Field(100.0, gt=0, description="Road segment inclusion buffer in meters")
    close_margin: float = Field(5.0, gt=0, description="Extra lateral distance for is_close")
    centerline_points: int = Field(10, ge=2, description="Resampled centerline points")
    pe_dim: int = Field(16, gt=0, description="Sinusoidal positional encoding size")

    @field_validator("pe_dim")
    def validate_pe_dim(cls, v: int) -> int:
        if v % 2:
            raise ValueError("pe_dim must be even")
        return v

    @property
    def obstacle_feature_dim(self) -> int:
        return 9 + 4 + 2 + self.pe_dim

    @property
    def road_feature_dim(self) -> int:
        return 3 * self.centerline_points + 3


class AugmentConfig(SectionModel):
    p_edge_drop: float = Field(0.15, ge=0, le=1)
    p_attr_drop: float = Field(0.15, ge=0, le=1)
    p_attr_noise: float = Field(0.15, ge=0, le=1)
    noise_sigma: float = Field(1.0, ge=0)
    resample_p: bool = Field(True, description="Draw fresh probabilities per view from p_range")
    p_range: Tuple[float, float] = (0.1, 0.2)
    attr_drop_mode: Literal["column", "cell"] = "column"
    seed: Optional[int] = None

    @field_validator("p_range")
    def validate_p_range(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        low, high = v
        if not 0 <= low <= high <= 1:
            raise ValueError("p_range must satisfy 0 <= low <= high <= 1")
        return v


class TrainConfig(SectionModel):
    model_kind: Literal["bgrl", "graphcl"] = "bgrl"
    epochs: int = Field(50, gt=0)
    batch_size: int = Field(32, gt=0)
    learning_rate: float = Field(1e-3, gt=0)
    weight_decay: float = Field(1e-3, gt=0)
    m_base: float = Field(0.99, gt=0, lt=1, description="Base EMA momentum")
    target_update_interval: int = Field(10, gt=0, description="EMA update every k steps")
    temperature: float = Field(0.5, gt=0)
    grad_clip_norm: float = Field(5.0, gt=0)
    embedding_dim: int = Field(128, gt=0)
    predictor_hidden_dim: int = Field(512, gt=0)
    train_ratio: float = Field(0.85, gt=0, lt=1)
    seed: Optional[int] = None


class ClassifierConfig(SectionModel):
    hidden_dim: int = Field(512, gt=0)
    epochs: int = Field(100, gt=0)
    batch_size: int = Field(64, gt=0)
    learning_rate: float = Field(1e-3, gt=0)
    weight_decay: float = Field(1e-3, gt=0)
    threshold: float = Field(0.5, gt=0, lt=1)


class EvaluationConfig(SectionModel):
    validity_trials: int = Field(1000, gt=0)
    mcs_values: List[int] = Field(default_factory=lambda: [5, 10, 25, 50])
    knn_k: int = Field(10, gt=0)
    representatives_per_cluster: int = Field(5, ge=0)

    @field_validator("mcs_values")
    def validate_mcs_values(cls, v: List[int]) -> List[int]:
        if not v or any(m < 2 for m in v):
            raise ValueError("mcs_values must be non-empty and every value >= 2")
        return sorted(set(v))


class PipelineSettings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="SCENEGRAPH_",
        env_nested_delimiter="__",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        toml_file="scenegraph.toml",
    )

    seed: int = Field(0, ge=0, description="Global seed; all sub-seeds derive from it")
    log_level: str = Field("INFO", description="Logging level")
    debug: bool = Field(False, description="Debug mode (locals in tracebacks)")

    paths: PathsConfig = Field(default_factory=PathsConfig)
    labels: LabelsConfig = Field(default_factory=LabelsConfig)
    synthetic: SyntheticConfig = Field(default_factory=SyntheticConfig)
    builder: BuilderConfig = Field(default_factory=BuilderConfig)
    augment: AugmentConfig = Field(default_factory=AugmentConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    classifier: ClassifierConfig = Field(default_factory=ClassifierConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (
            init_settings,
            env_settings,
            dotenv_settings,
            TomlConfigSettingsSource(settings_cls),
            file_secret_settings,
        )

    @field_validator("log_level")
    def validate_log_level(cls, v: str) -> str:
        allowed = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v = v.upper()
        if v not in allowed:
            raise ValueError(f"Log level must be one of {allowed}")
        return v

    @model_validator(mode="after")
    def validate_cross_sections(self) -> "PipelineSettings":
        if not self.labels.vocabulary:
            raise ValueError("labels.vocabulary must not be empty")
        return self

    def derive_seed(self, name: str) -> int:
        """Stable per-purpose sub-seed derived from the global seed."""
        digest = hashlib.sha256(f"{self.seed}:{name}".encode()).digest()
        return int.from_bytes(digest[:4], "little") & 0x7FFFFFFF

    @property
    def train_seed(self) -> int:
        return self.train.seed if self.train.seed is not None else self.derive_seed("train")

    @property
    def augment_seed(self) -> int:
        return self.augment.seed if self.augment.seed is not None else self.derive_seed("augment")


def load_settings(config_path: Optional[Path] = None, **overrides) -> PipelineSettings:
    """
    Build the effective pipeline settings.

    Precedence (highest first): ``overrides`` (CLI flags), ``SCENEGRAPH_*`` environment
    variables, the TOML file, field defaults. Nested overrides are given as dicts, e.g.
    ``train={"model_kind": "graphcl"}``, and are merged into the file's section.

    Raises:
        ConfigError: If the file is missing or any value violates the schema
    """
    settings_cls: type[PipelineSettings] = PipelineSettings
    if config_path is not None:
        if not Path(config_path).is_file():
            raise ConfigError(f"Config file '{config_path}' does not exist")

        class _FileSettings(PipelineSettings):
            model_config = SettingsConfigDict(toml_file=Path(config_path))

        settings_cls = _FileSettings

    try:
        return settings_cls(**overrides)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid configuration: {problems}") from e


# Create a singleton instance
settings = PipelineSettings()
