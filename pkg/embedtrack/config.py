"""Run configuration.

RunConfig gathers every tunable of the pipeline into nested sections.
Values are layered preset < TOML file < explicit overrides; environment
variables are not consulted. Unknown keys are rejected at every level.
"""

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from .models.simulation import SimulatorConfig
from .models.tracking import TrackerConfig
from .models.training import LossWeights, MatchWeights

logger = logging.getLogger(__name__)


class MetricsConfig(BaseModel):
    """Evaluation settings."""

    model_config = ConfigDict(extra="forbid")

    iou_threshold: float = Field(0.5, gt=0.0, lt=1.0, description="IoU threshold for CLEAR-MOT and IDF1")


class SamplerConfig(BaseModel):
    """Batch sampling settings."""

    model_config = ConfigDict(extra="forbid")

    videos: int = Field(2, ge=1, description="Videos per tracking batch (N_v)")
    frames: int = Field(8, ge=1, description="Frames per video (N_f)")
    pretraining_images: int = Field(8, ge=1, description="Images per pre-training batch")
    temperature: float = Field(0.1, ge=1e-6, description="Contrastive temperature")


class ImageSize(BaseModel):
    """Pixel size used at the MOTChallenge boundary."""

    model_config = ConfigDict(extra="forbid")

    width: int = Field(1920, gt=0)
    height: int = Field(1080, gt=0)


PRESETS: dict[str, dict[str, Any]] = {
    "mot17": {
        "tracker": {"objectness_threshold": 0.5, "new_instance_threshold": 0.5, "memory_length": 20},
        "loss": {"lambda_class": 2.0, "lambda_l1": 5.0, "lambda_giou": 2.0, "lambda_contr": 2.0, "focal_alpha": 0.25},
        "matcher": {"lambda_class": 2.0, "lambda_box": 5.0, "lambda_giou": 2.0},
        "sampler": {"videos": 2, "frames": 8, "temperature": 0.1},
    },
    "bdd100k": {
        "tracker": {"objectness_threshold": 0.4, "new_instance_threshold": 0.5, "memory_length": 9},
        "loss": {"lambda_class": 2.0, "lambda_l1": 5.0, "lambda_giou": 2.0, "lambda_contr": 1.0, "focal_alpha": 0.25},
        "matcher": {"lambda_class": 2.0, "lambda_box": 5.0, "lambda_giou": 2.0},
        "sampler": {"videos": 4, "frames": 10, "temperature": 0.1},
    },
}


class RunConfig(BaseSettings):
    """All pipeline settings."""

    model_config = SettingsConfigDict(extra="forbid")

    tracker: TrackerConfig = Field(default_factory=TrackerConfig)
    metrics: MetricsConfig = Field(default_factory=MetricsConfig)
    loss: LossWeights = Field(default_factory=LossWeights)
    matcher: MatchWeights = Field(default_factory=MatchWeights)
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    simulator: SimulatorConfig = Field(default_factory=SimulatorConfig)
    image: ImageSize = Field(default_factory=ImageSize)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)


def _merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _drop_none(values: dict[str, Any]) -> dict[str, Any]:
    pruned = {}
    for key, value in values.items():
        if isinstance(value, dict):
            value = _drop_none(value)
            if not value:
                continue
        if value is not None:
            pruned[key] = value
    return pruned


def read_toml(path: Path | str) -> dict[str, Any]:
    """Raw sections of a TOML configuration file."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"configuration file not found: {path}")
    with path.open("rb") as handle:
        return tomllib.load(handle)


def load_run_config(
    path: Optional[Path | str] = None,
    preset: Optional[str] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> RunConfig:
    """Build a RunConfig from a preset, a TOML file and overrides, in that order."""
    values: dict[str, Any] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        values = _merge(values, PRESETS[preset])
        logger.info(f"Loaded preset {preset}")
    if path is not None:
        values = _merge(values, read_toml(path))
        logger.info(f"Loaded configuration from {path}")
    if overrides:
        values = _merge(values, _drop_none(overrides))
    return RunConfig(**values)
