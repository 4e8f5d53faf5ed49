"""Simulator settings."""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ScriptedOcclusion(BaseModel):
    """Suppress the detections of one identity for a fixed frame window."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    identity: int = Field(..., ge=0, description="0-based identity index")
    start: int = Field(..., ge=1, description="First occluded frame (1-based)")
    duration: int = Field(..., ge=1, description="Number of occluded frames")

    def covers(self, frame: int) -> bool:
        return self.start <= frame < self.start + self.duration


class SimulatorConfig(BaseModel):
    """Parameters of the synthetic sequence generator."""

    model_config = ConfigDict(extra="forbid")

    videos: int = Field(1, ge=1, description="Number of sequences to generate")
    frames: int = Field(50, ge=0, description="Frames per video")
    identities: int = Field(5, ge=0, description="Identities per video")
    num_categories: int = Field(1, ge=1, description="Categories drawn per identity")
    embedding_dim: int = Field(32, gt=0, description="Embedding dimension D")
    embedding_noise: float = Field(0.0, ge=0.0, description="Embedding noise sigma")
    occlusion_probability: float = Field(
        0.0, ge=0.0, le=1.0, description="Per-frame chance that a visible identity starts an occlusion"
    )
    occlusion_duration: tuple[int, int] = Field(
        (1, 5), description="Inclusive range of random occlusion lengths"
    )
    occlusions: list[ScriptedOcclusion] = Field(default_factory=list)
    miss_probability: float = Field(0.0, ge=0.0, le=1.0, description="Per-detection drop chance")
    false_positive_rate: float = Field(0.0, ge=0.0, description="Mean false positives per frame")
    motion_step: float = Field(0.01, ge=0.0, description="Std-dev of the per-frame center step")
    box_noise: float = Field(0.0, ge=0.0, description="Std-dev of detection box jitter")
    width_range: tuple[float, float] = Field((0.05, 0.15), description="Box width range")
    height_range: tuple[float, float] = Field((0.1, 0.3), description="Box height range")
    score_range: tuple[float, float] = Field((0.6, 1.0), description="Detection score range")
    image_width: int = Field(1920, gt=0, description="Image width in pixels for export")
    image_height: int = Field(1080, gt=0, description="Image height in pixels for export")
    seed: int = Field(0, ge=0, description="Generator seed")

    @model_validator(mode="after")
    def _check_ranges(self) -> "SimulatorConfig":
        lo, hi = self.occlusion_duration
        if lo < 1 or hi < lo:
            raise ValueError(f"occlusion_duration {self.occlusion_duration} must be a non-empty range >= 1")
        for name in ("width_range", "height_range", "score_range"):
            lo_f, hi_f = getattr(self, name)
            if not 0.0 <= lo_f <= hi_f <= 1.0:
                raise ValueError(f"{name} {(lo_f, hi_f)} must satisfy 0 <= low <= high <= 1")
        for occ in self.occlusions:
            if occ.identity >= self.identities:
                raise ValueError(f"scripted occlusion refers to identity {occ.identity} of {self.identities}")
        return self
