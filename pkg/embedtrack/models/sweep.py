"""Sweep result models."""

from pydantic import BaseModel, Field


class MemorySweepPoint(BaseModel):
    """Tracking quality at one memory length, averaged over seeds."""

    memory_length: int = Field(..., ge=1)
    idf1: float
    hota: float
    mota: float
    idsw: int = Field(..., ge=0, description="ID switches summed over seeds")
    seeds: int = Field(..., ge=1)


class NoiseSweepPoint(BaseModel):
    """Tracking quality at one embedding noise level, averaged over seeds."""

    sigma: float = Field(..., ge=0.0)
    idf1: float
    mota: float
    seeds: int = Field(..., ge=1)


class SamplingSweepPoint(BaseModel):
    """Positive pairs per tracking batch for one (N_v, N_f) split."""

    num_videos: int = Field(..., ge=1)
    num_frames: int = Field(..., ge=1)
    mean_positive_pairs: float = Field(..., ge=0.0)
    draws: int = Field(..., ge=1)
