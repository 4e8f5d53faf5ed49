"""Tracking models - detector outputs, tracker settings and track results.

A Detection is one per-frame detector output carrying a tracking
embedding. The tracker turns a stream of detections into a TrackOutput,
one TrackFrame per processed frame.
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .box import Box, FloatVector
from .scene import PredictedObject


class TrackerConfig(BaseModel):
    """Online ID-assignment settings."""

    model_config = ConfigDict(extra="forbid")

    objectness_threshold: float = Field(
        0.5, ge=0.0, le=1.0, description="Minimum detection score to track and memorize"
    )
    new_instance_threshold: float = Field(
        0.5, description="Score of the new-instance entry; similarities below it spawn new ids"
    )
    memory_length: int = Field(20, ge=1, description="Number of past frames kept in memory (T)")
    embedding_dim: Optional[int] = Field(
        None, gt=0, description="Expected embedding dimension D; inferred when unset"
    )

    @field_validator("new_instance_threshold")
    @classmethod
    def _finite_threshold(cls, value: float) -> float:
        if not np.isfinite(value):
            raise ValueError("new_instance_threshold must be finite")
        return value


class Detection(BaseModel):
    """One detector output with its tracking embedding.

    Holds a numpy embedding, so compare detections field by field
    rather than with ``==``.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    category_id: int = Field(..., description="Predicted category")
    score: float = Field(..., ge=0.0, le=1.0, description="Objectness score")
    box: Box = Field(..., description="Predicted box")
    embedding: FloatVector = Field(..., description="Tracking embedding")

    @model_validator(mode="after")
    def _non_empty_embedding(self) -> "Detection":
        if self.embedding.size == 0:
            raise ValueError("embedding must have at least one dimension")
        return self

    @classmethod
    def from_class_scores(
        cls, class_scores: np.ndarray, box: Box, embedding: np.ndarray,
        category_ids: Optional[list[int]] = None,
    ) -> "Detection":
        """Build a detection from a per-category probability vector.

        The objectness score is the maximum category probability and the
        category is its argmax (mapped through ``category_ids`` when given).
        """
        scores = np.asarray(class_scores, dtype=np.float64)
        if scores.size == 0:
            raise ValueError("class_scores must not be empty")
        best = int(np.argmax(scores))
        category = category_ids[best] if category_ids is not None else best
        return cls(category_id=category, score=float(scores[best]), box=box, embedding=embedding)


class TrackedObject(BaseModel):
    """A detection with its assigned instance id."""

    model_config = ConfigDict(frozen=True)

    instance_id: int = Field(..., ge=1, description="Assigned track id")
    category_id: int = Field(..., description="Category")
    score: float = Field(..., description="Detection score")
    box: Box = Field(..., description="Box")


class TrackFrame(BaseModel):
    """Tracked objects of one frame."""

    frame: int = Field(..., ge=1, description="1-based frame index")
    objects: list[TrackedObject] = Field(default_factory=list)

    @model_validator(mode="after")
    def _unique_ids(self) -> "TrackFrame":
        ids = [o.instance_id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate instance ids in frame {self.frame}")
        return self


class TrackOutput(BaseModel):
    """Per-frame tracking results for a whole sequence."""

    frames: list[TrackFrame] = Field(default_factory=list)

    @property
    def instance_ids(self) -> list[int]:
        return sorted({o.instance_id for f in self.frames for o in f.objects})

    def to_predictions(self) -> dict[int, list[PredictedObject]]:
        """Per-frame predictions for evaluation."""
        return {
            f.frame: [
                PredictedObject(instance_id=o.instance_id, category=o.category_id, box=o.box, score=o.score)
                for o in f.objects
            ]
            for f in self.frames
        }
