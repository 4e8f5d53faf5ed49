"""Scene models - ground truth and predictions for evaluation.

A LabeledScene pairs per-frame ground-truth objects with per-frame
predictions over frames 1..num_frames.
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .box import Box


class GroundTruthObject(BaseModel):
    """An annotated object in one frame."""

    model_config = ConfigDict(frozen=True)

    track_id: int = Field(..., description="Ground-truth track id")
    category: int = Field(..., description="Category id")
    box: Box = Field(..., description="Annotated box")


class PredictedObject(BaseModel):
    """A tracker output object in one frame."""

    model_config = ConfigDict(frozen=True)

    instance_id: int = Field(..., description="Predicted track id")
    category: int = Field(..., description="Category id")
    box: Box = Field(..., description="Predicted box")
    score: float = Field(1.0, description="Detection score")


class LabeledScene(BaseModel):
    """Ground truth and predictions over a contiguous frame range."""

    num_frames: int = Field(..., ge=0, description="Frames are indexed 1..num_frames")
    ground_truth: dict[int, list[GroundTruthObject]] = Field(default_factory=dict)
    predictions: dict[int, list[PredictedObject]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_frames(self) -> "LabeledScene":
        for side, frames in (("ground truth", self.ground_truth), ("predictions", self.predictions)):
            for frame, objects in frames.items():
                if not 1 <= frame <= self.num_frames:
                    raise ValueError(f"{side} frame {frame} outside 1..{self.num_frames}")
                ids = [
                    o.track_id if isinstance(o, GroundTruthObject) else o.instance_id
                    for o in objects
                ]
                if len(ids) != len(set(ids)):
                    raise ValueError(f"duplicate ids in {side} frame {frame}")
        return self

    @classmethod
    def from_frames(
        cls,
        ground_truth: dict[int, list[GroundTruthObject]],
        predictions: dict[int, list[PredictedObject]],
        num_frames: int | None = None,
    ) -> "LabeledScene":
        """Build a scene, inferring num_frames from the largest frame index."""
        if num_frames is None:
            num_frames = max([0, *ground_truth.keys(), *predictions.keys()])
        return cls(num_frames=num_frames, ground_truth=ground_truth, predictions=predictions)

    def gt_frame(self, frame: int) -> list[GroundTruthObject]:
        return self.ground_truth.get(frame, [])

    def pred_frame(self, frame: int) -> list[PredictedObject]:
        return self.predictions.get(frame, [])

    @property
    def gt_categories(self) -> list[int]:
        return sorted({o.category for objs in self.ground_truth.values() for o in objs})

    @property
    def pred_categories(self) -> list[int]:
        return sorted({o.category for objs in self.predictions.values() for o in objs})

    def restrict_to_category(self, category: int) -> "LabeledScene":
        """Return the sub-scene holding only objects of ``category``."""
        return LabeledScene(
            num_frames=self.num_frames,
            ground_truth={
                f: [o for o in objs if o.category == category]
                for f, objs in self.ground_truth.items()
            },
            predictions={
                f: [o for o in objs if o.category == category]
                for f, objs in self.predictions.items()
            },
        )

    def with_predictions(self, predictions: dict[int, list[PredictedObject]]) -> "LabeledScene":
        return LabeledScene(
            num_frames=self.num_frames,
            ground_truth=self.ground_truth,
            predictions=predictions,
        )
