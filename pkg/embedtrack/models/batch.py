"""Batch models - dataset indices and sampled batch specifications."""

import json
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class VideoEntry(BaseModel):
    """One video (or one detection image as a single-frame pseudo-video)."""

    model_config = ConfigDict(frozen=True)

    video_id: int = Field(..., description="Video identifier")
    frame_ids: list[int] = Field(..., min_length=1, description="Available frame ids")

    @field_validator("frame_ids")
    @classmethod
    def _unique_frames(cls, value: list[int]) -> list[int]:
        if len(value) != len(set(value)):
            raise ValueError("frame ids must be unique within a video")
        return value

    @property
    def frame_count(self) -> int:
        return len(self.frame_ids)


class DatasetIndex(BaseModel):
    """The videos a sampler can draw from."""

    videos: list[VideoEntry] = Field(default_factory=list)

    @field_validator("videos")
    @classmethod
    def _unique_videos(cls, value: list[VideoEntry]) -> list[VideoEntry]:
        ids = [v.video_id for v in value]
        if len(ids) != len(set(ids)):
            raise ValueError("video ids must be unique")
        return value

    @classmethod
    def from_frame_counts(cls, counts: dict[int, int]) -> "DatasetIndex":
        """Index videos whose frames are numbered 1..count."""
        return cls(
            videos=[
                VideoEntry(video_id=vid, frame_ids=list(range(1, n + 1)))
                for vid, n in sorted(counts.items())
            ]
        )

    @classmethod
    def from_images(cls, image_ids: list[int]) -> "DatasetIndex":
        """Index a detection dataset: every image is a one-frame pseudo-video."""
        return cls(videos=[VideoEntry(video_id=i, frame_ids=[1]) for i in image_ids])


class BatchKind(str, Enum):
    """How a batch was built."""

    TRACKING = "tracking"  # N_v videos x N_f frames
    PRETRAINING = "pretraining"  # N images, two views each


class BatchItem(BaseModel):
    """One image slot of a batch."""

    model_config = ConfigDict(frozen=True)

    video_id: int
    frame_id: int
    view_tag: Optional[int] = Field(None, ge=0, le=1, description="Augmentation view (pre-training only)")


class BatchSpec(BaseModel):
    """A sampled batch: which frames (and views) to load."""

    kind: BatchKind
    items: list[BatchItem] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_structure(self) -> "BatchSpec":
        if self.kind == BatchKind.TRACKING:
            keys = [(i.video_id, i.frame_id) for i in self.items]
            if len(keys) != len(set(keys)):
                raise ValueError("a tracking batch must not repeat a frame")
            if any(i.view_tag is not None for i in self.items):
                raise ValueError("tracking batches carry no view tags")
        else:
            views: dict[tuple[int, int], list[int]] = {}
            for item in self.items:
                if item.view_tag is None:
                    raise ValueError("pre-training items need a view tag")
                views.setdefault((item.video_id, item.frame_id), []).append(item.view_tag)
            if any(sorted(tags) != [0, 1] for tags in views.values()):
                raise ValueError("each pre-training image must appear with view tags 0 and 1")
        return self

    @property
    def video_ids(self) -> list[int]:
        """Distinct video ids in first-appearance order."""
        return list(dict.fromkeys(i.video_id for i in self.items))

    def frames_of(self, video_id: int) -> list[int]:
        return [i.frame_id for i in self.items if i.video_id == video_id]

    def to_jsonl(self) -> str:
        """One compact JSON record per item, each carrying the batch kind."""
        return "".join(
            json.dumps({"kind": self.kind.value, **item.model_dump()}, separators=(",", ":")) + "\n"
            for item in self.items
        )
