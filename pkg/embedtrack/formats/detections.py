"""Embedded detections as JSON Lines.

One object per line:
    {"frame": 1, "category": 0, "score": 0.9, "box": [cx, cy, w, h], "embedding": [...]}

Boxes are normalized center form. The embedding dimension is taken from
the first record and enforced on the rest.
"""

import json
import logging
import math
from pathlib import Path
from typing import Mapping, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..models.box import Box
from ..models.tracking import Detection
from .errors import FormatError, numbered_lines

logger = logging.getLogger(__name__)


class DetectionRecord(BaseModel):
    """Wire form of one detection line."""

    model_config = ConfigDict(extra="forbid")

    frame: int = Field(..., ge=1, description="1-based frame index")
    category: int = Field(..., description="Category id")
    score: float = Field(..., ge=0.0, le=1.0, description="Objectness score")
    box: tuple[float, float, float, float] = Field(..., description="[cx, cy, w, h], normalized")
    embedding: list[float] = Field(..., min_length=1, description="Tracking embedding")

    @field_validator("score", "box", "embedding", mode="after")
    @classmethod
    def _finite(cls, value):
        values = value if isinstance(value, (list, tuple)) else [value]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("non-finite number")
        return value

    def to_detection(self) -> Detection:
        cx, cy, w, h = self.box
        return Detection(
            category_id=self.category,
            score=self.score,
            box=Box(cx=cx, cy=cy, w=w, h=h),
            embedding=self.embedding,
        )


def parse_detections(path: Path | str) -> dict[int, list[Detection]]:
    """Read a detections file into per-frame lists, frames ascending."""
    path = Path(path)
    frames: dict[int, list[Detection]] = {}
    dim = None
    count = 0
    for line, text in numbered_lines(path):
        if not text:
            continue
        try:
            record = DetectionRecord.model_validate(json.loads(text))
            detection = record.to_detection()
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", path, line) from None
        except ValidationError as exc:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc']) or 'record'}: {err['msg']}" for err in exc.errors()
            )
            raise FormatError(problems, path, line) from None
        if dim is None:
            dim = len(record.embedding)
        elif len(record.embedding) != dim:
            raise FormatError(f"embedding has {len(record.embedding)} dimensions, expected {dim}", path, line)
        frames.setdefault(record.frame, []).append(detection)
        count += 1
    logger.debug(f"Read {count} detections over {len(frames)} frames from {path} (D={dim})")
    return {f: frames[f] for f in sorted(frames)}


def write_detections(stream: Mapping[int, Sequence[Detection]], path: Path | str) -> None:
    """Write detections ordered by frame, keeping the order within a frame."""
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for frame in sorted(stream):
            for d in stream[frame]:
                record = {
                    "frame": frame,
                    "category": d.category_id,
                    "score": float(d.score),
                    "box": [float(v) for v in d.box.as_array()],
                    "embedding": [float(v) for v in d.embedding],
                }
                handle.write(json.dumps(record, allow_nan=False) + "\n")
                count += 1
    logger.info(f"Wrote {count} detections to {path}")
