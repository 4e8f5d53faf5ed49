"""Box model - normalized center-form bounding boxes.

Boxes are stored as (cx, cy, w, h) relative to the image size. Corner form
(left, top, right, bottom) and pixel form are derived views used at the
geometry and file-format boundaries.
"""

from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PlainSerializer, PlainValidator


def _as_float_array(value: Any) -> np.ndarray:
    array = np.asarray(value, dtype=np.float64)
    if array.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError("vector contains non-finite values")
    return array


FloatVector = Annotated[
    np.ndarray,
    PlainValidator(_as_float_array),
    PlainSerializer(lambda a: [float(x) for x in a], return_type=list),
]
"""A finite 1-D float64 vector that serializes as a JSON list."""


class Box(BaseModel):
    """Axis-aligned box in normalized center form."""

    model_config = ConfigDict(frozen=True)

    cx: float = Field(..., description="Center x, relative to image width")
    cy: float = Field(..., description="Center y, relative to image height")
    w: float = Field(..., ge=0.0, description="Width, relative to image width")
    h: float = Field(..., ge=0.0, description="Height, relative to image height")

    @classmethod
    def from_corners(cls, left: float, top: float, right: float, bottom: float) -> "Box":
        """Build a box from corner form; right/bottom must not precede left/top."""
        if right < left or bottom < top:
            raise ValueError(f"corner box ({left}, {top}, {right}, {bottom}) is inverted")
        return cls(
            cx=(left + right) / 2.0,
            cy=(top + bottom) / 2.0,
            w=right - left,
            h=bottom - top,
        )

    @classmethod
    def from_pixels(
        cls, left: float, top: float, width: float, height: float,
        image_width: float, image_height: float,
    ) -> "Box":
        """Build a box from MOTChallenge pixel form (left, top, width, height)."""
        return cls(
            cx=(left + width / 2.0) / image_width,
            cy=(top + height / 2.0) / image_height,
            w=width / image_width,
            h=height / image_height,
        )

    @property
    def left(self) -> float:
        return self.cx - self.w / 2.0

    @property
    def top(self) -> float:
        return self.cy - self.h / 2.0

    @property
    def right(self) -> float:
        return self.cx + self.w / 2.0

    @property
    def bottom(self) -> float:
        return self.cy + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    def corners(self) -> tuple[float, float, float, float]:
        """Return (left, top, right, bottom)."""
        return (self.left, self.top, self.right, self.bottom)

    def as_array(self) -> np.ndarray:
        """Center form as a float64 array [cx, cy, w, h]."""
        return np.array([self.cx, self.cy, self.w, self.h], dtype=np.float64)

    def to_pixels(self, image_width: float, image_height: float) -> tuple[float, float, float, float]:
        """Return MOTChallenge pixel form (left, top, width, height)."""
        return (
            self.left * image_width,
            self.top * image_height,
            self.w * image_width,
            self.h * image_height,
        )


def corners_array(boxes: list[Box]) -> np.ndarray:
    """Stack boxes into an (N, 4) corner-form array."""
    if not boxes:
        return np.zeros((0, 4), dtype=np.float64)
    return np.array([b.corners() for b in boxes], dtype=np.float64)
