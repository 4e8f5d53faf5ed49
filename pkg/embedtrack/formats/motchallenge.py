"""MOTChallenge text files.

Ground truth:  frame,id,left,top,width,height,flag,category,visibility
Results:       frame,id,left,top,width,height,score,category,-1,-1  (category may be -1)

Coordinates are pixels on disk and normalized in memory; the image size
comes from the meta.json sidecar. Blank lines and lines starting with
``#`` are skipped. Rows with flag 0 are ignored.
"""

import logging
from pathlib import Path
from typing import Iterator, Optional

from ..models.box import Box
from ..models.scene import GroundTruthObject, PredictedObject
from ..models.tracking import TrackOutput
from .errors import FormatError, numbered_lines

logger = logging.getLogger(__name__)

GT_COLUMNS = 8
RESULT_COLUMNS = 7
NO_CATEGORY = -1


def _rows(path: Path) -> Iterator[tuple[int, list[str]]]:
    for number, line in numbered_lines(path):
        if not line or line.startswith("#"):
            continue
        yield number, [field.strip() for field in line.split(",")]


def _int(value: str, name: str, path: Path, line: int) -> int:
    try:
        number = float(value)
    except ValueError:
        raise FormatError(f"{name} {value!r} is not a number", path, line) from None
    if not number.is_integer():
        raise FormatError(f"{name} {value!r} is not an integer", path, line)
    return int(number)


def _float(value: str, name: str, path: Path, line: int) -> float:
    try:
        number = float(value)
    except ValueError:
        raise FormatError(f"{name} {value!r} is not a number", path, line) from None
    if number != number or number in (float("inf"), float("-inf")):
        raise FormatError(f"{name} is not finite", path, line)
    return number


def _box(fields: list[str], path: Path, line: int, width: int, height: int) -> Box:
    left, top, w, h = (_float(v, n, path, line) for v, n in zip(fields[2:6], ("left", "top", "width", "height")))
    if w < 0 or h < 0:
        raise FormatError(f"negative box size {w}x{h}", path, line)
    return Box.from_pixels(left, top, w, h, width, height)


def _check_image(width: int, height: int) -> None:
    if width <= 0 or height <= 0:
        raise ValueError(f"image size must be positive, got {width}x{height}")


def _sorted_frames(frames: dict[int, list], key) -> dict[int, list]:
    return {f: sorted(frames[f], key=key) for f in sorted(frames)}


def parse_mot_gt(path: Path | str, image_width: int, image_height: int) -> dict[int, list[GroundTruthObject]]:
    """Read a ground-truth file into per-frame objects, frames ascending."""
    _check_image(image_width, image_height)
    path = Path(path)
    frames: dict[int, list[GroundTruthObject]] = {}
    seen: set[tuple[int, int]] = set()
    ignored = 0
    for line, fields in _rows(path):
        if len(fields) < GT_COLUMNS:
            raise FormatError(f"expected at least {GT_COLUMNS} columns, got {len(fields)}", path, line)
        frame = _int(fields[0], "frame", path, line)
        track_id = _int(fields[1], "id", path, line)
        if frame < 1:
            raise FormatError(f"frame {frame} must be >= 1", path, line)
        box = _box(fields, path, line, image_width, image_height)
        if _float(fields[6], "flag", path, line) == 0:
            ignored += 1
            continue
        category = _int(fields[7], "category", path, line)
        if (frame, track_id) in seen:
            raise FormatError(f"id {track_id} repeated in frame {frame}", path, line)
        seen.add((frame, track_id))
        frames.setdefault(frame, []).append(GroundTruthObject(track_id=track_id, category=category, box=box))
    logger.debug(f"Read {len(seen)} ground-truth boxes from {path} ({ignored} ignored)")
    return _sorted_frames(frames, key=lambda o: o.track_id)


def parse_mot_results(
    path: Path | str, image_width: int, image_height: int, default_category: Optional[int] = None
) -> dict[int, list[PredictedObject]]:
    """Read a results file into per-frame predictions.

    Column 8 carries the category when it is not -1; otherwise
    ``default_category`` applies, and is required.
    """
    _check_image(image_width, image_height)
    path = Path(path)
    frames: dict[int, list[PredictedObject]] = {}
    seen: set[tuple[int, int]] = set()
    for line, fields in _rows(path):
        if len(fields) < RESULT_COLUMNS:
            raise FormatError(f"expected at least {RESULT_COLUMNS} columns, got {len(fields)}", path, line)
        frame = _int(fields[0], "frame", path, line)
        instance_id = _int(fields[1], "id", path, line)
        if frame < 1:
            raise FormatError(f"frame {frame} must be >= 1", path, line)
        box = _box(fields, path, line, image_width, image_height)
        score = _float(fields[6], "score", path, line)
        category = _int(fields[7], "category", path, line) if len(fields) > 7 else NO_CATEGORY
        if category == NO_CATEGORY:
            if default_category is None:
                raise FormatError("row carries no category and no default was given", path, line)
            category = default_category
        if (frame, instance_id) in seen:
            raise FormatError(f"id {instance_id} repeated in frame {frame}", path, line)
        seen.add((frame, instance_id))
        frames.setdefault(frame, []).append(
            PredictedObject(instance_id=instance_id, category=category, box=box, score=score)
        )
    logger.debug(f"Read {len(seen)} predicted boxes from {path}")
    return _sorted_frames(frames, key=lambda o: o.instance_id)


def _pixels(box: Box, width: int, height: int) -> str:
    return ",".join(repr(float(v)) for v in box.to_pixels(width, height))


def write_gt(
    ground_truth: dict[int, list[GroundTruthObject]], path: Path | str, image_width: int, image_height: int
) -> None:
    """Write ground truth ordered by frame then id."""
    _check_image(image_width, image_height)
    path = Path(path)
    lines = [
        f"{frame},{o.track_id},{_pixels(o.box, image_width, image_height)},1,{o.category},1.0\n"
        for frame in sorted(ground_truth)
        for o in sorted(ground_truth[frame], key=lambda o: o.track_id)
    ]
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.writelines(lines)
    logger.info(f"Wrote {len(lines)} ground-truth rows to {path}")


def write_results(
    output: TrackOutput, path: Path | str, image_width: int, image_height: int, with_category: bool = False
) -> None:
    """Write tracker output ordered by frame then id.

    With ``with_category`` the category goes in column 8 instead of -1.
    """
    _check_image(image_width, image_height)
    path = Path(path)
    lines = []
    for frame in sorted(output.frames, key=lambda f: f.frame):
        for o in sorted(frame.objects, key=lambda o: o.instance_id):
            category = o.category_id if with_category else NO_CATEGORY
            lines.append(
                f"{frame.frame},{o.instance_id},{_pixels(o.box, image_width, image_height)},"
                f"{float(o.score)!r},{category},-1,-1\n"
            )
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.writelines(lines)
    logger.info(f"Wrote {len(lines)} result rows to {path}")
