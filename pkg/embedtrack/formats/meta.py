"""The meta.json sidecar written next to exported sequences."""

import logging
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..models.simulation import SimulatorConfig
from .errors import FormatError

logger = logging.getLogger(__name__)

META_FILENAME = "meta.json"


class SequenceMeta(BaseModel):
    """Image size and provenance of one exported sequence."""

    model_config = ConfigDict(extra="forbid")

    image_width: int = Field(..., gt=0)
    image_height: int = Field(..., gt=0)
    num_frames: int = Field(..., ge=0)
    seed: Optional[int] = Field(None, description="Seed the sequence was generated with")
    video: Optional[int] = Field(None, description="Video index within a multi-video export")
    simulator: Optional[SimulatorConfig] = Field(None, description="Generator settings echo")


def load_meta(path: Path | str) -> SequenceMeta:
    path = Path(path)
    try:
        return SequenceMeta.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise FormatError(f"invalid meta: {exc.errors()[0]['msg']}", path) from None


def write_meta(meta: SequenceMeta, path: Path | str) -> None:
    path = Path(path)
    path.write_text(meta.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")


def find_meta(data_file: Path | str) -> Optional[SequenceMeta]:
    """The sidecar in the directory of ``data_file``, if there is one."""
    candidate = Path(data_file).parent / META_FILENAME
    if not candidate.is_file():
        return None
    return load_meta(candidate)
