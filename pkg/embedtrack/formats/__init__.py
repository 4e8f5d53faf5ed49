"""File codecs at the edges of the pipeline.

- motchallenge: ground truth and tracker results as MOTChallenge text
- detections: embedded detections as JSON Lines
- meta: the meta.json sidecar carrying image size and generator settings
"""

from .detections import parse_detections, write_detections
from .errors import FormatError
from .meta import SequenceMeta, find_meta, load_meta, write_meta
from .motchallenge import parse_mot_gt, parse_mot_results, write_gt, write_results

__all__ = [
    "FormatError",
    "SequenceMeta",
    "find_meta",
    "load_meta",
    "write_meta",
    "parse_detections",
    "write_detections",
    "parse_mot_gt",
    "parse_mot_results",
    "write_gt",
    "write_results",
]
