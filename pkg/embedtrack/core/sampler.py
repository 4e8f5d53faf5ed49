"""Batch construction for tracking training and contrastive pre-training.

Tracking batches draw N_v videos uniformly without replacement among
videos with at least N_f frames, then N_f frames uniformly without
replacement from each. Pre-training batches draw N images and list each
twice, once per augmentation view.

Draws are deterministic in (seed, ordinal): the generator is
``numpy.random.default_rng([seed, ordinal])``.
"""

import logging
from typing import Mapping

import numpy as np

from ..models.batch import BatchItem, BatchKind, BatchSpec, DatasetIndex

logger = logging.getLogger(__name__)


def _rng(seed: int, ordinal: int) -> np.random.Generator:
    return np.random.default_rng([seed, ordinal])


def sample_tracking_batch(
    index: DatasetIndex, num_videos: int, num_frames: int, seed: int, ordinal: int = 0
) -> BatchSpec:
    """Sample N_v videos x N_f frames.

    Args:
        index: Videos to draw from; those shorter than N_f are skipped.
        num_videos: N_v, distinct videos per batch.
        num_frames: N_f, distinct frames per video.
        seed: Run seed.
        ordinal: Batch number within the run.

    Returns:
        A tracking BatchSpec of N_v * N_f items.

    Raises:
        ValueError: If fewer than N_v videos are long enough.
    """
    if num_videos < 1 or num_frames < 1:
        raise ValueError("num_videos and num_frames must be positive")
    eligible = [v for v in index.videos if v.frame_count >= num_frames]
    if len(eligible) < num_videos:
        raise ValueError(
            f"need {num_videos} videos with at least {num_frames} frames, "
            f"found {len(eligible)} (short by {num_videos - len(eligible)})"
        )
    rng = _rng(seed, ordinal)
    chosen = rng.choice(len(eligible), size=num_videos, replace=False)
    items: list[BatchItem] = []
    for vi in chosen.tolist():
        video = eligible[vi]
        picks = rng.choice(video.frame_count, size=num_frames, replace=False)
        for frame_id in sorted(video.frame_ids[p] for p in picks.tolist()):
            items.append(BatchItem(video_id=video.video_id, frame_id=frame_id))
    logger.debug(f"Tracking batch (seed={seed}, ordinal={ordinal}): videos {[eligible[i].video_id for i in chosen]}")
    return BatchSpec(kind=BatchKind.TRACKING, items=items)


def build_pretraining_batch(
    index: DatasetIndex, num_images: int, seed: int, ordinal: int = 0
) -> BatchSpec:
    """Sample N images and emit each with view tags 0 and 1 (2N items)."""
    if num_images < 1:
        raise ValueError("num_images must be positive")
    images = [(v.video_id, f) for v in index.videos for f in v.frame_ids]
    if num_images > len(images):
        raise ValueError(f"requested {num_images} images but the index holds {len(images)}")
    rng = _rng(seed, ordinal)
    picks = rng.choice(len(images), size=num_images, replace=False)
    items: list[BatchItem] = []
    for p in picks.tolist():
        video_id, frame_id = images[p]
        for view in (0, 1):
            items.append(BatchItem(video_id=video_id, frame_id=frame_id, view_tag=view))
    return BatchSpec(kind=BatchKind.PRETRAINING, items=items)


def pretraining_labels(
    spec: BatchSpec, objects: Mapping[tuple[int, int], list[int]]
) -> list[tuple[int, int, int]]:
    """Contrastive labels (video_id, instance_id, frame_id) for a pre-training batch.

    ``objects`` maps (video_id, frame_id) of an image to the instance ids
    annotated in it. Both views of an image share the image as their
    "video" and carry the view tag as their frame, so the two views of one
    object are positives and everything else is a negative.
    """
    if spec.kind != BatchKind.PRETRAINING:
        raise ValueError("pretraining_labels needs a pre-training batch")
    labels: list[tuple[int, int, int]] = []
    image_slot: dict[tuple[int, int], int] = {}
    for item in spec.items:
        key = (item.video_id, item.frame_id)
        image = image_slot.setdefault(key, len(image_slot))
        for instance in objects.get(key, []):
            labels.append((image, instance, int(item.view_tag or 0)))
    return labels


def count_positive_pairs(
    spec: BatchSpec, identities: Mapping[tuple[int, int], list[int]]
) -> int:
    """Ordered (anchor, positive) pairs a tracking batch yields.

    ``identities`` maps (video_id, frame_id) to the instance ids visible
    in that frame.
    """
    occurrences: dict[tuple[int, int], int] = {}
    for item in spec.items:
        for instance in identities.get((item.video_id, item.frame_id), []):
            key = (item.video_id, instance)
            occurrences[key] = occurrences.get(key, 0) + 1
    return sum(n * (n - 1) for n in occurrences.values())
