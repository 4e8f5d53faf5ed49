"""Ablation sweeps run on simulated data.

memory_length_sweep and noise_sweep track seeded simulator sequences and
average the metrics over seeds. sampling_sweep counts the positive pairs
that tracking batches of a fixed size yield for different splits of the
batch into videos and frames.
"""

import logging
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from ..models.batch import DatasetIndex, VideoEntry
from ..models.report import CategoryMetrics
from ..models.simulation import SimulatorConfig
from ..models.sweep import MemorySweepPoint, NoiseSweepPoint, SamplingSweepPoint
from ..models.tracking import TrackerConfig
from .metrics import DEFAULT_IOU_THRESHOLD, evaluate
from .sampler import count_positive_pairs, sample_tracking_batch
from .simulator import SyntheticSequence, generate
from .tracker import run_sequence

logger = logging.getLogger(__name__)


def track_and_evaluate(
    sequence: SyntheticSequence, tracker: TrackerConfig, iou_threshold: float = DEFAULT_IOU_THRESHOLD
) -> CategoryMetrics:
    """Run the tracker over a sequence and return the class-agnostic metrics."""
    output = run_sequence(sequence.detections, tracker, num_frames=sequence.num_frames)
    return evaluate(sequence.scene(output.to_predictions()), iou_threshold).overall


def _seeded(config: SimulatorConfig, seed: int, **update) -> SimulatorConfig:
    return config.model_copy(update={"seed": seed, **update})


def memory_length_sweep(
    simulator: SimulatorConfig,
    lengths: Iterable[int],
    seeds: Sequence[int],
    tracker: Optional[TrackerConfig] = None,
) -> list[MemorySweepPoint]:
    """Mean IDF1, HOTA and MOTA per memory length T.

    Args:
        simulator: Scene settings; the seed is replaced by each of ``seeds``.
        lengths: Memory lengths to try.
        seeds: Simulator seeds; every length sees the same sequences.
        tracker: Remaining tracker settings.

    Returns:
        One point per length, in the order given.
    """
    if not seeds:
        raise ValueError("memory_length_sweep needs at least one seed")
    tracker = tracker or TrackerConfig()
    sequences = [generate(_seeded(simulator, s)) for s in seeds]
    points = []
    for length in lengths:
        config = tracker.model_copy(update={"memory_length": length})
        results = [track_and_evaluate(seq, config) for seq in sequences]
        point = MemorySweepPoint(
            memory_length=length,
            idf1=float(np.mean([r.identity.idf1 for r in results])),
            hota=float(np.mean([r.hota.hota for r in results])),
            mota=float(np.mean([r.clear.mota for r in results])),
            idsw=sum(r.clear.idsw for r in results),
            seeds=len(seeds),
        )
        logger.info(f"T={length}: IDF1 {point.idf1:.4f}, HOTA {point.hota:.4f}, IDSW {point.idsw}")
        points.append(point)
    return points


def noise_sweep(
    simulator: SimulatorConfig,
    sigmas: Iterable[float],
    seeds: Sequence[int],
    tracker: Optional[TrackerConfig] = None,
) -> list[NoiseSweepPoint]:
    """Mean IDF1 and MOTA per embedding noise level."""
    if not seeds:
        raise ValueError("noise_sweep needs at least one seed")
    tracker = tracker or TrackerConfig()
    points = []
    for sigma in sigmas:
        results = [
            track_and_evaluate(generate(_seeded(simulator, s, embedding_noise=sigma)), tracker)
            for s in seeds
        ]
        points.append(
            NoiseSweepPoint(
                sigma=sigma,
                idf1=float(np.mean([r.identity.idf1 for r in results])),
                mota=float(np.mean([r.clear.mota for r in results])),
                seeds=len(seeds),
            )
        )
        logger.info(f"sigma={sigma}: IDF1 {points[-1].idf1:.4f}")
    return points


def index_from_sequences(
    sequences: Sequence[SyntheticSequence],
) -> tuple[DatasetIndex, dict[tuple[int, int], list[int]]]:
    """Dataset index over the videos and the ground-truth ids visible per frame."""
    videos = []
    identities: dict[tuple[int, int], list[int]] = {}
    for seq in sequences:
        if seq.num_frames == 0:
            continue
        videos.append(VideoEntry(video_id=seq.video, frame_ids=list(range(1, seq.num_frames + 1))))
        for frame, objects in seq.ground_truth.items():
            identities[(seq.video, frame)] = [o.track_id for o in objects]
    return DatasetIndex(videos=videos), identities


def sampling_sweep(
    index: DatasetIndex,
    identities: Mapping[tuple[int, int], list[int]],
    splits: Sequence[tuple[int, int]],
    draws: int,
    seed: int,
) -> list[SamplingSweepPoint]:
    """Mean positive pairs per batch for each (N_v, N_f) split of one batch size."""
    if draws < 1:
        raise ValueError("draws must be positive")
    sizes = {nv * nf for nv, nf in splits}
    if len(sizes) > 1:
        raise ValueError(f"splits must share one batch size, got {sorted(sizes)}")
    points = []
    for num_videos, num_frames in splits:
        counts = [
            count_positive_pairs(sample_tracking_batch(index, num_videos, num_frames, seed, ordinal), identities)
            for ordinal in range(draws)
        ]
        points.append(
            SamplingSweepPoint(
                num_videos=num_videos,
                num_frames=num_frames,
                mean_positive_pairs=float(np.mean(counts)),
                draws=draws,
            )
        )
    return points
