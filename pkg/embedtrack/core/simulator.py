"""Seeded synthetic sequences for exercising the tracker and the metrics.

Every identity has a unit latent vector and a box that random-walks
inside the unit square. A detection's embedding is the latent plus
Gaussian noise, renormalized. Occlusions hide detections while the
ground truth stays annotated. False positives carry embeddings
orthogonalized against all latents when the dimension leaves room.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..formats.detections import parse_detections, write_detections
from ..formats.meta import META_FILENAME, SequenceMeta, load_meta, write_meta
from ..formats.motchallenge import parse_mot_gt, write_gt
from ..models.box import Box
from ..models.scene import GroundTruthObject, LabeledScene, PredictedObject
from ..models.simulation import SimulatorConfig
from ..models.tracking import Detection
from .geometry import normalize, normalize_rows

logger = logging.getLogger(__name__)

GT_FILENAME = "gt.txt"
DETECTIONS_FILENAME = "dets.jsonl"
COLLISION_TOLERANCE = 1e-6
MAX_LATENT_DRAWS = 100


@dataclass(frozen=True)
class SyntheticSequence:
    """Ground truth and detections of one generated (or re-imported) video.

    ``latents`` is None for sequences read back from disk; exports do not
    carry them.
    """

    num_frames: int
    ground_truth: dict[int, list[GroundTruthObject]]
    detections: dict[int, list[Detection]]
    latents: Optional[np.ndarray]
    image_width: int = 1920
    image_height: int = 1080
    seed: Optional[int] = None
    video: int = 0

    def scene(self, predictions: Optional[dict[int, list[PredictedObject]]] = None) -> LabeledScene:
        return LabeledScene(
            num_frames=self.num_frames, ground_truth=self.ground_truth, predictions=predictions or {}
        )

    @property
    def num_detections(self) -> int:
        return sum(len(d) for d in self.detections.values())


def _latents(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    latents = normalize_rows(rng.standard_normal((count, dim))) if count else np.zeros((0, dim))
    for _ in range(MAX_LATENT_DRAWS):
        sims = latents @ latents.T
        np.fill_diagonal(sims, -1.0)
        colliding = np.flatnonzero((sims > 1.0 - COLLISION_TOLERANCE).any(axis=1))
        if colliding.size == 0:
            return latents
        latents[colliding[0]] = normalize(rng.standard_normal(dim))
    raise ValueError(f"could not draw {count} separable latents in {dim} dimensions")


def _off_latent_embedding(rng: np.random.Generator, basis: Optional[np.ndarray], dim: int) -> np.ndarray:
    vector = rng.standard_normal(dim)
    if basis is not None:
        vector = vector - basis @ (basis.T @ vector)
    return normalize(vector)


def _occlusion_mask(rng: np.random.Generator, config: SimulatorConfig) -> np.ndarray:
    """Boolean (frames x identities) array, True where a detection is hidden."""
    hidden = np.zeros((config.frames, config.identities), dtype=bool)
    lo, hi = config.occlusion_duration
    if config.occlusion_probability > 0:
        for identity in range(config.identities):
            t = 0
            while t < config.frames:
                if rng.random() < config.occlusion_probability:
                    length = int(rng.integers(lo, hi + 1))
                    hidden[t:t + length, identity] = True
                    t += length
                else:
                    t += 1
    for occ in config.occlusions:
        hidden[:, occ.identity] |= np.array([occ.covers(frame) for frame in range(1, config.frames + 1)], dtype=bool)
    return hidden


def _trajectories(rng: np.random.Generator, config: SimulatorConfig) -> np.ndarray:
    """(frames x identities x 4) center-form boxes kept inside the unit square."""
    n = config.identities
    sizes = np.column_stack([rng.uniform(*config.width_range, size=n), rng.uniform(*config.height_range, size=n)])
    half = sizes / 2.0
    centers = rng.uniform(half, 1.0 - half)
    boxes = np.zeros((config.frames, n, 4))
    for t in range(config.frames):
        if t > 0:
            centers = np.clip(centers + rng.normal(0.0, config.motion_step, size=(n, 2)), half, 1.0 - half)
        boxes[t, :, :2] = centers
        boxes[t, :, 2:] = sizes
    return boxes


def _jitter(rng: np.random.Generator, box: np.ndarray, scale: float) -> Box:
    if scale > 0:
        box = box + rng.normal(0.0, scale, size=4)
        box[2:] = np.maximum(box[2:], 0.0)
    return Box(cx=float(box[0]), cy=float(box[1]), w=float(box[2]), h=float(box[3]))


def generate(config: SimulatorConfig, video: int = 0) -> SyntheticSequence:
    """Generate one video.

    Args:
        config: Simulator settings.
        video: Video ordinal; seeds the generator together with ``config.seed``.

    Returns:
        Ground truth, shuffled detections and the identity latents.
    """
    rng = np.random.default_rng([config.seed, video])
    dim = config.embedding_dim
    latents = _latents(rng, config.identities, dim)
    categories = rng.integers(config.num_categories, size=config.identities)
    boxes = _trajectories(rng, config)
    hidden = _occlusion_mask(rng, config)
    basis = np.linalg.qr(latents.T)[0] if 0 < config.identities < dim else None

    ground_truth: dict[int, list[GroundTruthObject]] = {}
    detections: dict[int, list[Detection]] = {}
    for t in range(config.frames):
        frame = t + 1
        truths = []
        observed = []
        for identity in range(config.identities):
            cx, cy, w, h = (float(v) for v in boxes[t, identity])
            category = int(categories[identity])
            truths.append(
                GroundTruthObject(track_id=identity + 1, category=category, box=Box(cx=cx, cy=cy, w=w, h=h))
            )
            if hidden[t, identity] or rng.random() < config.miss_probability:
                continue
            latent = latents[identity]
            if config.embedding_noise > 0:
                embedding = normalize(latent + config.embedding_noise * rng.standard_normal(dim))
            else:
                embedding = latent.copy()
            observed.append(
                Detection(
                    category_id=category,
                    score=float(rng.uniform(*config.score_range)),
                    box=_jitter(rng, boxes[t, identity].copy(), config.box_noise),
                    embedding=embedding,
                )
            )
        for _ in range(int(rng.poisson(config.false_positive_rate)) if config.false_positive_rate > 0 else 0):
            w = float(rng.uniform(*config.width_range))
            h = float(rng.uniform(*config.height_range))
            observed.append(
                Detection(
                    category_id=int(rng.integers(config.num_categories)),
                    score=float(rng.uniform(*config.score_range)),
                    box=Box(cx=float(rng.uniform(w / 2, 1 - w / 2)), cy=float(rng.uniform(h / 2, 1 - h / 2)), w=w, h=h),
                    embedding=_off_latent_embedding(rng, basis, dim),
                )
            )
        if truths:
            ground_truth[frame] = truths
        if observed:
            detections[frame] = [observed[i] for i in rng.permutation(len(observed))]

    sequence = SyntheticSequence(
        num_frames=config.frames,
        ground_truth=ground_truth,
        detections=detections,
        latents=latents,
        image_width=config.image_width,
        image_height=config.image_height,
        seed=config.seed,
        video=video,
    )
    logger.info(
        f"Generated video {video} (seed {config.seed}): {config.frames} frames, "
        f"{config.identities} identities, {sequence.num_detections} detections"
    )
    return sequence


def generate_videos(config: SimulatorConfig) -> list[SyntheticSequence]:
    """One sequence per video of ``config.videos``."""
    return [generate(config, video) for video in range(config.videos)]


def _video_dir(root: Path, video: int) -> Path:
    return root / f"video_{video:03d}"


def export(
    sequences: SyntheticSequence | Sequence[SyntheticSequence],
    directory: Path | str,
    config: Optional[SimulatorConfig] = None,
) -> list[Path]:
    """Write gt.txt, dets.jsonl and meta.json per sequence.

    A single sequence goes straight into ``directory``; several go into
    one ``video_NNN`` subdirectory each.

    Args:
        sequences: One sequence or several.
        directory: Output root, created if missing.
        config: Simulator settings recorded in meta.json.

    Returns:
        The directories written, in video order.
    """
    root = Path(directory)
    batch = [sequences] if isinstance(sequences, SyntheticSequence) else list(sequences)
    written = []
    for seq in batch:
        target = root if len(batch) == 1 else _video_dir(root, seq.video)
        target.mkdir(parents=True, exist_ok=True)
        write_gt(seq.ground_truth, target / GT_FILENAME, seq.image_width, seq.image_height)
        write_detections(seq.detections, target / DETECTIONS_FILENAME)
        write_meta(
            SequenceMeta(
                image_width=seq.image_width,
                image_height=seq.image_height,
                num_frames=seq.num_frames,
                seed=seq.seed,
                video=seq.video,
                simulator=config,
            ),
            target / META_FILENAME,
        )
        written.append(target)
    return written


def load_sequence(directory: Path | str) -> SyntheticSequence:
    """Read an exported sequence back; latents are not restored."""
    root = Path(directory)
    meta = load_meta(root / META_FILENAME)
    return SyntheticSequence(
        num_frames=meta.num_frames,
        ground_truth=parse_mot_gt(root / GT_FILENAME, meta.image_width, meta.image_height),
        detections=parse_detections(root / DETECTIONS_FILENAME),
        latents=None,
        image_width=meta.image_width,
        image_height=meta.image_height,
        seed=meta.seed,
        video=meta.video or 0,
    )
