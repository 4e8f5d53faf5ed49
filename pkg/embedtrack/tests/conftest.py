"""Pytest configuration, fixtures and brute-force oracles."""

from functools import lru_cache
from itertools import permutations

import numpy as np
import pytest

from embedtrack.models import Box, GroundTruthObject, LabeledScene, PredictedObject


@lru_cache(maxsize=None)
def _injections(rows: int, cols: int) -> np.ndarray:
    """All injective maps rows -> cols (rows <= cols), one per array row."""
    return np.array(list(permutations(range(cols), rows)), dtype=int).reshape(-1, rows)


def brute_force_assignment(values: np.ndarray, maximize: bool = False) -> tuple[int, float]:
    """(pair count, optimal total) by enumerating every injection.

    NaN cells are forbidden; the count of permitted pairs is maximized
    first, then the total.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return 0, 0.0
    if values.shape[0] > values.shape[1]:
        values = values.T
    k, j = values.shape
    perms = _injections(k, j)
    picked = values[np.arange(k)[None, :], perms]
    permitted = ~np.isnan(picked)
    counts = permitted.sum(axis=1)
    totals = np.where(permitted, picked, 0.0).sum(axis=1)
    best = counts.max()
    candidates = totals[counts == best]
    return int(best), float(candidates.max() if maximize else candidates.min())


def corner_box(left: float, top: float, right: float, bottom: float) -> Box:
    return Box.from_corners(left, top, right, bottom)


def perfect_predictions(ground_truth: dict[int, list[GroundTruthObject]]) -> dict[int, list[PredictedObject]]:
    """Predictions copying the ground truth, ids included."""
    return {
        f: [PredictedObject(instance_id=o.track_id, category=o.category, box=o.box) for o in objs]
        for f, objs in ground_truth.items()
    }


def random_scene(seed: int, max_tracks: int = 5, max_frames: int = 20) -> LabeledScene:
    """Small scene: a few gt tracks, and predictions that jitter, drop, relabel and add boxes."""
    rng = np.random.default_rng(seed)
    tracks = int(rng.integers(1, max_tracks + 1))
    frames = int(rng.integers(2, max_frames + 1))
    centers = rng.uniform(0.2, 0.8, size=(tracks, 2))
    ground_truth: dict[int, list[GroundTruthObject]] = {}
    predictions: dict[int, list[PredictedObject]] = {}
    pred_ids = rng.permutation(np.arange(1, tracks + 1)) + 10
    next_extra = 100
    for frame in range(1, frames + 1):
        centers = np.clip(centers + rng.normal(0, 0.02, size=centers.shape), 0.1, 0.9)
        truths, preds = [], []
        for t in range(tracks):
            if rng.random() < 0.15:
                continue
            box = Box(cx=float(centers[t, 0]), cy=float(centers[t, 1]), w=0.1, h=0.2)
            truths.append(GroundTruthObject(track_id=t + 1, category=0, box=box))
            if rng.random() < 0.2:
                continue
            if rng.random() < 0.1:
                pred_ids[t] = next_extra
                next_extra += 1
            jitter = rng.normal(0, 0.02, size=2)
            preds.append(
                PredictedObject(
                    instance_id=int(pred_ids[t]),
                    category=0,
                    box=Box(cx=box.cx + float(jitter[0]), cy=box.cy + float(jitter[1]), w=0.1, h=0.2),
                )
            )
        if rng.random() < 0.2:
            preds.append(
                PredictedObject(
                    instance_id=next_extra,
                    category=0,
                    box=Box(cx=float(rng.uniform(0.1, 0.9)), cy=float(rng.uniform(0.1, 0.9)), w=0.1, h=0.2),
                )
            )
            next_extra += 1
        if truths:
            ground_truth[frame] = truths
        if preds:
            predictions[frame] = preds
    return LabeledScene(num_frames=frames, ground_truth=ground_truth, predictions=predictions)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
