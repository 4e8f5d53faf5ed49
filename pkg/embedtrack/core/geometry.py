"""Box overlap and embedding similarity primitives.

Scalar functions take Box models; the *_matrix variants take (N, 4)
corner-form arrays and are what the matcher and the metrics use.
"""

from dataclasses import dataclass

import numpy as np

from ..models.box import Box


@dataclass(frozen=True)
class OverlapResult:
    """An overlap value plus whether the inputs were degenerate."""

    value: float
    degenerate: bool = False


def _intersection(a: Box, b: Box) -> float:
    iw = min(a.right, b.right) - max(a.left, b.left)
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    return max(iw, 0.0) * max(ih, 0.0)


def iou_checked(a: Box, b: Box) -> OverlapResult:
    """IoU with a degenerate flag; zero-area union yields 0 flagged."""
    inter = _intersection(a, b)
    union = a.area + b.area - inter
    if union <= 0.0:
        return OverlapResult(0.0, degenerate=True)
    return OverlapResult(inter / union)


def iou(a: Box, b: Box) -> float:
    """Intersection over union in [0, 1]."""
    return iou_checked(a, b).value


def giou_checked(a: Box, b: Box) -> OverlapResult:
    """Generalized IoU with a degenerate flag; zero-area enclosing box yields 0 flagged."""
    enclosing = (max(a.right, b.right) - min(a.left, b.left)) * (
        max(a.bottom, b.bottom) - min(a.top, b.top)
    )
    if enclosing <= 0.0:
        return OverlapResult(0.0, degenerate=True)
    inter = _intersection(a, b)
    union = a.area + b.area - inter
    overlap = inter / union if union > 0.0 else 0.0
    return OverlapResult(overlap - (enclosing - union) / enclosing)


def giou(a: Box, b: Box) -> float:
    """Generalized IoU in [-1, 1]."""
    return giou_checked(a, b).value


def _pairwise_parts(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return inter, union


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between corner-form arrays; degenerate pairs are 0."""
    inter, union = _pairwise_parts(a, b)
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0.0)
    return out


def giou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise GIoU between corner-form arrays; degenerate enclosures are 0."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    inter, union = _pairwise_parts(a, b)
    overlap = np.zeros_like(inter)
    np.divide(inter, union, out=overlap, where=union > 0.0)
    cw = np.maximum(a[:, None, 2], b[None, :, 2]) - np.minimum(a[:, None, 0], b[None, :, 0])
    ch = np.maximum(a[:, None, 3], b[None, :, 3]) - np.minimum(a[:, None, 1], b[None, :, 1])
    enclosing = cw * ch
    penalty = np.zeros_like(inter)
    np.divide(enclosing - union, enclosing, out=penalty, where=enclosing > 0.0)
    return np.where(enclosing > 0.0, overlap - penalty, 0.0)


def normalize(v: np.ndarray) -> np.ndarray:
    """Scale a vector to unit Euclidean norm."""
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / norm


def normalize_rows(m: np.ndarray) -> np.ndarray:
    """Scale every row of a matrix to unit norm."""
    m = np.asarray(m, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("cannot normalize a zero vector")
    return m / norms


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def cosine_similarity_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity between the rows of two matrices."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    return np.clip(normalize_rows(a) @ normalize_rows(b).T, -1.0, 1.0)
