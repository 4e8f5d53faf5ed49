"""Instance-level supervised contrastive loss and the combined training loss.

For an anchor i, positives P(i) are the other batch embeddings with the
same (video, instance) label; every other embedding is a negative N(i).
The pair loss for a positive pair (i, j) only sees that pair and N(i) in
its denominator, so it does not depend on the other positives:

    l(i, j) = -log( e^{s_ij} / (e^{s_ij} + sum_{k in N(i)} e^{s_ik}) ),
    s_ab = cos(z_a, z_b) / tau

The batch loss averages l over P(i) per anchor, then over anchors that
have at least one positive. All log-sum-exps are max-shifted.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from ..models.box import Box
from ..models.scene import GroundTruthObject
from ..models.training import LossBreakdown, LossWeights, MatchWeights, QueryPrediction
from .assignment import Assignment, detr_matching
from .geometry import cosine_similarity, giou, normalize_rows

logger = logging.getLogger(__name__)

MIN_TEMPERATURE = 1e-6
DEFAULT_TEMPERATURE = 0.1
FD_STEP = 1e-5
PROBABILITY_FLOOR = 1e-12


def _check_temperature(temperature: float) -> None:
    if not np.isfinite(temperature) or temperature < MIN_TEMPERATURE:
        raise ValueError(f"temperature must be >= {MIN_TEMPERATURE}, got {temperature}")


@dataclass(frozen=True)
class MatchedEmbedding:
    """One ground-truth-matched tracking embedding with its labels."""

    embedding: np.ndarray
    video_id: int
    instance_id: int
    frame_id: int


@dataclass(frozen=True)
class MatchedEmbeddingBatch:
    """Embeddings matched to ground truth across a batch, with temperature."""

    embeddings: np.ndarray
    video_ids: np.ndarray
    instance_ids: np.ndarray
    frame_ids: np.ndarray
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self) -> None:
        _check_temperature(self.temperature)
        emb = np.asarray(self.embeddings, dtype=np.float64)
        if emb.ndim != 2:
            if emb.size == 0:
                emb = emb.reshape(0, 1)
            else:
                raise ValueError(f"embeddings must be an (n, D) matrix, got shape {emb.shape}")
        if emb.shape[1] == 0:
            raise ValueError("embedding dimension must be positive")
        labels = [np.asarray(x, dtype=np.int64).reshape(-1) for x in (self.video_ids, self.instance_ids, self.frame_ids)]
        if any(lab.shape[0] != emb.shape[0] for lab in labels):
            raise ValueError("label arrays must have one entry per embedding")
        triples = set(zip(*(lab.tolist() for lab in labels)))
        if len(triples) != emb.shape[0]:
            raise ValueError("(video_id, instance_id, frame_id) triples must be unique")
        object.__setattr__(self, "embeddings", emb)
        object.__setattr__(self, "video_ids", labels[0])
        object.__setattr__(self, "instance_ids", labels[1])
        object.__setattr__(self, "frame_ids", labels[2])

    @classmethod
    def from_entries(
        cls, entries: Sequence[MatchedEmbedding], temperature: float = DEFAULT_TEMPERATURE
    ) -> "MatchedEmbeddingBatch":
        if not entries:
            return cls(np.zeros((0, 1)), [], [], [], temperature)
        dims = {np.asarray(e.embedding).size for e in entries}
        if len(dims) != 1:
            raise ValueError(f"embeddings differ in dimension: {sorted(dims)}")
        return cls(
            embeddings=np.stack([np.asarray(e.embedding, dtype=np.float64) for e in entries]),
            video_ids=np.array([e.video_id for e in entries]),
            instance_ids=np.array([e.instance_id for e in entries]),
            frame_ids=np.array([e.frame_id for e in entries]),
            temperature=temperature,
        )

    def __len__(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def with_embeddings(self, embeddings: np.ndarray) -> "MatchedEmbeddingBatch":
        return MatchedEmbeddingBatch(
            embeddings, self.video_ids, self.instance_ids, self.frame_ids, self.temperature
        )

    def positive_mask(self) -> np.ndarray:
        """n x n mask, True where the pair shares video and instance (diagonal excluded)."""
        same = (self.video_ids[:, None] == self.video_ids[None, :]) & (
            self.instance_ids[:, None] == self.instance_ids[None, :]
        )
        np.fill_diagonal(same, False)
        return same

    def negative_mask(self) -> np.ndarray:
        neg = ~self.positive_mask()
        np.fill_diagonal(neg, False)
        return neg


@dataclass(frozen=True)
class PositiveNegativePartition:
    """Positives and negatives of one anchor."""

    anchor: int
    positives: tuple[int, ...] = field(default_factory=tuple)
    negatives: tuple[int, ...] = field(default_factory=tuple)


def partition(batch: MatchedEmbeddingBatch, i: int) -> PositiveNegativePartition:
    """Split the batch around anchor ``i``."""
    if not 0 <= i < len(batch):
        raise IndexError(f"anchor {i} outside batch of {len(batch)}")
    pos = batch.positive_mask()[i]
    neg = batch.negative_mask()[i]
    return PositiveNegativePartition(
        anchor=i,
        positives=tuple(int(j) for j in np.flatnonzero(pos)),
        negatives=tuple(int(k) for k in np.flatnonzero(neg)),
    )


def pair_loss(
    z_i: np.ndarray, z_j: np.ndarray, negatives: Sequence[np.ndarray], temperature: float
) -> float:
    """Contrastive loss of one positive pair against the anchor's negatives."""
    _check_temperature(temperature)
    positive = cosine_similarity(z_i, z_j) / temperature
    if len(negatives) == 0:
        return 0.0
    logits = np.array(
        [positive] + [cosine_similarity(z_i, z_k) / temperature for z_k in negatives]
    )
    return max(float(logsumexp(logits) - positive), 0.0)


def anchor_loss(batch: MatchedEmbeddingBatch, i: int) -> float:
    """Mean pair loss of anchor ``i`` over its positives."""
    part = partition(batch, i)
    if not part.positives:
        raise ValueError(f"anchor {i} has no positives")
    z = batch.embeddings
    negatives = [z[k] for k in part.negatives]
    losses = [pair_loss(z[i], z[j], negatives, batch.temperature) for j in part.positives]
    return float(np.mean(losses))


@dataclass(frozen=True)
class _LossTerms:
    logits: np.ndarray  # s_ab
    positive: np.ndarray  # P mask
    negative: np.ndarray  # N mask
    denominators: np.ndarray  # log(e^{s_ij} + sum_k e^{s_ik}), -inf off P
    anchor_weights: np.ndarray  # 1 / (A |P(i)|), 0 for anchors without positives
    loss: float


def _loss_terms(batch: MatchedEmbeddingBatch) -> _LossTerms:
    n = len(batch)
    if n == 0:
        empty = np.zeros((0, 0))
        return _LossTerms(empty, empty.astype(bool), empty.astype(bool), empty, np.zeros(0), 0.0)

    unit = normalize_rows(batch.embeddings)
    logits = np.clip(unit @ unit.T, -1.0, 1.0) / batch.temperature
    positive = batch.positive_mask()
    negative = batch.negative_mask()

    with np.errstate(divide="ignore"):
        neg_lse = logsumexp(np.where(negative, logits, -np.inf), axis=1)
    neg_lse = np.where(negative.any(axis=1), neg_lse, -np.inf)
    denominators = np.where(positive, np.logaddexp(logits, neg_lse[:, None]), -np.inf)

    counts = positive.sum(axis=1)
    active = counts > 0
    num_active = int(active.sum())
    anchor_weights = np.zeros(n)
    if num_active:
        anchor_weights[active] = 1.0 / (num_active * counts[active])

    pair_losses = np.where(positive, denominators - logits, 0.0)
    loss = float((pair_losses.sum(axis=1) * anchor_weights).sum())
    return _LossTerms(logits, positive, negative, denominators, anchor_weights, max(loss, 0.0))


def batch_contrastive_loss(batch: MatchedEmbeddingBatch) -> float:
    """Mean anchor loss over anchors that have at least one positive; 0 if none do."""
    return _loss_terms(batch).loss


def contrastive_gradient(batch: MatchedEmbeddingBatch) -> np.ndarray:
    """Analytic gradient of batch_contrastive_loss with respect to every embedding."""
    terms = _loss_terms(batch)
    n = len(batch)
    grad = np.zeros_like(batch.embeddings)
    if n == 0 or not terms.anchor_weights.any():
        return grad

    weights = terms.anchor_weights[:, None]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        # dL/ds_ij for positives: w_i (p_ij - 1)
        p = np.where(terms.positive, np.exp(terms.logits - terms.denominators), 0.0)
        g = np.where(terms.positive, weights * (p - 1.0), 0.0)
        # dL/ds_ik for negatives: w_i e^{s_ik} sum_{j in P(i)} e^{-den_ij}
        inv_den = logsumexp(np.where(terms.positive, -terms.denominators, -np.inf), axis=1)
        inv_den = np.where(terms.positive.any(axis=1), inv_den, -np.inf)
        g = g + np.where(terms.negative, weights * np.exp(terms.logits + inv_den[:, None]), 0.0)

    # Chain through s_ab = cos(z_a, z_b) / tau (symmetric in a, b).
    h = (g + g.T) / batch.temperature
    norms = np.linalg.norm(batch.embeddings, axis=1)
    unit = batch.embeddings / norms[:, None]
    cos = np.clip(unit @ unit.T, -1.0, 1.0)
    grad = (h @ unit - (h * cos).sum(axis=1)[:, None] * unit) / norms[:, None]
    return grad


def central_difference(
    func: Callable[[np.ndarray], float], x: np.ndarray, step: float = FD_STEP
) -> np.ndarray:
    """Central-difference gradient of a scalar function, one coordinate at a time."""
    x = np.array(x, dtype=np.float64, copy=True)
    grad = np.zeros_like(x)
    for idx in range(x.size):
        original = x.flat[idx]
        x.flat[idx] = original + step
        f_plus = func(x)
        x.flat[idx] = original - step
        f_minus = func(x)
        x.flat[idx] = original
        grad.flat[idx] = (f_plus - f_minus) / (2.0 * step)
    return grad


def finite_difference_gradient(batch: MatchedEmbeddingBatch, step: float = FD_STEP) -> np.ndarray:
    """Reference gradient of batch_contrastive_loss by central differences."""
    return central_difference(
        lambda emb: batch_contrastive_loss(batch.with_embeddings(emb)), batch.embeddings, step
    )


def gradient_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest absolute difference relative to the largest gradient magnitude."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.shape != numeric.shape:
        raise ValueError(f"gradient shapes differ: {analytic.shape} vs {numeric.shape}")
    if analytic.size == 0:
        return 0.0
    scale = max(float(np.abs(analytic).max()), float(np.abs(numeric).max()), PROBABILITY_FLOOR)
    return float(np.abs(analytic - numeric).max() / scale)


def random_matched_batch(
    seed: int,
    size: int,
    dim: int,
    temperature: float = DEFAULT_TEMPERATURE,
    videos: int = 2,
    instances: int = 3,
) -> MatchedEmbeddingBatch:
    """Seeded batch with random Gaussian embeddings and random labels.

    Frames are numbered per (video, instance) so triples stay unique.
    """
    rng = np.random.default_rng(seed)
    video_ids = rng.integers(0, videos, size=size)
    instance_ids = rng.integers(0, instances, size=size)
    seen: dict[tuple[int, int], int] = {}
    frame_ids = []
    for v, k in zip(video_ids.tolist(), instance_ids.tolist()):
        seen[(v, k)] = seen.get((v, k), 0) + 1
        frame_ids.append(seen[(v, k)])
    return MatchedEmbeddingBatch(
        embeddings=rng.standard_normal((size, dim)),
        video_ids=video_ids,
        instance_ids=instance_ids,
        frame_ids=np.array(frame_ids),
        temperature=temperature,
    )


@dataclass(frozen=True)
class MatchedFrame:
    """One frame's predictions, ground truth and matching."""

    video_id: int
    frame_id: int
    predictions: Sequence[QueryPrediction]
    truths: Sequence[GroundTruthObject]
    matching: Assignment


def collect_matched_embeddings(
    frames: Sequence[MatchedFrame], temperature: float = DEFAULT_TEMPERATURE
) -> MatchedEmbeddingBatch:
    """Gather the embeddings of matched predictions, labelled by their truths' track ids."""
    entries: list[MatchedEmbedding] = []
    for frame in frames:
        for row, col in frame.matching.pairs:
            embedding = frame.predictions[row].embedding
            if embedding is None:
                raise ValueError(
                    f"prediction {row} in video {frame.video_id} frame {frame.frame_id} has no embedding"
                )
            entries.append(
                MatchedEmbedding(
                    embedding=embedding,
                    video_id=frame.video_id,
                    instance_id=frame.truths[col].track_id,
                    frame_id=frame.frame_id,
                )
            )
    return MatchedEmbeddingBatch.from_entries(entries, temperature)


def focal_loss(
    scores: np.ndarray,
    target_category: Optional[int],
    alpha: float = 0.25,
    gamma: float = 2.0,
) -> float:
    """Sigmoid focal loss summed over categories.

    ``scores`` are per-category probabilities. ``target_category`` None
    means background: the all-zeros target.
    """
    p = np.atleast_1d(np.asarray(scores, dtype=np.float64))
    if np.any(~np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("scores must be probabilities in [0, 1]")
    target = np.zeros_like(p)
    if target_category is not None:
        if not 0 <= target_category < p.size:
            raise ValueError(f"target category {target_category} outside {p.size} categories")
        target[target_category] = 1.0
    p_t = np.where(target == 1.0, p, 1.0 - p)
    alpha_t = np.where(target == 1.0, alpha, 1.0 - alpha)
    log_p_t = np.log(np.maximum(p_t, PROBABILITY_FLOOR))
    terms = -alpha_t * (1.0 - p_t) ** gamma * log_p_t
    return float(terms.sum())


def l1_box_loss(predicted: Box, target: Box) -> float:
    """L1 distance over the four normalized center-form coordinates."""
    return float(np.abs(predicted.as_array() - target.as_array()).sum())


def giou_loss(predicted: Box, target: Box) -> float:
    return 1.0 - giou(predicted, target)


def total_loss(
    predictions: Sequence[QueryPrediction],
    truths: Sequence[GroundTruthObject],
    matching: Assignment,
    batch: Optional[MatchedEmbeddingBatch],
    weights: LossWeights | None = None,
) -> LossBreakdown:
    """Weighted classification, box and contrastive terms.

    Classification covers every prediction (unmatched ones target the
    background); box terms cover matched pairs. Both are normalized by the
    number of ground-truth objects (at least 1).
    """
    weights = weights or LossWeights()
    matched_truth: dict[int, int] = {}
    for row, col in matching.pairs:
        if not 0 <= row < len(predictions) or not 0 <= col < len(truths):
            raise ValueError(f"matching pair ({row}, {col}) outside {len(predictions)}x{len(truths)}")
        if row in matched_truth:
            raise ValueError(f"prediction {row} matched twice")
        matched_truth[row] = col
    if sorted(matched_truth.values()) != list(range(len(truths))):
        raise ValueError("matching must cover every ground-truth object exactly once")

    normalizer = max(len(truths), 1)
    classification = 0.0
    for row, pred in enumerate(predictions):
        col = matched_truth.get(row)
        target = truths[col].category if col is not None else None
        classification += focal_loss(pred.class_scores, target, weights.focal_alpha, weights.focal_gamma)
    l1 = sum(l1_box_loss(predictions[r].box, truths[c].box) for r, c in matched_truth.items())
    g = sum(giou_loss(predictions[r].box, truths[c].box) for r, c in matched_truth.items())
    contrastive = batch_contrastive_loss(batch) if batch is not None else 0.0

    return LossBreakdown(
        classification=weights.lambda_class * classification / normalizer,
        l1=weights.lambda_l1 * l1 / normalizer,
        giou=weights.lambda_giou * g / normalizer,
        contrastive=weights.lambda_contr * contrastive,
    )


@dataclass(frozen=True)
class DecoderLayerOutput:
    """Predictions of one decoder layer for one batch."""

    predictions: Sequence[QueryPrediction]
    batch: Optional[MatchedEmbeddingBatch] = None


def decoder_stack_loss(
    layers: Sequence[DecoderLayerOutput],
    truths: Sequence[GroundTruthObject],
    weights: LossWeights | None = None,
    match_weights: MatchWeights | None = None,
) -> tuple[LossBreakdown, list[LossBreakdown]]:
    """Sum of total_loss over decoder layers, each matched independently."""
    per_layer: list[LossBreakdown] = []
    for depth, layer in enumerate(layers):
        matching = detr_matching(layer.predictions, truths, match_weights)
        per_layer.append(total_loss(layer.predictions, truths, matching, layer.batch, weights))
        logger.debug(f"Decoder layer {depth}: loss {per_layer[-1].total:.6f}")
    summed = LossBreakdown()
    for breakdown in per_layer:
        summed = summed + breakdown
    return summed, per_layer
