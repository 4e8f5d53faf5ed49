"""Tests for the contrastive loss, its gradient and the combined training loss."""

import math

import numpy as np
import pytest

from embedtrack.core.assignment import Assignment, detr_matching
from embedtrack.core.contrastive import (
    DecoderLayerOutput, MatchedEmbedding, MatchedEmbeddingBatch, MatchedFrame, anchor_loss,
    batch_contrastive_loss, central_difference, collect_matched_embeddings, contrastive_gradient,
    decoder_stack_loss, finite_difference_gradient, focal_loss, giou_loss, gradient_relative_error,
    l1_box_loss, pair_loss, partition, random_matched_batch, total_loss,
)
from embedtrack.models import Box, GroundTruthObject, LossWeights, QueryPrediction


def _unit_at(cos: float) -> np.ndarray:
    """2-D unit vector with the given cosine to (1, 0)."""
    return np.array([cos, math.sqrt(max(0.0, 1.0 - cos * cos))])


def _batch(entries, temperature=0.1):
    return MatchedEmbeddingBatch.from_entries(
        [MatchedEmbedding(embedding=np.asarray(e), video_id=v, instance_id=k, frame_id=f) for e, v, k, f in entries],
        temperature,
    )


def _independent_batch_loss(batch: MatchedEmbeddingBatch) -> float:
    """Straight evaluation of the per-pair definition with plain loops."""
    z = batch.embeddings
    anchors = []
    for i in range(len(batch)):
        part = partition(batch, i)
        if not part.positives:
            continue
        losses = []
        for j in part.positives:
            sims = [np.dot(z[i], z[j]) / (np.linalg.norm(z[i]) * np.linalg.norm(z[j]))]
            sims += [np.dot(z[i], z[k]) / (np.linalg.norm(z[i]) * np.linalg.norm(z[k])) for k in part.negatives]
            logits = np.array(sims) / batch.temperature
            losses.append(-logits[0] + math.log(np.exp(logits).sum()) if part.negatives else 0.0)
        anchors.append(np.mean(losses))
    return float(np.mean(anchors)) if anchors else 0.0


class TestPartition:
    """Tests for positive/negative partitioning."""

    def test_singleton(self):
        """Test that a lone embedding has neither positives nor negatives."""
        part = partition(_batch([([1.0, 0.0], 0, 1, 1)]), 0)
        assert part.positives == ()
        assert part.negatives == ()

    def test_same_instance_other_frame_is_positive(self):
        """Test that one instance in two frames of a video pairs up."""
        batch = _batch([([1.0, 0.0], 0, 1, 1), ([0.0, 1.0], 0, 1, 2)])
        assert partition(batch, 0).positives == (1,)
        assert partition(batch, 1).positives == (0,)
        assert partition(batch, 0).negatives == ()

    def test_same_instance_other_video_is_negative(self):
        """Test that equal instance ids in different videos are negatives."""
        batch = _batch([([1.0, 0.0], 0, 1, 1), ([0.0, 1.0], 1, 1, 1)])
        assert partition(batch, 0).positives == ()
        assert partition(batch, 0).negatives == (1,)

    def test_partition_covers_batch(self):
        """Test that positives, negatives and the anchor split the batch."""
        batch = random_matched_batch(3, 12, 4)
        for i in range(len(batch)):
            part = partition(batch, i)
            assert set(part.positives).isdisjoint(part.negatives)
            assert sorted((i, *part.positives, *part.negatives)) == list(range(len(batch)))

    def test_duplicate_triples_rejected(self):
        """Test that a (video, instance, frame) triple may appear once."""
        with pytest.raises(ValueError):
            _batch([([1.0, 0.0], 0, 1, 1), ([0.0, 1.0], 0, 1, 1)])

    def test_bad_anchor(self):
        """Test that an anchor outside the batch is an IndexError."""
        with pytest.raises(IndexError):
            partition(_batch([([1.0, 0.0], 0, 1, 1)]), 3)


class TestPairLoss:
    """Tests for the single-pair loss."""

    def test_no_negatives(self):
        """Test that a pair without negatives has zero loss."""
        assert pair_loss(np.array([1.0, 0.0]), np.array([0.0, 1.0]), [], 0.1) == 0.0

    def test_equal_negative_gives_ln2(self):
        """Test that a negative as close as the positive costs ln 2."""
        anchor = np.array([1.0, 0.0])
        other = _unit_at(0.4)
        assert pair_loss(anchor, other, [other.copy()], 0.1) == pytest.approx(math.log(2), abs=1e-12)

    def test_worked_example(self):
        """tau 0.1 with similarities 0.9 and 0.1."""
        expected = -math.log(math.exp(9) / (math.exp(9) + math.exp(1)))
        value = pair_loss(np.array([1.0, 0.0]), _unit_at(0.9), [_unit_at(0.1)], 0.1)
        assert value == pytest.approx(expected, abs=1e-9)
        assert value == pytest.approx(3.3540e-4, rel=1e-3)

    def test_temperature_floor(self):
        """Test that a non-positive temperature is refused."""
        with pytest.raises(ValueError):
            pair_loss(np.ones(2), np.ones(2), [], 0.0)

    def test_small_temperature_finite(self):
        """Test that tiny temperatures stay finite."""
        value = pair_loss(np.array([1.0, 0.0]), np.array([-1.0, 0.0]), [np.array([1.0, 0.0])], 1e-3)
        assert math.isfinite(value)

    def test_invariant_to_other_positives(self, rng):
        """Extra positives do not enter the pair's denominator."""
        for seed in range(100):
            local = np.random.default_rng(seed)
            entries = [(local.standard_normal(6), 0, 1, 1), (local.standard_normal(6), 0, 1, 2)]
            entries += [(local.standard_normal(6), 0, 2 + n, 1) for n in range(3)]
            batch = _batch(entries)
            part = partition(batch, 0)
            z = batch.embeddings
            base = pair_loss(z[0], z[1], [z[k] for k in part.negatives], 0.1)
            extra = int(local.integers(1, 6))
            bigger = _batch(entries + [(local.standard_normal(6), 0, 1, 3 + n) for n in range(extra)])
            part = partition(bigger, 0)
            zb = bigger.embeddings
            assert pair_loss(zb[0], zb[1], [zb[k] for k in part.negatives], 0.1) == pytest.approx(base, abs=1e-12)


class TestAnchorAndBatchLoss:
    """Tests for the per-anchor and batch losses."""

    def test_single_positive_equals_pair_loss(self):
        """Test that one positive makes the anchor loss the pair loss."""
        batch = _batch([([1.0, 0.0], 0, 1, 1), (_unit_at(0.7), 0, 1, 2), (_unit_at(0.2), 0, 2, 1)])
        z = batch.embeddings
        assert anchor_loss(batch, 0) == pytest.approx(pair_loss(z[0], z[1], [z[2]], 0.1))

    def test_mean_over_positives(self, rng):
        """Test that the anchor loss averages its pair losses."""
        entries = [(rng.standard_normal(5), 0, 1, f) for f in range(4)]
        entries += [(rng.standard_normal(5), 0, 2 + k, 1) for k in range(4)]
        batch = _batch(entries)
        z = batch.embeddings
        negatives = [z[k] for k in range(4, 8)]
        expected = np.mean([pair_loss(z[0], z[j], negatives, 0.1) for j in (1, 2, 3)])
        assert anchor_loss(batch, 0) == pytest.approx(expected, abs=1e-12)

    def test_anchor_without_positives(self):
        """Test that an anchor with no positives has no loss."""
        with pytest.raises(ValueError):
            anchor_loss(_batch([([1.0, 0.0], 0, 1, 1)]), 0)

    def test_no_positive_pairs(self, rng):
        """Test that a batch without positives has zero loss and gradient."""
        batch = _batch([(rng.standard_normal(3), 0, k, 1) for k in range(5)])
        assert batch_contrastive_loss(batch) == 0.0
        assert not contrastive_gradient(batch).any()

    def test_lone_pair(self):
        """Test that two views with no negatives cost nothing."""
        batch = _batch([([1.0, 0.0], 0, 1, 1), ([0.3, 0.5], 0, 1, 2)])
        assert batch_contrastive_loss(batch) == 0.0

    def test_matches_independent_evaluation(self):
        """2 videos x 2 instances x 2 frames."""
        rng = np.random.default_rng(11)
        entries = [
            (rng.standard_normal(8), v, k, f) for v in range(2) for k in range(2) for f in range(2)
        ]
        batch = _batch(entries)
        assert batch_contrastive_loss(batch) == pytest.approx(_independent_batch_loss(batch), abs=1e-12)

    def test_random_batches_match_independent_evaluation(self):
        """Test the vectorized loss against a loop over anchors and pairs."""
        for seed in range(10):
            batch = random_matched_batch(seed, 15, 6, temperature=0.3)
            assert batch_contrastive_loss(batch) == pytest.approx(_independent_batch_loss(batch), abs=1e-10)

    def test_permutation_and_scaling(self, rng):
        """Test that reordering or rescaling embeddings leaves the loss unchanged."""
        batch = random_matched_batch(5, 10, 4)
        order = rng.permutation(10)
        shuffled = MatchedEmbeddingBatch(
            batch.embeddings[order], batch.video_ids[order], batch.instance_ids[order],
            batch.frame_ids[order], batch.temperature,
        )
        assert batch_contrastive_loss(shuffled) == pytest.approx(batch_contrastive_loss(batch), abs=1e-12)
        assert np.allclose(contrastive_gradient(shuffled), contrastive_gradient(batch)[order], atol=1e-12)
        scaled = batch.with_embeddings(batch.embeddings * rng.uniform(0.5, 3.0, size=(10, 1)))
        assert batch_contrastive_loss(scaled) == pytest.approx(batch_contrastive_loss(batch), abs=1e-9)

    def test_pulling_positives_together_lowers_loss(self):
        """Test that the loss falls as the positive moves toward the anchor."""
        negative = (np.array([0.0, 1.0]), 0, 2, 1)
        losses = []
        for cos in (0.0, 0.5, 0.9, 1.0):
            batch = _batch([([1.0, 0.0], 0, 1, 1), (_unit_at(cos) * np.array([1, -1]), 0, 1, 2), negative])
            losses.append(batch_contrastive_loss(batch))
        assert losses == sorted(losses, reverse=True)


class TestGradient:
    """Tests for the analytic gradient."""

    @pytest.mark.parametrize("dim", [4, 16, 64])
    def test_matches_finite_differences(self, dim):
        """Test the analytic gradient against central differences."""
        for seed in range(50 // 3 + 1):
            batch = random_matched_batch(seed, int(np.random.default_rng(seed).integers(2, 25)), dim)
            error = gradient_relative_error(contrastive_gradient(batch), finite_difference_gradient(batch))
            assert error < 1e-5

    def test_duplicated_batch(self):
        """Copies in another video get the same gradient as the originals."""
        batch = random_matched_batch(4, 10, 5)
        offset = int(batch.video_ids.max()) + 1
        doubled = MatchedEmbeddingBatch(
            np.vstack([batch.embeddings, batch.embeddings]),
            np.concatenate([batch.video_ids, batch.video_ids + offset]),
            np.concatenate([batch.instance_ids, batch.instance_ids]),
            np.concatenate([batch.frame_ids, batch.frame_ids]),
            batch.temperature,
        )
        grad = contrastive_gradient(doubled)
        assert np.allclose(grad[:10], grad[10:], atol=1e-9)

    def test_central_difference_on_quadratic(self):
        """Test the difference scheme on a function with a known gradient."""
        x = np.array([1.0, -2.0, 0.5])
        grad = central_difference(lambda v: float(v @ v + 3 * v[0]), x)
        assert np.allclose(grad, 2 * x + np.array([3.0, 0.0, 0.0]), atol=1e-8)

    def test_relative_error_shape_mismatch(self):
        """Test that gradients of different shapes cannot be compared."""
        with pytest.raises(ValueError):
            gradient_relative_error(np.zeros(2), np.zeros(3))


class TestDetectionLosses:
    """Tests for the classification and box terms."""

    def test_confident_prediction(self):
        """Test that a certain correct class costs nothing."""
        assert focal_loss(np.array([1.0, 0.0]), 0) == pytest.approx(0.0)

    def test_half_probability(self):
        """Test the focal loss at p = 0.5 against its closed form."""
        assert focal_loss(np.array([0.5]), 0, alpha=0.25, gamma=2.0) == pytest.approx(0.043322, abs=1e-6)

    def test_background_target(self):
        """The all-zeros target penalizes any confidence."""
        assert focal_loss(np.array([0.0, 0.0]), None) == pytest.approx(0.0)
        assert focal_loss(np.array([0.8, 0.0]), None) > 0.0

    def test_out_of_range_scores(self):
        """Test that probabilities above 1 are refused."""
        with pytest.raises(ValueError):
            focal_loss(np.array([1.2]), 0)

    def test_identical_boxes(self):
        """Test that matching boxes have zero L1 and GIoU loss."""
        box = Box(cx=0.4, cy=0.5, w=0.2, h=0.3)
        assert l1_box_loss(box, box) == 0.0
        assert giou_loss(box, box) == pytest.approx(0.0)


class TestTotalLoss:
    """Tests for the combined loss."""

    def _scene(self):
        box_a = Box(cx=0.3, cy=0.3, w=0.2, h=0.2)
        box_b = Box(cx=0.7, cy=0.7, w=0.2, h=0.2)
        truths = [GroundTruthObject(track_id=1, category=0, box=box_a), GroundTruthObject(track_id=2, category=1, box=box_b)]
        predictions = [
            QueryPrediction(class_scores=np.array([1.0, 0.0]), box=box_a, embedding=np.array([1.0, 0.0])),
            QueryPrediction(class_scores=np.array([0.0, 1.0]), box=box_b, embedding=np.array([0.0, 1.0])),
            QueryPrediction(class_scores=np.array([0.0, 0.0]), box=box_a, embedding=np.array([1.0, 1.0])),
        ]
        return predictions, truths

    def test_perfect_predictions(self):
        """Test that perfect queries leave only the weighted contrastive term."""
        predictions, truths = self._scene()
        matching = detr_matching(predictions, truths)
        assert matching.pairs == [(0, 0), (1, 1)]
        frames = [MatchedFrame(0, f, predictions, truths, matching) for f in (1, 2)]
        batch = collect_matched_embeddings(frames)
        breakdown = total_loss(predictions, truths, matching, batch, LossWeights(lambda_contr=2.0))
        assert breakdown.classification == pytest.approx(0.0)
        assert breakdown.l1 == pytest.approx(0.0)
        assert breakdown.giou == pytest.approx(0.0)
        assert breakdown.total == pytest.approx(2.0 * batch_contrastive_loss(batch))

    def test_sum_of_terms(self, rng):
        """Test each term against its own loss averaged over the truths."""
        predictions, truths = self._scene()
        noisy = [
            QueryPrediction(
                class_scores=rng.uniform(0, 1, size=2),
                box=Box(cx=p.box.cx + 0.01, cy=p.box.cy, w=p.box.w, h=p.box.h),
                embedding=p.embedding,
            )
            for p in predictions
        ]
        matching = detr_matching(noisy, truths)
        weights = LossWeights()
        breakdown = total_loss(noisy, truths, matching, None, weights)
        matched = matching.row_to_col()
        cls = sum(
            focal_loss(p.class_scores, truths[matched[r]].category if r in matched else None)
            for r, p in enumerate(noisy)
        )
        l1 = sum(l1_box_loss(noisy[r].box, truths[c].box) for r, c in matching.pairs)
        assert breakdown.classification == pytest.approx(weights.lambda_class * cls / 2)
        assert breakdown.l1 == pytest.approx(weights.lambda_l1 * l1 / 2)
        assert breakdown.contrastive == 0.0

    def test_inconsistent_matching(self):
        """Test that repeated columns or unknown rows are refused."""
        predictions, truths = self._scene()
        with pytest.raises(ValueError):
            total_loss(predictions, truths, Assignment(pairs=[(0, 0), (1, 0)]), None)
        with pytest.raises(ValueError):
            total_loss(predictions, truths, Assignment(pairs=[(5, 0), (1, 1)]), None)

    def test_collect_labels(self):
        """Test that matched embeddings are labelled with video, truth id and frame."""
        predictions, truths = self._scene()
        matching = detr_matching(predictions, truths)
        batch = collect_matched_embeddings([MatchedFrame(3, 7, predictions, truths, matching)])
        assert batch.instance_ids.tolist() == [1, 2]
        assert batch.video_ids.tolist() == [3, 3]
        assert batch.frame_ids.tolist() == [7, 7]

    def test_decoder_stack(self):
        """Test that the stack loss is the sum of the per-layer losses."""
        predictions, truths = self._scene()
        layers = [DecoderLayerOutput(predictions), DecoderLayerOutput(predictions[::-1])]
        summed, per_layer = decoder_stack_loss(layers, truths)
        assert len(per_layer) == 2
        assert summed.total == pytest.approx(sum(b.total for b in per_layer))
        assert per_layer[0].total == pytest.approx(per_layer[1].total)
