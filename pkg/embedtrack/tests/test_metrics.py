"""Tests for CLEAR-MOT, IDF1 and HOTA."""

import logging
import math
from collections import defaultdict

import numpy as np
import pytest

from embedtrack.core.geometry import iou
from embedtrack.core.metrics import (
    HOTA_ALPHAS, clear_mot, evaluate, hota, idf1, per_class_mean, render_report_table,
)
from embedtrack.models import (
    Box, CategoryMetrics, ClearMotResult, GroundTruthObject, HotaResult, IdentityResult,
    LabeledScene, PredictedObject,
)

from .conftest import perfect_predictions, random_scene


def _gt(track_id, x, category=0):
    return GroundTruthObject(track_id=track_id, category=category, box=Box(cx=x, cy=0.5, w=0.1, h=0.2))


def _pred(instance_id, x, category=0):
    return PredictedObject(instance_id=instance_id, category=category, box=Box(cx=x, cy=0.5, w=0.1, h=0.2))


def _matchings(rows, cols, allowed, taken=()):
    """Every partial one-to-one matching of rows to cols over allowed pairs."""
    if not rows:
        yield []
        return
    head, rest = rows[0], rows[1:]
    yield from _matchings(rest, cols, allowed, taken)
    for c in cols:
        if c not in taken and allowed(head, c):
            for tail in _matchings(rest, cols, allowed, taken + (c,)):
                yield [(head, c)] + tail


def _frame_ious(scene, t):
    gts = {o.track_id: o.box for o in scene.gt_frame(t)}
    preds = {o.instance_id: o.box for o in scene.pred_frame(t)}
    return gts, preds, {(g, p): iou(gb, pb) for g, gb in gts.items() for p, pb in preds.items()}


def oracle_clear(scene: LabeledScene, thr: float = 0.5) -> dict:
    previous, last = {}, {}
    tp = idsw = 0
    num_gt = num_pred = 0
    tracked = defaultdict(list)
    for t in range(1, scene.num_frames + 1):
        gts, preds, ious = _frame_ious(scene, t)
        num_gt += len(gts)
        num_pred += len(preds)
        matches = {g: p for g, p in previous.items() if (g, p) in ious and ious[g, p] >= thr}
        free_g = [g for g in gts if g not in matches]
        free_p = [p for p in preds if p not in matches.values()]
        best, best_key = [], (0, 0.0)
        for candidate in _matchings(free_g, free_p, lambda g, p: ious[g, p] >= thr):
            key = (len(candidate), -sum(1 - ious[g, p] for g, p in candidate))
            if key > best_key:
                best, best_key = candidate, key
        matches.update(dict(best))
        for g, p in matches.items():
            if g in last and last[g] != p:
                idsw += 1
            last[g] = p
        tp += len(matches)
        for g in gts:
            tracked[g].append(g in matches)
        previous = matches
    frag = 0
    for flags in tracked.values():
        for i in range(1, len(flags)):
            if flags[i] and not flags[i - 1] and any(flags[:i]):
                frag += 1
    return {"tp": tp, "fp": num_pred - tp, "fn": num_gt - tp, "idsw": idsw, "frag": frag,
            "mota": 1 - (num_pred - tp + num_gt - tp + idsw) / num_gt}


def oracle_idf1(scene: LabeledScene, thr: float = 0.5) -> float:
    overlap = defaultdict(int)
    num_gt = num_pred = 0
    for t in range(1, scene.num_frames + 1):
        gts, preds, ious = _frame_ious(scene, t)
        num_gt += len(gts)
        num_pred += len(preds)
        for pair, value in ious.items():
            overlap[pair] += value >= thr
    gt_ids = sorted({g for g, _ in overlap} | {o.track_id for objs in scene.ground_truth.values() for o in objs})
    pred_ids = sorted({p for _, p in overlap})
    idtp = max(
        sum(overlap[g, p] for g, p in m)
        for m in _matchings(gt_ids, pred_ids, lambda g, p: overlap[g, p] > 0)
    )
    return 2 * idtp / (num_gt + num_pred) if num_gt + num_pred else 0.0


def oracle_hota(scene: LabeledScene) -> float:
    frames = [_frame_ious(scene, t) for t in range(1, scene.num_frames + 1)]
    gt_count, pred_count, potential = defaultdict(int), defaultdict(int), defaultdict(float)
    for gts, preds, ious in frames:
        for g in gts:
            gt_count[g] += 1
        for p in preds:
            pred_count[p] += 1
        for (g, p), value in ious.items():
            row = sum(ious[g, q] for q in preds)
            col = sum(ious[h, p] for h in gts)
            denom = row + col - value
            if denom > 0:
                potential[g, p] += value / denom
    alignment = {
        (g, p): potential[g, p] / (gt_count[g] + pred_count[p] - potential[g, p])
        for g in gt_count for p in pred_count
    }
    matched = []
    for gts, preds, ious in frames:
        best, best_score = [], -1.0
        for candidate in _matchings(list(gts), list(preds), lambda g, p: alignment[g, p] * ious[g, p] > 0):
            score = sum(alignment[g, p] * ious[g, p] for g, p in candidate)
            if score > best_score:
                best, best_score = candidate, score
        matched.append([(g, p, ious[g, p]) for g, p in best])
    total_gt, total_pred = sum(gt_count.values()), sum(pred_count.values())
    values = []
    for alpha in HOTA_ALPHAS:
        kept = [(g, p) for frame in matched for g, p, v in frame if v >= alpha - 1e-15]
        tp = len(kept)
        if tp == 0:
            values.append(0.0)
            continue
        counts = defaultdict(int)
        for pair in kept:
            counts[pair] += 1
        assa = sum(counts[g, p] / (gt_count[g] + pred_count[p] - counts[g, p]) for g, p in kept) / tp
        deta = tp / (total_gt + total_pred - tp)
        values.append(math.sqrt(deta * assa))
    return float(np.mean(values))


def _single_category(results: dict):
    assert list(results) == [0]
    return results[0]


class TestClearMot:
    """Tests for clear_mot."""

    def test_perfect(self):
        """Test that predictions equal to the truth score MOTA 1."""
        gt = {f: [_gt(1, 0.2), _gt(2, 0.6)] for f in range(1, 6)}
        scene = LabeledScene.from_frames(gt, perfect_predictions(gt))
        result = _single_category(clear_mot(scene))
        assert result.mota == 1.0
        assert (result.fp, result.fn, result.idsw) == (0, 0, 0)
        assert result.motp == pytest.approx(1.0)
        assert (result.mt, result.pt, result.ml) == (2, 0, 0)

    def test_hand_counted_scene(self):
        """10 boxes, 1 false positive, 2 misses, 1 id change."""
        gt = {f: [_gt(1, 0.2), _gt(2, 0.6)] for f in range(1, 6)}
        preds = {
            f: [_pred(1 if f <= 2 else 3, 0.2)] + ([_pred(2, 0.6)] if f <= 3 else [])
            for f in range(1, 6)
        }
        preds[1].append(_pred(9, 0.9))
        result = _single_category(clear_mot(LabeledScene.from_frames(gt, preds)))
        assert (result.num_gt, result.tp, result.fp, result.fn, result.idsw) == (10, 8, 1, 2, 1)
        assert result.mota == pytest.approx(0.6)
        assert result.recall == pytest.approx(0.8)
        assert result.precision == pytest.approx(8 / 9)

    def test_fragmentation_and_coverage(self):
        """Test a track interrupted once but mostly tracked."""
        gt = {f: [_gt(1, 0.2)] for f in range(1, 11)}
        preds = {f: [_pred(1, 0.2)] for f in (1, 2, 4, 5, 6, 7, 8, 9)}
        result = _single_category(clear_mot(LabeledScene.from_frames(gt, preds)))
        assert result.frag == 1
        assert result.mt == 1
        assert result.idsw == 0

    def test_mostly_lost(self):
        """Test that a track matched in one frame of ten is mostly lost."""
        gt = {f: [_gt(1, 0.2)] for f in range(1, 11)}
        preds = {1: [_pred(1, 0.2)]}
        result = _single_category(clear_mot(LabeledScene.from_frames(gt, preds)))
        assert (result.mt, result.pt, result.ml) == (0, 0, 1)

    def test_no_predictions(self):
        """Test that no predictions give MOTA 0 without false positives."""
        gt = {f: [_gt(1, 0.2)] for f in range(1, 4)}
        result = _single_category(clear_mot(LabeledScene.from_frames(gt, {})))
        assert result.mota == 0.0
        assert (result.fp, result.idsw) == (0, 0)
        assert result.precision == 0.0

    def test_empty_ground_truth(self):
        """Test that MOTA is undefined without ground truth."""
        with pytest.raises(ValueError):
            clear_mot(LabeledScene.from_frames({}, {1: [_pred(1, 0.2)]}))

    def test_threshold_range(self):
        """Test that the IoU threshold must lie in (0, 1)."""
        gt = {1: [_gt(1, 0.2)]}
        with pytest.raises(ValueError):
            clear_mot(LabeledScene.from_frames(gt, {}), iou_threshold=1.0)

    def test_matches_oracle(self):
        """Test CLEAR-MOT against an independent frame-by-frame count."""
        for seed in range(100):
            scene = random_scene(seed)
            if not scene.gt_categories:
                continue
            result = _single_category(clear_mot(scene))
            expected = oracle_clear(scene)
            assert (result.tp, result.fp, result.fn, result.idsw, result.frag) == (
                expected["tp"], expected["fp"], expected["fn"], expected["idsw"], expected["frag"]
            )
            assert result.mota == pytest.approx(expected["mota"], abs=1e-9)


class TestIdf1:
    """Tests for idf1."""

    def test_perfect(self):
        """Test that perfect tracking has IDF1 1."""
        gt = {f: [_gt(1, 0.2), _gt(2, 0.6)] for f in range(1, 6)}
        result = _single_category(idf1(LabeledScene.from_frames(gt, perfect_predictions(gt))))
        assert result.idf1 == 1.0

    def test_split_track(self):
        """One 10-frame track predicted as two 5-frame ids."""
        gt = {f: [_gt(1, 0.2)] for f in range(1, 11)}
        preds = {f: [_pred(1 if f <= 5 else 2, 0.2)] for f in range(1, 11)}
        result = _single_category(idf1(LabeledScene.from_frames(gt, preds)))
        assert (result.idtp, result.idfp, result.idfn) == (5, 5, 5)
        assert result.idf1 == pytest.approx(0.5)

    def test_no_predictions(self):
        """Test that no predictions give IDF1 0."""
        gt = {f: [_gt(1, 0.2)] for f in range(1, 4)}
        assert _single_category(idf1(LabeledScene.from_frames(gt, {}))).idf1 == 0.0

    def test_matches_oracle(self):
        """Test IDF1 against an exhaustive identity matching."""
        for seed in range(100):
            scene = random_scene(seed)
            if not scene.gt_categories:
                continue
            assert _single_category(idf1(scene)).idf1 == pytest.approx(oracle_idf1(scene), abs=1e-9)


class TestHota:
    """Tests for hota."""

    def test_perfect(self):
        """Test that perfect tracking scores 1 on every HOTA component."""
        gt = {f: [_gt(1, 0.2), _gt(2, 0.6)] for f in range(1, 6)}
        result = _single_category(hota(LabeledScene.from_frames(gt, perfect_predictions(gt))))
        assert result.hota == pytest.approx(1.0)
        assert result.deta == pytest.approx(1.0)
        assert result.assa == pytest.approx(1.0)
        assert result.loca == pytest.approx(1.0)

    def test_renumbered_every_frame(self):
        """Test that perfect detection with fresh ids each frame halves HOTA."""
        gt = {f: [_gt(1, 0.2)] for f in range(1, 5)}
        preds = {f: [_pred(f, 0.2)] for f in range(1, 5)}
        result = _single_category(hota(LabeledScene.from_frames(gt, preds)))
        assert result.deta == pytest.approx(1.0)
        assert result.assa == pytest.approx(0.25)
        assert result.hota == pytest.approx(0.5)
        assert result.hota_curve == pytest.approx([0.5] * len(HOTA_ALPHAS))

    def test_alpha_grid(self):
        """Test the 19 thresholds 0.05 to 0.95."""
        assert len(HOTA_ALPHAS) == 19
        assert HOTA_ALPHAS[0] == pytest.approx(0.05)
        assert HOTA_ALPHAS[-1] == pytest.approx(0.95)

    def test_no_predictions(self):
        """Test that no predictions give HOTA 0."""
        gt = {f: [_gt(1, 0.2)] for f in range(1, 4)}
        assert _single_category(hota(LabeledScene.from_frames(gt, {}))).hota == 0.0

    def test_matches_oracle(self):
        """Test HOTA against an independent evaluation."""
        for seed in range(100):
            scene = random_scene(seed)
            if not scene.gt_categories:
                continue
            assert _single_category(hota(scene)).hota == pytest.approx(oracle_hota(scene), abs=1e-9)


class TestProperties:
    """Invariances shared by all metrics."""

    def test_renaming_predictions(self):
        """Test that relabelling prediction ids changes no metric."""
        for seed in range(20):
            scene = random_scene(seed)
            if not scene.gt_categories:
                continue
            renamed = scene.with_predictions({
                f: [o.model_copy(update={"instance_id": 1000 - o.instance_id}) for o in objs]
                for f, objs in scene.predictions.items()
            })
            before, after = evaluate(scene).overall, evaluate(renamed).overall
            assert before.clear == after.clear
            assert before.identity == after.identity
            assert before.hota.hota == pytest.approx(after.hota.hota, abs=1e-12)

    def test_idsw_free_scenes_fragment_on_gaps_only(self):
        """Test that a lone track with two gaps fragments twice."""
        gt = {f: [_gt(1, 0.2)] for f in range(1, 9)}
        preds = {f: [_pred(1, 0.2)] for f in (1, 2, 5, 6, 8)}
        result = _single_category(clear_mot(LabeledScene.from_frames(gt, preds)))
        assert result.idsw == 0
        assert result.frag == 2


class TestReport:
    """Tests for per-category evaluation and the report."""

    def _two_category_scene(self):
        gt = {f: [_gt(1, 0.2, category=0), _gt(2, 0.6, category=1)] for f in range(1, 6)}
        preds = {f: [_pred(1, 0.2, category=0)] for f in range(1, 6)}
        return LabeledScene.from_frames(gt, preds)

    def test_per_category(self):
        """Test per-category rows and their mean."""
        report = evaluate(self._two_category_scene())
        by_category = {row.category: row for row in report.per_category}
        assert by_category[0].clear.mota == 1.0
        assert by_category[1].clear.mota == 0.0
        assert report.means.mmota == pytest.approx(0.5)
        assert report.means.categories == [0, 1]
        assert report.overall.clear.mota == pytest.approx(0.5)

    def test_categories_do_not_cross_match(self):
        """Test that a prediction of another category never matches."""
        gt = {1: [_gt(1, 0.2, category=0)]}
        preds = {1: [_pred(1, 0.2, category=1), _pred(2, 0.2, category=0)]}
        report = evaluate(LabeledScene.from_frames(gt, preds))
        assert [row.category for row in report.per_category] == [0]
        assert report.per_category[0].clear.fp == 0

    def test_prediction_only_category_warns(self, caplog):
        """Test that a category without ground truth is logged and skipped."""
        gt = {1: [_gt(1, 0.2)]}
        preds = {1: [_pred(1, 0.2), _pred(2, 0.8, category=4)]}
        with caplog.at_level(logging.WARNING):
            evaluate(LabeledScene.from_frames(gt, preds))
        assert "without ground truth" in caplog.text

    def _row(self, mota, idf1_value=0.5, hota_value=0.5, category=0):
        return CategoryMetrics(
            category=category,
            clear=ClearMotResult(mota=mota),
            identity=IdentityResult(idf1=idf1_value),
            hota=HotaResult(hota=hota_value),
        )

    def test_mean_of_two(self):
        """Test the unweighted mean of two categories."""
        means = per_class_mean([self._row(0.8, category=0), self._row(0.4, category=1)])
        assert means.mmota == pytest.approx(0.6)

    def test_mean_of_one(self):
        """Test that one category is its own mean."""
        assert per_class_mean([self._row(0.3)]).mmota == pytest.approx(0.3)

    def test_mean_of_eight(self, rng):
        """Test the mean over eight categories."""
        values = rng.uniform(0, 1, size=(8, 3))
        rows = [self._row(*v, category=i) for i, v in enumerate(values)]
        means = per_class_mean(rows)
        assert means.mmota == pytest.approx(values[:, 0].mean())
        assert means.midf1 == pytest.approx(values[:, 1].mean())
        assert means.mhota == pytest.approx(values[:, 2].mean())

    def test_mean_needs_categories(self):
        """Test that a mean of nothing is refused."""
        with pytest.raises(ValueError):
            per_class_mean([])

    def test_table(self):
        """Test the plain-text table holds the headline metrics."""
        text = render_report_table(evaluate(self._two_category_scene()))
        assert "HOTA" in text and "MOTA" in text and "IDF1" in text
        assert "overall" in text
        assert "\x1b[" not in text
