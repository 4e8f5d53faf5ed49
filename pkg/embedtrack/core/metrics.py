"""Tracking metrics: CLEAR-MOT, IDF1 and HOTA, per category and overall.

CLEAR-MOT keeps last frame's correspondences while their IoU stays at or
above the threshold, then matches the remainder by minimum 1 - IoU over
pairs that clear the threshold. IDF1 pairs whole trajectories with one
global assignment. HOTA aligns trajectories globally first, then matches
each frame once and thresholds the matches at every alpha of the
0.05..0.95 grid.
"""

import io
import logging
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from rich.console import Console
from rich.table import Table

from ..models.box import corners_array
from ..models.report import (
    CategoryMetrics, ClearMotResult, HotaResult, IdentityResult, MeanMetrics, MetricsReport,
)
from ..models.scene import LabeledScene
from .assignment import FORBIDDEN, AssignmentMode, CostMatrix, solve_assignment
from .geometry import iou_matrix

logger = logging.getLogger(__name__)

DEFAULT_IOU_THRESHOLD = 0.5
HOTA_ALPHAS = tuple(float(a) for a in np.round(np.arange(0.05, 0.99, 0.05), 2))
MOSTLY_TRACKED = 0.8
MOSTLY_LOST = 0.2
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class _Frame:
    gt_ids: list[int]
    pred_ids: list[int]
    iou: np.ndarray  # gt x pred


def _frames(scene: LabeledScene) -> list[_Frame]:
    frames = []
    for t in range(1, scene.num_frames + 1):
        gts = scene.gt_frame(t)
        preds = scene.pred_frame(t)
        frames.append(
            _Frame(
                gt_ids=[o.track_id for o in gts],
                pred_ids=[o.instance_id for o in preds],
                iou=iou_matrix(corners_array([o.box for o in gts]), corners_array([o.box for o in preds])),
            )
        )
    return frames


def _ratio(num: float, den: float) -> float:
    return float(num) / float(den) if den > 0 else 0.0


def _clear_frames(frames: list[_Frame], iou_threshold: float) -> ClearMotResult:
    num_gt = sum(len(f.gt_ids) for f in frames)
    if num_gt == 0:
        raise ValueError("CLEAR-MOT is undefined without ground truth")
    num_pred = sum(len(f.pred_ids) for f in frames)

    last_match: dict[int, int] = {}  # gt id -> pred id of its latest match
    previous: dict[int, int] = {}  # correspondences of the previous frame
    tp = idsw = 0
    iou_sum = 0.0
    tracked: dict[int, list[bool]] = defaultdict(list)

    for frame in frames:
        gt_index = {g: i for i, g in enumerate(frame.gt_ids)}
        pred_index = {p: j for j, p in enumerate(frame.pred_ids)}
        matches: dict[int, int] = {}

        for g, p in previous.items():
            if g in gt_index and p in pred_index and frame.iou[gt_index[g], pred_index[p]] >= iou_threshold:
                matches[g] = p

        free_gt = [g for g in frame.gt_ids if g not in matches]
        used = set(matches.values())
        free_pred = [p for p in frame.pred_ids if p not in used]
        if free_gt and free_pred:
            sub = frame.iou[np.ix_([gt_index[g] for g in free_gt], [pred_index[p] for p in free_pred])]
            cost = np.where(sub >= iou_threshold, 1.0 - sub, FORBIDDEN)
            solution = solve_assignment(CostMatrix(cost, AssignmentMode.MINIMIZE))
            for r, c in solution.pairs:
                matches[free_gt[r]] = free_pred[c]

        for g, p in matches.items():
            if g in last_match and last_match[g] != p:
                idsw += 1
            last_match[g] = p
            iou_sum += float(frame.iou[gt_index[g], pred_index[p]])
        tp += len(matches)
        for g in frame.gt_ids:
            tracked[g].append(g in matches)
        previous = matches

    frag = 0
    mt = pt = ml = 0
    for flags in tracked.values():
        arr = np.array(flags, dtype=bool)
        # An interruption counts when a tracked span ends and tracking resumes later.
        ends = np.flatnonzero(arr[:-1] & ~arr[1:])
        if arr.any():
            last_tracked = np.flatnonzero(arr)[-1]
            frag += int(np.sum(ends < last_tracked))
        coverage = arr.mean()
        if coverage >= MOSTLY_TRACKED:
            mt += 1
        elif coverage < MOSTLY_LOST:
            ml += 1
        else:
            pt += 1

    fn = num_gt - tp
    fp = num_pred - tp
    return ClearMotResult(
        num_gt=num_gt,
        num_predictions=num_pred,
        tp=tp,
        fp=fp,
        fn=fn,
        idsw=idsw,
        frag=frag,
        mt=mt,
        pt=pt,
        ml=ml,
        mota=1.0 - (fp + fn + idsw) / num_gt,
        motp=_ratio(iou_sum, tp),
        recall=_ratio(tp, num_gt),
        precision=_ratio(tp, tp + fp),
    )


def _identity_frames(frames: list[_Frame], iou_threshold: float) -> IdentityResult:
    gt_ids = sorted({g for f in frames for g in f.gt_ids})
    pred_ids = sorted({p for f in frames for p in f.pred_ids})
    num_gt = sum(len(f.gt_ids) for f in frames)
    num_pred = sum(len(f.pred_ids) for f in frames)
    idtp = 0
    if gt_ids and pred_ids:
        g_col = {g: i for i, g in enumerate(gt_ids)}
        p_col = {p: j for j, p in enumerate(pred_ids)}
        overlap = np.zeros((len(gt_ids), len(pred_ids)))
        for f in frames:
            if not f.gt_ids or not f.pred_ids:
                continue
            hits = f.iou >= iou_threshold
            rows = [g_col[g] for g in f.gt_ids]
            cols = [p_col[p] for p in f.pred_ids]
            overlap[np.ix_(rows, cols)] += hits
        solution = solve_assignment(CostMatrix(overlap, AssignmentMode.MAXIMIZE))
        idtp = int(round(solution.total))
    idfp = num_pred - idtp
    idfn = num_gt - idtp
    return IdentityResult(
        idtp=idtp,
        idfp=idfp,
        idfn=idfn,
        idf1=_ratio(2 * idtp, 2 * idtp + idfp + idfn),
        idp=_ratio(idtp, idtp + idfp),
        idr=_ratio(idtp, idtp + idfn),
    )


def _hota_frames(frames: list[_Frame]) -> HotaResult:
    gt_ids = sorted({g for f in frames for g in f.gt_ids})
    pred_ids = sorted({p for f in frames for p in f.pred_ids})
    num_gt = sum(len(f.gt_ids) for f in frames)
    num_pred = sum(len(f.pred_ids) for f in frames)
    alphas = list(HOTA_ALPHAS)
    if num_gt == 0 or num_pred == 0:
        zeros = [0.0] * len(alphas)
        return HotaResult(alphas=alphas, hota_curve=zeros, deta_curve=zeros, assa_curve=list(zeros))

    g_col = {g: i for i, g in enumerate(gt_ids)}
    p_col = {p: j for j, p in enumerate(pred_ids)}
    gt_count = np.zeros(len(gt_ids))
    pred_count = np.zeros(len(pred_ids))
    potential = np.zeros((len(gt_ids), len(pred_ids)))

    # Pass 1: global alignment between trajectories.
    for f in frames:
        rows = np.array([g_col[g] for g in f.gt_ids], dtype=int)
        cols = np.array([p_col[p] for p in f.pred_ids], dtype=int)
        gt_count[rows] += 1
        pred_count[cols] += 1
        if rows.size and cols.size:
            sim = f.iou
            denom = sim.sum(axis=0)[None, :] + sim.sum(axis=1)[:, None] - sim
            sim_iou = np.zeros_like(sim)
            mask = denom > EPS
            sim_iou[mask] = sim[mask] / denom[mask]
            potential[np.ix_(rows, cols)] += sim_iou
    alignment = potential / (gt_count[:, None] + pred_count[None, :] - potential)

    # Pass 2: one matching per frame, thresholded per alpha.
    tp = np.zeros(len(alphas))
    loc_sum = np.zeros(len(alphas))
    matches_count = np.zeros((len(alphas), len(gt_ids), len(pred_ids)))
    for f in frames:
        if not f.gt_ids or not f.pred_ids:
            continue
        rows = np.array([g_col[g] for g in f.gt_ids], dtype=int)
        cols = np.array([p_col[p] for p in f.pred_ids], dtype=int)
        score = alignment[np.ix_(rows, cols)] * f.iou
        solution = solve_assignment(CostMatrix(score, AssignmentMode.MAXIMIZE))
        if not solution.pairs:
            continue
        r = np.array([p[0] for p in solution.pairs])
        c = np.array([p[1] for p in solution.pairs])
        matched_iou = f.iou[r, c]
        for a, alpha in enumerate(alphas):
            ok = matched_iou >= alpha - EPS
            tp[a] += ok.sum()
            loc_sum[a] += matched_iou[ok].sum()
            matches_count[a, rows[r[ok]], cols[c[ok]]] += 1

    hota_curve, deta_curve, assa_curve, loca_curve = [], [], [], []
    for a in range(len(alphas)):
        fn = num_gt - tp[a]
        fp = num_pred - tp[a]
        deta = _ratio(tp[a], tp[a] + fn + fp)
        counts = matches_count[a]
        ass_iou = counts / np.maximum(1.0, gt_count[:, None] + pred_count[None, :] - counts)
        assa = _ratio(float((counts * ass_iou).sum()), tp[a]) if tp[a] > 0 else 0.0
        hota_curve.append(float(np.sqrt(deta * assa)))
        deta_curve.append(deta)
        assa_curve.append(assa)
        loca_curve.append(_ratio(loc_sum[a], tp[a]))

    return HotaResult(
        hota=float(np.mean(hota_curve)),
        deta=float(np.mean(deta_curve)),
        assa=float(np.mean(assa_curve)),
        loca=float(np.mean(loca_curve)),
        alphas=alphas,
        hota_curve=hota_curve,
        deta_curve=deta_curve,
        assa_curve=assa_curve,
    )


def _per_category(scene: LabeledScene) -> dict[int, list[_Frame]]:
    categories = scene.gt_categories
    orphan = sorted(set(scene.pred_categories) - set(categories))
    if orphan:
        logger.warning(f"Skipping categories without ground truth: {orphan}")
    return {c: _frames(scene.restrict_to_category(c)) for c in categories}


def clear_mot(
    scene: LabeledScene, iou_threshold: float = DEFAULT_IOU_THRESHOLD
) -> dict[int, ClearMotResult]:
    """CLEAR-MOT numbers per ground-truth category."""
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must lie in (0, 1), got {iou_threshold}")
    if not scene.gt_categories:
        raise ValueError("CLEAR-MOT is undefined without ground truth")
    return {c: _clear_frames(f, iou_threshold) for c, f in _per_category(scene).items()}


def idf1(
    scene: LabeledScene, iou_threshold: float = DEFAULT_IOU_THRESHOLD
) -> dict[int, IdentityResult]:
    """IDF1, IDP and IDR per ground-truth category."""
    return {c: _identity_frames(f, iou_threshold) for c, f in _per_category(scene).items()}


def hota(scene: LabeledScene) -> dict[int, HotaResult]:
    """HOTA, DetA and AssA per ground-truth category."""
    return {c: _hota_frames(f) for c, f in _per_category(scene).items()}


def per_class_mean(reports: dict[int, CategoryMetrics] | list[CategoryMetrics]) -> MeanMetrics:
    """Unweighted means of MOTA, IDF1 and HOTA over categories."""
    rows = list(reports.values()) if isinstance(reports, dict) else list(reports)
    if not rows:
        raise ValueError("per-class means need at least one category")
    return MeanMetrics(
        mmota=float(np.mean([r.clear.mota for r in rows])),
        midf1=float(np.mean([r.identity.idf1 for r in rows])),
        mhota=float(np.mean([r.hota.hota for r in rows])),
        categories=[r.category for r in rows if r.category is not None],
    )


def evaluate(scene: LabeledScene, iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> MetricsReport:
    """Evaluate a labeled scene.

    Args:
        scene: Ground truth and predictions per frame.
        iou_threshold: Match threshold for CLEAR-MOT and IDF1, in (0, 1).

    Returns:
        Per-category rows, the class-agnostic overall row and the per-class means.
    """
    clear = clear_mot(scene, iou_threshold)
    ident = idf1(scene, iou_threshold)
    assoc = hota(scene)
    per_category = [
        CategoryMetrics(category=c, clear=clear[c], identity=ident[c], hota=assoc[c])
        for c in sorted(clear)
    ]
    frames = _frames(scene)
    overall = CategoryMetrics(
        category=None,
        clear=_clear_frames(frames, iou_threshold),
        identity=_identity_frames(frames, iou_threshold),
        hota=_hota_frames(frames),
    )
    report = MetricsReport(
        iou_threshold=iou_threshold,
        per_category=per_category,
        overall=overall,
        means=per_class_mean(per_category),
    )
    logger.info(
        f"Evaluated {scene.num_frames} frames: MOTA {overall.clear.mota:.4f}, "
        f"IDF1 {overall.identity.idf1:.4f}, HOTA {overall.hota.hota:.4f}"
    )
    return report


def render_report_table(report: MetricsReport) -> str:
    """Aligned plain-text table of a report."""
    table = Table(title=f"Tracking metrics (IoU {report.iou_threshold:g})", box=None)
    for column in ("Category", "HOTA", "DetA", "AssA", "MOTA", "MOTP", "IDF1", "IDP", "IDR",
                   "Rcll", "Prcn", "FP", "FN", "IDSW", "Frag", "MT", "PT", "ML"):
        table.add_column(column, justify="left" if column == "Category" else "right")

    def add(label: str, m: CategoryMetrics) -> None:
        c, i, h = m.clear, m.identity, m.hota
        table.add_row(
            label,
            *(f"{v:.4f}" for v in (h.hota, h.deta, h.assa, c.mota, c.motp, i.idf1, i.idp, i.idr,
                                   c.recall, c.precision)),
            *(str(v) for v in (c.fp, c.fn, c.idsw, c.frag, c.mt, c.pt, c.ml)),
        )

    for row in report.per_category:
        add(str(row.category), row)
    add("overall", report.overall)
    buffer = io.StringIO()
    console = Console(file=buffer, width=200, color_system=None, force_terminal=False)
    console.print(table)
    console.print(
        f"mHOTA {report.means.mhota:.4f}  mMOTA {report.means.mmota:.4f}  mIDF1 {report.means.midf1:.4f}"
    )
    return buffer.getvalue()
