"""Rectangular bipartite assignment and the set-prediction matcher.

solve_assignment wraps scipy's Kuhn-Munkres solver
(``scipy.optimize.linear_sum_assignment``) with two additions: a
maximize mode and forbidden cells. Forbidden cells are marked with the
FORBIDDEN sentinel (NaN) and are priced at a finite penalty large enough
that the solver first maximizes the number of permitted pairs and then
optimizes their total.

detr_matching builds the classification + L1 + GIoU cost between query
predictions and ground-truth objects and solves it.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import linear_sum_assignment

from ..models.box import corners_array
from ..models.scene import GroundTruthObject
from ..models.training import MatchWeights, QueryPrediction
from .geometry import giou_matrix

logger = logging.getLogger(__name__)

FORBIDDEN = float("nan")
"""Sentinel value marking a pair that may not be assigned."""


class AssignmentMode(str, Enum):
    """Objective direction."""

    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


@dataclass(frozen=True)
class CostMatrix:
    """A K x J score matrix with an objective direction.

    Entries equal to FORBIDDEN (NaN) mark forbidden pairs; every other
    entry must be finite.
    """

    values: np.ndarray
    mode: AssignmentMode = AssignmentMode.MINIMIZE

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            if values.size == 0:
                values = values.reshape(0, 0)
            else:
                raise ValueError(f"cost matrix must be 2-D, got shape {values.shape}")
        if np.any(np.isinf(values)):
            raise ValueError("cost matrix entries must be finite; use FORBIDDEN for excluded pairs")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mode", AssignmentMode(self.mode))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    @property
    def forbidden(self) -> np.ndarray:
        """Boolean mask of forbidden cells."""
        return np.isnan(self.values)


class Assignment(BaseModel):
    """Solution of a bipartite assignment."""

    pairs: list[tuple[int, int]] = Field(default_factory=list, description="(row, col) pairs")
    total: float = Field(0.0, description="Sum of the selected entries")
    unassigned_rows: list[int] = Field(default_factory=list)
    unassigned_cols: list[int] = Field(default_factory=list)

    def row_to_col(self) -> dict[int, int]:
        return dict(self.pairs)

    def col_to_row(self) -> dict[int, int]:
        return {c: r for r, c in self.pairs}


def solve_assignment(matrix: CostMatrix) -> Assignment:
    """Optimal one-to-one assignment over permitted pairs.

    Returns min(K, J) pairs when every pair is permitted. With forbidden
    cells, rows (or columns) that cannot be served are reported
    unassigned. Ties between optimal solutions are broken by the solver.

    Args:
        matrix: K x J values with FORBIDDEN cells, minimized or maximized per its mode.

    Returns:
        Row-sorted pairs, their summed value and the unserved rows and columns.
    """
    values = matrix.values
    rows, cols = values.shape
    if rows == 0 or cols == 0:
        return Assignment(unassigned_rows=list(range(rows)), unassigned_cols=list(range(cols)))

    forbidden = matrix.forbidden
    work = -values if matrix.mode == AssignmentMode.MAXIMIZE else values.copy()
    if forbidden.all():
        return Assignment(unassigned_rows=list(range(rows)), unassigned_cols=list(range(cols)))
    if forbidden.any():
        permitted = work[~forbidden]
        floor = float(permitted.min())
        spread = float(permitted.max()) - floor
        # Any permitted assignment costs at most min(K, J) * spread above the floor.
        penalty = (min(rows, cols) + 1) * (spread + 1.0)
        work = np.where(forbidden, floor + penalty, work)

    row_idx, col_idx = linear_sum_assignment(work)
    pairs = [
        (int(r), int(c)) for r, c in zip(row_idx, col_idx) if not forbidden[r, c]
    ]
    matched_rows = {r for r, _ in pairs}
    matched_cols = {c for _, c in pairs}
    total = float(sum(values[r, c] for r, c in pairs))
    return Assignment(
        pairs=sorted(pairs),
        total=total,
        unassigned_rows=[r for r in range(rows) if r not in matched_rows],
        unassigned_cols=[c for c in range(cols) if c not in matched_cols],
    )


def matching_cost_matrix(
    predictions: Sequence[QueryPrediction],
    truths: Sequence[GroundTruthObject],
    weights: MatchWeights,
) -> np.ndarray:
    """Matching cost with predictions as rows and truths as columns.

    cost(i, j) = lambda_class * (1 - p_i(c_j)) + lambda_box * |b_i - b_j|_1
                 + lambda_giou * (1 - giou(b_i, b_j))

    The class term is the negated probability shifted by one, so an exact
    confident match costs 0; the shift is constant per truth column and
    leaves the optimal matching unchanged.
    """
    if not predictions or not truths:
        return np.zeros((len(predictions), len(truths)), dtype=np.float64)
    num_classes = predictions[0].class_scores.size
    for p in predictions:
        if p.class_scores.size != num_classes:
            raise ValueError(
                f"score vectors differ in length: {p.class_scores.size} vs {num_classes}"
            )
    for t in truths:
        if not 0 <= t.category < num_classes:
            raise ValueError(f"truth category {t.category} outside the {num_classes} scored categories")

    scores = np.stack([p.class_scores for p in predictions])
    categories = np.array([t.category for t in truths])
    class_cost = 1.0 - scores[:, categories]

    pred_boxes = np.stack([p.box.as_array() for p in predictions])
    true_boxes = np.stack([t.box.as_array() for t in truths])
    box_cost = np.abs(pred_boxes[:, None, :] - true_boxes[None, :, :]).sum(axis=2)

    giou_cost = 1.0 - giou_matrix(
        corners_array([p.box for p in predictions]), corners_array([t.box for t in truths])
    )
    return (
        weights.lambda_class * class_cost
        + weights.lambda_box * box_cost
        + weights.lambda_giou * giou_cost
    )


def detr_matching(
    predictions: Sequence[QueryPrediction],
    truths: Sequence[GroundTruthObject],
    weights: MatchWeights | None = None,
) -> Assignment:
    """Min-cost matching of predictions (rows) to ground truths (cols).

    Every truth is matched; surplus predictions stay unassigned.

    Args:
        predictions: Decoder queries with class probabilities and boxes.
        truths: Ground-truth objects of the same image.
        weights: Class, L1 and GIoU coefficients of the pair cost.

    Returns:
        The assignment; ``pairs`` maps prediction rows to truth columns.

    Raises:
        ValueError: If there are more truths than predictions.
    """
    weights = weights or MatchWeights()
    if not truths:
        return Assignment(unassigned_rows=list(range(len(predictions))))
    if len(truths) > len(predictions):
        raise ValueError(
            f"{len(truths)} ground-truth objects exceed {len(predictions)} predictions"
        )
    cost = matching_cost_matrix(predictions, truths, weights)
    result = solve_assignment(CostMatrix(cost, AssignmentMode.MINIMIZE))
    logger.debug(f"Matched {len(result.pairs)} truths, total cost {result.total:.4f}")
    return result
