"""Metrics report models - CLEAR-MOT, identity and HOTA results."""

from typing import Optional

from pydantic import BaseModel, Field


class ClearMotResult(BaseModel):
    """CLEAR-MOT counts and derived rates for one category (or the aggregate)."""

    num_gt: int = Field(0, ge=0, description="Ground-truth boxes")
    num_predictions: int = Field(0, ge=0, description="Predicted boxes")
    tp: int = Field(0, ge=0, description="Matched boxes")
    fp: int = Field(0, ge=0)
    fn: int = Field(0, ge=0)
    idsw: int = Field(0, ge=0, description="Identity switches")
    frag: int = Field(0, ge=0, description="Track fragmentations")
    mt: int = Field(0, ge=0, description="Mostly tracked trajectories (>= 80%)")
    pt: int = Field(0, ge=0, description="Partially tracked trajectories")
    ml: int = Field(0, ge=0, description="Mostly lost trajectories (< 20%)")
    mota: float = Field(0.0, le=1.0)
    motp: float = Field(0.0, ge=0.0, le=1.0, description="Mean IoU over matches")
    recall: float = Field(0.0, ge=0.0, le=1.0)
    precision: float = Field(0.0, ge=0.0, le=1.0)


class IdentityResult(BaseModel):
    """IDF1 family for one category."""

    idtp: int = Field(0, ge=0)
    idfp: int = Field(0, ge=0)
    idfn: int = Field(0, ge=0)
    idf1: float = Field(0.0, ge=0.0, le=1.0)
    idp: float = Field(0.0, ge=0.0, le=1.0)
    idr: float = Field(0.0, ge=0.0, le=1.0)


class HotaResult(BaseModel):
    """HOTA family for one category, averaged over the localization grid."""

    hota: float = Field(0.0, ge=0.0, le=1.0)
    deta: float = Field(0.0, ge=0.0, le=1.0)
    assa: float = Field(0.0, ge=0.0, le=1.0)
    loca: float = Field(0.0, ge=0.0, le=1.0)
    alphas: list[float] = Field(default_factory=list)
    hota_curve: list[float] = Field(default_factory=list)
    deta_curve: list[float] = Field(default_factory=list)
    assa_curve: list[float] = Field(default_factory=list)


class CategoryMetrics(BaseModel):
    """All metrics for one category."""

    category: Optional[int] = Field(None, description="Category id; None for the aggregate row")
    clear: ClearMotResult
    identity: IdentityResult
    hota: HotaResult


class MeanMetrics(BaseModel):
    """Unweighted means over categories present in the ground truth."""

    mmota: float
    midf1: float
    mhota: float
    categories: list[int] = Field(default_factory=list)


class MetricsReport(BaseModel):
    """Evaluation report for one sequence."""

    iou_threshold: float
    per_category: list[CategoryMetrics] = Field(default_factory=list)
    overall: CategoryMetrics
    means: MeanMetrics
