"""Training-side models - matcher/loss coefficients and query predictions."""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .box import Box, FloatVector


class MatchWeights(BaseModel):
    """Coefficients of the prediction-to-ground-truth matching cost."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    lambda_class: float = Field(2.0, ge=0.0, description="Classification cost coefficient")
    lambda_box: float = Field(5.0, ge=0.0, description="L1 box cost coefficient")
    lambda_giou: float = Field(2.0, ge=0.0, description="GIoU cost coefficient")

    @model_validator(mode="after")
    def _some_weight(self) -> "MatchWeights":
        if self.lambda_class == 0 and self.lambda_box == 0 and self.lambda_giou == 0:
            raise ValueError("at least one matching weight must be positive")
        return self


class LossWeights(BaseModel):
    """Coefficients of the combined training loss."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    lambda_class: float = Field(2.0, ge=0.0, description="Focal classification loss coefficient")
    lambda_l1: float = Field(5.0, ge=0.0, description="L1 box loss coefficient")
    lambda_giou: float = Field(2.0, ge=0.0, description="GIoU box loss coefficient")
    lambda_contr: float = Field(2.0, ge=0.0, description="Contrastive loss coefficient")
    focal_alpha: float = Field(0.25, ge=0.0, le=1.0, description="Focal loss alpha")
    focal_gamma: float = Field(2.0, ge=0.0, description="Focal loss gamma")


class QueryPrediction(BaseModel):
    """One decoder query output: category probabilities, box, optional embedding."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    class_scores: FloatVector = Field(..., description="Per-category probabilities")
    box: Box = Field(..., description="Predicted box")
    embedding: Optional[FloatVector] = Field(None, description="Tracking embedding")


class LossBreakdown(BaseModel):
    """Weighted loss terms and their sum."""

    classification: float = Field(0.0, description="lambda_class * focal term")
    l1: float = Field(0.0, description="lambda_l1 * L1 box term")
    giou: float = Field(0.0, description="lambda_giou * GIoU box term")
    contrastive: float = Field(0.0, description="lambda_contr * contrastive term")

    @property
    def total(self) -> float:
        return self.classification + self.l1 + self.giou + self.contrastive

    def __add__(self, other: "LossBreakdown") -> "LossBreakdown":
        return LossBreakdown(
            classification=self.classification + other.classification,
            l1=self.l1 + other.l1,
            giou=self.giou + other.giou,
            contrastive=self.contrastive + other.contrastive,
        )
