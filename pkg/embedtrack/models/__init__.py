"""Pydantic models for embedtrack.

- Box: normalized center-form bounding box
- Detection / TrackOutput: tracker input and output
- LabeledScene: ground truth plus predictions for evaluation
- DatasetIndex / BatchSpec: sampler input and output
- MatchWeights / LossWeights: training coefficients
- MetricsReport: evaluation results
- SimulatorConfig: synthetic sequence settings
- *SweepPoint: experiment results
"""

from .batch import BatchItem, BatchKind, BatchSpec, DatasetIndex, VideoEntry
from .box import Box, FloatVector, corners_array
from .report import (
    CategoryMetrics, ClearMotResult, HotaResult, IdentityResult, MeanMetrics, MetricsReport,
)
from .scene import GroundTruthObject, LabeledScene, PredictedObject
from .simulation import ScriptedOcclusion, SimulatorConfig
from .sweep import MemorySweepPoint, NoiseSweepPoint, SamplingSweepPoint
from .tracking import Detection, TrackedObject, TrackerConfig, TrackFrame, TrackOutput
from .training import LossBreakdown, LossWeights, MatchWeights, QueryPrediction

__all__ = [
    "BatchItem",
    "BatchKind",
    "BatchSpec",
    "DatasetIndex",
    "VideoEntry",
    "Box",
    "FloatVector",
    "corners_array",
    "CategoryMetrics",
    "ClearMotResult",
    "HotaResult",
    "IdentityResult",
    "MeanMetrics",
    "MetricsReport",
    "GroundTruthObject",
    "LabeledScene",
    "PredictedObject",
    "ScriptedOcclusion",
    "SimulatorConfig",
    "MemorySweepPoint",
    "NoiseSweepPoint",
    "SamplingSweepPoint",
    "Detection",
    "TrackedObject",
    "TrackerConfig",
    "TrackFrame",
    "TrackOutput",
    "LossBreakdown",
    "LossWeights",
    "MatchWeights",
    "QueryPrediction",
]
