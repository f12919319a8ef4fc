from .base import (
    ObstacleType,
    ObstacleRole,
    RoadType,
    RoadRelation,
    ObstacleRelation,
    ObstacleRoadRelation,
    YieldReason,
    ModelKind,
)
from .scenario import (
    ObstacleState,
    Obstacle,
    Connection,
    RoadSegment,
    YieldAnnotation,
    Scenario,
)
from .manifest import (
    GraphCounts,
    GraphManifest,
    StoreManifest,
    CheckpointMeta,
)
from .report import (
    ClusterSummary,
    ClusterReport,
    SweepRow,
    ClassifierMetrics,
    ValidityReport,
    EvaluationReport,
)
from .error import ErrorResponse

__all__ = [
    # Base
    "ObstacleType",
    "ObstacleRole",
    "RoadType",
    "RoadRelation",
    "ObstacleRelation",
    "ObstacleRoadRelation",
    "YieldReason",
    "ModelKind",
    # Scenario
    "ObstacleState",
    "Obstacle",
    "Connection",
    "RoadSegment",
    "YieldAnnotation",
    "Scenario",
    # Manifests
    "GraphCounts",
    "GraphManifest",
    "StoreManifest",
    "CheckpointMeta",
    # Reports
    "ClusterSummary",
    "ClusterReport",
    "SweepRow",
    "ClassifierMetrics",
    "ValidityReport",
    "EvaluationReport",
    # Error
    "ErrorResponse",
]
