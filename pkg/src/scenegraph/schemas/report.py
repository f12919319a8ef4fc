from typing import List, Literal, Optional

from pydantic import BaseModel, Field


class ClusterSummary(BaseModel):
    cluster: int
    size: int = Field(..., ge=1)
    primary_label: Optional[str] = None
    representatives: List[str] = Field(default_factory=list)


class ClusterReport(BaseModel):
    """HDBSCAN outcome for one min_cluster_size; metrics only read clustered points."""

    mcs: int
    ids: List[str]
    assignment: List[int]
    num_clusters: int
    unclustered_ratio: float
    clusters: List[ClusterSummary] = Field(default_factory=list)
    multilabel_acc: Optional[float] = None
    silhouette: Optional[float] = None
    silhouette_status: Literal["ok", "undefined"] = "ok"

    def primary_labels(self) -> dict:
        return {c.cluster: c.primary_label for c in self.clusters}


class SweepRow(BaseModel):
    mcs: int
    num_clusters: int
    unclustered_ratio: float
    multilabel_acc: Optional[float] = None
    silhouette: Optional[float] = None
    silhouette_status: Literal["ok", "undefined"] = "ok"


class ClassifierMetrics(BaseModel):
    contain_accuracy: float
    sample_auprc: Optional[float] = None
    threshold: float = 0.5
    n_samples: int


class ValidityReport(BaseModel):
    rate: float
    trials: int
    random_encoder_rate: Optional[float] = None


class EvaluationReport(BaseModel):
    model_kind: str
    seed: int
    validity: ValidityReport
    classifier: ClassifierMetrics
    majority_baseline: float
    shuffled_control: Optional[ClassifierMetrics] = None
    holdout: Optional[ClassifierMetrics] = None
    sweep: List[SweepRow] = Field(default_factory=list)
    best_mcs: Optional[int] = None
