from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .base import ModelKind


GRAPH_FORMAT_VERSION = 2
STORE_FORMAT_VERSION = 1
CHECKPOINT_FORMAT_VERSION = 1


class GraphCounts(BaseModel):
    model_config = ConfigDict(frozen=True)

    obstacle_nodes: int = Field(..., ge=0)
    road_nodes: int = Field(..., ge=0)
    obstacle_dim: int = Field(..., gt=0)
    road_dim: int = Field(..., gt=0)
    edges: Dict[str, int]
    edge_dims: Dict[str, int]


class GraphManifest(BaseModel):
    """JSON header of a cached graph file; the binary tables follow it in ``GraphCounts`` order."""

    model_config = ConfigDict(frozen=True)

    version: int = GRAPH_FORMAT_VERSION
    scenario_id: str
    scenario_digest: str
    builder_digest: str
    builder: Dict[str, Any]
    reference_point: Tuple[float, float]
    counts: GraphCounts
    obstacle_ids: List[str]
    segment_ids: List[str]


class StoreManifest(BaseModel):
    """``manifest.json`` of an embedding store; ``vectors.f32`` holds count x dim float32 rows."""

    model_config = ConfigDict(frozen=True)

    version: int = STORE_FORMAT_VERSION
    count: int = Field(..., ge=0)
    dim: int = Field(..., gt=0)
    model_kind: ModelKind
    checkpoint_hash: str
    ids: List[str]
    labels: Optional[List[List[str]]] = None

    @model_validator(mode="after")
    def validate_ids(self) -> "StoreManifest":
        if len(self.ids) != self.count:
            raise ValueError(f"manifest lists {len(self.ids)} ids for count={self.count}")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("manifest ids are not unique")
        if self.labels is not None and len(self.labels) != self.count:
            raise ValueError("labels must align with ids")
        return self

    @property
    def byte_length(self) -> int:
        return self.count * self.dim * 4


class CheckpointMeta(BaseModel):
    """Non-tensor part of a checkpoint; compared against the active config on load."""

    model_config = ConfigDict(frozen=True)

    format_version: int = CHECKPOINT_FORMAT_VERSION
    model_kind: str
    obstacle_dim: int
    road_dim: int
    edge_dims: Dict[str, int]
    embedding_dim: int
    predictor_hidden_dim: int
    builder_digest: str
    vocabulary: Optional[List[str]] = None
    seed: Optional[int] = None
    epochs: Optional[int] = None
    steps: Optional[int] = None
    final_loss: Optional[float] = None
