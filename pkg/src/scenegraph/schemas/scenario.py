import math
from typing import Iterator, List, NamedTuple, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_serializer, model_validator
from pydantic_core import PydanticCustomError

from scenegraph.utils.geometry import normalize_angle
from .base import ObstacleRole, ObstacleType, RoadRelation, RoadType, YieldReason


STATE_FIELDS = ("t", "x", "y", "heading", "vx", "vy", "length", "width")
STATIC_POSE_TOLERANCE = 1e-6


def _invariant(field: str, reason: str) -> PydanticCustomError:
    return PydanticCustomError("scenario_invariant", "{field}: {reason}", {"field": field, "reason": reason})


class ObstacleState(BaseModel):
    """One obstacle pose/velocity sample, serialized as ``[t, x, y, heading, vx, vy, length, width]``."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    t: int = Field(..., ge=0)
    x: float
    y: float
    heading: float
    vx: float
    vy: float
    length: float = Field(..., gt=0)
    width: float = Field(..., gt=0)

    @model_validator(mode="before")
    @classmethod
    def from_row(cls, data):
        if isinstance(data, (list, tuple)):
            if len(data) != len(STATE_FIELDS):
                raise ValueError(f"state row must have {len(STATE_FIELDS)} values {list(STATE_FIELDS)}")
            return dict(zip(STATE_FIELDS, data))
        return data

    @field_validator("heading")
    def normalize_heading(cls, v: float) -> float:
        return normalize_angle(v)

    @model_serializer
    def to_row(self) -> list:
        return [self.t, self.x, self.y, self.heading, self.vx, self.vy, self.length, self.width]

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


class Obstacle(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    obstacle_id: str = Field(..., min_length=1)
    type: ObstacleType
    role: ObstacleRole
    is_ego: bool = False
    states: List[ObstacleState] = Field(..., min_length=1)

    @field_validator("states")
    def validate_order(cls, v: List[ObstacleState]) -> List[ObstacleState]:
        for prev, cur in zip(v, v[1:]):
            if cur.t <= prev.t:
                raise ValueError(f"states must be strictly ascending by t (t={prev.t} then t={cur.t})")
        return v

    @model_validator(mode="after")
    def validate_static_pose(self) -> "Obstacle":
        if self.role == ObstacleRole.STATIC:
            first = self.states[0]
            for s in self.states[1:]:
                if (
                    abs(s.x - first.x) > STATIC_POSE_TOLERANCE
                    or abs(s.y - first.y) > STATIC_POSE_TOLERANCE
                    or abs(s.heading - first.heading) > STATIC_POSE_TOLERANCE
                ):
                    raise _invariant("states", f"static obstacle moves at t={s.t}")
        return self


class Connection(NamedTuple):
    target_id: str
    relation: RoadRelation


class RoadSegment(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    segment_id: str = Field(..., min_length=1)
    type: RoadType
    centerline: List[Tuple[float, float]] = Field(..., min_length=2)
    widths: List[float]
    connections: List[Connection] = Field(default_factory=list)

    @field_validator("widths")
    def validate_widths(cls, v: List[float]) -> List[float]:
        if any(w <= 0 for w in v):
            raise ValueError("widths must be > 0")
        return v

    @model_validator(mode="after")
    def validate_lengths(self) -> "RoadSegment":
        if len(self.widths) != len(self.centerline):
            raise _invariant("widths", f"{len(self.widths)} widths for {len(self.centerline)} centerline points")
        return self


class YieldAnnotation(NamedTuple):
    t: int
    yielding_id: str
    yielded_to_id: str
    reason: YieldReason


class Scenario(BaseModel):
    """A variable-length traffic scenario: obstacles over time plus optional map context."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    scenario_id: str = Field(..., min_length=1)
    dt: float = Field(..., gt=0)
    num_timesteps: int = Field(..., ge=1)
    labels: List[str] = Field(default_factory=list)
    obstacles: List[Obstacle] = Field(..., min_length=1)
    road_segments: List[RoadSegment] = Field(default_factory=list)
    yield_annotations: Optional[List[YieldAnnotation]] = None

    @field_validator("labels")
    def validate_labels(cls, v: List[str], info: ValidationInfo) -> List[str]:
        vocab = (info.context or {}).get("vocab")
        if vocab is not None:
            unknown = sorted(set(v) - set(vocab))
            if unknown:
                raise ValueError(f"labels {unknown} not in vocabulary")
        return sorted(set(v))

    @model_validator(mode="after")
    def validate_references(self) -> "Scenario":
        ids = [o.obstacle_id for o in self.obstacles]
        if len(set(ids)) != len(ids):
            raise _invariant("obstacles", "duplicate obstacle_id")
        if sum(o.is_ego for o in self.obstacles) > 1:
            raise _invariant("obstacles", "more than one ego obstacle")
        for i, o in enumerate(self.obstacles):
            last = o.states[-1].t
            if last >= self.num_timesteps:
                raise _invariant(
                    f"obstacles[{i}].states",
                    f"t={last} must be < num_timesteps={self.num_timesteps}",
                )

        segment_ids = [s.segment_id for s in self.road_segments]
        if len(set(segment_ids)) != len(segment_ids):
            raise _invariant("road_segments", "duplicate segment_id")

        known = set(ids)
        for i, ann in enumerate(self.yield_annotations or []):
            if ann.yielding_id not in known or ann.yielded_to_id not in known:
                raise _invariant(f"yield_annotations[{i}]", "references unknown obstacle")
            if not 0 <= ann.t < self.num_timesteps:
                raise _invariant(f"yield_annotations[{i}]", f"t={ann.t} out of range")
        return self

    @property
    def ego(self) -> Optional[Obstacle]:
        return next((o for o in self.obstacles if o.is_ego), None)

    def iter_states(self) -> Iterator[Tuple[Obstacle, ObstacleState]]:
        for obstacle in self.obstacles:
            for state in obstacle.states:
                yield obstacle, state

    def translated(self, dx: float, dy: float) -> "Scenario":
        """Copy of the scenario with every coordinate shifted by ``(dx, dy)``."""
        obstacles = [
            o.model_copy(
                update={"states": [s.model_copy(update={"x": s.x + dx, "y": s.y + dy}) for s in o.states]}
            )
            for o in self.obstacles
        ]
        segments = [
            r.model_copy(update={"centerline": [(x + dx, y + dy) for x, y in r.centerline]})
            for r in self.road_segments
        ]
        return self.model_copy(update={"obstacles": obstacles, "road_segments": segments})
