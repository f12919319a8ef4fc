from enum import Enum
from typing import List, Type


class ObstacleType(str, Enum):
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"
    CYCLIST = "cyclist"
    OTHER = "other"


class ObstacleRole(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


class RoadType(str, Enum):
    LANELET = "lanelet"
    WALKWAY = "walkway"
    OTHER = "other"


class RoadRelation(str, Enum):
    PREDECESSOR = "predecessor"
    SUCCESSOR = "successor"
    ADJ_LEFT = "adj_left"
    ADJ_RIGHT = "adj_right"
    MERGING = "merging"
    DIVERGING = "diverging"
    INTERSECTING = "intersecting"
    OTHER = "other"


class ObstacleRelation(str, Enum):
    BEHIND = "behind"
    IN_FRONT = "in_front"
    LEFT = "left"
    RIGHT = "right"
    SAME_LANE = "same_lane"
    MUST_YIELD_ROW = "must_yield_row"
    MUST_YIELD_TL = "must_yield_tl"
    OTHER = "other"


class ObstacleRoadRelation(str, Enum):
    IS_ON = "is_on"
    IS_CLOSE = "is_close"


class YieldReason(str, Enum):
    ROW = "row"
    TL = "tl"


class ModelKind(str, Enum):
    BGRL = "bgrl"
    GRAPHCL = "graphcl"


def members(enum_cls: Type[Enum]) -> List[Enum]:
    """Enum members in declaration order; one-hot column order follows it."""
    return list(enum_cls)


def index_of(enum_cls: Type[Enum], value: Enum) -> int:
    return members(enum_cls).index(value)
