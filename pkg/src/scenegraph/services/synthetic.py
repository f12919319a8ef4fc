"""
Synthetic scenario families.

Each family builds a small road layout in a local frame (ego starts at the origin heading
along +x), drives the ego and a handful of other traffic participants along reference
paths, then rotates and translates the whole scene by a random rigid transform. Family
contracts (ego behaviour and label set) are listed in ``FAMILY_LABELS`` and in the
per-family builders below.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import FAMILIES
from ..exceptions import ConfigError, UnknownFamilyError
from ..schemas.base import ObstacleRole, ObstacleType, RoadRelation, RoadType, YieldReason
from ..schemas.scenario import (
    Connection,
    Obstacle,
    ObstacleState,
    RoadSegment,
    Scenario,
    YieldAnnotation,
)
from ..utils import get_logger, normalize_angle
from ..utils.geometry import cumulative_length

logger = get_logger(__name__)

DT = 0.5
LEAD_IN = 150.0
MIN_TIMESTEPS, MAX_TIMESTEPS = 10, 40
MIN_OBSTACLES, MAX_OBSTACLES = 2, 12

FAMILY_LABELS: Dict[str, Tuple[str, ...]] = {
    "straight_high_speed": ("following_lane", "high_magnitude_speed"),
    "left_turn": ("starting_left_turn", "traversing_intersection"),
    "right_turn": ("starting_right_turn", "traversing_intersection"),
    "stop_at_light": ("on_stopline_traffic_light",),
    "overtake": ("behind_long_vehicle", "changing_lane"),
    "pedestrian_crossing": ("near_pedestrian_on_crosswalk", "stationary"),
}


@dataclass(frozen=True)
class LocationPreset:
    lane_width: float
    speed_scale: float
    density: float


LOCATIONS: Dict[str, LocationPreset] = {
    "boston": LocationPreset(lane_width=3.5, speed_scale=1.0, density=1.0),
    "pittsburgh": LocationPreset(lane_width=3.3, speed_scale=0.92, density=0.8),
    "singapore": LocationPreset(lane_width=3.2, speed_scale=0.96, density=1.25),
}


# Extent (length, width) per participant kind
VEHICLE = (4.6, 1.9)
TRUCK = (14.0, 2.5)
PEDESTRIAN = (0.5, 0.5)
CYCLIST = (1.8, 0.6)


def _straight_pts(start: np.ndarray, heading: float, length: float, step: float = 0.5) -> np.ndarray:
    n = max(2, int(math.ceil(length / step)) + 1)
    s = np.linspace(0.0, length, n)
    return start + s[:, None] * np.array([math.cos(heading), math.sin(heading)])


def _arc_pts(start: np.ndarray, heading: float, radius: float, sweep: float, step: float = 0.5) -> np.ndarray:
    sign = 1.0 if sweep >= 0 else -1.0
    n = max(2, int(math.ceil(abs(sweep) * radius / step)) + 1)
    phi = np.linspace(0.0, sweep, n)
    center = start + radius * sign * np.array([-math.sin(heading), math.cos(heading)])
    return center + radius * sign * np.stack([np.sin(heading + phi), -np.cos(heading + phi)], axis=1)


class _Path:
    """Arclength-parametrised reference path (dense polyline) in the local frame."""

    def __init__(self, pieces: Sequence[np.ndarray]):
        pts = [pieces[0]]
        for piece in pieces[1:]:
            pts.append(piece[1:])
        self.pts = np.concatenate(pts, axis=0)
        self.cum = cumulative_length(self.pts)
        d = np.diff(self.pts, axis=0)
        self.seg_heading = np.arctan2(d[:, 1], d[:, 0])

    @property
    def length(self) -> float:
        return float(self.cum[-1])

    def arclength_at_x(self, x: float) -> float:
        """Arclength of the first point whose x coordinate reaches ``x``."""
        idx = int(np.argmax(self.pts[:, 0] >= x))
        return float(self.cum[idx])

    def pose(self, s: np.ndarray) -> np.ndarray:
        s = np.clip(np.asarray(s, dtype=np.float64), 0.0, self.length)
        x = np.interp(s, self.cum, self.pts[:, 0])
        y = np.interp(s, self.cum, self.pts[:, 1])
        seg = np.clip(np.searchsorted(self.cum, s, side="right") - 1, 0, len(self.seg_heading) - 1)
        return np.stack([x, y, self.seg_heading[seg]], axis=1)

    def polyline(self, s_from: float, s_to: float, step: float = 10.0) -> List[Tuple[float, float]]:
        s_from, s_to = max(0.0, s_from), min(self.length, s_to)
        n = int(min(40, max(2, math.ceil((s_to - s_from) / step) + 1)))
        poses = self.pose(np.linspace(s_from, s_to, n))
        return [(float(x), float(y)) for x, y in poses[:, :2]]


@dataclass
class _Agent:
    obstacle_id: str
    type: ObstacleType
    role: ObstacleRole
    extent: Tuple[float, float]
    poses: np.ndarray  # (T, 3) x, y, heading
    speeds: np.ndarray  # (T,)
    is_ego: bool = False


@dataclass
class _Segment:
    segment_id: str
    type: RoadType
    centerline: List[Tuple[float, float]]
    width: float
    connections: List[Tuple[str, RoadRelation]] = field(default_factory=list)


@dataclass
class _Draft:
    """Family output in the local frame before the global rigid transform."""

    num_timesteps: int
    ego_path: _Path
    ego_s: np.ndarray
    ego_speeds: np.ndarray
    segments: List[_Segment]
    agents: List[_Agent]
    side_path: Optional[_Path] = None
    sidewalk: Optional[_Path] = None
    shoulder_offset: float = -3.5
    yields: List[Tuple[int, str, str, YieldReason]] = field(default_factory=list)


def _integrate(s0: float, speeds: np.ndarray) -> np.ndarray:
    steps = 0.5 * (speeds[1:] + speeds[:-1]) * DT
    return s0 + np.concatenate([[0.0], np.cumsum(steps)])


def _agent_on_path(
    obstacle_id: str,
    kind: ObstacleType,
    extent: Tuple[float, float],
    path: _Path,
    s: np.ndarray,
    speeds: np.ndarray,
    is_ego: bool = False,
) -> _Agent:
    return _Agent(
        obstacle_id=obstacle_id,
        type=kind,
        role=ObstacleRole.DYNAMIC,
        extent=extent,
        poses=path.pose(s),
        speeds=speeds,
        is_ego=is_ego,
    )


def _parked(obstacle_id: str, x: float, y: float, heading: float, num_timesteps: int) -> _Agent:
    pose = np.tile(np.array([x, y, heading]), (num_timesteps, 1))
    return _Agent(
        obstacle_id=obstacle_id,
        type=ObstacleType.VEHICLE,
        role=ObstacleRole.STATIC,
        extent=VEHICLE,
        poses=pose,
        speeds=np.zeros(num_timesteps),
    )


class SyntheticGenerator:
    """Deterministic generator of labeled synthetic scenario families."""

    def __init__(self, location: str = "boston"):
        if location not in LOCATIONS:
            raise ConfigError(f"Unknown location '{location}'; allowed: {sorted(LOCATIONS)}")
        self.location = location
        self.preset = LOCATIONS[location]
        self._builders: Dict[str, Callable[[np.random.Generator], _Draft]] = {
            "straight_high_speed": self._straight_high_speed,
            "left_turn": lambda rng: self._turn(rng, left=True),
            "right_turn": lambda rng: self._turn(rng, left=False),
            "stop_at_light": self._stop_at_light,
            "overtake": self._overtake,
            "pedestrian_crossing": self._pedestrian_crossing,
        }

    def generate(self, family: str, count: int, seed: int) -> List[Scenario]:
        """
        Generate ``count`` scenarios of one family.

        Scenario ``i`` uses the sub-seed ``seed + i`` (combined with the family ordinal), so
        scenarios can be produced independently and in any order.

        Raises:
            UnknownFamilyError: If ``family`` is not a known family
        """
        if family not in self._builders:
            raise UnknownFamilyError(family, FAMILIES)
        if count < 1:
            raise ConfigError(f"count must be >= 1, got {count}")
        return [self.generate_one(family, seed, index) for index in range(count)]

    def generate_one(self, family: str, seed: int, index: int) -> Scenario:
        if family not in self._builders:
            raise UnknownFamilyError(family, FAMILIES)
        rng = np.random.default_rng([seed + index, FAMILIES.index(family)])
        draft = self._builders[family](rng)
        self._add_extras(draft, rng)
        scenario_id = f"{self.location}.{family}.{seed}.{index:05d}"
        return self._finalize(draft, scenario_id, FAMILY_LABELS[family], rng)

    # -- scene assembly -----------------------------------------------------------------

    def _num_obstacles(self, rng: np.random.Generator, required: int) -> int:
        n = int(round(rng.integers(MIN_OBSTACLES, MAX_OBSTACLES + 1) * self.preset.density))
        return int(np.clip(max(n, required), MIN_OBSTACLES, MAX_OBSTACLES))

    def _add_extras(self, draft: _Draft, rng: np.random.Generator) -> None:
        """Fill the scene up with background traffic drawn from the layout's lanes."""
        T = draft.num_timesteps
        target = self._num_obstacles(rng, len(draft.agents))
        ego_x0 = float(draft.ego_path.pose(draft.ego_s[:1])[0, 0])
        travel = float(draft.ego_s[-1] - draft.ego_s[0])

        kinds = ["follower", "parked"]
        if draft.side_path is not None:
            kinds.append("side")
        if draft.sidewalk is not None:
            kinds.extend(["walker", "cyclist"])

        k = 0
        while len(draft.agents) < target:
            k += 1
            kind = kinds[int(rng.integers(len(kinds)))]
            oid = f"{kind}_{k}"
            if kind == "follower":
                gap = float(rng.uniform(10.0, 35.0)) * k ** 0.5
                s = np.maximum(draft.ego_s - gap, 0.0)
                draft.agents.append(
                    _agent_on_path(oid, ObstacleType.VEHICLE, VEHICLE, draft.ego_path, s, draft.ego_speeds)
                )
            elif kind == "parked":
                x = ego_x0 + float(rng.uniform(-20.0, max(travel, 20.0)))
                y = draft.shoulder_offset - float(rng.uniform(0.0, 0.5))
                draft.agents.append(_parked(oid, x, y, 0.0, T))
            elif kind == "side":
                speed = float(rng.uniform(6.0, 14.0)) * self.preset.speed_scale
                speeds = np.full(T, speed)
                s0 = float(rng.uniform(0.0, 0.5 * draft.side_path.length))
                draft.agents.append(
                    _agent_on_path(oid, ObstacleType.VEHICLE, VEHICLE, draft.side_path, _integrate(s0, speeds), speeds)
                )
            else:
                speed = float(rng.uniform(1.0, 1.6)) if kind == "walker" else float(rng.uniform(3.0, 5.0))
                speeds = np.full(T, speed)
                s0 = draft.sidewalk.arclength_at_x(ego_x0 + float(rng.uniform(-30.0, 60.0)))
                kind_type, extent = (
                    (ObstacleType.PEDESTRIAN, PEDESTRIAN) if kind == "walker" else (ObstacleType.CYCLIST, CYCLIST)
                )
                draft.agents.append(
                    _agent_on_path(oid, kind_type, extent, draft.sidewalk, _integrate(s0, speeds), speeds)
                )

    def _finalize(
        self, draft: _Draft, scenario_id: str, labels: Sequence[str], rng: np.random.Generator
    ) -> Scenario:
        theta = float(rng.uniform(-math.pi, math.pi))
        offset = rng.uniform(-1000.0, 1000.0, size=2)
        c, s = math.cos(theta), math.sin(theta)

        def to_world(x: float, y: float) -> Tuple[float, float]:
            return float(c * x - s * y + offset[0]), float(s * x + c * y + offset[1])

        obstacles = []
        for agent in draft.agents:
            states = []
            length, width = agent.extent
            for t in range(draft.num_timesteps):
                x, y, h = agent.poses[t]
                wx, wy = to_world(x, y)
                heading = normalize_angle(float(h) + theta)
                v = float(agent.speeds[t])
                states.append(
                    ObstacleState(
                        t=t,
                        x=wx,
                        y=wy,
                        heading=heading,
                        vx=v * math.cos(heading),
                        vy=v * math.sin(heading),
                        length=length,
                        width=width,
                    )
                )
            obstacles.append(
                Obstacle(
                    obstacle_id=agent.obstacle_id,
                    type=agent.type,
                    role=agent.role,
                    is_ego=agent.is_ego,
                    states=states,
                )
            )

        segments = [
            RoadSegment(
                segment_id=seg.segment_id,
                type=seg.type,
                centerline=[to_world(x, y) for x, y in seg.centerline],
                widths=[seg.width] * len(seg.centerline),
                connections=[Connection(target, relation) for target, relation in seg.connections],
            )
            for seg in draft.segments
        ]
        yields = [YieldAnnotation(t, a, b, reason) for t, a, b, reason in draft.yields] or None

        return Scenario(
            scenario_id=scenario_id,
            dt=DT,
            num_timesteps=draft.num_timesteps,
            labels=list(labels),
            obstacles=obstacles,
            road_segments=segments,
            yield_annotations=yields,
        )

    def _ego(self, path: _Path, s: np.ndarray, speeds: np.ndarray) -> _Agent:
        return _agent_on_path("ego", ObstacleType.VEHICLE, VEHICLE, path, s, speeds, is_ego=True)

    def _parallel_lanes(self, extent: float = 450.0) -> Tuple[_Path, _Path, _Path]:
        """Ego lane along y=0, left lane at +lane_width, sidewalk right of the ego lane."""
        w = self.preset.lane_width
        ego = _Path([_straight_pts(np.array([-LEAD_IN, 0.0]), 0.0, LEAD_IN + extent)])
        left = _Path([_straight_pts(np.array([-LEAD_IN, w]), 0.0, LEAD_IN + extent)])
        walk = _Path([_straight_pts(np.array([-LEAD_IN, -w / 2 - 3.0]), 0.0, LEAD_IN + extent)])
        return ego, left, walk

    # -- families -----------------------------------------------------------------------

    def _straight_high_speed(self, rng: np.random.Generator) -> _Draft:
        """Ego cruises straight at 13-17 m/s (scaled) in its lane."""
        T = int(rng.integers(MIN_TIMESTEPS, MAX_TIMESTEPS + 1))
        w = self.preset.lane_width
        ego_path, left, walk = self._parallel_lanes()
        v0 = float(rng.uniform(13.0, 17.0)) * self.preset.speed_scale
        t = np.arange(T)
        speeds = v0 + 0.3 * np.sin(2 * math.pi * t / max(T, 2) + rng.uniform(0, 2 * math.pi))
        ego_s = _integrate(LEAD_IN, speeds)

        lead_gap = float(rng.uniform(20.0, 40.0))
        agents = [
            self._ego(ego_path, ego_s, speeds),
            _agent_on_path("lead_0", ObstacleType.VEHICLE, VEHICLE, ego_path, ego_s + lead_gap, speeds),
        ]
        split_s = LEAD_IN + 100.0
        segments = [
            _Segment("lane_a", RoadType.LANELET, ego_path.polyline(0, split_s), w,
                     [("lane_b", RoadRelation.SUCCESSOR), ("lane_left", RoadRelation.ADJ_LEFT)]),
            _Segment("lane_b", RoadType.LANELET, ego_path.polyline(split_s, ego_path.length), w,
                     [("lane_a", RoadRelation.PREDECESSOR), ("lane_left", RoadRelation.ADJ_LEFT)]),
            _Segment("lane_left", RoadType.LANELET, left.polyline(0, left.length), w,
                     [("lane_a", RoadRelation.ADJ_RIGHT), ("lane_b", RoadRelation.ADJ_RIGHT)]),
        ]
        if rng.random() < 0.5:
            segments.append(_Segment("walkway", RoadType.WALKWAY, walk.polyline(0, walk.length), 2.5))
        return _Draft(T, ego_path, ego_s, speeds, segments, agents, side_path=left, sidewalk=walk,
                      shoulder_offset=-w / 2 - 1.0)

    def _turn(self, rng: np.random.Generator, left: bool) -> _Draft:
        """Ego traverses an intersection with a full 90 degree left or right turn."""
        w = self.preset.lane_width
        sign = 1.0 if left else -1.0
        radius = float(rng.uniform(12.0, 16.0) if left else rng.uniform(7.0, 10.0))
        v = float(rng.uniform(5.0, 7.0) if left else rng.uniform(4.0, 6.0)) * self.preset.speed_scale
        arc_len = radius * math.pi / 2
        min_t = int(math.ceil((arc_len + 10.0) / (v * DT))) + 1
        T = int(rng.integers(max(MIN_TIMESTEPS, min_t), MAX_TIMESTEPS + 1))

        approach = LEAD_IN + 40.0
        start = np.array([-LEAD_IN, 0.0])
        straight_in = _straight_pts(start, 0.0, approach)
        arc = _arc_pts(straight_in[-1], 0.0, radius, sign * math.pi / 2)
        straight_out = _straight_pts(arc[-1], sign * math.pi / 2, 200.0)
        ego_path = _Path([straight_in, arc, straight_out])

        speeds = np.full(T, v)
        travel = v * DT * (T - 1)
        ego_s = _integrate(approach - (travel - arc_len) / 2, speeds)

        arc_start_x = float(straight_in[-1, 0])
        cross_x = arc_start_x + radius / 2
        cross = _Path([_straight_pts(np.array([cross_x, -120.0]), math.pi / 2, 240.0)])
        walk = _Path([_straight_pts(np.array([-LEAD_IN, -w / 2 - 3.0]), 0.0, approach - 5.0)])

        s_arc_end = approach + arc_len
        segments = [
            _Segment("approach", RoadType.LANELET, ego_path.polyline(0, approach), w,
                     [("connector", RoadRelation.SUCCESSOR)]),
            _Segment("connector", RoadType.LANELET, ego_path.polyline(approach, s_arc_end, step=2.0), w,
                     [("approach", RoadRelation.PREDECESSOR), ("exit", RoadRelation.SUCCESSOR)]),
            _Segment("exit", RoadType.LANELET, ego_path.polyline(s_arc_end, ego_path.length), w,
                     [("connector", RoadRelation.PREDECESSOR)]),
            # Crossing with the connector is left to the geometric fallback
            _Segment("cross_street", RoadType.LANELET, cross.polyline(0, cross.length), w),
        ]
        if rng.random() < 0.5:
            segments.append(_Segment("walkway", RoadType.WALKWAY, walk.polyline(0, walk.length), 2.5))

        cross_speed = float(rng.uniform(5.0, 9.0)) * self.preset.speed_scale
        cross_speeds = np.full(T, cross_speed)
        agents = [
            self._ego(ego_path, ego_s, speeds),
            _agent_on_path("cross_0", ObstacleType.VEHICLE, VEHICLE, cross,
                           _integrate(float(rng.uniform(40.0, 90.0)), cross_speeds), cross_speeds),
        ]
        return _Draft(T, ego_path, ego_s, speeds, segments, agents, side_path=cross, sidewalk=walk,
                      shoulder_offset=-w / 2 - 1.0)

    def _stop_at_light(self, rng: np.random.Generator) -> _Draft:
        """Ego decelerates from 8-11 m/s to a full stop at the stop line and waits."""
        T = int(rng.integers(MIN_TIMESTEPS, MAX_TIMESTEPS + 1))
        w = self.preset.lane_width
        v0 = float(rng.uniform(8.0, 11.0)) * self.preset.speed_scale
        t_stop = max(2, int(round(T * float(rng.uniform(0.45, 0.7)))))
        t = np.arange(T)
        speeds = np.maximum(0.0, v0 * (1.0 - t / t_stop))
        ego_path, _, walk = self._parallel_lanes()
        ego_s = _integrate(LEAD_IN, speeds)

        stop_s = float(ego_s[-1]) + 1.0
        inter_s = stop_s + 20.0
        stop_x = float(ego_path.pose(np.array([stop_s]))[0, 0])
        cross_x = stop_x + 10.0
        cross = _Path([_straight_pts(np.array([cross_x, 120.0]), -math.pi / 2, 240.0)])

        segments = [
            _Segment("approach", RoadType.LANELET, ego_path.polyline(0, stop_s), w,
                     [("intersection", RoadRelation.SUCCESSOR)]),
            _Segment("intersection", RoadType.LANELET, ego_path.polyline(stop_s, inter_s, step=2.0), w,
                     [("approach", RoadRelation.PREDECESSOR), ("exit", RoadRelation.SUCCESSOR),
                      ("cross_street", RoadRelation.INTERSECTING)]),
            _Segment("exit", RoadType.LANELET, ego_path.polyline(inter_s, ego_path.length), w,
                     [("intersection", RoadRelation.PREDECESSOR)]),
            _Segment("cross_street", RoadType.LANELET, cross.polyline(0, cross.length), w,
                     [("intersection", RoadRelation.INTERSECTING)]),
            _Segment("sidewalk", RoadType.WALKWAY, walk.polyline(0, walk.length), 2.5),
        ]

        cross_speed = float(rng.uniform(7.0, 11.0)) * self.preset.speed_scale
        cross_speeds = np.full(T, cross_speed)
        cross_s0 = 120.0 - cross_speed * DT * T / 2
        agents = [
            self._ego(ego_path, ego_s, speeds),
            _agent_on_path("cross_0", ObstacleType.VEHICLE, VEHICLE, cross,
                           _integrate(cross_s0, cross_speeds), cross_speeds),
        ]
        yields = [(int(k), "ego", "cross_0", YieldReason.TL) for k in range(T)]
        return _Draft(T, ego_path, ego_s, speeds, segments, agents, sidewalk=walk,
                      shoulder_offset=-w / 2 - 1.0, yields=yields)

    def _overtake(self, rng: np.random.Generator) -> _Draft:
        """Ego closes in on a slow long vehicle and changes to the left lane to pass it."""
        T = int(rng.integers(MIN_TIMESTEPS, MAX_TIMESTEPS + 1))
        w = self.preset.lane_width
        v = float(rng.uniform(11.0, 14.0)) * self.preset.speed_scale
        travel = v * DT * (T - 1)
        x_a = 0.15 * travel
        x_b = x_a + max(0.5 * travel, 25.0)

        xs = np.arange(-LEAD_IN, 450.0 + 0.25, 0.5)
        ramp = np.clip((xs - x_a) / (x_b - x_a), 0.0, 1.0)
        ys = w * (1.0 - np.cos(math.pi * ramp)) / 2.0
        ego_path = _Path([np.stack([xs, ys], axis=1)])
        _, left, walk = self._parallel_lanes()
        straight, _, _ = self._parallel_lanes()

        speeds = np.full(T, v)
        ego_s = _integrate(ego_path.arclength_at_x(0.0), speeds)

        truck_speed = float(rng.uniform(5.0, 8.0)) * self.preset.speed_scale
        truck_speeds = np.full(T, truck_speed)
        truck_s0 = LEAD_IN + float(rng.uniform(12.0, 18.0))
        truck = _agent_on_path("truck_0", ObstacleType.VEHICLE, TRUCK, straight,
                               _integrate(truck_s0, truck_speeds), truck_speeds)

        segments = [
            _Segment("lane_right", RoadType.LANELET, straight.polyline(0, straight.length), w,
                     [("lane_left", RoadRelation.ADJ_LEFT)]),
            _Segment("lane_left", RoadType.LANELET, left.polyline(0, left.length), w,
                     [("lane_right", RoadRelation.ADJ_RIGHT)]),
        ]
        if rng.random() < 0.5:
            segments.append(_Segment("walkway", RoadType.WALKWAY, walk.polyline(0, walk.length), 2.5))
        agents = [self._ego(ego_path, ego_s, speeds), truck]
        return _Draft(T, ego_path, ego_s, speeds, segments, agents, side_path=left, sidewalk=walk,
                      shoulder_offset=-w / 2 - 1.0)

    def _pedestrian_crossing(self, rng: np.random.Generator) -> _Draft:
        """Ego stands still in front of a crosswalk while pedestrians cross."""
        T = int(rng.integers(MIN_TIMESTEPS, MAX_TIMESTEPS + 1))
        w = self.preset.lane_width
        ego_path, opposite, walk = self._parallel_lanes()
        speeds = np.zeros(T)
        ego_s = np.full(T, LEAD_IN)

        crosswalk_x = float(rng.uniform(5.0, 8.0))
        crosswalk = _Path([_straight_pts(np.array([crosswalk_x, -20.0]), math.pi / 2, 40.0)])
        segments = [
            _Segment("lane", RoadType.LANELET, ego_path.polyline(0, ego_path.length), w,
                     [("crosswalk", RoadRelation.INTERSECTING), ("lane_opposite", RoadRelation.ADJ_LEFT)]),
            _Segment("lane_opposite", RoadType.LANELET, opposite.polyline(0, opposite.length), w,
                     [("crosswalk", RoadRelation.INTERSECTING), ("lane", RoadRelation.ADJ_LEFT)]),
            _Segment("crosswalk", RoadType.WALKWAY, crosswalk.polyline(0, crosswalk.length, step=3.0), 3.0,
                     [("lane", RoadRelation.INTERSECTING), ("lane_opposite", RoadRelation.INTERSECTING)]),
            _Segment("sidewalk", RoadType.WALKWAY, walk.polyline(0, walk.length), 2.5),
        ]

        agents = [self._ego(ego_path, ego_s, speeds)]
        for k in range(int(rng.integers(1, 4))):
            ped_speed = float(rng.uniform(1.0, 1.6))
            ped_speeds = np.full(T, ped_speed)
            s0 = float(rng.uniform(0.0, 5.0))
            agents.append(
                _agent_on_path(f"pedestrian_{k}", ObstacleType.PEDESTRIAN, PEDESTRIAN, crosswalk,
                               _integrate(s0, ped_speeds), ped_speeds)
            )
        return _Draft(T, ego_path, ego_s, speeds, segments, agents, side_path=opposite, sidewalk=walk,
                      shoulder_offset=-w / 2 - 1.0)


def generate_synthetic(family: str, count: int, seed: int, location: str = "boston") -> List[Scenario]:
    """Generate ``count`` scenarios of ``family``; deterministic in (family, count, seed, location)."""
    return SyntheticGenerator(location).generate(family, count, seed)
