"""
Scenario -> heterogeneous spatio-temporal graph.

Node types:
    obstacle  one node per (obstacle, timestep with a state), sorted by (obstacle_id, t)
    road      one node per road segment near the obstacles, sorted by segment_id

Edge types (keys of ``HeteroGraph.edges``):
    o2o       obstacle -> obstacle at the same timestep, both directions, within o2o_radius
    temporal  (o, t - d) -> (o, t) for 1 <= d <= temporal_reach
    o2r       obstacle -> road for is_on / is_close relations (the encoder reverses it)
    r2r       road -> road for declared connections plus crossing centerlines

Positions are snapped to a millimetre grid and taken relative to the grid reference point
in integer arithmetic before anything else, so shifting a scenario by a whole number of
millimetres leaves every feature and edge bit-for-bit unchanged.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..config import BuilderConfig
from ..exceptions import GraphBuildError, ShapeMismatchError
from ..schemas.base import (
    ObstacleRelation,
    ObstacleRoadRelation,
    ObstacleRole,
    ObstacleType,
    RoadRelation,
    RoadType,
    YieldReason,
    index_of,
    members,
)
from ..schemas.scenario import Scenario
from ..utils import get_logger, Polyline, rotate_into_frame
from ..utils.geometry import polyline_midpoint, resample_polyline

logger = get_logger(__name__)

EDGE_TYPES = ("o2o", "temporal", "o2r", "r2r")
OBSTACLE_CONTINUOUS = ("x", "y", "cos_h", "sin_h", "vx", "vy", "speed", "length", "width")
O2O_GEOMETRY_DIM = 7
R2R_GEOMETRY_DIM = 2
O2R_GEOMETRY_DIM = 2
TEMPORAL_DIM = 3
GRID_STEPS_PER_METRE = 1000


def edge_dims() -> Dict[str, int]:
    return {
        "o2o": O2O_GEOMETRY_DIM + len(ObstacleRelation),
        "temporal": TEMPORAL_DIM,
        "o2r": O2R_GEOMETRY_DIM + len(ObstacleRoadRelation),
        "r2r": R2R_GEOMETRY_DIM + len(RoadRelation),
    }


@dataclass(frozen=True)
class ColumnGroup:
    """A contiguous block of node-feature columns; one-hot blocks are handled as one unit."""

    name: str
    start: int
    stop: int
    one_hot: bool = False

    @property
    def columns(self) -> slice:
        return slice(self.start, self.stop)


def _layout(blocks: Sequence[Tuple[str, int, bool]]) -> List[ColumnGroup]:
    groups, offset = [], 0
    for name, width, one_hot in blocks:
        if one_hot:
            groups.append(ColumnGroup(name, offset, offset + width, True))
        else:
            groups.extend(ColumnGroup(f"{name}[{k}]" if width > 1 else name, offset + k, offset + k + 1)
                          for k in range(width))
        offset += width
    return groups


def obstacle_layout(config: BuilderConfig) -> List[ColumnGroup]:
    blocks = [(name, 1, False) for name in OBSTACLE_CONTINUOUS]
    blocks += [("type", len(ObstacleType), True), ("role", len(ObstacleRole), True), ("pe", config.pe_dim, False)]
    return _layout(blocks)


def road_layout(config: BuilderConfig) -> List[ColumnGroup]:
    n = config.centerline_points
    return _layout([("centerline", 2 * n, False), ("widths", n, False), ("type", len(RoadType), True)])


def feature_layout(config: BuilderConfig) -> Dict[str, List[ColumnGroup]]:
    return {"obstacle": obstacle_layout(config), "road": road_layout(config)}


@dataclass(frozen=True)
class EdgeTable:
    src: np.ndarray
    dst: np.ndarray
    attr: np.ndarray
    subtype: np.ndarray

    @classmethod
    def empty(cls, dim: int) -> "EdgeTable":
        return cls(
            src=np.zeros(0, dtype=np.int64),
            dst=np.zeros(0, dtype=np.int64),
            attr=np.zeros((0, dim), dtype=np.float32),
            subtype=np.zeros(0, dtype=np.int64),
        )

    @classmethod
    def from_lists(cls, src, dst, attr, subtype, dim: int) -> "EdgeTable":
        if not len(src):
            return cls.empty(dim)
        table = cls(
            src=np.asarray(src, dtype=np.int64),
            dst=np.asarray(dst, dtype=np.int64),
            attr=np.asarray(attr, dtype=np.float64).reshape(len(src), dim).astype(np.float32),
            subtype=np.asarray(subtype, dtype=np.int64),
        )
        return table.select(np.lexsort((table.subtype, table.dst, table.src)))

    def __len__(self) -> int:
        return int(self.src.shape[0])

    @property
    def dim(self) -> int:
        return int(self.attr.shape[1])

    def select(self, index: np.ndarray) -> "EdgeTable":
        return EdgeTable(self.src[index], self.dst[index], self.attr[index], self.subtype[index])


@dataclass(frozen=True)
class HeteroGraph:
    scenario_id: str
    obstacle_x: np.ndarray
    obstacle_ids: np.ndarray
    obstacle_t: np.ndarray
    road_x: np.ndarray
    segment_ids: np.ndarray
    edges: Dict[str, EdgeTable]
    reference_point: Tuple[float, float]

    @property
    def num_obstacle_nodes(self) -> int:
        return int(self.obstacle_x.shape[0])

    @property
    def num_road_nodes(self) -> int:
        return int(self.road_x.shape[0])

    def num_edges(self) -> Dict[str, int]:
        return {k: len(v) for k, v in self.edges.items()}

    def replace(self, **changes) -> "HeteroGraph":
        return dataclasses.replace(self, **changes)

    def check(self, temporal_reach: Optional[int] = None) -> None:
        """
        Verify the structural invariants of the graph.

        Raises:
            ShapeMismatchError: Misaligned arrays or feature widths
            GraphBuildError: Out-of-range indices, self-loops, bad temporal links or non-finite values
        """
        n_obs, n_road = self.num_obstacle_nodes, self.num_road_nodes
        if self.obstacle_ids.shape[0] != n_obs or self.obstacle_t.shape[0] != n_obs:
            raise ShapeMismatchError("obstacle node arrays", n_obs, self.obstacle_ids.shape[0])
        if self.segment_ids.shape[0] != n_road:
            raise ShapeMismatchError("road node arrays", n_road, self.segment_ids.shape[0])

        endpoints = {"o2o": (n_obs, n_obs), "temporal": (n_obs, n_obs), "o2r": (n_obs, n_road), "r2r": (n_road, n_road)}
        for kind, (n_src, n_dst) in endpoints.items():
            table = self.edges[kind]
            if table.attr.shape[0] != len(table) or table.dst.shape[0] != len(table):
                raise ShapeMismatchError(f"{kind} edge table", len(table), table.attr.shape[0])
            if len(table) and (table.src.min() < 0 or table.src.max() >= n_src
                               or table.dst.min() < 0 or table.dst.max() >= n_dst):
                raise GraphBuildError(self.scenario_id, f"{kind} edge index out of range")
            if not np.isfinite(table.attr).all():
                raise GraphBuildError(self.scenario_id, f"non-finite {kind} edge feature")

        o2o = self.edges["o2o"]
        if np.any(o2o.src == o2o.dst):
            raise GraphBuildError(self.scenario_id, "o2o self-loop")
        if np.any(self.obstacle_t[o2o.src] != self.obstacle_t[o2o.dst]):
            raise GraphBuildError(self.scenario_id, "o2o edge across timesteps")

        temporal = self.edges["temporal"]
        if np.any(self.obstacle_ids[temporal.src] != self.obstacle_ids[temporal.dst]):
            raise GraphBuildError(self.scenario_id, "temporal edge between different obstacles")
        gap = self.obstacle_t[temporal.dst] - self.obstacle_t[temporal.src]
        if np.any(gap < 1) or (temporal_reach is not None and np.any(gap > temporal_reach)):
            raise GraphBuildError(self.scenario_id, "temporal edge gap out of range")

        if not (np.isfinite(self.obstacle_x).all() and np.isfinite(self.road_x).all()):
            raise GraphBuildError(self.scenario_id, "non-finite node feature")


@dataclass(frozen=True)
class NodeContext:
    """What the o2o subtype rule needs to know about one obstacle node."""

    obstacle_id: str
    t: int
    x: float
    y: float
    heading: float
    on_segments: FrozenSet[str] = field(default_factory=frozenset)


YieldIndex = Mapping[Tuple[int, str, str], YieldReason]


def reference_point(scenario: Scenario) -> Tuple[float, float]:
    """Component-wise median of every obstacle state position."""
    xy = np.array([(s.x, s.y) for _, s in scenario.iter_states()], dtype=np.float64)
    if xy.size == 0:
        raise GraphBuildError(scenario.scenario_id, "scenario has no obstacle states")
    rx, ry = np.median(xy, axis=0)
    return float(rx), float(ry)


def to_grid(xy) -> np.ndarray:
    """World coordinates as integer grid steps."""
    return np.rint(np.asarray(xy, dtype=np.float64) * GRID_STEPS_PER_METRE).astype(np.int64)


def grid_offset(xy_q: np.ndarray, origin_q: np.ndarray) -> np.ndarray:
    """Metres from ``origin_q``; exact because both operands sit on the grid."""
    return (xy_q - origin_q) / GRID_STEPS_PER_METRE


def sinusoidal_pe(t: int, dim: int) -> np.ndarray:
    """pe[2i] = sin(t / 10000^(2i/dim)), pe[2i+1] = cos(t / 10000^(2i/dim))."""
    return sinusoidal_pe_table(np.array([t]), dim)[0]


def sinusoidal_pe_table(ts: np.ndarray, dim: int) -> np.ndarray:
    if dim % 2:
        raise ShapeMismatchError("pe_dim", "even", dim)
    i = np.arange(dim // 2, dtype=np.float64)
    angle = np.asarray(ts, dtype=np.float64)[:, None] / np.power(10000.0, 2.0 * i / dim)[None, :]
    pe = np.empty((angle.shape[0], dim), dtype=np.float64)
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    return pe


def classify_o2o_subtype(
    src: NodeContext,
    dst: NodeContext,
    yields: Optional[YieldIndex] = None,
    o2o_radius: float = 50.0,
) -> ObstacleRelation:
    """
    Subtype of the edge src -> dst (same timestep).

    Precedence: yield annotation (src yields to dst) > same_lane (shared is_on segment) >
    other (both off-road and farther than o2o_radius / 2) > bearing of dst in src's frame.
    """
    if yields:
        reason = yields.get((src.t, src.obstacle_id, dst.obstacle_id))
        if reason is YieldReason.TL:
            return ObstacleRelation.MUST_YIELD_TL
        if reason is YieldReason.ROW:
            return ObstacleRelation.MUST_YIELD_ROW

    if src.on_segments & dst.on_segments:
        return ObstacleRelation.SAME_LANE

    dx, dy = dst.x - src.x, dst.y - src.y
    if not src.on_segments and not dst.on_segments and math.hypot(dx, dy) > o2o_radius / 2:
        return ObstacleRelation.OTHER

    c, s = math.cos(src.heading), math.sin(src.heading)
    beta = math.degrees(math.atan2(-s * dx + c * dy, c * dx + s * dy))
    if abs(beta) <= 45.0:
        return ObstacleRelation.IN_FRONT
    if abs(beta) >= 135.0:
        return ObstacleRelation.BEHIND
    return ObstacleRelation.LEFT if beta > 0 else ObstacleRelation.RIGHT


def _one_hot(index: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((len(index), width), dtype=np.float64)
    out[np.arange(len(index)), index] = 1.0
    return out


def _yield_index(scenario: Scenario) -> Dict[Tuple[int, str, str], YieldReason]:
    index: Dict[Tuple[int, str, str], YieldReason] = {}
    for ann in scenario.yield_annotations or []:
        key = (ann.t, ann.yielding_id, ann.yielded_to_id)
        # A traffic-light annotation outranks a right-of-way one for the same pair
        if index.get(key) is not YieldReason.TL:
            index[key] = ann.reason
    return index


class GraphBuilder:
    """Builds ``HeteroGraph`` objects for a fixed ``BuilderConfig``."""

    def __init__(self, config: Optional[BuilderConfig] = None):
        self.config = config or BuilderConfig()

    def build(self, scenario: Scenario) -> HeteroGraph:
        cfg = self.config
        ref = reference_point(scenario)

        # Obstacle nodes in (obstacle_id, t) order
        rows = []
        for obstacle in sorted(scenario.obstacles, key=lambda o: o.obstacle_id):
            type_idx = index_of(ObstacleType, obstacle.type)
            role_idx = index_of(ObstacleRole, obstacle.role)
            for s in obstacle.states:
                rows.append((obstacle.obstacle_id, s.t, s.x, s.y, s.heading, s.vx, s.vy,
                             s.length, s.width, type_idx, role_idx))
        if not rows:
            raise GraphBuildError(scenario.scenario_id, "scenario has no obstacle states")

        obstacle_ids = np.array([r[0] for r in rows], dtype=object)
        node_t = np.array([r[1] for r in rows], dtype=np.int64)
        num = np.array([r[2:9] for r in rows], dtype=np.float64)
        _, _, heading, vx, vy, length, width = num.T
        xy_q = to_grid(num[:, :2])
        origin_q = np.median(xy_q, axis=0)
        pos = grid_offset(xy_q, origin_q)
        cx, cy = pos.T
        type_idx = np.array([r[9] for r in rows], dtype=np.int64)
        role_idx = np.array([r[10] for r in rows], dtype=np.int64)
        speed = np.hypot(vx, vy)

        obstacle_x = np.concatenate(
            [
                np.stack([cx, cy, np.cos(heading), np.sin(heading), vx, vy, speed, length, width], axis=1),
                _one_hot(type_idx, len(ObstacleType)),
                _one_hot(role_idx, len(ObstacleRole)),
                sinusoidal_pe_table(node_t, cfg.pe_dim),
            ],
            axis=1,
        )

        # Road nodes: segments whose centerline meets the dilated obstacle bounding box
        lo = pos.min(axis=0) - cfg.road_buffer
        hi = pos.max(axis=0) + cfg.road_buffer
        polylines: Dict[str, Polyline] = {}
        segments = {}
        for seg in sorted(scenario.road_segments, key=lambda r: r.segment_id):
            pts = grid_offset(to_grid(seg.centerline), origin_q)
            line = Polyline(pts, seg.widths)
            if line.intersects_box(lo, hi):
                polylines[seg.segment_id] = line
                segments[seg.segment_id] = seg
        segment_ids = np.array(list(polylines), dtype=object)
        seg_index = {sid: k for k, sid in enumerate(segment_ids)}

        road_rows = []
        for sid, line in polylines.items():
            pts, ws = resample_polyline(line.points, line.widths, cfg.centerline_points)
            road_rows.append(np.concatenate([
                pts.reshape(-1),
                ws,
                _one_hot(np.array([index_of(RoadType, segments[sid].type)]), len(RoadType))[0],
            ]))
        road_x = (np.stack(road_rows) if road_rows else np.zeros((0, cfg.road_feature_dim))).astype(np.float32)

        o2r, on_segments = self._obstacle_to_road(pos, polylines, seg_index)
        o2o = self._obstacle_to_obstacle(scenario, obstacle_ids, node_t, pos, heading, vx, vy, on_segments)
        temporal = self._temporal(obstacle_ids, node_t, pos)
        r2r = self._road_to_road(polylines, segments, seg_index)

        graph = HeteroGraph(
            scenario_id=scenario.scenario_id,
            obstacle_x=obstacle_x.astype(np.float32),
            obstacle_ids=obstacle_ids,
            obstacle_t=node_t,
            road_x=road_x,
            segment_ids=segment_ids,
            edges={"o2o": o2o, "temporal": temporal, "o2r": o2r, "r2r": r2r},
            reference_point=ref,
        )
        graph.check(cfg.temporal_reach)
        logger.debug(f"Built graph {scenario.scenario_id}: {graph.num_obstacle_nodes} obstacle nodes, "
                     f"{graph.num_road_nodes} road nodes, edges {graph.num_edges()}")
        return graph

    def _obstacle_to_road(
        self, pos: np.ndarray, polylines: Dict[str, Polyline], seg_index: Dict[str, int]
    ) -> Tuple[EdgeTable, List[FrozenSet[str]]]:
        on: List[set] = [set() for _ in range(len(pos))]
        src, dst, attr, subtype = [], [], [], []
        is_on, is_close = (index_of(ObstacleRoadRelation, r) for r in ObstacleRoadRelation)
        for sid, line in polylines.items():
            proj = line.project(pos)
            half = proj.local_width / 2.0
            on_mask = proj.distance < half
            close_mask = ~on_mask & (proj.distance < half + self.config.close_margin)
            for node in np.flatnonzero(on_mask | close_mask):
                kind = is_on if on_mask[node] else is_close
                if kind == is_on:
                    on[node].add(sid)
                src.append(node)
                dst.append(seg_index[sid])
                attr.append([proj.signed_offset[node], proj.fraction[node], kind == is_on, kind == is_close])
                subtype.append(kind)
        table = EdgeTable.from_lists(src, dst, attr, subtype, edge_dims()["o2r"])
        return table, [frozenset(s) for s in on]

    def _obstacle_to_obstacle(
        self,
        scenario: Scenario,
        obstacle_ids: np.ndarray,
        node_t: np.ndarray,
        pos: np.ndarray,
        heading: np.ndarray,
        vx: np.ndarray,
        vy: np.ndarray,
        on_segments: List[FrozenSet[str]],
    ) -> EdgeTable:
        radius = self.config.o2o_radius
        yields = _yield_index(scenario)
        relations = members(ObstacleRelation)
        src_all, dst_all, attr_all, subtype_all = [], [], [], []

        for t in np.unique(node_t):
            idx = np.flatnonzero(node_t == t)
            if len(idx) < 2:
                continue
            ii, jj = np.meshgrid(idx, idx, indexing="ij")
            ii, jj = ii.ravel(), jj.ravel()
            dx = pos[jj, 0] - pos[ii, 0]
            dy = pos[jj, 1] - pos[ii, 1]
            dist = np.hypot(dx, dy)
            keep = (ii != jj) & (dist <= radius)
            if not keep.any():
                continue
            ii, jj, dx, dy, dist = ii[keep], jj[keep], dx[keep], dy[keep], dist[keep]

            lx, ly = rotate_into_frame(dx, dy, heading[ii])
            dvx, dvy = rotate_into_frame(vx[jj] - vx[ii], vy[jj] - vy[ii], heading[ii])
            dh = heading[jj] - heading[ii]
            geometry = np.stack([lx, ly, dvx, dvy, dist, np.cos(dh), np.sin(dh)], axis=1)

            contexts = {
                int(k): NodeContext(obstacle_ids[k], int(t), pos[k, 0], pos[k, 1], heading[k], on_segments[k])
                for k in idx
            }
            kinds = np.array([
                relations.index(classify_o2o_subtype(contexts[int(a)], contexts[int(b)], yields, radius))
                for a, b in zip(ii, jj)
            ], dtype=np.int64)

            src_all.append(ii)
            dst_all.append(jj)
            attr_all.append(np.concatenate([geometry, _one_hot(kinds, len(relations))], axis=1))
            subtype_all.append(kinds)

        dim = edge_dims()["o2o"]
        if not src_all:
            return EdgeTable.empty(dim)
        return EdgeTable.from_lists(
            np.concatenate(src_all), np.concatenate(dst_all), np.concatenate(attr_all), np.concatenate(subtype_all), dim
        )

    def _temporal(self, obstacle_ids: np.ndarray, node_t: np.ndarray, pos: np.ndarray) -> EdgeTable:
        reach = self.config.temporal_reach
        lookup = {(obstacle_ids[k], int(node_t[k])): k for k in range(len(node_t))}
        src, dst, attr = [], [], []
        for k in range(len(node_t)):
            oid, t = obstacle_ids[k], int(node_t[k])
            for delta in range(1, min(reach, t) + 1):
                j = lookup.get((oid, t - delta))
                if j is None:
                    continue
                src.append(j)
                dst.append(k)
                attr.append([delta / reach, pos[k, 0] - pos[j, 0], pos[k, 1] - pos[j, 1]])
        return EdgeTable.from_lists(src, dst, attr, np.zeros(len(src), dtype=np.int64), TEMPORAL_DIM)

    def _road_to_road(self, polylines: Dict[str, Polyline], segments: dict, seg_index: Dict[str, int]) -> EdgeTable:
        relations = members(RoadRelation)
        midpoints = {sid: polyline_midpoint(line.points) for sid, line in polylines.items()}
        declared = set()
        edges = set()
        for sid, seg in segments.items():
            for target, relation in seg.connections:
                declared.add(frozenset((sid, target)))
                if target not in polylines:
                    logger.debug(f"Skipping connection {sid} -> {target}: target not in graph")
                    continue
                edges.add((sid, target, relations.index(relation)))

        intersecting = relations.index(RoadRelation.INTERSECTING)
        ids = list(polylines)
        for a_pos, a in enumerate(ids):
            for b in ids[a_pos + 1:]:
                if frozenset((a, b)) in declared:
                    continue
                if polylines[a].crosses(polylines[b]):
                    edges.add((a, b, intersecting))
                    edges.add((b, a, intersecting))

        src, dst, attr, subtype = [], [], [], []
        for a, b, kind in sorted(edges):
            d = midpoints[b] - midpoints[a]
            one_hot = np.zeros(len(relations))
            one_hot[kind] = 1.0
            src.append(seg_index[a])
            dst.append(seg_index[b])
            attr.append(np.concatenate([d, one_hot]))
            subtype.append(kind)
        return EdgeTable.from_lists(src, dst, attr, subtype, edge_dims()["r2r"])


def build_graph(scenario: Scenario, config: Optional[BuilderConfig] = None) -> HeteroGraph:
    """Pure conversion of one scenario; see ``GraphBuilder``."""
    return GraphBuilder(config).build(scenario)
