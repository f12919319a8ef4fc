"""
On-disk cache of built graphs, one file per scenario under ``<cache_dir>/<builder digest>/``.

File layout (all integers little-endian):

    magic     4 bytes  b"SCGR"
    version   uint32
    length    uint32   byte length of the manifest
    manifest  UTF-8 JSON (``GraphManifest``)
    tables    obstacle_x float32 [n_obs, d_obs], obstacle_t uint32 [n_obs],
              road_x float32 [n_road, d_road], then per edge type in
              ("o2o", "temporal", "o2r", "r2r") order: src uint32 [E], dst uint32 [E],
              subtype uint32 [E], attr float32 [E, d_edge]
"""

import re
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from pydantic import ValidationError

from ..schemas.manifest import GRAPH_FORMAT_VERSION, GraphCounts, GraphManifest
from ..schemas.scenario import Scenario
from ..utils import atomic_write_bytes, content_digest, get_logger, short_digest
from .graph_builder import EDGE_TYPES, EdgeTable, GraphBuilder, HeteroGraph

logger = get_logger(__name__)

MAGIC = b"SCGR"


class _Reader:
    def __init__(self, blob: bytes, offset: int):
        self.blob = blob
        self.offset = offset

    def take(self, dtype: str, shape: Tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape)) if shape else 1
        if count == 0:
            return np.zeros(shape, dtype=dtype)
        arr = np.frombuffer(self.blob, dtype=dtype, count=count, offset=self.offset)
        self.offset += arr.nbytes
        return arr.reshape(shape)


def encode_graph(graph: HeteroGraph, manifest: GraphManifest) -> bytes:
    header = manifest.model_dump_json().encode("utf-8")
    chunks = [MAGIC, np.array([GRAPH_FORMAT_VERSION, len(header)], dtype="<u4").tobytes(), header]
    chunks.append(graph.obstacle_x.astype("<f4").tobytes())
    chunks.append(graph.obstacle_t.astype("<u4").tobytes())
    chunks.append(graph.road_x.astype("<f4").tobytes())
    for kind in EDGE_TYPES:
        table = graph.edges[kind]
        chunks.append(table.src.astype("<u4").tobytes())
        chunks.append(table.dst.astype("<u4").tobytes())
        chunks.append(table.subtype.astype("<u4").tobytes())
        chunks.append(table.attr.astype("<f4").tobytes())
    return b"".join(chunks)


def decode_graph(blob: bytes) -> Tuple[GraphManifest, HeteroGraph]:
    """
    Raises:
        ValueError: If the blob is not a graph file of the current version
    """
    if blob[:4] != MAGIC:
        raise ValueError("not a graph cache file")
    version, length = np.frombuffer(blob, dtype="<u4", count=2, offset=4)
    if version != GRAPH_FORMAT_VERSION:
        raise ValueError(f"unsupported graph cache version {version}")
    manifest = GraphManifest.model_validate_json(blob[12: 12 + int(length)])
    counts = manifest.counts

    r = _Reader(blob, 12 + int(length))
    obstacle_x = r.take("<f4", (counts.obstacle_nodes, counts.obstacle_dim)).astype(np.float32)
    obstacle_t = r.take("<u4", (counts.obstacle_nodes,)).astype(np.int64)
    road_x = r.take("<f4", (counts.road_nodes, counts.road_dim)).astype(np.float32)
    edges = {}
    for kind in EDGE_TYPES:
        n, d = counts.edges[kind], counts.edge_dims[kind]
        src = r.take("<u4", (n,)).astype(np.int64)
        dst = r.take("<u4", (n,)).astype(np.int64)
        subtype = r.take("<u4", (n,)).astype(np.int64)
        attr = r.take("<f4", (n, d)).astype(np.float32)
        edges[kind] = EdgeTable(src, dst, attr, subtype)
    if r.offset != len(blob):
        raise ValueError(f"trailing bytes in graph cache file ({len(blob) - r.offset})")

    graph = HeteroGraph(
        scenario_id=manifest.scenario_id,
        obstacle_x=obstacle_x,
        obstacle_ids=np.array(manifest.obstacle_ids, dtype=object),
        obstacle_t=obstacle_t,
        road_x=road_x,
        segment_ids=np.array(manifest.segment_ids, dtype=object),
        edges=edges,
        reference_point=tuple(manifest.reference_point),
    )
    return manifest, graph


class GraphCache:
    """Build-or-load access to graphs keyed by (scenario_id, builder config digest)."""

    def __init__(self, cache_dir: Path, builder: Optional[GraphBuilder] = None):
        self.builder = builder or GraphBuilder()
        self.builder_digest = short_digest(self.builder.config)
        self.directory = Path(cache_dir) / self.builder_digest

    def path_for(self, scenario_id: str) -> Path:
        return self.directory / f"{re.sub(r'[^A-Za-z0-9._-]', '_', scenario_id)}.graph"

    def _manifest(self, scenario: Scenario, graph: HeteroGraph, digest: str) -> GraphManifest:
        return GraphManifest(
            scenario_id=scenario.scenario_id,
            scenario_digest=digest,
            builder_digest=self.builder_digest,
            builder=self.builder.config.model_dump(),
            reference_point=graph.reference_point,
            counts=GraphCounts(
                obstacle_nodes=graph.num_obstacle_nodes,
                road_nodes=graph.num_road_nodes,
                obstacle_dim=graph.obstacle_x.shape[1],
                road_dim=graph.road_x.shape[1],
                edges=graph.num_edges(),
                edge_dims={k: v.dim for k, v in graph.edges.items()},
            ),
            obstacle_ids=[str(i) for i in graph.obstacle_ids],
            segment_ids=[str(i) for i in graph.segment_ids],
        )

    def load(self, scenario: Scenario, digest: Optional[str] = None) -> Optional[HeteroGraph]:
        """Cached graph if present and fresh; ``None`` otherwise."""
        path = self.path_for(scenario.scenario_id)
        if not path.is_file():
            return None
        digest = digest or content_digest(scenario)
        try:
            manifest, graph = decode_graph(path.read_bytes())
        except (ValueError, ValidationError) as e:
            logger.warning(f"Rebuilding unreadable graph cache {path}: {e}")
            return None
        if manifest.scenario_digest != digest or manifest.builder_digest != self.builder_digest:
            logger.debug(f"Stale graph cache for {scenario.scenario_id}")
            return None
        logger.debug(f"Graph cache hit for {scenario.scenario_id}")
        return graph

    def get(self, scenario: Scenario) -> HeteroGraph:
        digest = content_digest(scenario)
        graph = self.load(scenario, digest)
        if graph is None:
            graph = self.builder.build(scenario)
            atomic_write_bytes(self.path_for(scenario.scenario_id), encode_graph(graph, self._manifest(scenario, graph, digest)))
        return graph
