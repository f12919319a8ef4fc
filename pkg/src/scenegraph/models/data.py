from typing import Sequence

import numpy as np
import torch
from torch_geometric.data import Batch, HeteroData

from ..exceptions import GraphBuildError
from ..services.graph_builder import HeteroGraph

OBSTACLE, ROAD = "obstacle", "road"
O2O = (OBSTACLE, "o2o", OBSTACLE)
TEMPORAL = (OBSTACLE, "temporal", OBSTACLE)
R2O = (ROAD, "r2o", OBSTACLE)
R2R = (ROAD, "r2r", ROAD)
RELATIONS = (O2O, TEMPORAL, R2O, R2R)


def _index(src: np.ndarray, dst: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.stack([src, dst]).astype(np.int64)).reshape(2, -1)


def to_hetero_data(graph: HeteroGraph, dtype: torch.dtype = torch.float32) -> HeteroData:
    """Tensor view of a graph; obstacle -> road edges are flipped into road -> obstacle."""
    if graph.num_obstacle_nodes == 0:
        raise GraphBuildError(graph.scenario_id, "graph has no obstacle nodes")

    data = HeteroData()
    data[OBSTACLE].x = torch.as_tensor(graph.obstacle_x, dtype=dtype)
    data[ROAD].x = torch.as_tensor(graph.road_x, dtype=dtype)

    for relation, key in ((O2O, "o2o"), (TEMPORAL, "temporal"), (R2R, "r2r")):
        table = graph.edges[key]
        data[relation].edge_index = _index(table.src, table.dst)
        data[relation].edge_attr = torch.as_tensor(table.attr, dtype=dtype).reshape(len(table), table.dim)

    o2r = graph.edges["o2r"]
    data[R2O].edge_index = _index(o2r.dst, o2r.src)
    data[R2O].edge_attr = torch.as_tensor(o2r.attr, dtype=dtype).reshape(len(o2r), o2r.dim)
    return data


def collate(graphs: Sequence[HeteroGraph], dtype: torch.dtype = torch.float32) -> Batch:
    return Batch.from_data_list([to_hetero_data(g, dtype) for g in graphs])
