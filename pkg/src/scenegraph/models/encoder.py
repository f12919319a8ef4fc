from typing import Dict, Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F
from torch import Tensor, nn
from torch_geometric.data import HeteroData
from torch_geometric.nn import HeteroConv, global_max_pool, global_mean_pool
from torch_geometric.utils import scatter

from ..exceptions import GraphBuildError
from ..services.graph_builder import HeteroGraph, edge_dims as default_edge_dims
from .conv import EdgeSageConv
from .data import O2O, OBSTACLE, R2O, R2R, RELATIONS, ROAD, TEMPORAL, collate


class HeteroEncoder(nn.Module):
    """
    Three heterogeneous EdgeSage layers followed by min/max/mean pooling over obstacle nodes.

    Per layer, road nodes are updated from road -> road edges and obstacle nodes take the
    mean of the o2o, temporal and road -> obstacle convolutions. Batch norm (per node type
    and layer) and ReLU sit between layers; the last layer has no ReLU.
    """

    def __init__(
        self,
        obstacle_dim: int = 31,
        road_dim: int = 33,
        edge_dims: Optional[Dict[str, int]] = None,
        obstacle_hidden: Sequence[int] = (32, 64, 128),
        road_hidden: Sequence[int] = (64, 128, 256),
        embedding_dim: int = 128,
        bn_momentum: float = 0.1,
    ):
        super().__init__()
        edge_dims = dict(edge_dims or default_edge_dims())
        self.hparams = {
            "obstacle_dim": obstacle_dim,
            "road_dim": road_dim,
            "edge_dims": edge_dims,
            "obstacle_hidden": list(obstacle_hidden),
            "road_hidden": list(road_hidden),
            "embedding_dim": embedding_dim,
        }

        self.convs = nn.ModuleList()
        self.norms = nn.ModuleList()
        d_obs, d_road = obstacle_dim, road_dim
        for h_obs, h_road in zip(obstacle_hidden, road_hidden):
            self.convs.append(
                HeteroConv(
                    {
                        O2O: EdgeSageConv((d_obs, d_obs), h_obs, edge_dims["o2o"]),
                        TEMPORAL: EdgeSageConv((d_obs, d_obs), h_obs, edge_dims["temporal"]),
                        R2O: EdgeSageConv((d_road, d_obs), h_obs, edge_dims["o2r"]),
                        R2R: EdgeSageConv((d_road, d_road), h_road, edge_dims["r2r"]),
                    },
                    aggr="mean",
                )
            )
            self.norms.append(
                nn.ModuleDict(
                    {
                        OBSTACLE: nn.BatchNorm1d(h_obs, momentum=bn_momentum),
                        ROAD: nn.BatchNorm1d(h_road, momentum=bn_momentum),
                    }
                )
            )
            d_obs, d_road = h_obs, h_road

        self.pool = nn.Linear(3 * d_obs, embedding_dim)
        nn.init.xavier_uniform_(self.pool.weight)
        nn.init.zeros_(self.pool.bias)

    @property
    def embedding_dim(self) -> int:
        return self.hparams["embedding_dim"]

    def _normalize(self, norm: nn.BatchNorm1d, h: Tensor) -> Tensor:
        # Batch statistics need at least two rows
        if h.size(0) == 0 or (self.training and h.size(0) < 2):
            return h
        return norm(h)

    def node_embeddings(self, data: HeteroData) -> Dict[str, Tensor]:
        x_dict = {OBSTACLE: data[OBSTACLE].x, ROAD: data[ROAD].x}
        edge_index_dict = {rel: data[rel].edge_index for rel in RELATIONS}
        edge_attr_dict = {rel: data[rel].edge_attr for rel in RELATIONS}

        last = len(self.convs) - 1
        for layer, (conv, norms) in enumerate(zip(self.convs, self.norms)):
            out = conv(x_dict, edge_index_dict, edge_attr_dict=edge_attr_dict)
            x_dict = {}
            for node_type, h in out.items():
                h = self._normalize(norms[node_type], h)
                x_dict[node_type] = F.relu(h) if layer < last else h
        return x_dict

    def forward(self, data: HeteroData) -> Tensor:
        h = self.node_embeddings(data)[OBSTACLE]
        if h.size(0) == 0:
            raise GraphBuildError("<batch>", "graph has no obstacle nodes")

        store = data[OBSTACLE]
        batch = getattr(store, "batch", None)
        if batch is None:
            batch = h.new_zeros(h.size(0), dtype=torch.long)
        num_graphs = int(getattr(data, "num_graphs", 1) or 1)

        pooled = torch.cat(
            [
                scatter(h, batch, dim=0, dim_size=num_graphs, reduce="min"),
                global_max_pool(h, batch, num_graphs),
                global_mean_pool(h, batch, num_graphs),
            ],
            dim=1,
        )
        return self.pool(pooled)


@torch.no_grad()
def encode_graphs(
    graphs: Sequence[HeteroGraph], encoder: HeteroEncoder, batch_size: int = 64
) -> np.ndarray:
    """Embeddings (float32, one row per graph) with the encoder in evaluation mode."""
    was_training = encoder.training
    encoder.eval()
    dtype = next(encoder.parameters()).dtype
    try:
        chunks = [
            encoder(collate(graphs[i: i + batch_size], dtype)).cpu().numpy()
            for i in range(0, len(graphs), batch_size)
        ]
    finally:
        encoder.train(was_training)
    if not chunks:
        return np.zeros((0, encoder.embedding_dim), dtype=np.float32)
    return np.concatenate(chunks).astype(np.float32)


def encode(graph: HeteroGraph, encoder: HeteroEncoder) -> np.ndarray:
    return encode_graphs([graph], encoder)[0]
