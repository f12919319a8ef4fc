from typing import Optional, Tuple, Union

import torch
from torch import Tensor, nn
from torch_geometric.nn import MessagePassing

from ..exceptions import ShapeMismatchError


class EdgeSageConv(MessagePassing):
    """
    GraphSAGE convolution with edge features and mean aggregation:

        x_i' = W1 x_i + W2 * mean_{j in N(i)} (x_j + We e_ij) + b

    Targets without incoming edges keep the root term ``W1 x_i + b``.
    """

    def __init__(
        self,
        in_channels: Union[int, Tuple[int, int]],
        out_channels: int,
        edge_dim: int,
        **kwargs,
    ):
        kwargs.setdefault("aggr", "mean")
        super().__init__(**kwargs)

        if isinstance(in_channels, int):
            in_channels = (in_channels, in_channels)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.edge_dim = edge_dim

        src_dim, dst_dim = in_channels
        self.lin_edge = nn.Linear(edge_dim, src_dim, bias=False)
        self.lin_neighbor = nn.Linear(src_dim, out_channels, bias=False)
        self.lin_root = nn.Linear(dst_dim, out_channels, bias=True)

        self.reset_parameters()

    def reset_parameters(self):
        super().reset_parameters()
        for lin in (self.lin_edge, self.lin_neighbor, self.lin_root):
            nn.init.xavier_uniform_(lin.weight)
        nn.init.zeros_(self.lin_root.bias)

    def forward(
        self,
        x: Union[Tensor, Tuple[Tensor, Tensor]],
        edge_index: Tensor,
        edge_attr: Tensor,
    ) -> Tensor:
        if isinstance(x, Tensor):
            x = (x, x)
        x_src, x_dst = x
        neighbors = self.propagate(
            edge_index, x=(x_src, x_dst), edge_attr=edge_attr, size=(x_src.size(0), x_dst.size(0))
        )
        return self.lin_root(x_dst) + self.lin_neighbor(neighbors)

    def message(self, x_j: Tensor, edge_attr: Tensor) -> Tensor:
        return x_j + self.lin_edge(edge_attr)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.in_channels}, {self.out_channels}, edge_dim={self.edge_dim})"


def edge_sage_forward(
    layer: EdgeSageConv,
    x_targets: Tensor,
    x_sources: Tensor,
    edges: Tensor,
    edge_feats: Optional[Tensor] = None,
) -> Tensor:
    """
    Apply ``layer`` to an explicit (sources, targets) pair.

    Args:
        edges: ``[2, E]`` index tensor, row 0 source indices, row 1 target indices

    Raises:
        ShapeMismatchError: If any input disagrees with the layer's dimensions
    """
    src_dim, dst_dim = layer.in_channels
    if x_sources.dim() != 2 or x_sources.size(1) != src_dim:
        raise ShapeMismatchError("x_sources", (None, src_dim), tuple(x_sources.shape))
    if x_targets.dim() != 2 or x_targets.size(1) != dst_dim:
        raise ShapeMismatchError("x_targets", (None, dst_dim), tuple(x_targets.shape))
    if edges.dim() != 2 or edges.size(0) != 2:
        raise ShapeMismatchError("edges", (2, None), tuple(edges.shape))
    if edge_feats is None:
        edge_feats = x_sources.new_zeros((edges.size(1), layer.edge_dim))
    if edge_feats.shape != (edges.size(1), layer.edge_dim):
        raise ShapeMismatchError("edge_feats", (edges.size(1), layer.edge_dim), tuple(edge_feats.shape))
    return layer((x_sources, x_targets), edges, edge_feats)
