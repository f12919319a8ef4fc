from .conv import EdgeSageConv, edge_sage_forward
from .data import to_hetero_data, collate, RELATIONS
from .encoder import HeteroEncoder, encode, encode_graphs
from .heads import Predictor, Projector, Classifier

__all__ = [
    "EdgeSageConv",
    "edge_sage_forward",
    "to_hetero_data",
    "collate",
    "RELATIONS",
    "HeteroEncoder",
    "encode",
    "encode_graphs",
    "Predictor",
    "Projector",
    "Classifier",
]
