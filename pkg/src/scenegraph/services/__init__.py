# graph_builder first: models import graph types from it
from .graph_builder import GraphBuilder, HeteroGraph, EdgeTable, build_graph, edge_dims, feature_layout
from .scenario_service import ScenarioService, EgoSignature
from .synthetic import SyntheticGenerator, generate_synthetic
from .graph_cache import GraphCache
from .augment import GraphAugmentor, sample_view
from .training import SSLTrainer, TrainResult, train
from .checkpoint import CheckpointService
from .embedding_store import EmbeddingSet, EmbeddingStore
from .evaluation import Evaluator, EvaluationOutcome, cluster, knn_query
from .plotting import plot_embeddings

__all__ = [
    # Scenarios
    "ScenarioService",
    "EgoSignature",
    "SyntheticGenerator",
    "generate_synthetic",
    # Graphs
    "GraphBuilder",
    "HeteroGraph",
    "EdgeTable",
    "build_graph",
    "edge_dims",
    "feature_layout",
    "GraphCache",
    "GraphAugmentor",
    "sample_view",
    # Training
    "SSLTrainer",
    "TrainResult",
    "train",
    "CheckpointService",
    # Embeddings and evaluation
    "EmbeddingSet",
    "EmbeddingStore",
    "Evaluator",
    "EvaluationOutcome",
    "cluster",
    "knn_query",
    "plot_embeddings",
]
