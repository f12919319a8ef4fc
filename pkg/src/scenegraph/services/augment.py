"""
Stochastic graph views for self-supervised training.

Every function is pure: it returns a new ``HeteroGraph`` and draws randomness only from the
``numpy.random.Generator`` passed in.
"""

from typing import Dict, List, Optional

import numpy as np

from ..config import AugmentConfig, BuilderConfig
from ..exceptions import ShapeMismatchError
from .graph_builder import ColumnGroup, HeteroGraph, feature_layout

NODE_TABLES = {"obstacle": "obstacle_x", "road": "road_x"}


def _check_layout(x: np.ndarray, groups: List[ColumnGroup], node_type: str) -> None:
    width = groups[-1].stop if groups else 0
    if x.shape[1] != width:
        raise ShapeMismatchError(f"{node_type} feature width", width, x.shape[1])


def drop_edges(g: HeteroGraph, p: float, rng: np.random.Generator) -> HeteroGraph:
    """Remove every edge of every type independently with probability ``p``."""
    edges = {}
    for kind, table in g.edges.items():
        keep = rng.random(len(table)) >= p
        edges[kind] = table.select(np.flatnonzero(keep))
    return g.replace(edges=edges)


def drop_attributes(
    g: HeteroGraph,
    p: float,
    rng: np.random.Generator,
    layout: Optional[Dict[str, List[ColumnGroup]]] = None,
    mode: str = "column",
) -> HeteroGraph:
    """
    Zero node-feature columns with probability ``p``.

    In ``column`` mode one decision per column group is shared by every node of the type;
    in ``cell`` mode each (node, group) pair is decided on its own. One-hot blocks are
    always dropped as a whole.
    """
    layout = layout or feature_layout(BuilderConfig())
    changes = {}
    for node_type, attr in NODE_TABLES.items():
        x = getattr(g, attr)
        groups = layout[node_type]
        _check_layout(x, groups, node_type)
        out = x.copy()
        if mode == "column":
            drop = rng.random(len(groups)) < p
            for group, dropped in zip(groups, drop):
                if dropped:
                    out[:, group.columns] = 0.0
        else:
            drop = rng.random((x.shape[0], len(groups))) < p
            for k, group in enumerate(groups):
                out[drop[:, k], group.columns] = 0.0
        changes[attr] = out
    return g.replace(**changes)


def perturb_attributes(
    g: HeteroGraph,
    p: float,
    sigma: float,
    rng: np.random.Generator,
    layout: Optional[Dict[str, List[ColumnGroup]]] = None,
) -> HeteroGraph:
    """Add N(0, sigma^2) noise to each continuous column picked with probability ``p``."""
    layout = layout or feature_layout(BuilderConfig())
    changes = {}
    for node_type, attr in NODE_TABLES.items():
        x = getattr(g, attr)
        groups = [grp for grp in layout[node_type] if not grp.one_hot]
        _check_layout(x, layout[node_type], node_type)
        picked = rng.random(len(groups)) < p
        out = x.astype(np.float64)
        for group, chosen in zip(groups, picked):
            if chosen:
                out[:, group.columns] += rng.normal(0.0, sigma, size=(x.shape[0], 1))
        changes[attr] = out.astype(np.float32) if picked.any() and sigma > 0 else x.copy()
    return g.replace(**changes)


class GraphAugmentor:
    """Draws augmented views: edge dropping, then attribute dropping, then attribute noise."""

    def __init__(self, config: Optional[AugmentConfig] = None, builder: Optional[BuilderConfig] = None):
        self.config = config or AugmentConfig()
        self.layout = feature_layout(builder or BuilderConfig())

    def probabilities(self, rng: np.random.Generator) -> Dict[str, float]:
        cfg = self.config
        if cfg.resample_p:
            low, high = cfg.p_range
            p_edge, p_drop, p_noise = (float(v) for v in rng.uniform(low, high, size=3))
        else:
            p_edge, p_drop, p_noise = cfg.p_edge_drop, cfg.p_attr_drop, cfg.p_attr_noise
        return {"edge_drop": p_edge, "attr_drop": p_drop, "attr_noise": p_noise}

    def sample_view(self, g: HeteroGraph, rng: np.random.Generator) -> HeteroGraph:
        p = self.probabilities(rng)
        view = drop_edges(g, p["edge_drop"], rng)
        view = drop_attributes(view, p["attr_drop"], rng, self.layout, self.config.attr_drop_mode)
        return perturb_attributes(view, p["attr_noise"], self.config.noise_sigma, rng, self.layout)


def sample_view(
    g: HeteroGraph,
    config: Optional[AugmentConfig],
    rng: np.random.Generator,
    builder: Optional[BuilderConfig] = None,
) -> HeteroGraph:
    return GraphAugmentor(config, builder).sample_view(g, rng)
