"""
Tests for augmented graph views.
"""
import numpy as np
import pytest

from scenegraph.config import AugmentConfig
from scenegraph.exceptions import ShapeMismatchError
from scenegraph.services import GraphAugmentor, GraphBuilder, feature_layout, sample_view
from scenegraph.services.augment import drop_attributes, drop_edges, perturb_attributes
from scenegraph.services.graph_builder import EdgeTable


@pytest.fixture
def graph(road_scene, builder_config):
    return GraphBuilder(builder_config).build(road_scene)


@pytest.fixture
def layout(builder_config):
    return feature_layout(builder_config)


def _rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


class TestDropEdges:
    def test_zero_probability_keeps_everything(self, graph):
        view = drop_edges(graph, 0.0, _rng())
        for kind, table in graph.edges.items():
            np.testing.assert_array_equal(view.edges[kind].src, table.src)
            np.testing.assert_array_equal(view.edges[kind].attr, table.attr)

    def test_full_probability_removes_everything(self, graph):
        view = drop_edges(graph, 1.0, _rng())
        assert all(n == 0 for n in view.num_edges().values())
        assert view.num_obstacle_nodes == graph.num_obstacle_nodes

    def test_kept_edges_are_a_subset(self, graph):
        view = drop_edges(graph, 0.5, _rng(3))
        for kind, table in graph.edges.items():
            original = set(zip(table.src.tolist(), table.dst.tolist(), table.subtype.tolist()))
            kept = set(zip(view.edges[kind].src.tolist(), view.edges[kind].dst.tolist(), view.edges[kind].subtype.tolist()))
            assert kept <= original


class TestDropAttributes:
    def test_zero_probability_is_identity(self, graph, layout):
        view = drop_attributes(graph, 0.0, _rng(), layout)
        np.testing.assert_array_equal(view.obstacle_x, graph.obstacle_x)
        np.testing.assert_array_equal(view.road_x, graph.road_x)

    def test_full_probability_zeros_all(self, graph, layout):
        view = drop_attributes(graph, 1.0, _rng(), layout)
        assert not view.obstacle_x.any()
        assert not view.road_x.any()

    def test_column_mode_is_shared_across_nodes(self, graph, layout):
        view = drop_attributes(graph, 0.5, _rng(7), layout, mode="column")
        for col in range(graph.obstacle_x.shape[1]):
            changed = view.obstacle_x[:, col] != graph.obstacle_x[:, col]
            if changed.any():
                assert not view.obstacle_x[:, col].any()

    def test_one_hot_blocks_drop_as_a_unit(self, graph, layout):
        type_group = next(g for g in layout["obstacle"] if g.name == "type")
        for seed in range(20):
            view = drop_attributes(graph, 0.5, _rng(seed), layout, mode="cell")
            block = view.obstacle_x[:, type_group.columns]
            original = graph.obstacle_x[:, type_group.columns]
            for row, orig in zip(block, original):
                assert not row.any() or np.array_equal(row, orig)

    def test_input_is_not_mutated(self, graph, layout):
        before = graph.obstacle_x.copy()
        drop_attributes(graph, 1.0, _rng(), layout)
        np.testing.assert_array_equal(graph.obstacle_x, before)

    def test_layout_mismatch(self, graph, layout):
        narrow = graph.replace(obstacle_x=graph.obstacle_x[:, :-2])
        with pytest.raises(ShapeMismatchError):
            drop_attributes(narrow, 0.5, _rng(), layout)


# Upper 0.001 quantile of the chi-squared distribution with one degree of freedom
CHI2_CRITICAL_DF1 = 10.828


def _chi2_binomial(dropped: int, total: int, p: float) -> float:
    """Goodness-of-fit statistic of ``dropped`` out of ``total`` against drop probability ``p``."""
    expected_drop, expected_keep = total * p, total * (1.0 - p)
    kept = total - dropped
    return (dropped - expected_drop) ** 2 / expected_drop + (kept - expected_keep) ** 2 / expected_keep


def _wide_graph(graph, layout, n_obstacles: int, n_roads: int, n_edges: int = 0):
    """Graph with all-ones features so a dropped group is exactly the all-zero group."""
    obs_width, road_width = layout["obstacle"][-1].stop, layout["road"][-1].stop
    o2o = graph.edges["o2o"]
    edges = dict(graph.edges)
    edges["o2o"] = EdgeTable(
        src=np.arange(n_edges) % max(n_obstacles, 1),
        dst=(np.arange(n_edges) + 1) % max(n_obstacles, 1),
        attr=np.ones((n_edges, o2o.attr.shape[1]), dtype=np.float32),
        subtype=np.zeros(n_edges, dtype=np.int64),
    )
    return graph.replace(
        obstacle_x=np.ones((n_obstacles, obs_width), dtype=np.float32),
        obstacle_ids=np.array([f"o{k}" for k in range(n_obstacles)], dtype=object),
        obstacle_t=np.zeros(n_obstacles, dtype=np.int64),
        road_x=np.ones((n_roads, road_width), dtype=np.float32),
        segment_ids=np.array([f"r{k}" for k in range(n_roads)], dtype=object),
        edges=edges,
    )


def _dropped_groups(view, layout):
    """(dropped, total) over every (node, column group) cell of both node types."""
    dropped = total = 0
    for node_type, attr in (("obstacle", "obstacle_x"), ("road", "road_x")):
        x = getattr(view, attr)
        for group in layout[node_type]:
            dropped += int((~x[:, group.columns].any(axis=1)).sum())
            total += x.shape[0]
    return dropped, total


class TestDropRates:
    @pytest.mark.parametrize("p", [0.1, 0.15, 0.2, 0.5])
    def test_edge_drop_rate_fits_p(self, graph, layout, p):
        big = _wide_graph(graph, layout, 50, 2, n_edges=10_000)
        rng = _rng(41)
        dropped = total = 0
        for _ in range(5):
            view = drop_edges(big, p, rng)
            dropped += 10_000 - len(view.edges["o2o"])
            total += 10_000
        assert _chi2_binomial(dropped, total, p) < CHI2_CRITICAL_DF1

    def test_edge_drop_retains_ninety_percent(self, graph, layout):
        big = _wide_graph(graph, layout, 50, 2, n_edges=10_000)
        retained = len(drop_edges(big, 0.1, _rng(43)).edges["o2o"]) / 10_000
        assert retained == pytest.approx(0.9, abs=0.02)

    @pytest.mark.parametrize("p", [0.1, 0.2, 0.5])
    def test_column_drop_rate_fits_p(self, graph, layout, p):
        small = _wide_graph(graph, layout, 1, 1)
        rng = _rng(47)
        dropped = total = 0
        while total < 10_000:
            d, t = _dropped_groups(drop_attributes(small, p, rng, layout, mode="column"), layout)
            dropped, total = dropped + d, total + t
        assert _chi2_binomial(dropped, total, p) < CHI2_CRITICAL_DF1

    def test_column_drop_retains_ninety_percent(self, graph, layout):
        small = _wide_graph(graph, layout, 1, 1)
        rng = _rng(53)
        dropped = total = 0
        while total < 10_000:
            d, t = _dropped_groups(drop_attributes(small, 0.1, rng, layout, mode="column"), layout)
            dropped, total = dropped + d, total + t
        assert 1.0 - dropped / total == pytest.approx(0.9, abs=0.02)

    @pytest.mark.parametrize("p", [0.1, 0.2, 0.5])
    def test_cell_drop_rate_fits_p(self, graph, layout, p):
        wide = _wide_graph(graph, layout, 400, 400)
        rng = _rng(59)
        dropped = total = 0
        while total < 10_000:
            d, t = _dropped_groups(drop_attributes(wide, p, rng, layout, mode="cell"), layout)
            dropped, total = dropped + d, total + t
        assert _chi2_binomial(dropped, total, p) < CHI2_CRITICAL_DF1

    def test_cell_drop_retains_ninety_percent(self, graph, layout):
        n_groups = len(layout["obstacle"]) + len(layout["road"])
        n_nodes = -(-10_000 // n_groups)
        wide = _wide_graph(graph, layout, n_nodes, n_nodes)
        dropped, total = _dropped_groups(drop_attributes(wide, 0.1, _rng(61), layout, mode="cell"), layout)
        assert total >= 10_000
        assert 1.0 - dropped / total == pytest.approx(0.9, abs=0.02)


class TestPerturbAttributes:
    def test_zero_sigma_is_identity(self, graph, layout):
        view = perturb_attributes(graph, 1.0, 0.0, _rng(), layout)
        np.testing.assert_array_equal(view.obstacle_x, graph.obstacle_x)

    def test_one_hot_columns_stay_clean(self, graph, layout):
        view = perturb_attributes(graph, 1.0, 1.0, _rng(), layout)
        for group in layout["obstacle"]:
            if group.one_hot:
                np.testing.assert_array_equal(view.obstacle_x[:, group.columns], graph.obstacle_x[:, group.columns])
        assert not np.array_equal(view.obstacle_x[:, :9], graph.obstacle_x[:, :9])


class TestGraphAugmentor:
    def test_deterministic_for_seed(self, graph, builder_config):
        augmentor = GraphAugmentor(AugmentConfig(), builder_config)
        first = augmentor.sample_view(graph, _rng(42))
        second = augmentor.sample_view(graph, _rng(42))
        np.testing.assert_array_equal(first.obstacle_x, second.obstacle_x)
        for kind in graph.edges:
            np.testing.assert_array_equal(first.edges[kind].src, second.edges[kind].src)

    def test_views_differ_across_draws(self, graph, builder_config):
        augmentor = GraphAugmentor(AugmentConfig(), builder_config)
        rng = _rng(1)
        first = augmentor.sample_view(graph, rng)
        second = augmentor.sample_view(graph, rng)
        assert not np.array_equal(first.obstacle_x, second.obstacle_x)

    def test_fixed_probabilities(self, builder_config):
        config = AugmentConfig(resample_p=False, p_edge_drop=0.3, p_attr_drop=0.2, p_attr_noise=0.1)
        p = GraphAugmentor(config, builder_config).probabilities(_rng())
        assert p == {"edge_drop": 0.3, "attr_drop": 0.2, "attr_noise": 0.1}

    def test_resampled_probabilities_in_range(self, builder_config):
        augmentor = GraphAugmentor(AugmentConfig(p_range=(0.1, 0.2)), builder_config)
        rng = _rng()
        for _ in range(50):
            assert all(0.1 <= v <= 0.2 for v in augmentor.probabilities(rng).values())

    def test_no_augmentation(self, graph, builder_config):
        config = AugmentConfig(resample_p=False, p_edge_drop=0.0, p_attr_drop=0.0, p_attr_noise=0.0)
        view = sample_view(graph, config, _rng(), builder_config)
        np.testing.assert_array_equal(view.obstacle_x, graph.obstacle_x)
        assert view.num_edges() == graph.num_edges()

    def test_view_keeps_graph_structure(self, synthetic_scenarios, builder_config):
        augmentor = GraphAugmentor(AugmentConfig(), builder_config)
        builder = GraphBuilder(builder_config)
        rng = _rng(5)
        for scenario in synthetic_scenarios[:4]:
            graph = builder.build(scenario)
            view = augmentor.sample_view(graph, rng)
            view.check(builder_config.temporal_reach)
            assert view.obstacle_x.shape == graph.obstacle_x.shape
            assert view.road_x.shape == graph.road_x.shape
            assert all(view.num_edges()[k] <= graph.num_edges()[k] for k in graph.edges)
