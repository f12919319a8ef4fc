"""
Tests for the self-supervised objectives and the training loop.
"""
import copy
import math

import numpy as np
import pytest
import torch
from torch import nn
from torch.func import functional_call

from scenegraph.config import TrainConfig
from scenegraph.exceptions import DegenerateEmbeddingError, InsufficientDataError, ShapeMismatchError
from scenegraph.models import HeteroEncoder, Predictor, collate
from scenegraph.services import GraphBuilder, SSLTrainer, train
from scenegraph.services.augment import drop_edges
from scenegraph.services.training import (
    bgrl_loss,
    ema_update,
    graphcl_loss,
    make_batches,
    momentum_schedule,
)

from .factories import lane, make_scenario, vehicle


def _tiny_config(**changes) -> TrainConfig:
    values = dict(epochs=2, batch_size=4, embedding_dim=16, predictor_hidden_dim=32)
    values.update(changes)
    return TrainConfig(**values)


@pytest.fixture(scope="module")
def graphs(synthetic_scenarios, builder_config):
    builder = GraphBuilder(builder_config)
    return [builder.build(s) for s in synthetic_scenarios[:8]]


class TestBgrlLoss:
    def test_identical_vectors_reach_minimum(self):
        z = torch.nn.functional.normalize(torch.randn(1, 8), dim=-1)
        assert bgrl_loss(z, z, z, z).item() == pytest.approx(-1.0)

    def test_orthogonal_prediction_is_zero(self):
        e1, e2 = torch.tensor([[1.0, 0.0]]), torch.tensor([[0.0, 1.0]])
        assert bgrl_loss(e1, e1, e2, e2).item() == pytest.approx(0.0)

    def test_scale_free(self):
        torch.manual_seed(0)
        p1, p2, t1, t2 = torch.randn(4, 3, 8).unbind(0)
        torch.testing.assert_close(bgrl_loss(p1, p2, t1, t2), bgrl_loss(3 * p1, p2, t1, 0.5 * t2))

    def test_matches_naive_loop(self):
        torch.manual_seed(1)
        p1, p2, t1, t2 = torch.randn(4, 4, 16, dtype=torch.float64).unbind(0)

        def cos(a, b):
            return float(a @ b) / (float(a.norm()) * float(b.norm()))

        expected = np.mean([-0.5 * (cos(p1[i], t2[i]) + cos(p2[i], t1[i])) for i in range(4)])
        assert bgrl_loss(p1, p2, t1, t2).item() == pytest.approx(expected, abs=1e-6)

    def test_zero_vector_is_collapse(self):
        z = torch.ones(2, 4)
        with pytest.raises(DegenerateEmbeddingError):
            bgrl_loss(z, z, torch.zeros(2, 4), z)


class TestBgrlChainGradients:
    """Encoder, predictor and loss differentiated end to end in float64."""

    @pytest.fixture
    def views(self, builder_config):
        scenario = make_scenario(
            [
                vehicle("a", [[t, 3.0 * t, 0.2, 0.05, 6.0, 0.3, 4.5, 2.0] for t in range(3)], is_ego=True),
                vehicle("b", [[t, 9.0 + 2.5 * t, -1.1, -0.1, 5.0, -0.2, 4.0, 1.8] for t in range(2)]),
            ],
            num_timesteps=3,
            road_segments=[lane("main", [[-20.0, 0.0], [40.0, 0.0]])],
        )
        graph = GraphBuilder(builder_config).build(scenario)
        assert graph.num_obstacle_nodes == 5
        second = drop_edges(graph, 0.3, np.random.default_rng(4))
        return collate([graph], torch.float64), collate([second], torch.float64)

    def test_gradcheck_over_encoder_and_predictor(self, views, builder_config):
        torch.manual_seed(5)
        encoder = HeteroEncoder(
            builder_config.obstacle_feature_dim,
            builder_config.road_feature_dim,
            obstacle_hidden=(4, 4, 4),
            road_hidden=(3, 3, 3),
            embedding_dim=4,
        ).double()
        predictor = Predictor(4, 6).double()
        target = copy.deepcopy(encoder).eval()
        with torch.no_grad():
            t1, t2 = target(views[0]), target(views[1])

        enc_names = [n for n, _ in encoder.named_parameters()]
        pred_names = [n for n, _ in predictor.named_parameters()]

        def loss(*params):
            enc_params = dict(zip(enc_names, params[: len(enc_names)]))
            pred_params = dict(zip(pred_names, params[len(enc_names):]))
            z1 = functional_call(encoder, enc_params, (views[0],))
            z2 = functional_call(encoder, enc_params, (views[1],))
            p1 = functional_call(predictor, pred_params, (z1,))
            p2 = functional_call(predictor, pred_params, (z2,))
            return bgrl_loss(p1, p2, t1, t2)

        params = tuple(
            p.detach().clone().requires_grad_(True)
            for module in (encoder, predictor)
            for p in module.parameters()
        )
        assert torch.autograd.gradcheck(loss, params, eps=1e-6, atol=1e-5, rtol=1e-3)


class TestGraphclLoss:
    def test_orthogonal_pair_closed_form(self):
        z = torch.eye(2)
        assert graphcl_loss(z, z, temperature=0.5).item() == pytest.approx(math.log(1 + math.exp(-2)))

    def test_high_temperature_gives_log_n(self):
        torch.manual_seed(2)
        z1, z2 = torch.randn(5, 8), torch.randn(5, 8)
        assert graphcl_loss(z1, z2, temperature=1e6).item() == pytest.approx(math.log(5), abs=1e-4)

    def test_batch_permutation_invariance(self):
        torch.manual_seed(3)
        z1, z2 = torch.randn(6, 8), torch.randn(6, 8)
        perm = torch.randperm(6)
        torch.testing.assert_close(graphcl_loss(z1, z2), graphcl_loss(z1[perm], z2[perm]))

    def test_single_graph_has_no_negatives(self):
        with pytest.raises(InsufficientDataError):
            graphcl_loss(torch.ones(1, 4), torch.ones(1, 4))


class TestEma:
    @pytest.fixture
    def pair(self):
        target, online = nn.Linear(2, 1, bias=False), nn.Linear(2, 1, bias=False)
        with torch.no_grad():
            target.weight.fill_(1.0)
            online.weight.fill_(0.0)
        return target, online

    def test_momentum_one_keeps_target(self, pair):
        target, online = pair
        ema_update(target, online, 1.0)
        torch.testing.assert_close(target.weight, torch.ones(1, 2))

    def test_momentum_zero_copies_online(self, pair):
        target, online = pair
        ema_update(target, online, 0.0)
        torch.testing.assert_close(target.weight, online.weight)

    def test_direct_formula(self, pair):
        target, online = pair
        ema_update(target, online, 0.9)
        torch.testing.assert_close(target.weight, torch.full((1, 2), 0.9))

    def test_two_updates_compose(self, pair):
        target, online = pair
        ema_update(target, online, 0.8)
        ema_update(target, online, 0.8)
        torch.testing.assert_close(target.weight, torch.full((1, 2), 0.64))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            ema_update(nn.Linear(2, 1), nn.Linear(3, 1), 0.5)

    def test_momentum_out_of_range(self, pair):
        with pytest.raises(ValueError):
            ema_update(*pair, 1.5)


class TestMomentumSchedule:
    def test_endpoints(self):
        assert momentum_schedule(0, 100, 0.99) == pytest.approx(0.99)
        assert momentum_schedule(100, 100, 0.99) == 1.0
        assert momentum_schedule(50, 100, 0.99) == pytest.approx(1 - 0.01 / 2)

    def test_clamps_past_end(self):
        assert momentum_schedule(250, 100, 0.99) == 1.0

    def test_monotone(self):
        values = [momentum_schedule(t, 40, 0.9) for t in range(41)]
        assert all(a <= b for a, b in zip(values, values[1:]))


class TestMakeBatches:
    def test_covers_every_index_once(self):
        batches = make_batches(10, 4, np.random.default_rng(0))
        assert sorted(np.concatenate(batches).tolist()) == list(range(10))
        assert [len(b) for b in batches] == [4, 4, 2]

    def test_trailing_singleton_is_merged(self):
        batches = make_batches(5, 2, np.random.default_rng(0))
        assert [len(b) for b in batches] == [2, 3]


class TestSSLTrainer:
    def test_bgrl_run(self, graphs, builder_config):
        result = SSLTrainer(_tiny_config(), builder=builder_config, seed=0).fit(graphs, progress=False)
        assert result.steps == 4
        assert len(result.history) == 4
        assert all(math.isfinite(r.loss) for r in result.history)
        assert all(r.momentum is not None for r in result.history)
        assert len(result.epoch_losses()) == 2
        assert set(result.modules()) == {"encoder", "predictor", "target"}

    def test_graphcl_run(self, graphs, builder_config):
        result = train(graphs, "graphcl", _tiny_config(), builder=builder_config, seed=0)
        assert result.model_kind == "graphcl"
        assert set(result.heads) == {"projector"}
        assert all(r.momentum is None for r in result.history)
        assert result.loss_frame().columns.tolist() == ["step", "epoch", "loss", "momentum"]

    def test_deterministic(self, graphs, builder_config):
        first = train(graphs, "bgrl", _tiny_config(), builder=builder_config, seed=5)
        second = train(graphs, "bgrl", _tiny_config(), builder=builder_config, seed=5)
        np.testing.assert_allclose(
            [r.loss for r in first.history], [r.loss for r in second.history], atol=1e-6
        )

    def test_target_is_frozen_between_updates(self, graphs, builder_config):
        trainer = SSLTrainer(_tiny_config(target_update_interval=1000), builder=builder_config, seed=0)
        initial = trainer.build_models().heads["target"].state_dict()
        result = trainer.fit(graphs, progress=False)
        target = result.heads["target"]
        assert not any(p.requires_grad for p in target.parameters())
        for name, p in target.named_parameters():
            torch.testing.assert_close(p, initial[name], rtol=0, atol=0)

    def test_ema_moves_target(self, graphs, builder_config):
        trainer = SSLTrainer(_tiny_config(target_update_interval=1), builder=builder_config, seed=0)
        initial = trainer.build_models().heads["target"].state_dict()
        target = trainer.fit(graphs, progress=False).heads["target"]
        assert any(not torch.equal(p, initial[name]) for name, p in target.named_parameters())

    def test_needs_two_graphs(self, graphs, builder_config):
        with pytest.raises(InsufficientDataError):
            SSLTrainer(_tiny_config(), builder=builder_config).fit(graphs[:1], progress=False)

    def test_loss_csv(self, tmp_path, graphs, builder_config):
        result = train(graphs, "graphcl", _tiny_config(epochs=1), builder=builder_config, seed=0)
        path = tmp_path / "loss.csv"
        result.write_loss_csv(path)
        assert path.read_text().splitlines()[0] == "step,epoch,loss,momentum"
