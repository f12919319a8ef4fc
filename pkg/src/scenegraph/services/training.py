"""
Self-supervised training of the heterogeneous encoder.

Two objectives share one loop:

* ``bgrl``: online encoder + predictor chase an EMA target encoder across two views
  (symmetric cosine loss, no negatives).
* ``graphcl``: one encoder + linear projector, NT-Xent over in-batch negatives.
"""

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import torch
import torch.nn.functional as F
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from torch import Tensor, nn

from ..config import AugmentConfig, BuilderConfig, TrainConfig
from ..exceptions import (
    DegenerateEmbeddingError,
    InsufficientDataError,
    NonFiniteLossError,
    ShapeMismatchError,
)
from ..models import HeteroEncoder, Predictor, Projector, collate
from ..utils import atomic_write_text, console, get_logger
from .augment import GraphAugmentor
from .graph_builder import HeteroGraph, edge_dims

logger = get_logger(__name__)

ZERO_NORM = 1e-12


def bgrl_loss(z1_pred: Tensor, z2_pred: Tensor, z1_tgt: Tensor, z2_tgt: Tensor) -> Tensor:
    """
    -1/2 [cos(p(z1), t(z2)) + cos(p(z2), t(z1))], averaged over the batch.

    Raises:
        DegenerateEmbeddingError: If any vector has zero norm
    """
    tensors = [t if t.dim() == 2 else t.unsqueeze(0) for t in (z1_pred, z2_pred, z1_tgt, z2_tgt)]
    for t in tensors:
        if bool((t.norm(dim=-1) <= ZERO_NORM).any()):
            raise DegenerateEmbeddingError()
    p1, p2, t1, t2 = (F.normalize(t, dim=-1) for t in tensors)
    return -0.5 * ((p1 * t2).sum(dim=-1) + (p2 * t1).sum(dim=-1)).mean()


def graphcl_loss(z1: Tensor, z2: Tensor, temperature: float = 0.5) -> Tensor:
    """
    Symmetric NT-Xent: row i of each view is the positive for row i of the other and
    every other row of the other view is a negative. Mean over the 2N terms.

    Raises:
        InsufficientDataError: If the batch holds fewer than two graphs
    """
    if z1.shape != z2.shape:
        raise ShapeMismatchError("graphcl views", tuple(z1.shape), tuple(z2.shape))
    if z1.size(0) < 2:
        raise InsufficientDataError("Contrastive loss needs at least 2 graphs per batch (no negatives)")
    z1 = F.normalize(z1, dim=-1)
    z2 = F.normalize(z2, dim=-1)
    sim = z1 @ z2.t() / temperature
    labels = torch.arange(z1.size(0), device=z1.device)
    return 0.5 * (F.cross_entropy(sim, labels) + F.cross_entropy(sim.t(), labels))


@torch.no_grad()
def ema_update(target: nn.Module, online: nn.Module, momentum: float) -> None:
    """p_t <- m * p_t + (1 - m) * p_o for every parameter (buffers are left alone)."""
    if not 0.0 <= momentum <= 1.0:
        raise ValueError(f"momentum must be in [0, 1], got {momentum}")
    target_params = dict(target.named_parameters())
    online_params = dict(online.named_parameters())
    if target_params.keys() != online_params.keys():
        raise ShapeMismatchError("ema parameters", sorted(online_params), sorted(target_params))
    for name, p_t in target_params.items():
        p_o = online_params[name]
        if p_t.shape != p_o.shape:
            raise ShapeMismatchError(f"ema parameter {name}", tuple(p_o.shape), tuple(p_t.shape))
        p_t.mul_(momentum).add_(p_o.detach(), alpha=1.0 - momentum)


def momentum_schedule(step: int, total_steps: int, m_base: float) -> float:
    """1 - (1 - m_base) * (cos(pi * t / T) + 1) / 2; 1.0 once t >= T."""
    if total_steps <= 0 or step >= total_steps:
        return 1.0
    return 1.0 - (1.0 - m_base) * (math.cos(math.pi * step / total_steps) + 1.0) / 2.0


def make_batches(n: int, batch_size: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Shuffled index batches; a trailing single-graph batch is folded into the previous one."""
    order = rng.permutation(n)
    batches = [order[i: i + batch_size] for i in range(0, n, batch_size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        batches[-2] = np.concatenate([batches[-2], batches.pop()])
    return batches


@dataclass
class LossRecord:
    step: int
    epoch: int
    loss: float
    momentum: Optional[float]


@dataclass
class TrainResult:
    model_kind: str
    encoder: HeteroEncoder
    heads: Dict[str, nn.Module]
    history: List[LossRecord] = field(default_factory=list)
    steps: int = 0

    def loss_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [vars(r) for r in self.history], columns=["step", "epoch", "loss", "momentum"]
        )

    def epoch_losses(self) -> List[float]:
        frame = self.loss_frame()
        return frame.groupby("epoch", sort=True)["loss"].mean().tolist() if len(frame) else []

    @property
    def final_loss(self) -> Optional[float]:
        return self.history[-1].loss if self.history else None

    def modules(self) -> Dict[str, nn.Module]:
        return {"encoder": self.encoder, **self.heads}

    def write_loss_csv(self, path: Path) -> None:
        atomic_write_text(Path(path), self.loss_frame().to_csv(index=False))


class SSLTrainer:
    """Optimizer loop for either objective; deterministic given ``seed``."""

    def __init__(
        self,
        config: Optional[TrainConfig] = None,
        augment: Optional[AugmentConfig] = None,
        builder: Optional[BuilderConfig] = None,
        seed: int = 0,
        augment_seed: Optional[int] = None,
    ):
        self.config = config or TrainConfig()
        self.builder = builder or BuilderConfig()
        self.augmentor = GraphAugmentor(augment, self.builder)
        self.seed = seed
        self.augment_seed = seed if augment_seed is None else augment_seed

    def build_models(self) -> TrainResult:
        torch.manual_seed(self.seed)
        cfg = self.config
        encoder = HeteroEncoder(
            obstacle_dim=self.builder.obstacle_feature_dim,
            road_dim=self.builder.road_feature_dim,
            edge_dims=edge_dims(),
            embedding_dim=cfg.embedding_dim,
        )
        if cfg.model_kind == "bgrl":
            target = copy.deepcopy(encoder)
            for p in target.parameters():
                p.requires_grad_(False)
            heads = {"predictor": Predictor(cfg.embedding_dim, cfg.predictor_hidden_dim), "target": target}
        else:
            heads = {"projector": Projector(cfg.embedding_dim)}
        return TrainResult(model_kind=cfg.model_kind, encoder=encoder, heads=heads)

    def _views(self, graphs: Sequence[HeteroGraph], rng: np.random.Generator):
        first = [self.augmentor.sample_view(g, rng) for g in graphs]
        second = [self.augmentor.sample_view(g, rng) for g in graphs]
        return collate(first), collate(second)

    def _bgrl_step(self, result: TrainResult, b1, b2) -> Tensor:
        predictor, target = result.heads["predictor"], result.heads["target"]
        z1, z2 = result.encoder(b1), result.encoder(b2)
        with torch.no_grad():
            t1, t2 = target(b1), target(b2)
        return bgrl_loss(predictor(z1), predictor(z2), t1, t2)

    def _graphcl_step(self, result: TrainResult, b1, b2) -> Tensor:
        projector = result.heads["projector"]
        return graphcl_loss(projector(result.encoder(b1)), projector(result.encoder(b2)), self.config.temperature)

    def fit(self, graphs: Sequence[HeteroGraph], progress: bool = True) -> TrainResult:
        """
        Train on ``graphs`` for ``config.epochs`` epochs.

        Raises:
            InsufficientDataError: Fewer than two graphs
            NonFiniteLossError: Loss became NaN/Inf (step and batch ids attached)
        """
        cfg = self.config
        if len(graphs) < 2:
            raise InsufficientDataError(f"Training needs at least 2 graphs, got {len(graphs)}")
        if len(graphs) < cfg.batch_size:
            logger.warning(f"Only {len(graphs)} graphs for batch_size={cfg.batch_size}; using one batch per epoch")

        result = self.build_models()
        is_bgrl = cfg.model_kind == "bgrl"
        trainable = list(result.encoder.parameters())
        trainable += list(result.heads["predictor" if is_bgrl else "projector"].parameters())
        optimizer = torch.optim.AdamW(trainable, lr=cfg.learning_rate, weight_decay=cfg.weight_decay)

        epoch_batches = [
            make_batches(len(graphs), cfg.batch_size, np.random.default_rng([self.seed, epoch]))
            for epoch in range(cfg.epochs)
        ]
        total_steps = sum(len(b) for b in epoch_batches)
        result.encoder.train()
        for head in result.heads.values():
            head.train()

        step = 0
        with Progress(
            TextColumn("[bold blue]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TextColumn("loss {task.fields[loss]:.4f}"),
            TimeElapsedColumn(),
            console=console,
            disable=not progress,
        ) as bar:
            task = bar.add_task(f"train {cfg.model_kind}", total=total_steps, loss=float("nan"))
            for epoch, batches in enumerate(epoch_batches):
                for batch_no, index in enumerate(batches):
                    batch = [graphs[i] for i in index]
                    rng = np.random.default_rng([self.augment_seed, epoch, batch_no])
                    b1, b2 = self._views(batch, rng)

                    optimizer.zero_grad()
                    loss = self._bgrl_step(result, b1, b2) if is_bgrl else self._graphcl_step(result, b1, b2)
                    value = float(loss.detach())
                    if not math.isfinite(value):
                        raise NonFiniteLossError(step, [g.scenario_id for g in batch], value)
                    loss.backward()
                    nn.utils.clip_grad_norm_(trainable, cfg.grad_clip_norm)
                    optimizer.step()
                    step += 1

                    momentum = None
                    if is_bgrl:
                        momentum = momentum_schedule(step, total_steps, cfg.m_base)
                        if step % cfg.target_update_interval == 0:
                            ema_update(result.heads["target"], result.encoder, momentum)
                    result.history.append(LossRecord(step, epoch, value, momentum))
                    bar.update(task, advance=1, loss=value)

                epoch_loss = float(np.mean([r.loss for r in result.history if r.epoch == epoch]))
                logger.debug(f"epoch {epoch + 1}/{cfg.epochs} mean loss {epoch_loss:.5f}")

        result.steps = step
        result.encoder.eval()
        logger.info(f"Trained {cfg.model_kind} for {cfg.epochs} epochs ({step} steps), final loss {result.final_loss:.5f}")
        return result


def train(
    graphs: Sequence[HeteroGraph],
    model_kind: str,
    config: Optional[TrainConfig] = None,
    augment: Optional[AugmentConfig] = None,
    builder: Optional[BuilderConfig] = None,
    seed: int = 0,
    progress: bool = False,
) -> TrainResult:
    config = (config or TrainConfig()).model_copy(update={"model_kind": model_kind})
    return SSLTrainer(config, augment, builder, seed).fit(graphs, progress=progress)
