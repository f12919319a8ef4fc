from typing import Optional

import click
from rich.console import Console
from rich.panel import Panel

from ..config import PipelineSettings
from ..exceptions import InsufficientDataError
from ..models import encode_graphs
from ..services import CheckpointService, EmbeddingStore, SSLTrainer
from .common import (
    labeled_set,
    load_graphs,
    model_option,
    pipeline_command,
    read_scenarios,
    report_path,
    resolve_model,
    split_scenarios,
    store_dir,
)

console = Console()


@click.command("train")
@model_option
@click.option("--epochs", type=int, default=None, help="Override train.epochs")
@click.option("--progress/--no-progress", default=True, help="Show a progress bar")
@pipeline_command("cache_dir", "checkpoint_dir", "report_dir")
def train(settings: PipelineSettings, model_kind: Optional[str], epochs: Optional[int], progress: bool):
    """Train an encoder on the training split."""
    model_kind = resolve_model(settings, model_kind)
    updates = {"model_kind": model_kind}
    if epochs is not None:
        if epochs < 1:
            raise click.BadParameter("epochs must be >= 1", param_hint="--epochs")
        updates["epochs"] = epochs
    config = settings.train.model_copy(update=updates)

    scenarios = read_scenarios(settings)
    train_split, test_split = split_scenarios(settings, scenarios)
    if len(train_split) < 2:
        raise InsufficientDataError(f"Training split holds {len(train_split)} scenarios; need at least 2")
    graphs = load_graphs(settings, train_split, "loading graphs")

    trainer = SSLTrainer(config, settings.augment, settings.builder, settings.train_seed, settings.augment_seed)
    result = trainer.fit(graphs, progress=progress)

    meta = CheckpointService.build_meta(
        settings,
        model_kind,
        seed=settings.train_seed,
        epochs=config.epochs,
        steps=result.steps,
        final_loss=result.final_loss,
    )
    path = CheckpointService.encoder_path(settings, model_kind)
    digest = CheckpointService.save(path, meta, result.modules())
    loss_csv = report_path(settings, model_kind, "loss.csv")
    result.write_loss_csv(loss_csv)

    console.print(Panel(
        f"[green]✓[/green] Training finished\n\n"
        f"[bold]Model:[/bold] {model_kind}\n"
        f"[bold]Graphs:[/bold] {len(graphs)} train / {len(test_split)} held out\n"
        f"[bold]Epochs:[/bold] {config.epochs} ({result.steps} steps)\n"
        f"[bold]Final loss:[/bold] {result.final_loss:.5f}\n"
        f"[bold]Checkpoint:[/bold] {path} [dim]({digest[:12]})[/dim]\n"
        f"[bold]Loss curve:[/bold] {loss_csv}",
        title="Train",
        border_style="green",
    ))


@click.command("embed")
@model_option
@pipeline_command("cache_dir", "embedding_dir")
def embed(settings: PipelineSettings, model_kind: Optional[str]):
    """Embed every scenario with a trained encoder and write the embedding store."""
    model_kind = resolve_model(settings, model_kind)
    meta, encoder, digest = CheckpointService.load_encoder(CheckpointService.encoder_path(settings, model_kind), settings)
    scenarios = read_scenarios(settings)
    graphs = load_graphs(settings, scenarios, "loading graphs")

    embeddings = labeled_set(scenarios, encode_graphs(graphs, encoder))
    directory = store_dir(settings, model_kind)
    manifest = EmbeddingStore.write(directory, embeddings, model_kind, digest)
    console.print(
        f"[green]✓[/green] Wrote {manifest.count} x {manifest.dim} embeddings "
        f"([cyan]{model_kind}[/cyan], checkpoint {digest[:12]}) to {directory}"
    )
