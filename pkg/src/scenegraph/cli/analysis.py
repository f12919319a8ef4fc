import json
from pathlib import Path
from typing import List, Optional, Tuple

import click
import pandas as pd
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from ..config import PipelineSettings
from ..exceptions import ArtifactMismatchError, MissingArtifactError, ScenarioValidationError
from ..models import encode, encode_graphs
from ..schemas import ClusterReport, EvaluationReport
from ..services import CheckpointService, EmbeddingSet, Evaluator, GraphBuilder, cluster as run_cluster, knn_query, plot_embeddings
from ..services.evaluation import sweep, sweep_rows
from ..utils import atomic_write_text
from .common import (
    labeled_set,
    load_graphs,
    model_option,
    pipeline_command,
    read_scenarios,
    read_store,
    report_path,
    resolve_model,
    split_scenarios,
)

console = Console()

mcs_option = click.option(
    "--mcs",
    "mcs_values",
    type=int,
    multiple=True,
    help="HDBSCAN min_cluster_size (repeatable; default: evaluation.mcs_values)",
)


def _fmt(value: Optional[float], pattern: str = "{:.3f}") -> str:
    return pattern.format(value) if value is not None else "n/a"


def sweep_table(reports: List[ClusterReport], title: str) -> Table:
    table = Table(title=title)
    table.add_column("mcs", justify="right", style="cyan")
    table.add_column("#clusters", justify="right")
    table.add_column("unclustered", justify="right")
    table.add_column("accuracy", justify="right", style="green")
    table.add_column("silhouette", justify="right")
    for r in reports:
        table.add_row(
            str(r.mcs),
            str(r.num_clusters),
            f"{r.unclustered_ratio:.1%}",
            _fmt(r.multilabel_acc),
            _fmt(r.silhouette) if r.silhouette_status == "ok" else "[dim]undefined[/dim]",
        )
    return table


def member_frame(report: ClusterReport, embeddings: EmbeddingSet) -> pd.DataFrame:
    primaries = report.primary_labels()
    representatives = {sid for c in report.clusters for sid in c.representatives}
    labels = embeddings.label_sets or [frozenset()] * len(embeddings)
    rows = [
        {
            "scenario_id": sid,
            "cluster": c,
            "primary_label": primaries.get(c) or "",
            "labels": ";".join(sorted(label_set)),
            "representative": sid in representatives,
        }
        for sid, c, label_set in zip(report.ids, report.assignment, labels)
    ]
    return pd.DataFrame(rows).sort_values(["cluster", "scenario_id"], kind="stable")


def write_sweep(settings: PipelineSettings, model_kind: str, reports: List[ClusterReport], embeddings: EmbeddingSet) -> None:
    rows = sweep_rows(reports)
    atomic_write_text(report_path(settings, model_kind, "sweep.csv"), pd.DataFrame([r.model_dump() for r in rows]).to_csv(index=False))
    atomic_write_text(
        report_path(settings, model_kind, "sweep.json"),
        json.dumps([r.model_dump(mode="json") for r in rows], indent=2) + "\n",
    )
    for report in reports:
        atomic_write_text(
            report_path(settings, model_kind, f"clusters_mcs{report.mcs}.json"),
            report.model_dump_json(indent=2) + "\n",
        )
        atomic_write_text(
            report_path(settings, model_kind, f"clusters_mcs{report.mcs}.csv"),
            member_frame(report, embeddings).to_csv(index=False),
        )


@click.command("cluster")
@model_option
@mcs_option
@pipeline_command("report_dir")
def cluster(settings: PipelineSettings, model_kind: Optional[str], mcs_values: Tuple[int, ...]):
    """Cluster the embedding store with HDBSCAN over one or more min_cluster_size values."""
    model_kind = resolve_model(settings, model_kind)
    _, embeddings = read_store(settings, model_kind)
    reports = sweep(
        embeddings,
        list(mcs_values) or settings.evaluation.mcs_values,
        n_representatives=settings.evaluation.representatives_per_cluster,
    )
    write_sweep(settings, model_kind, reports, embeddings)

    console.print(sweep_table(reports, f"HDBSCAN sweep ({model_kind}, {len(embeddings)} scenarios)"))
    for report in reports:
        if not report.clusters:
            continue
        table = Table(title=f"Clusters at mcs={report.mcs}", show_lines=False)
        table.add_column("Cluster", justify="right", style="cyan")
        table.add_column("Size", justify="right")
        table.add_column("Primary label", style="green")
        table.add_column("Representatives", style="dim")
        for c in report.clusters:
            table.add_row(str(c.cluster), str(c.size), c.primary_label or "", ", ".join(c.representatives[:3]))
        console.print(table)
    console.print(f"[dim]Reports written to {settings.paths.report_dir}[/dim]")


def _evaluation_panel(report: EvaluationReport) -> Panel:
    lines = [
        f"[bold]Embedding validity:[/bold] {report.validity.rate:.4f} "
        f"[dim](untrained encoder {_fmt(report.validity.random_encoder_rate, '{:.4f}')}, {report.validity.trials} trials)[/dim]",
        f"[bold]Contain accuracy:[/bold] {report.classifier.contain_accuracy:.3f} "
        f"[dim](majority baseline {report.majority_baseline:.3f})[/dim]",
        f"[bold]Sample AUPRC:[/bold] {_fmt(report.classifier.sample_auprc)}",
    ]
    if report.shuffled_control is not None:
        lines.append(f"[bold]Shuffled-label control:[/bold] {report.shuffled_control.contain_accuracy:.3f}")
    if report.holdout is not None:
        lines.append(
            f"[bold]Holdout:[/bold] contain {report.holdout.contain_accuracy:.3f}, "
            f"AUPRC {_fmt(report.holdout.sample_auprc)} [dim]({report.holdout.n_samples} scenarios)[/dim]"
        )
    if report.best_mcs is not None:
        lines.append(f"[bold]Best mcs:[/bold] {report.best_mcs}")
    return Panel("\n".join(lines), title=f"Evaluation: {report.model_kind}", border_style="cyan")


@click.command("evaluate")
@model_option
@mcs_option
@click.option("--holdout", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Holdout scenario file (default: paths.holdout)")
@pipeline_command("cache_dir", "checkpoint_dir", "report_dir")
def evaluate(settings: PipelineSettings, model_kind: Optional[str], mcs_values: Tuple[int, ...], holdout: Optional[Path]):
    """Validity rate, downstream classifier, baselines and the clustering sweep."""
    model_kind = resolve_model(settings, model_kind)
    _, encoder, digest = CheckpointService.load_encoder(CheckpointService.encoder_path(settings, model_kind), settings)
    manifest, embeddings = read_store(settings, model_kind)
    if manifest.checkpoint_hash != digest:
        raise ArtifactMismatchError("Embedding store was written by a different checkpoint; re-run `pyscenegraph embed`")

    scenarios = read_scenarios(settings)
    train_split, test_split = split_scenarios(settings, scenarios)
    test_graphs = load_graphs(settings, test_split, "loading test graphs")

    holdout_set = None
    holdout = holdout or settings.paths.holdout
    if holdout is not None:
        holdout_scenarios = read_scenarios(settings, holdout)
        holdout_graphs = load_graphs(settings, holdout_scenarios, "loading holdout graphs")
        holdout_set = labeled_set(holdout_scenarios, encode_graphs(holdout_graphs, encoder))

    outcome = Evaluator(settings, model_kind).run(
        encoder,
        test_graphs,
        embeddings,
        [s.scenario_id for s in train_split],
        [s.scenario_id for s in test_split],
        holdout=holdout_set,
        mcs_values=list(mcs_values) or None,
    )

    atomic_write_text(report_path(settings, model_kind, "evaluation.json"), outcome.report.model_dump_json(indent=2) + "\n")
    write_sweep(settings, model_kind, outcome.cluster_reports, embeddings)
    meta = CheckpointService.build_meta(
        settings,
        model_kind,
        vocabulary=settings.labels.vocabulary,
        seed=settings.derive_seed("classifier"),
        epochs=settings.classifier.epochs,
        final_loss=outcome.classifier.epoch_losses[-1],
    )
    CheckpointService.save(CheckpointService.classifier_path(settings, model_kind), meta, {"classifier": outcome.classifier.classifier})

    console.print(_evaluation_panel(outcome.report))
    console.print(sweep_table(outcome.cluster_reports, "HDBSCAN sweep"))


@click.command("query")
@click.argument("scenario_id", required=False)
@model_option
@click.option("--scenario-file", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="Embed the first scenario of this file as the query")
@click.option("--k", "-k", type=int, default=None, help="Number of neighbours (default: evaluation.knn_k)")
@click.option("--json", "as_json", is_flag=True, help="Print the ranking as JSON on stdout")
@pipeline_command()
def query(
    settings: PipelineSettings,
    scenario_id: Optional[str],
    model_kind: Optional[str],
    scenario_file: Optional[Path],
    k: Optional[int],
    as_json: bool,
):
    """Rank stored scenarios by cosine distance to a stored or new scenario."""
    if (scenario_id is None) == (scenario_file is None):
        raise click.UsageError("Give exactly one of SCENARIO_ID or --scenario-file")
    model_kind = resolve_model(settings, model_kind)
    _, store = read_store(settings, model_kind)

    if scenario_id is not None:
        matches = [i for i, sid in enumerate(store.ids.tolist()) if sid == scenario_id]
        if not matches:
            raise MissingArtifactError("embedding", scenario_id, "scenario id is not in the embedding store")
        vector, label = store.vectors[matches[0]], scenario_id
    else:
        scenarios = read_scenarios(settings, scenario_file)
        if not scenarios:
            raise ScenarioValidationError(None, "<file>", f"{scenario_file} holds no scenarios")
        _, encoder, _ = CheckpointService.load_encoder(CheckpointService.encoder_path(settings, model_kind), settings)
        vector = encode(GraphBuilder(settings.builder).build(scenarios[0]), encoder)
        label = scenarios[0].scenario_id

    k = min(k or settings.evaluation.knn_k, len(store))
    ranking = knn_query(store, vector, k)

    if as_json:
        click.echo(json.dumps([{"scenario_id": sid, "distance": d} for sid, d in ranking]))
        return
    labels = dict(zip(store.ids.tolist(), store.label_sets or [frozenset()] * len(store)))
    table = Table(title=f"{k} nearest to {label} ({model_kind})")
    table.add_column("#", justify="right", style="dim")
    table.add_column("Scenario", style="cyan")
    table.add_column("Distance", justify="right")
    table.add_column("Labels", style="green")
    for rank, (sid, distance) in enumerate(ranking, start=1):
        table.add_row(str(rank), sid, f"{distance:.4f}", ", ".join(sorted(labels[sid])))
    console.print(table)


@click.command("plot")
@model_option
@click.option("--mcs", type=int, default=None, help="Colour by HDBSCAN clusters at this min_cluster_size (default: by label set)")
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Output .svg or .png")
@pipeline_command("report_dir")
def plot(settings: PipelineSettings, model_kind: Optional[str], mcs: Optional[int], output: Optional[Path]):
    """2-D PCA scatter of the embedding store."""
    model_kind = resolve_model(settings, model_kind)
    _, embeddings = read_store(settings, model_kind)
    assignment = run_cluster(embeddings, mcs, n_representatives=0).assignment if mcs is not None else None
    output = output or report_path(settings, model_kind, "embeddings.svg")
    title = f"{model_kind} embeddings" + (f" (HDBSCAN mcs={mcs})" if mcs is not None else "")
    plot_embeddings(embeddings, output, assignment, title, settings.derive_seed("plot"))
    console.print(f"[green]✓[/green] Wrote {output}")

