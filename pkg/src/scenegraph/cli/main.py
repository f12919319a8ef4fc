import os
from pathlib import Path
from typing import Optional

import click
from rich.console import Console
from rich.table import Table

from .. import __version__
from ..exceptions import ScenegraphError
from .analysis import cluster, evaluate, plot, query
from .common import fail
from .data import build, generate
from .model import embed, train

console = Console()


@click.group()
@click.version_option(version=__version__, prog_name="pyscenegraph")
def cli():
    """pyscenegraph - traffic scenario graphs, self-supervised embeddings and clustering

    Typical run: generate -> build -> train -> embed -> cluster / evaluate / query / plot.
    """
    pass


cli.add_command(generate)
cli.add_command(build)
cli.add_command(train)
cli.add_command(embed)
cli.add_command(cluster)
cli.add_command(evaluate)
cli.add_command(query)
cli.add_command(plot)


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), default=None, help="TOML config file")
@click.option("--show-values", is_flag=True, help="Show every configuration value")
def config(config_path: Optional[Path], show_values: bool):
    """Display the effective configuration"""
    from ..config import load_settings

    try:
        settings = load_settings(config_path)
    except ScenegraphError as e:
        fail(e.to_error_response())

    console.print("\n[bold]pyscenegraph configuration[/bold]\n")

    toml_file = config_path or Path(os.getcwd()) / "scenegraph.toml"
    if Path(toml_file).exists():
        console.print(f"[green]✓[/green] Config file: {toml_file}")
    else:
        console.print(f"[yellow]⚠[/yellow]  No config file found at: {toml_file} (using defaults)")

    table = Table(title="Pipeline")
    table.add_column("Setting", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("Seed", str(settings.seed))
    table.add_row("Model", settings.train.model_kind)
    table.add_row("Scenarios", str(settings.paths.scenarios))
    table.add_row("Labels", ", ".join(settings.labels.vocabulary))
    table.add_row("Log level", settings.log_level)
    console.print(table)

    if show_values:
        console.print("\n[bold]Detailed Configuration:[/bold]\n")

        config_table = Table()
        config_table.add_column("Setting", style="cyan")
        config_table.add_column("Value")
        config_table.add_column("Description", style="dim")

        sections = ("paths", "synthetic", "builder", "augment", "train", "classifier", "evaluation")
        for section_name in sections:
            section = getattr(settings, section_name)
            config_table.add_row(f"[bold]{section_name}[/bold]", "", "")
            for name, field in type(section).model_fields.items():
                config_table.add_row(f"  {name}", str(getattr(section, name)), field.description or "")

        console.print(config_table)

    console.print("\n[dim]Tip: Use --show-values to see all configuration values[/dim]")
    console.print("[dim]Tip: Override any value with SCENEGRAPH_<SECTION>__<FIELD>, e.g. SCENEGRAPH_TRAIN__EPOCHS=5[/dim]\n")


if __name__ == "__main__":
    cli()
