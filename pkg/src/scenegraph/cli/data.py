from pathlib import Path
from typing import Optional, Tuple

import click
import numpy as np
from rich.console import Console
from rich.table import Table

from ..config import FAMILIES, PipelineSettings
from ..services import ScenarioService, SyntheticGenerator
from ..services.synthetic import LOCATIONS
from .common import BINARY_SUFFIXES, load_graphs, pipeline_command, read_scenarios

console = Console()


@click.command("generate")
@click.option("--family", "-f", "families", multiple=True, type=click.Choice(list(FAMILIES)), help="Family to generate (repeatable; default: synthetic.families)")
@click.option("--count", "-n", type=int, default=None, help="Scenarios per family (default: synthetic.count_per_family)")
@click.option("--location", "-l", type=click.Choice(sorted(LOCATIONS)), default=None, help="Location preset (default: synthetic.location)")
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Output file (.jsonl, or .bin for the binary variant)")
@pipeline_command()
def generate(
    settings: PipelineSettings,
    families: Tuple[str, ...],
    count: Optional[int],
    location: Optional[str],
    output: Optional[Path],
):
    """Generate labeled synthetic scenarios."""
    cfg = settings.synthetic
    families = tuple(dict.fromkeys(families or cfg.families))
    count = count if count is not None else cfg.count_per_family
    location = location or cfg.location
    output = output or settings.paths.scenarios
    if count < 1:
        raise click.BadParameter("count must be >= 1", param_hint="--count")

    generator = SyntheticGenerator(location)
    seed = settings.derive_seed(f"synthetic:{location}")
    by_family = {family: generator.generate(family, count, seed) for family in families}
    scenarios = [s for family in families for s in by_family[family]]

    if output.suffix in BINARY_SUFFIXES:
        ScenarioService.write_scenarios_binary(output, scenarios)
    else:
        ScenarioService.write_scenarios(output, scenarios)

    table = Table(title=f"Generated scenarios ({location})")
    table.add_column("Family", style="cyan")
    table.add_column("Count", justify="right")
    table.add_column("Heading change", justify="right")
    table.add_column("Mean speed", justify="right")
    table.add_column("Lateral", justify="right", style="dim")
    for family in families:
        signatures = [ScenarioService.ego_signature(s) for s in by_family[family]]
        table.add_row(
            family,
            str(count),
            f"{np.mean([s.heading_change for s in signatures]):+.2f} rad",
            f"{np.mean([s.mean_speed for s in signatures]):.1f} m/s",
            f"{np.mean([s.lateral_displacement for s in signatures]):+.1f} m",
        )
    console.print(table)
    console.print(f"[green]✓[/green] Wrote {len(scenarios)} scenarios to {output}")


@click.command("build")
@click.option("--input", "-i", "input_path", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Scenario file (default: paths.scenarios)")
@pipeline_command("cache_dir")
def build(settings: PipelineSettings, input_path: Optional[Path]):
    """Build (or refresh) the graph cache for a scenario file."""
    scenarios = read_scenarios(settings, input_path)
    graphs = load_graphs(settings, scenarios, "building graphs")

    table = Table(title="Graph cache")
    table.add_column("Quantity", style="cyan")
    table.add_column("Total", justify="right")
    table.add_column("Mean / graph", justify="right", style="dim")
    rows = {
        "obstacle nodes": [g.num_obstacle_nodes for g in graphs],
        "road nodes": [g.num_road_nodes for g in graphs],
    }
    for kind in ("o2o", "temporal", "o2r", "r2r"):
        rows[f"{kind} edges"] = [g.num_edges()[kind] for g in graphs]
    for name, values in rows.items():
        table.add_row(name, str(int(np.sum(values))), f"{np.mean(values):.1f}")
    console.print(table)
    console.print(f"[green]✓[/green] {len(graphs)} graphs cached under {settings.paths.cache_dir}")
