import functools
import sys
from contextlib import ExitStack
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import click
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn

from ..config import PipelineSettings, load_settings
from ..exceptions import MissingArtifactError, ScenegraphError
from ..schemas import ErrorResponse, ModelKind, Scenario
from ..services import EmbeddingSet, EmbeddingStore, GraphBuilder, GraphCache, HeteroGraph, ScenarioService
from ..utils import console, directory_lock, get_logger, setup_logging

logger = get_logger(__name__)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
BINARY_SUFFIXES = {".bin", ".scnb"}

model_option = click.option(
    "--model",
    "model_kind",
    type=click.Choice([kind.value for kind in ModelKind]),
    default=None,
    help="Model kind (defaults to train.model_kind)",
)


def fail(response: ErrorResponse) -> None:
    """Print the machine-readable error object on stderr and exit with its code."""
    click.echo(response.model_dump_json(by_alias=True), err=True)
    sys.exit(response.exit_code)


def pipeline_command(*locked_paths: str):
    """
    Wrap a command with config loading, logging setup, directory locks and error handling.

    The wrapped function receives the effective ``PipelineSettings`` as its first argument.
    ``locked_paths`` name ``PathsConfig`` directories held under an exclusive lock while the
    command runs.
    """

    def decorator(f):
        @click.option(
            "--config",
            "config_path",
            type=click.Path(dir_okay=False, path_type=Path),
            default=None,
            help="TOML config file (default: ./scenegraph.toml when present)",
        )
        @click.option("--seed", type=int, default=None, help="Global seed (overrides config)")
        @click.option(
            "--log-level",
            type=click.Choice(LOG_LEVELS, case_sensitive=False),
            default=None,
            help="Logging level (overrides config)",
        )
        @functools.wraps(f)
        def wrapper(config_path: Optional[Path], seed: Optional[int], log_level: Optional[str], **kwargs):
            try:
                overrides = {"seed": seed, "log_level": log_level.upper() if log_level else None}
                settings = load_settings(config_path, **{k: v for k, v in overrides.items() if v is not None})
                setup_logging(settings.log_level, settings.debug)
                with ExitStack() as stack:
                    for name in locked_paths:
                        stack.enter_context(directory_lock(Path(getattr(settings.paths, name))))
                    return f(settings, **kwargs)
            except ScenegraphError as e:
                logger.debug(f"{e.code}: {e.detail}")
                fail(e.to_error_response())
            except (click.ClickException, click.Abort):
                raise
            except Exception as e:
                logger.exception(f"Unexpected error: {e}")
                fail(ErrorResponse(error="internal_error", detail=str(e), exit_code=1))

        return wrapper

    return decorator


def progress_bar(description: str) -> Progress:
    return Progress(
        TextColumn(f"[bold blue]{description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    )


def resolve_model(settings: PipelineSettings, model_kind: Optional[str]) -> str:
    return model_kind or settings.train.model_kind


def read_scenarios(settings: PipelineSettings, path: Optional[Path] = None) -> List[Scenario]:
    """
    Raises:
        MissingArtifactError: If the scenario file does not exist
    """
    path = Path(path or settings.paths.scenarios)
    if not path.is_file():
        raise MissingArtifactError("scenario file", str(path), "run `pyscenegraph generate` first")
    vocab = settings.labels.vocabulary
    if path.suffix in BINARY_SUFFIXES:
        return ScenarioService.load_scenarios_binary(path, vocab)
    return ScenarioService.load_scenarios(path, vocab)


def split_scenarios(settings: PipelineSettings, scenarios: Sequence[Scenario]) -> Tuple[List[Scenario], List[Scenario]]:
    return ScenarioService.split(scenarios, settings.train.train_ratio, settings.derive_seed("split"))


def load_graphs(settings: PipelineSettings, scenarios: Sequence[Scenario], description: str = "graphs") -> List[HeteroGraph]:
    cache = GraphCache(settings.paths.cache_dir, GraphBuilder(settings.builder))
    graphs = []
    with progress_bar(description) as bar:
        task = bar.add_task(description, total=len(scenarios))
        for scenario in scenarios:
            graphs.append(cache.get(scenario))
            bar.advance(task)
    return graphs


def store_dir(settings: PipelineSettings, model_kind: str) -> Path:
    return settings.paths.embedding_dir / model_kind


def read_store(settings: PipelineSettings, model_kind: str):
    return EmbeddingStore.read(store_dir(settings, model_kind))


def report_path(settings: PipelineSettings, model_kind: str, name: str) -> Path:
    return settings.paths.report_dir / f"{model_kind}_{name}"


def labeled_set(scenarios: Sequence[Scenario], vectors) -> EmbeddingSet:
    return EmbeddingSet.from_raw([s.scenario_id for s in scenarios], vectors, [s.labels for s in scenarios])
