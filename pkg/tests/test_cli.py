import json

import pytest
from click.testing import CliRunner

from scenegraph import __version__
from scenegraph.cli.main import cli

SMALL_CONFIG = """
[train]
epochs = 1
batch_size = 8
embedding_dim = 16
predictor_hidden_dim = 32

[classifier]
hidden_dim = 16
epochs = 5

[evaluation]
validity_trials = 10
mcs_values = [2, 3]
knn_k = 3
representatives_per_cluster = 2
"""


@pytest.fixture
def runner(workdir):
    (workdir / "scenegraph.toml").write_text(SMALL_CONFIG)
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(cli, [*args, "--log-level", "ERROR"])


def error_of(result) -> dict:
    return json.loads(result.output.strip().splitlines()[-1])


def test_pipeline_end_to_end(runner, workdir):
    result = invoke(runner, "generate", "--count", "2")
    assert result.exit_code == 0, result.output
    lines = (workdir / "data" / "scenarios.jsonl").read_text().splitlines()
    assert len(lines) == 12
    first_id = json.loads(lines[0])["scenario_id"]

    for args in (["build"], ["train", "--no-progress"], ["embed"]):
        result = invoke(runner, *args)
        assert result.exit_code == 0, result.output

    assert (workdir / "work" / "checkpoints" / "bgrl.pt").is_file()
    assert (workdir / "work" / "reports" / "bgrl_loss.csv").is_file()
    manifest = json.loads((workdir / "work" / "embeddings" / "bgrl" / "manifest.json").read_text())
    assert manifest["count"] == 12
    assert manifest["dim"] == 16

    result = invoke(runner, "query", first_id, "--json")
    assert result.exit_code == 0, result.output
    ranking = json.loads(result.stdout.strip().splitlines()[-1])
    assert len(ranking) == 3
    assert ranking[0]["scenario_id"] == first_id
    assert ranking[0]["distance"] == pytest.approx(0.0, abs=1e-5)
    assert [r["distance"] for r in ranking] == sorted(r["distance"] for r in ranking)

    result = invoke(runner, "cluster", "--mcs", "2")
    assert result.exit_code == 0, result.output
    assert (workdir / "work" / "reports" / "bgrl_sweep.csv").is_file()
    assert (workdir / "work" / "reports" / "bgrl_clusters_mcs2.json").is_file()

    result = invoke(runner, "evaluate")
    assert result.exit_code == 0, result.output
    report = json.loads((workdir / "work" / "reports" / "bgrl_evaluation.json").read_text())
    assert 0.0 <= report["validity"]["rate"] <= 1.0
    assert [row["mcs"] for row in report["sweep"]] == [2, 3]
    assert (workdir / "work" / "checkpoints" / "bgrl.classifier.pt").is_file()

    result = invoke(runner, "plot")
    assert result.exit_code == 0, result.output
    assert (workdir / "work" / "reports" / "bgrl_embeddings.svg").is_file()


def test_fixed_seed_pipeline_is_byte_identical(workdir, monkeypatch):
    stores = []
    for name in ("first", "second"):
        run_dir = workdir / name
        run_dir.mkdir()
        (run_dir / "scenegraph.toml").write_text(SMALL_CONFIG)
        monkeypatch.chdir(run_dir)
        runner = CliRunner()
        for args in (["generate", "--count", "2"], ["build"], ["train", "--no-progress"], ["embed"]):
            result = invoke(runner, *args, "--seed", "7")
            assert result.exit_code == 0, result.output
        store = run_dir / "work" / "embeddings" / "bgrl"
        stores.append({f: (store / f).read_bytes() for f in ("vectors.f32", "manifest.json")})

    assert stores[0]["vectors.f32"] == stores[1]["vectors.f32"]
    assert stores[0]["manifest.json"] == stores[1]["manifest.json"]


def test_binary_scenario_output(runner, workdir):
    result = invoke(runner, "generate", "--count", "1", "--family", "left_turn", "--output", "data/left.bin")
    assert result.exit_code == 0, result.output
    assert (workdir / "data" / "left.bin").read_bytes()[:4] == b"SCNB"


def test_missing_scenarios_reports_json_error(runner):
    result = invoke(runner, "build")
    assert result.exit_code == 4
    error = error_of(result)
    assert error["status"] == "error"
    assert error["error"] == "missing_artifact"
    assert error["exitCode"] == 4


def test_missing_checkpoint(runner):
    assert invoke(runner, "generate", "--count", "1").exit_code == 0
    result = invoke(runner, "embed", "--model", "graphcl")
    assert result.exit_code == 4
    assert "graphcl.pt" in error_of(result)["detail"]


def test_locked_output_directory(runner, workdir):
    assert invoke(runner, "generate", "--count", "1").exit_code == 0
    cache_dir = workdir / "work" / "graphs"
    cache_dir.mkdir(parents=True)
    (cache_dir / ".scenegraph.lock").write_text("1")
    result = invoke(runner, "build")
    assert result.exit_code == 5
    assert error_of(result)["error"] == "locked"


def test_train_respects_report_dir_lock(runner, workdir):
    assert invoke(runner, "generate", "--count", "1").exit_code == 0
    report_dir = workdir / "work" / "reports"
    report_dir.mkdir(parents=True)
    (report_dir / ".scenegraph.lock").write_text("1")
    result = invoke(runner, "train", "--no-progress")
    assert result.exit_code == 5
    assert error_of(result)["error"] == "locked"
    assert not (workdir / "work" / "checkpoints" / "bgrl.pt").exists()
    assert not (report_dir / "bgrl_loss.csv").exists()


def test_invalid_config_value(runner, monkeypatch):
    monkeypatch.setenv("SCENEGRAPH_TRAIN__EPOCHS", "0")
    result = invoke(runner, "generate", "--count", "1")
    assert result.exit_code == 2
    assert error_of(result)["error"] == "config_error"


def test_unknown_family(runner):
    result = invoke(runner, "generate", "--family", "roundabout")
    assert result.exit_code == 2


def test_query_needs_exactly_one_source(runner):
    result = invoke(runner, "query")
    assert result.exit_code == 2


def test_config_command(runner):
    result = runner.invoke(cli, ["config", "--show-values"])
    assert result.exit_code == 0, result.output
    assert "pyscenegraph configuration" in result.output


def test_config_command_missing_file(runner):
    result = runner.invoke(cli, ["config", "--config", "nope.toml"])
    assert result.exit_code == 2


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output
