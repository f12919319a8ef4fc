"""
Tests for settings loading and precedence.
"""
from pathlib import Path

import pytest

from scenegraph.config import BuilderConfig, EvaluationConfig, load_settings
from scenegraph.exceptions import ConfigError

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def toml_file(workdir):
    path = workdir / "custom.toml"
    path.write_text(
        "seed = 7\n"
        "[train]\n"
        "epochs = 3\n"
        'model_kind = "graphcl"\n'
        "[builder]\n"
        "pe_dim = 8\n"
    )
    return path


class TestLoadSettings:
    def test_defaults(self, workdir):
        settings = load_settings()
        assert settings.seed == 0
        assert settings.train.model_kind == "bgrl"
        assert settings.builder.obstacle_feature_dim == 31
        assert settings.builder.road_feature_dim == 33
        assert len(settings.labels.vocabulary) == 10

    def test_toml_file(self, toml_file):
        settings = load_settings(toml_file)
        assert settings.seed == 7
        assert settings.train.epochs == 3
        assert settings.train.model_kind == "graphcl"
        assert settings.builder.obstacle_feature_dim == 23

    def test_default_toml_in_working_directory(self, workdir):
        (workdir / "scenegraph.toml").write_text("[train]\nepochs = 9\n")
        assert load_settings().train.epochs == 9

    def test_shipped_config_matches_field_defaults(self, workdir):
        shipped = load_settings(REPO_ROOT / "scenegraph.toml")
        defaults = load_settings()
        for section in ("builder", "augment", "train", "classifier", "evaluation", "labels", "synthetic"):
            assert getattr(shipped, section) == getattr(defaults, section), section

    def test_environment_beats_file(self, toml_file, monkeypatch):
        monkeypatch.setenv("SCENEGRAPH_TRAIN__EPOCHS", "11")
        monkeypatch.setenv("SCENEGRAPH_SEED", "3")
        settings = load_settings(toml_file)
        assert settings.train.epochs == 11
        assert settings.seed == 3
        assert settings.train.model_kind == "graphcl"

    def test_overrides_beat_everything(self, toml_file, monkeypatch):
        monkeypatch.setenv("SCENEGRAPH_SEED", "3")
        assert load_settings(toml_file, seed=42).seed == 42

    def test_nested_override_merges_with_file(self, toml_file):
        settings = load_settings(toml_file, train={"batch_size": 8})
        assert settings.train.batch_size == 8
        assert settings.train.epochs == 3

    def test_missing_file(self, workdir):
        with pytest.raises(ConfigError):
            load_settings(workdir / "nope.toml")

    @pytest.mark.parametrize(
        "overrides",
        [
            {"train": {"epochs": 0}},
            {"builder": {"pe_dim": 7}},
            {"augment": {"p_range": (0.5, 0.1)}},
            {"labels": {"vocabulary": ["a", "a"]}},
            {"labels": {"vocabulary": []}},
            {"log_level": "LOUD"},
            {"synthetic": {"families": ["roundabout"]}},
        ],
    )
    def test_invalid_values(self, workdir, overrides):
        with pytest.raises(ConfigError):
            load_settings(**overrides)

    def test_error_names_the_field(self, workdir):
        with pytest.raises(ConfigError, match="train.epochs"):
            load_settings(train={"epochs": -1})


class TestSeeds:
    def test_derived_seeds_are_stable(self, workdir):
        first, second = load_settings(), load_settings()
        assert first.derive_seed("split") == second.derive_seed("split")
        assert first.derive_seed("split") != first.derive_seed("train")

    def test_global_seed_changes_sub_seeds(self, workdir):
        assert load_settings(seed=1).derive_seed("split") != load_settings(seed=2).derive_seed("split")

    def test_explicit_section_seed_wins(self, workdir):
        settings = load_settings(train={"seed": 5}, augment={"seed": 6})
        assert settings.train_seed == 5
        assert settings.augment_seed == 6
        assert load_settings().train_seed == load_settings().derive_seed("train")


class TestSections:
    def test_mcs_values_sorted_and_unique(self):
        assert EvaluationConfig(mcs_values=[10, 5, 10]).mcs_values == [5, 10]

    @pytest.mark.parametrize("values", [[], [1, 5]])
    def test_mcs_values_rejected(self, values):
        with pytest.raises(ValueError):
            EvaluationConfig(mcs_values=values)

    def test_builder_dims_follow_config(self):
        config = BuilderConfig(pe_dim=4, centerline_points=5)
        assert config.obstacle_feature_dim == 19
        assert config.road_feature_dim == 18
