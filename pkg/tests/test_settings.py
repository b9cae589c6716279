import logging
from pathlib import Path

import pytest

from codedmrpt.bench.spec import ExperimentSpec, cluster_config, spec_from_settings, spec_problems
from codedmrpt.errors import ConfigError
from codedmrpt.settings import apply_overrides, deep_merge, load_settings

from conftest import ROOT_DIR

DEFAULT_CONFIG = ROOT_DIR / "config" / "default.yaml"


def test_default_config_builds_a_valid_spec() -> None:
    settings = load_settings(DEFAULT_CONFIG, configure_log=False)
    spec = spec_from_settings(settings)
    assert spec.cluster.strategies == ["single", "data_parallel", "mp_uncoded", "mp_matdot", "mp_systematic"]
    assert (spec.cluster.workers, spec.cluster.m, spec.runs, spec.k) == (16, 3, 3, 10)
    assert spec.cluster.straggler.kind == "shifted_exponential"
    assert Path(spec.out_dir) == ROOT_DIR / "results"
    assert spec_problems(spec) == []
    assert settings["_meta"]["preset"] is None


@pytest.mark.parametrize("preset", ["desk", "stl10", "gist"])
def test_presets_merge_over_the_defaults(preset: str) -> None:
    spec = spec_from_settings(load_settings(DEFAULT_CONFIG, preset=preset, configure_log=False))
    assert spec_problems(spec) == []
    # Presets only name what they change.
    assert spec.dataset.kind == "clustered"


def test_desk_preset_values() -> None:
    spec = spec_from_settings(load_settings(DEFAULT_CONFIG, preset="desk", configure_log=False))
    assert (spec.dataset.n, spec.dataset.d) == (1000, 32)
    assert (spec.index.n_trees, spec.index.depth, spec.index.vote_threshold) == (10, 4, 1)
    assert (spec.cluster.workers, spec.cluster.m, spec.queries) == (8, 2, 50)


def test_unknown_preset_and_missing_config(tmp_path: Path) -> None:
    with pytest.raises(ConfigError):
        load_settings(DEFAULT_CONFIG, preset="nope", configure_log=False)
    with pytest.raises(ConfigError):
        load_settings(tmp_path / "missing.yaml", configure_log=False)


def test_non_mapping_yaml_is_rejected(tmp_path: Path) -> None:
    path = tmp_path / "list.yaml"
    path.write_text("- a\n- b\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_settings(path, configure_log=False)


def test_overrides_set_dotted_keys_and_skip_none() -> None:
    base = {"cluster": {"m": 3, "straggler": {"kind": "none"}}, "experiment": {"seed": 1}}
    out = apply_overrides(base, {"cluster.straggler.kind": "weibull", "experiment.seed": None, "index.depth": 6})
    assert out["cluster"]["straggler"]["kind"] == "weibull"
    assert out["experiment"]["seed"] == 1
    assert out["index"]["depth"] == 6
    assert base["cluster"]["straggler"]["kind"] == "none"


def test_deep_merge_replaces_lists() -> None:
    merged = deep_merge({"cluster": {"strategies": ["single", "mp_matdot"], "m": 2}}, {"cluster": {"strategies": ["single"]}})
    assert merged == {"cluster": {"strategies": ["single"], "m": 2}}


def test_unknown_keys_and_bad_values_are_config_errors() -> None:
    with pytest.raises(ConfigError):
        spec_from_settings({"cluster": {"wokers": 4}})
    with pytest.raises(ConfigError):
        spec_from_settings({"cluster": {"strategies": ["coded"]}})
    with pytest.raises(ConfigError):
        spec_from_settings({"experiment": {"k": 0}})


def test_spec_problems_are_reported_together() -> None:
    spec = ExperimentSpec.model_validate(
        {
            "dataset": {"n": 50, "d": 4},
            "index": {"n_trees": 3, "depth": 7, "vote_threshold": 5},
            "cluster": {"workers": 6, "m": 5, "tau": 2, "unresponsive_workers": [6]},
            "k": 10,
        }
    )
    problems = spec_problems(spec)
    joined = "\n".join(problems)
    for fragment in ("vote_threshold", "tau", "recovery threshold", "unresponsive", "2^index.depth", "cluster.m", "exceeds d"):
        assert fragment in joined, fragment


def test_spec_hash_ignores_output_directory(tmp_path: Path) -> None:
    a = ExperimentSpec(out_dir=str(tmp_path / "a"))
    b = ExperimentSpec(out_dir=str(tmp_path / "b"))
    assert a.spec_hash() == b.spec_hash()
    assert a.spec_hash() != ExperimentSpec(seed=1).spec_hash()


def test_cluster_config_from_spec() -> None:
    spec = ExperimentSpec.model_validate({"cluster": {"unresponsive_workers": [3], "betas": "integer", "m": 2, "workers": 5}})
    cfg = cluster_config(spec, "mp_systematic", 48)
    assert cfg.code is not None and cfg.code.systematic
    assert cfg.code.betas == (1.0, 2.0, 3.0, 4.0, 5.0)
    assert cfg.unresponsive_workers == frozenset({3})
    assert cfg.index.sparsity == pytest.approx(48 ** -0.5)
    assert cluster_config(spec, "single", 48).unresponsive_workers == frozenset()


def test_log_level_comes_from_project_section(tmp_path: Path) -> None:
    path = tmp_path / "quiet.yaml"
    path.write_text("project:\n  log_level: warning\n", encoding="utf-8")
    load_settings(path)
    assert logging.getLogger("codedmrpt").level == logging.WARNING

    path.write_text("project:\n  log_level: loud\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_settings(path)
