import json
from pathlib import Path

import pytest
import yaml

from codedmrpt.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, EXIT_RUNTIME, exit_code_for, main
from codedmrpt.errors import ConfigError, DataError, QueryTimeoutError, StageError

from conftest import ROOT_DIR

DEFAULT_CONFIG = str(ROOT_DIR / "config" / "default.yaml")

SMALL = {
    "project": {"log_level": "WARNING"},
    "dataset": {"source": "synthetic", "n": 300, "d": 12, "kind": "gaussian"},
    "index": {"n_trees": 6, "depth": 3, "vote_threshold": 1},
    "cluster": {"strategies": ["mp_uncoded"], "workers": 4, "m": 2},
    "experiment": {"queries": 5, "runs": 1, "k": 5},
}


def _write_config(tmp_path: Path, **sections: dict) -> str:
    cfg = {key: dict(value) for key, value in SMALL.items()}
    for key, value in sections.items():
        cfg[key] = {**cfg.get(key, {}), **value}
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(cfg), encoding="utf-8")
    return str(path)


def test_run_desk_preset(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = main(
        ["run", "--config", DEFAULT_CONFIG, "--preset", "desk", "--queries", "5", "--runs", "1", "--out-dir", str(tmp_path)]
    )
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "mp_systematic" in out
    summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
    assert [s["name"] for s in summary["strategies"]][0] == "single"


def test_strategy_and_straggler_flags(tmp_path: Path) -> None:
    out_dir = tmp_path / "out"
    code = main(
        [
            "run",
            "--config",
            _write_config(tmp_path),
            "--strategy",
            "mp_matdot",
            "--strategy",
            "mp_systematic",
            "--straggler",
            "weibull",
            "--seed",
            "9",
            "--out-dir",
            str(out_dir),
        ]
    )
    assert code == EXIT_OK
    meta = json.loads((out_dir / "run_meta.json").read_text(encoding="utf-8"))
    assert meta["spec"]["cluster"]["strategies"] == ["mp_matdot", "mp_systematic"]
    assert meta["spec"]["cluster"]["straggler"]["kind"] == "weibull"
    assert meta["spec"]["seed"] == 9


def _matdot_latency(tmp_path: Path, config: str, *flags: str) -> float:
    out_dir = tmp_path / "-".join(flags)
    argv = ["run", "--config", config, "--strategy", "mp_matdot", "--seed", "9", "--out-dir", str(out_dir), *flags]
    assert main(argv) == EXIT_OK
    summary = json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))
    return summary["strategies"][0]["mean_latency"]


def test_straggler_flag_applies_model_parameters(tmp_path: Path) -> None:
    config = _write_config(tmp_path)
    exp = _matdot_latency(tmp_path, config, "--straggler", "exp")
    weibull = _matdot_latency(tmp_path, config, "--straggler", "weibull")
    assert exp != weibull

    meta = json.loads((tmp_path / "--straggler-weibull" / "run_meta.json").read_text(encoding="utf-8"))
    straggler = meta["spec"]["cluster"]["straggler"]
    assert (straggler["a"], straggler["mu"], straggler["alpha"]) == (0.2, 2.0, 0.5)


def test_straggler_parameter_flags_override_the_preset(tmp_path: Path) -> None:
    out_dir = tmp_path / "out"
    argv = ["run", "--config", _write_config(tmp_path), "--straggler", "weibull", "--straggler-mu", "4", "--out-dir", str(out_dir)]
    assert main(argv) == EXIT_OK
    meta = json.loads((out_dir / "run_meta.json").read_text(encoding="utf-8"))
    straggler = meta["spec"]["cluster"]["straggler"]
    assert (straggler["kind"], straggler["a"], straggler["mu"]) == ("weibull", 0.2, 4.0)


def test_config_straggler_presets_replace_builtin_values(tmp_path: Path) -> None:
    path = tmp_path / "presets.yaml"
    cfg = {**SMALL, "straggler_presets": {"weibull": {"mu": 7.0}}}
    path.write_text(yaml.safe_dump(cfg), encoding="utf-8")
    out_dir = tmp_path / "out"
    assert main(["run", "--config", str(path), "--straggler", "weibull", "--out-dir", str(out_dir)]) == EXIT_OK
    meta = json.loads((out_dir / "run_meta.json").read_text(encoding="utf-8"))
    assert meta["spec"]["cluster"]["straggler"]["mu"] == 7.0
    assert meta["spec"]["cluster"]["straggler"]["alpha"] == 0.5


def test_conditioning_report(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["conditioning", "--config", _write_config(tmp_path), "--systematic"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["exhaustive"] is True
    assert report["warning"] is False


def test_encode_shards(tmp_path: Path) -> None:
    out_dir = tmp_path / "out"
    config = _write_config(tmp_path, cluster={"strategies": ["mp_matdot"]})
    assert main(["encode-shards", "--config", config, "--out-dir", str(out_dir)]) == EXIT_OK
    assert len(list((out_dir / "shards" / "mp_matdot").glob("*.mdsh"))) == 4


def test_invalid_spec_exits_with_config_code(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _write_config(tmp_path, cluster={"strategies": ["mp_matdot"]})
    assert main(["run", "--config", config, "--m", "3", "--out-dir", str(tmp_path / "out")]) == EXIT_CONFIG
    assert "[stage validate]" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "absent.yaml")]) == EXIT_CONFIG


def test_malformed_yaml_exits_with_config_code(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    path = tmp_path / "broken.yaml"
    path.write_text("index: [1, 2\n  n_trees: :\n", encoding="utf-8")
    assert main(["run", "--config", str(path)]) == EXIT_CONFIG
    assert "invalid YAML" in capsys.readouterr().err


def test_missing_data_file_exits_with_data_code(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _write_config(tmp_path, dataset={"source": "fvecs", "path": str(tmp_path / "missing.fvecs")})
    assert main(["run", "--config", config, "--out-dir", str(tmp_path / "out")]) == EXIT_DATA
    assert "[stage load-data]" in capsys.readouterr().err


def test_query_timeout_exits_with_runtime_code(tmp_path: Path) -> None:
    config = _write_config(tmp_path, cluster={"timeout_s": 1e-12})
    assert main(["run", "--config", config, "--out-dir", str(tmp_path / "out")]) == EXIT_RUNTIME


def test_exit_code_mapping() -> None:
    assert exit_code_for(StageError("load-data", DataError("x"))) == EXIT_DATA
    assert exit_code_for(StageError("load-data", FileNotFoundError("x"))) == EXIT_DATA
    assert exit_code_for(StageError("validate", ConfigError("x"))) == EXIT_CONFIG
    assert exit_code_for(StageError("run-experiment", QueryTimeoutError("x"))) == EXIT_RUNTIME
    assert exit_code_for(ConfigError("x")) == EXIT_CONFIG
