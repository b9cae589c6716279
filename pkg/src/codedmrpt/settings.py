"""
Settings bootstrap for codedmrpt.

Every CLI subcommand reads its configuration through `load_settings()` first:
the base YAML file is deep-merged with an optional preset file
(`config/presets/<name>.yaml`), then command-line overrides are applied with
`apply_overrides()`. The resulting plain mapping is turned into a typed
`ExperimentSpec` by `codedmrpt.bench.spec`.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml

from codedmrpt.errors import ConfigError
from codedmrpt.log import configure_logging


def deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    # Work on a copy so caller-owned mappings are never mutated.
    merged: dict[str, Any] = dict(base)
    for key, value in override.items():
        # Nested mappings merge recursively so a preset only has to name what it changes.
        if key in merged and isinstance(merged[key], dict) and isinstance(value, dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            # Scalars and lists from the override replace the base value.
            merged[key] = value
    return merged


def _load_yaml(path: Path) -> dict[str, Any]:
    # A missing preset file means "no overrides".
    if not path.exists():
        return {}
    try:
        with path.open("r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML in {path}: {e}") from e
    # Config files must be mappings; a list or scalar at the top level is a user error.
    if not isinstance(data, dict):
        raise ConfigError(f"YAML must be a mapping: {path}")
    return data


def _resolve_project_root(config_path: Path) -> Path:
    config_dir = config_path.resolve().parent
    # config/default.yaml lives one level below the project root.
    if config_dir.name == "config":
        return config_dir.parent
    return config_dir


def _set_path(settings: dict[str, Any], dotted: str, value: Any) -> None:
    # "cluster.straggler.kind" -> settings["cluster"]["straggler"]["kind"], creating sections as needed.
    node = settings
    *parents, leaf = dotted.split(".")
    for key in parents:
        child = node.get(key)
        if not isinstance(child, dict):
            child = {}
            node[key] = child
        node = child
    node[leaf] = value


def apply_overrides(settings: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Apply dotted-key overrides (CLI flags); `None` values mean "flag not given"."""
    out = deep_merge(settings, {})
    for dotted, value in overrides.items():
        if value is None:
            continue
        _set_path(out, dotted, value)
    return out


def load_settings(
    config_path: Path,
    preset: str | None = None,
    *,
    configure_log: bool = True,
) -> dict[str, Any]:
    """
    Load the base config and merge a preset override file if one is named.
    Also resolves output/log directories and initializes logging.
    """
    config_path = Path(config_path).resolve()
    if not config_path.exists():
        raise ConfigError(f"config file not found: {config_path}")
    root = _resolve_project_root(config_path)

    base = _load_yaml(config_path)
    preset_path = root / "config" / "presets" / f"{preset}.yaml" if preset else None
    if preset_path is not None and not preset_path.exists():
        raise ConfigError(f"unknown preset '{preset}': {preset_path} does not exist")
    override = _load_yaml(preset_path) if preset_path is not None else {}
    settings = deep_merge(base, override)

    project = settings.setdefault("project", {})
    paths = {
        "root": root,
        "out_dir": root / project.get("out_dir", "results"),
        "logs_dir": root / project.get("logs_dir", "logs"),
    }

    if configure_log:
        logger = configure_logging(paths["logs_dir"], level=str(project.get("log_level", "INFO")))
        logger.info("Loaded settings: config=%s preset=%s", config_path, preset or "-")

    settings["_meta"] = {
        "config_path": str(config_path),
        "preset": preset,
        "preset_path": str(preset_path) if preset_path is not None else None,
    }
    settings["paths"] = {k: str(v) for k, v in paths.items()}
    return settings
