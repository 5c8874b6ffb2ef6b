"""Sectioned plain-text configuration files for the command line.

Format: INI sections ``[scene]``, ``[model]``, ``[train]``, ``[loss]``, and
``[paths]``; keys are the snake_case field names of the matching config
dataclasses. Unknown sections or keys are rejected. Every key can be
overridden by a command-line flag; missing keys fall back to the documented
defaults.
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .exceptions import ConfigError

_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}

SCHEMA: dict[str, dict[str, type]] = {
    "scene": {
        "seed": int, "n_objects": int, "episodes": int, "gaze_lead_lag": int,
        "gaze_noise_deg": float, "pos_noise_m": float, "grasp_radius": float,
        "max_hand_speed": float, "rate_hz": float, "d_clip": int, "room": tuple,
    },
    "model": {
        "t_history": int, "t_future": int, "n_objects": int, "top_k": int,
        "feature_dim": int, "encoder_layers": int, "intention_layers": int,
        "decoder_layers": int, "d_clip": int, "mlp_hidden": int,
        "no_hierarchy": bool, "vanilla_gcn": bool,
    },
    "train": {
        "epochs": int, "batch_size": int, "lr": float, "lr_decay": float,
        "seed": int, "window_stride": int,
    },
    "loss": {
        "gaze": float, "rot": float, "pos": float, "center": float,
        "vel": float, "int": float, "state": float,
    },
    "paths": {"data_dir": str, "out_dir": str},
}


def _convert(section: str, key: str, raw: str):
    kind = SCHEMA[section][key]
    try:
        if kind is bool:
            lowered = raw.strip().lower()
            if lowered not in _BOOL:
                raise ValueError(f"not a boolean: {raw!r}")
            return _BOOL[lowered]
        if kind is tuple:
            parts = [float(p) for p in raw.split(",")]
            if len(parts) != 3:
                raise ValueError("expected three comma-separated numbers")
            return tuple(parts)
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc


def load_config_file(path: str | Path) -> dict[str, dict]:
    """Parse and type-check a configuration file into per-section dicts."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read_string(path.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    out: dict[str, dict] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        out[section] = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key '{key}' in section [{section}]")
            out[section][key] = _convert(section, key, raw)
    return out
