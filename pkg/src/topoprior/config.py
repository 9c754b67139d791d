"""Pipeline configuration: one TOML or JSON file shared by every command."""

from __future__ import annotations

import json
from pathlib import Path

from .errors import ConfigError

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

DEFAULTS = {
    "seed": 0,
    "output_dir": "out",
    "dataset": {
        "kind": "csv",
        "path": None,
        "group_column": None,
        "normalize": "per_series",
        "reject_fraction": 0.5,
        "seed": 0,
        # synthetic generator knobs (used when kind != csv)
        "n_ring": 24,
        "n_cluster": 18,
        "n_per_cluster": 20,
        "t": 160,
        "period": 16,
        "noise": 0.5,
        "levels": [5.0, 1.0],
    },
    "manifold": {"k": 0},
    "fingerprint": {"per_group": False},
    "screening": {"floor": 0.0, "sparse_threshold": 0.3, "rich_threshold": 0.4},
    "sheaf": {"per_group": False},
    "windows": {
        "context_len": 32,
        "horizon": 8,
        "stride": 16,
        "train_frac": 0.7,
        "val_frac": 0.15,
        "cold_start_weeks": [0, 1, 2, 3],
    },
    "backbone": {
        "d_model": 64,
        "layers": 2,
        "heads": 8,
        "head_dim": 8,
        "ffn_dim": 128,
        "dropout": 0.1,
        "epochs": 5,
        "batch_size": 64,
        "lr": 1e-4,
        "weight_decay": 1e-3,
        "max_lr": 3e-4,
        "patience": None,
        "cold_start_augment": 0.0,
        "temporal_periods": [7, 12, 26, 52],
    },
    "adapter": {
        "epochs": 40,
        "batch_size": 64,
        "lr": 3e-4,
        "weight_decay": 1e-3,
        "hidden_dim": 256,
    },
    "cache": {"provider": "drift", "period": 16, "path": None},
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, val in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path}{key!r}")
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, path=f"{path}{key}.")
        else:
            out[key] = val
    return out


def load_config(path) -> dict:
    """Read a TOML/JSON config and overlay it on the defaults."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix == ".json":
        with open(path) as fh:
            raw = json.load(fh)
    else:
        with open(path, "rb") as fh:
            try:
                raw = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"bad TOML in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a table/object: {path}")
    return _merge(DEFAULTS, raw)


def default_config() -> dict:
    return json.loads(json.dumps(DEFAULTS))
