"""Versioned JSON checkpoints: named parameter tensors + optimizer + RNG state."""

from __future__ import annotations

import json

import numpy as np

from ..errors import ConfigError

CHECKPOINT_VERSION = 1


def save_checkpoint(path, params: dict[str, np.ndarray], optimizer_state: dict | None = None,
                    rng_state: dict | None = None, meta: dict | None = None):
    obj = {
        "version": CHECKPOINT_VERSION,
        "params": {
            name: {"shape": list(v.shape), "data": v.ravel().tolist()}
            for name, v in params.items()
        },
        "optimizer": optimizer_state,
        "rng": rng_state,
        "meta": meta or {},
    }
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, separators=(",", ":"))


def load_checkpoint(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read checkpoint {path}: {exc}") from exc
    if obj.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {obj.get('version')}")
    params = {
        name: np.array(rec["data"], dtype=np.float64).reshape(rec["shape"])
        for name, rec in obj["params"].items()
    }
    return params, obj.get("optimizer"), obj.get("rng"), obj.get("meta", {})
