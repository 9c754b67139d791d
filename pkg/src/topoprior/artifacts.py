"""Versioned JSON artifact IO: every file carries tool version, config hash, seed."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__
from .errors import ConfigError


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def artifact_meta(cfg_hash: str, seed: int) -> dict:
    return {"tool_version": __version__, "config_hash": cfg_hash, "seed": seed}


def write_json_artifact(path, meta: dict, payload: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump({"meta": meta, **payload}, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def read_json_artifact(path, produced_by: str) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing artifact {path.name}; run `topoprior {produced_by}` first")
    with open(path) as fh:
        obj = json.load(fh)
    if "meta" not in obj:
        raise ConfigError(f"{path} is not a versioned artifact")
    return obj


def write_text_artifact(path, meta: dict, body: str):
    """Line-oriented artifact (JSONL/CSV body) with a JSON meta line on top."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(json.dumps({"meta": meta}, sort_keys=True, separators=(",", ":")))
        fh.write("\n")
        fh.write(body)
        if not body.endswith("\n"):
            fh.write("\n")


def read_text_artifact(path, produced_by: str) -> tuple[dict, str]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing artifact {path.name}; run `topoprior {produced_by}` first")
    with open(path) as fh:
        first = fh.readline()
        body = fh.read()
    meta = json.loads(first).get("meta", {})
    return meta, body
