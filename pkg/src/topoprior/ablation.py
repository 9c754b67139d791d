"""Randomized topology controls and the matched-config comparison harness."""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .landscape import FINGERPRINT_DIM

CONTROL_VARIANTS = ("vanilla", "rand", "shuffle", "tda", "tda+sheaf")


def rand_tda(dim: int = FINGERPRINT_DIM, seed: int = 0) -> np.ndarray:
    """Gaussian-noise stand-in for the fingerprint (a control, not a landscape)."""
    return np.random.Generator(np.random.PCG64(seed)).standard_normal(dim)


def shuffle_tda(fingerprints: dict[str, np.ndarray], assignment: list[str],
                seed: int = 0) -> list[np.ndarray]:
    """Permute the series-to-group assignment, keeping the fingerprint multiset.

    Breaks the series-to-topology correspondence while preserving marginal
    statistics.  With a single group shuffling is a no-op; a warning is
    emitted and the identity assignment returned.
    """
    for g in set(assignment):
        if g not in fingerprints:
            raise ConfigError(f"no fingerprint for group {g!r}")
    if len(set(assignment)) < 2:
        warnings.warn("shuffle control is a no-op with a single group", stacklevel=2)
        return [fingerprints[g].copy() for g in assignment]
    rng = np.random.Generator(np.random.PCG64(seed))
    permuted = [assignment[i] for i in rng.permutation(len(assignment))]
    return [fingerprints[g].copy() for g in permuted]


def config_digest(config: dict) -> str:
    """Canonical hash of a model/training config, for cross-variant drift checks."""
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


@dataclass
class ControlComparison:
    variants: list[str]
    mae: dict[str, float]
    base_variant: str = "vanilla"

    def delta(self, variant: str) -> float:
        return self.mae[variant] - self.mae[self.base_variant]

    def to_json(self) -> str:
        return json.dumps(
            {
                "base": self.base_variant,
                "rows": [
                    {"variant": v, "mae": self.mae[v], "delta_vs_base": self.delta(v)}
                    for v in self.variants
                ],
            },
            sort_keys=True,
        )

    def render(self) -> str:
        lines = [f"{'variant':<14}{'MAE':>10}{'delta':>10}"]
        for v in self.variants:
            lines.append(f"{v:<14}{self.mae[v]:>10.4f}{self.delta(v):>+10.4f}")
        return "\n".join(lines)


def run_controls(train_variant, variants=CONTROL_VARIANTS, shared_config: dict | None = None) -> ControlComparison:
    """Run the requested variants through a shared training callable.

    ``train_variant(name)`` must return (mae, config_dict); all returned
    configs must hash identically or the comparison is refused.
    """
    mae: dict[str, float] = {}
    digests: dict[str, str] = {}
    for v in variants:
        score, cfg = train_variant(v)
        mae[v] = float(score)
        digests[v] = config_digest(cfg if shared_config is None else shared_config)
    if len(set(digests.values())) > 1:
        raise ConfigError(f"config drift between variants: {digests}")
    if "vanilla" not in mae:
        raise ConfigError("controls need the vanilla variant as the comparison base")
    return ControlComparison(variants=list(variants), mae=mae)
