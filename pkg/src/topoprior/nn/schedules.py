"""Learning-rate schedules: cosine annealing and one-cycle."""

from __future__ import annotations

import math
import warnings

from ..errors import ConfigError


def _clamped(step: int, total: int) -> int:
    if step < 0:
        raise ConfigError("schedule step must be >= 0")
    if step > total:
        warnings.warn(f"schedule step {step} > total {total}; clamping", stacklevel=3)
        return total
    return step


def cosine_lr(step: int, total: int, base_lr: float, min_ratio: float = 0.1) -> float:
    """Cosine decay from base_lr at step 0 to min_ratio * base_lr at step total."""
    step = _clamped(step, total)
    lo = min_ratio * base_lr
    if total == 0:
        return base_lr
    return lo + (base_lr - lo) * (1.0 + math.cos(math.pi * step / total)) / 2.0


def one_cycle_lr(step: int, total: int, max_lr: float,
                 warmup_frac: float = 0.3, div_factor: float = 25.0) -> float:
    """Linear warm-up to max_lr over warmup_frac of steps, then cosine to max_lr/div_factor.

    The warm-up also starts from max_lr/div_factor; both internals are
    configurable since only the peak is pinned.
    """
    step = _clamped(step, total)
    floor = max_lr / div_factor
    if total == 0:
        return max_lr
    warm = warmup_frac * total
    if step <= warm and warm > 0:
        return floor + (max_lr - floor) * step / warm
    span = total - warm
    frac = (step - warm) / span if span > 0 else 1.0
    return floor + (max_lr - floor) * (1.0 + math.cos(math.pi * frac)) / 2.0


def lr_schedule(kind: str, step: int, total: int, *, base_lr: float | None = None,
                max_lr: float | None = None, min_ratio: float = 0.1,
                warmup_frac: float = 0.3, div_factor: float = 25.0) -> float:
    if kind == "cosine":
        if base_lr is None:
            raise ConfigError("cosine schedule needs base_lr")
        return cosine_lr(step, total, base_lr, min_ratio=min_ratio)
    if kind == "one_cycle":
        if max_lr is None:
            raise ConfigError("one_cycle schedule needs max_lr")
        return one_cycle_lr(step, total, max_lr, warmup_frac=warmup_frac, div_factor=div_factor)
    raise ConfigError(f"unknown schedule kind {kind!r}")
