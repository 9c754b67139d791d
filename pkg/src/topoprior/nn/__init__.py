"""Minimal deterministic differentiable core (float64, fixed layer set)."""

from .layers import (
    Parameter,
    Dense,
    LayerNorm,
    ReLU,
    GELU,
    Dropout,
    Softmax,
    MultiHeadSelfAttention,
    Sequential,
    param_rng,
)
from .losses import huber_quantile_loss
from .optim import AdamW
from .schedules import lr_schedule, cosine_lr, one_cycle_lr
from .gradcheck import numeric_gradient, max_rel_error
from .checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    "Parameter",
    "Dense",
    "LayerNorm",
    "ReLU",
    "GELU",
    "Dropout",
    "Softmax",
    "MultiHeadSelfAttention",
    "Sequential",
    "param_rng",
    "huber_quantile_loss",
    "AdamW",
    "lr_schedule",
    "cosine_lr",
    "one_cycle_lr",
    "numeric_gradient",
    "max_rel_error",
    "save_checkpoint",
    "load_checkpoint",
]
