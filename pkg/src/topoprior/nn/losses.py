"""Training loss: Huber-smoothed quantile (pinball) loss over 9 output quantiles."""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation

QUANTILES = (0.02, 0.10, 0.20, 0.30, 0.50, 0.70, 0.80, 0.90, 0.98)


def huber_quantile_loss(pred, target, quantiles=QUANTILES, delta: float = 1.0):
    """Mean of |q - 1[u<0]| * Huber_delta(u) with u = target - pred.

    pred has shape (..., H, Q), target (..., H).  Returns (loss, grad wrt
    pred).  Huber_delta(u) = u^2/2 for |u| <= delta, else delta*(|u| -
    delta/2); the quantile weighting makes the kink-smoothed pinball.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    q = np.asarray(quantiles, dtype=np.float64)
    if pred.shape[-1] != q.shape[0] or pred.shape[:-1] != target.shape:
        raise ContractViolation(
            f"pred shape {pred.shape} incompatible with target {target.shape} and {q.shape[0]} quantiles"
        )
    u = target[..., None] - pred
    absu = np.abs(u)
    small = absu <= delta
    huber = np.where(small, 0.5 * u * u, delta * (absu - 0.5 * delta))
    weight = np.abs(q - (u < 0.0))
    loss = float(np.mean(weight * huber))
    dhuber = np.where(small, u, delta * np.sign(u))
    grad = -(weight * dhuber) / u.size
    return loss, grad
