"""Finite-difference gradient checking against analytic backward passes."""

from __future__ import annotations

import numpy as np


def numeric_gradient(loss_fn, array: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of loss_fn() with respect to ``array``.

    loss_fn takes no arguments and must read the (mutated) array on every
    call; the array is restored before returning.
    """
    grad = np.zeros_like(array)
    flat = array.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = loss_fn()
        flat[i] = orig - h
        down = loss_fn()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * h)
    return grad


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst-entry relative error with a unit floor in the denominator."""
    diff = np.abs(analytic - numeric)
    scale = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float((diff / scale).max()) if diff.size else 0.0
