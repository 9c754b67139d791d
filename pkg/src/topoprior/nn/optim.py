"""AdamW with decoupled weight decay."""

from __future__ import annotations

import numpy as np

from .layers import Parameter


class AdamW:
    """Standard Adam moments plus decoupled weight decay.

    Defaults follow the training recipe used throughout the package:
    betas (0.9, 0.999), eps 1e-8, weight decay 1e-3.
    """

    def __init__(self, params: list[Parameter], lr: float = 1e-4,
                 betas=(0.9, 0.999), eps: float = 1e-8, weight_decay: float = 1e-3):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]

    def step(self, lr: float | None = None):
        """Apply one update from the accumulated gradients."""
        lr = self.lr if lr is None else lr
        self.step_count += 1
        bc1 = 1.0 - self.beta1**self.step_count
        bc2 = 1.0 - self.beta2**self.step_count
        for p, m, v in zip(self.params, self._m, self._v):
            if not p.trainable:
                continue
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p.value -= lr * update
            if self.weight_decay:
                p.value -= lr * self.weight_decay * p.value

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def state_dict(self) -> dict:
        return {
            "step": self.step_count,
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "weight_decay": self.weight_decay,
            "m": {p.name: m.tolist() for p, m in zip(self.params, self._m)},
            "v": {p.name: v.tolist() for p, v in zip(self.params, self._v)},
        }

    def load_state_dict(self, state: dict):
        self.step_count = state["step"]
        self.lr = state["lr"]
        self.beta1 = state["beta1"]
        self.beta2 = state["beta2"]
        self.eps = state["eps"]
        self.weight_decay = state["weight_decay"]
        for i, p in enumerate(self.params):
            self._m[i] = np.array(state["m"][p.name])
            self._v[i] = np.array(state["v"][p.name])
