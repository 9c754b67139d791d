"""Forward/backward layer set: dense, layer norm, activations, dropout, attention.

Every layer caches what its backward pass needs on forward; backward returns
the input gradient and accumulates parameter gradients, so a layer instance
handles one forward/backward round at a time.  All math is float64 and
deterministic given a seed; parameter initialization is keyed by (seed, name)
so adding or removing unrelated parameters never shifts another parameter's
initial values.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np
from scipy.special import erf

from ..errors import ContractViolation


def param_rng(seed: int, name: str) -> np.random.Generator:
    """Deterministic per-parameter RNG, independent of creation order."""
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "little")))


class Parameter:
    __slots__ = ("name", "value", "grad", "trainable")

    def __init__(self, name: str, value: np.ndarray, trainable: bool = True):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.trainable = trainable

    def zero_grad(self):
        self.grad[...] = 0.0


class Module:
    def parameters(self) -> list[Parameter]:
        return []

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def forward(self, x, training: bool = False, rng: np.random.Generator | None = None):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def __call__(self, x, training: bool = False, rng=None):
        return self.forward(x, training=training, rng=rng)


def _sum_to_shape(grad, shape):
    """Sum gradient over broadcast leading axes down to the given shape."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    return grad


class Dense(Module):
    """Affine map on the last axis: y = x @ W + b."""

    def __init__(self, n_in: int, n_out: int, name: str, seed: int = 0,
                 bias: bool = True, zero_init: bool = False):
        if zero_init:
            w = np.zeros((n_in, n_out))
        else:
            std = math.sqrt(2.0 / (n_in + n_out))
            w = param_rng(seed, f"{name}.w").normal(0.0, std, size=(n_in, n_out))
        self.w = Parameter(f"{name}.w", w)
        self.b = Parameter(f"{name}.b", np.zeros(n_out)) if bias else None
        self._x = None

    def parameters(self):
        return [self.w] + ([self.b] if self.b is not None else [])

    def forward(self, x, training=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.w.value.shape[0]:
            raise ContractViolation(
                f"{self.w.name}: input dim {x.shape[-1]} != {self.w.value.shape[0]}"
            )
        self._x = x
        y = x @ self.w.value
        if self.b is not None:
            y = y + self.b.value
        return y

    def backward(self, grad):
        x = self._x
        flat_x = x.reshape(-1, x.shape[-1])
        flat_g = grad.reshape(-1, grad.shape[-1])
        self.w.grad += flat_x.T @ flat_g
        if self.b is not None:
            self.b.grad += flat_g.sum(axis=0)
        return grad @ self.w.value.T


class LayerNorm(Module):
    """Normalization over the last axis with learned gain and bias."""

    def __init__(self, dim: int, name: str, eps: float = 1e-5):
        self.gain = Parameter(f"{name}.gain", np.ones(dim))
        self.bias = Parameter(f"{name}.bias", np.zeros(dim))
        self.eps = eps
        self._cache = None

    def parameters(self):
        return [self.gain, self.bias]

    def forward(self, x, training=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mu) * inv_std
        self._cache = (xhat, inv_std)
        return self.gain.value * xhat + self.bias.value

    def backward(self, grad):
        xhat, inv_std = self._cache
        self.gain.grad += _sum_to_shape(grad * xhat, self.gain.value.shape)
        self.bias.grad += _sum_to_shape(grad, self.bias.value.shape)
        dxhat = grad * self.gain.value
        n = xhat.shape[-1]
        return inv_std / n * (
            n * dxhat
            - dxhat.sum(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
        )


class ReLU(Module):
    def __init__(self):
        self._mask = None

    def forward(self, x, training=False, rng=None):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad):
        return np.where(self._mask, grad, 0.0)


class GELU(Module):
    """Exact (erf) GELU."""

    def __init__(self):
        self._x = None

    def forward(self, x, training=False, rng=None):
        self._x = np.asarray(x, dtype=np.float64)
        return 0.5 * self._x * (1.0 + erf(self._x / math.sqrt(2.0)))

    def backward(self, grad):
        x = self._x
        cdf = 0.5 * (1.0 + erf(x / math.sqrt(2.0)))
        pdf = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        return grad * (cdf + x * pdf)


class Dropout(Module):
    """Inverted dropout; identity in evaluation mode."""

    def __init__(self, p: float):
        if not 0.0 <= p < 1.0:
            raise ContractViolation(f"dropout p={p} outside [0, 1)")
        self.p = p
        self._mask = None

    def forward(self, x, training=False, rng=None):
        if not training or self.p == 0.0:
            self._mask = None
            return np.asarray(x, dtype=np.float64)
        if rng is None:
            raise ContractViolation("dropout in training mode needs an rng")
        self._mask = (rng.random(np.shape(x)) >= self.p) / (1.0 - self.p)
        return x * self._mask

    def backward(self, grad):
        if self._mask is None:
            return grad
        return grad * self._mask


class Softmax(Module):
    """Numerically stable softmax over the last axis."""

    def __init__(self):
        self._y = None

    def forward(self, x, training=False, rng=None):
        shifted = x - x.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        self._y = e / e.sum(axis=-1, keepdims=True)
        return self._y

    def backward(self, grad):
        y = self._y
        return y * (grad - (grad * y).sum(axis=-1, keepdims=True))


class MultiHeadSelfAttention(Module):
    """Scaled dot-product self-attention over (..., L, d_model), no masking."""

    def __init__(self, d_model: int, n_heads: int, head_dim: int, name: str, seed: int = 0):
        if n_heads * head_dim != d_model:
            raise ContractViolation("heads * head_dim must equal d_model")
        self.n_heads = n_heads
        self.head_dim = head_dim
        self.d_model = d_model
        self.wq = Dense(d_model, d_model, f"{name}.wq", seed=seed)
        self.wk = Dense(d_model, d_model, f"{name}.wk", seed=seed)
        self.wv = Dense(d_model, d_model, f"{name}.wv", seed=seed)
        self.wo = Dense(d_model, d_model, f"{name}.wo", seed=seed)
        self._softmax = Softmax()
        self._cache = None

    def parameters(self):
        return (
            self.wq.parameters()
            + self.wk.parameters()
            + self.wv.parameters()
            + self.wo.parameters()
        )

    def _split(self, x):
        # (..., L, h*hd) -> (..., h, L, hd)
        new = x.reshape(*x.shape[:-1], self.n_heads, self.head_dim)
        return np.moveaxis(new, -3, -2)

    def _merge(self, x):
        # (..., h, L, hd) -> (..., L, h*hd)
        moved = np.moveaxis(x, -3, -2)
        return moved.reshape(*moved.shape[:-2], self.d_model)

    def forward(self, x, training=False, rng=None):
        q = self._split(self.wq(x))
        k = self._split(self.wk(x))
        v = self._split(self.wv(x))
        scale = 1.0 / math.sqrt(self.head_dim)
        scores = (q @ np.swapaxes(k, -1, -2)) * scale
        attn = self._softmax(scores)
        heads = attn @ v
        self._cache = (q, k, v, attn, scale)
        return self.wo(self._merge(heads))

    def backward(self, grad):
        q, k, v, attn, scale = self._cache
        g_heads = self._split(self.wo.backward(grad))
        g_attn = g_heads @ np.swapaxes(v, -1, -2)
        g_v = np.swapaxes(attn, -1, -2) @ g_heads
        g_scores = self._softmax.backward(g_attn) * scale
        g_q = g_scores @ k
        g_k = np.swapaxes(g_scores, -1, -2) @ q
        gx = self.wq.backward(self._merge(g_q))
        gx = gx + self.wk.backward(self._merge(g_k))
        gx = gx + self.wv.backward(self._merge(g_v))
        return gx


class Sequential(Module):
    def __init__(self, layers: list[Module]):
        self.layers = layers

    def parameters(self):
        out = []
        for layer in self.layers:
            out.extend(layer.parameters())
        return out

    def forward(self, x, training=False, rng=None):
        for layer in self.layers:
            x = layer.forward(x, training=training, rng=rng)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad
