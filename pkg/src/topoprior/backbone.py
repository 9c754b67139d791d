"""Pre-norm transformer encoder with broadcast-injected topology context.

A single context vector (temporal features, optional entity embedding,
optional 125-dim fingerprint through the main projection; optional 256-dim
spectral coordinate through its own projection) is added to every value
token before positional encoding and the encoder stack.  The head decodes
the final-position representation into 9 quantiles per horizon step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ContractViolation, DivergenceError
from .landscape import FINGERPRINT_DIM
from .nn import (
    AdamW,
    Dense,
    Dropout,
    GELU,
    LayerNorm,
    MultiHeadSelfAttention,
    ReLU,
    huber_quantile_loss,
    one_cycle_lr,
    param_rng,
)
from .nn.layers import Parameter
from .nn.losses import QUANTILES
from .sheaf import EMBED_DIM

BACKBONE_VARIANTS = ("vanilla", "tda", "tda+sheaf")


def variant_flags(variant: str) -> tuple[bool, bool]:
    if variant not in BACKBONE_VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {BACKBONE_VARIANTS}")
    return "tda" in variant, "sheaf" in variant


@dataclass(frozen=True)
class BackboneConfig:
    context_len: int
    horizon: int
    d_model: int = 256
    layers: int = 6
    heads: int = 8
    head_dim: int = 32
    ffn_dim: int = 1024
    dropout: float = 0.10
    quantiles: tuple[float, ...] = QUANTILES
    temporal_periods: tuple[int, ...] = (7, 12, 26, 52)
    entity_count: int = 0
    entity_dim: int = 0

    def __post_init__(self):
        if self.heads * self.head_dim != self.d_model:
            raise ConfigError("heads * head_dim must equal d_model")
        for name in ("context_len", "horizon", "d_model", "layers", "heads", "head_dim", "ffn_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    @property
    def temporal_dim(self) -> int:
        return 2 * len(self.temporal_periods)

    @classmethod
    def desk(cls, context_len: int, horizon: int, **overrides) -> "BackboneConfig":
        """Reduced configuration sized so experiments finish in minutes."""
        base = cls(
            context_len=context_len,
            horizon=horizon,
            d_model=64,
            layers=2,
            heads=8,
            head_dim=8,
            ffn_dim=128,
        )
        return replace(base, **overrides) if overrides else base


def temporal_features(t_end: int, periods=(7, 12, 26, 52)) -> np.ndarray:
    """Sinusoidal encodings of the last context timestamp at fixed period scales."""
    out = np.empty(2 * len(periods))
    for i, p in enumerate(periods):
        angle = 2.0 * math.pi * t_end / p
        out[2 * i] = math.sin(angle)
        out[2 * i + 1] = math.cos(angle)
    return out


def sinusoidal_positions(length: int, dim: int) -> np.ndarray:
    pe = np.zeros((length, dim))
    pos = np.arange(length)[:, None]
    div = np.exp(np.arange(0, dim, 2) * (-math.log(10000.0) / dim))
    pe[:, 0::2] = np.sin(pos * div)
    pe[:, 1::2] = np.cos(pos * div[: (dim + 1) // 2])
    return pe


def broadcast_inject(tokens: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Add one context vector to every temporal token."""
    tokens = np.asarray(tokens, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if tokens.shape[-1] != g.shape[-1]:
        raise ContractViolation("context vector dimension must match token dimension")
    return tokens + g[..., None, :]


class _EncoderBlock:
    def __init__(self, cfg: BackboneConfig, idx: int, seed: int):
        d = cfg.d_model
        name = f"block{idx}"
        self.ln1 = LayerNorm(d, f"{name}.ln1")
        self.attn = MultiHeadSelfAttention(d, cfg.heads, cfg.head_dim, f"{name}.attn", seed=seed)
        self.drop1 = Dropout(cfg.dropout)
        self.ln2 = LayerNorm(d, f"{name}.ln2")
        self.ffn1 = Dense(d, cfg.ffn_dim, f"{name}.ffn1", seed=seed)
        self.act = GELU()
        self.ffn2 = Dense(cfg.ffn_dim, d, f"{name}.ffn2", seed=seed)
        self.drop2 = Dropout(cfg.dropout)

    def parameters(self):
        return (
            self.ln1.parameters()
            + self.attn.parameters()
            + self.ln2.parameters()
            + self.ffn1.parameters()
            + self.ffn2.parameters()
        )

    def forward(self, x, training, rng):
        x = x + self.drop1(self.attn(self.ln1(x)), training=training, rng=rng)
        x = x + self.drop2(
            self.ffn2(self.act(self.ffn1(self.ln2(x)))), training=training, rng=rng
        )
        return x

    def backward(self, grad):
        g = self.drop2.backward(grad)
        g = self.ffn2.backward(g)
        g = self.act.backward(g)
        g = self.ffn1.backward(g)
        grad = grad + self.ln2.backward(g)
        g = self.drop1.backward(grad)
        g = self.attn.backward(g)
        return grad + self.ln1.backward(g)


class QuantileBackbone:
    """Encoder with broadcast topology context and an H x 9 quantile head."""

    def __init__(self, config: BackboneConfig, variant: str = "vanilla", seed: int = 0):
        self.config = config
        self.variant = variant
        self.seed = seed
        self.use_tda, self.use_sheaf = variant_flags(variant)
        d = config.d_model
        ctx_in = config.temporal_dim
        if config.entity_count:
            ctx_in += config.entity_dim
        if self.use_tda:
            ctx_in += FINGERPRINT_DIM
        self.ctx_in = ctx_in
        self.value_embed = Dense(1, d, "embed", seed=seed)
        self.ctx_proj = Dense(ctx_in, d, "ctx_proj", seed=seed)
        # the spectral coordinate keeps a dedicated projection; a shared one
        # lets the optimizer zero out those columns before they contribute
        self.sheaf_proj = Dense(EMBED_DIM, d, "sheaf_proj", seed=seed, bias=False) if self.use_sheaf else None
        self.entity_table = None
        if config.entity_count:
            self.entity_table = Parameter(
                "entity_embed",
                param_rng(seed, "entity_embed").normal(
                    0.0, 1.0 / math.sqrt(config.entity_dim), (config.entity_count, config.entity_dim)
                ),
            )
        self.blocks = [_EncoderBlock(config, i, seed) for i in range(config.layers)]
        self.final_norm = LayerNorm(d, "final_norm")
        self.head_fc1 = Dense(d, d, "head.fc1", seed=seed)
        self.head_act = ReLU()
        self.head_drop = Dropout(config.dropout)
        self.head_fc2 = Dense(d, config.horizon * len(config.quantiles), "head.fc2", seed=seed)
        self._pe = sinusoidal_positions(config.context_len, d)
        self._cache = None

    def parameters(self) -> list[Parameter]:
        params = self.value_embed.parameters() + self.ctx_proj.parameters()
        if self.sheaf_proj is not None:
            params += self.sheaf_proj.parameters()
        if self.entity_table is not None:
            params.append(self.entity_table)
        for blk in self.blocks:
            params += blk.parameters()
        params += self.final_norm.parameters()
        params += self.head_fc1.parameters() + self.head_fc2.parameters()
        return params

    def named_parameters(self) -> dict[str, np.ndarray]:
        return {p.name: p.value for p in self.parameters()}

    def parameter_count(self) -> int:
        return sum(p.value.size for p in self.parameters())

    def build_context(self, temporal, tda=None, sheaf=None, entity_ids=None) -> np.ndarray:
        """Context vector g: main projection of the concatenated features plus
        the dedicated spectral projection when that path is active."""
        parts = [np.asarray(temporal, dtype=np.float64)]
        if self.entity_table is not None:
            if entity_ids is None:
                raise ConfigError("variant uses entity embeddings but no ids were given")
            parts.append(self.entity_table.value[np.asarray(entity_ids, dtype=int)])
        if self.use_tda:
            if tda is None:
                raise ConfigError(f"variant {self.variant!r} needs a fingerprint input")
            parts.append(np.asarray(tda, dtype=np.float64))
        ctx_input = np.concatenate(parts, axis=-1)
        g = self.ctx_proj(ctx_input)
        if self.use_sheaf:
            if sheaf is None:
                raise ConfigError(f"variant {self.variant!r} needs a spectral-coordinate input")
            g = g + self.sheaf_proj(np.asarray(sheaf, dtype=np.float64))
        self._ctx_cache = (parts, entity_ids)
        return g

    def _backward_context(self, grad_g):
        parts, entity_ids = self._ctx_cache
        if self.use_sheaf:
            self.sheaf_proj.backward(grad_g)
        grad_ctx = self.ctx_proj.backward(grad_g)
        if self.entity_table is not None:
            start = parts[0].shape[-1]
            g_rows = grad_ctx[..., start : start + self.config.entity_dim]
            flat_ids = np.asarray(entity_ids, dtype=int).ravel()
            np.add.at(self.entity_table.grad, flat_ids, g_rows.reshape(len(flat_ids), -1))

    def forward(self, windows, features: dict, training: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        """windows (B, L) plus per-window features -> (B, H, Q) quantile forecasts."""
        windows = np.asarray(windows, dtype=np.float64)
        if windows.shape[-1] != self.config.context_len:
            raise ContractViolation(
                f"window length {windows.shape[-1]} != context_len {self.config.context_len}"
            )
        g = self.build_context(
            features["temporal"],
            tda=features.get("tda"),
            sheaf=features.get("sheaf"),
            entity_ids=features.get("entity_ids"),
        )
        tokens = self.value_embed(windows[..., None])
        tokens = broadcast_inject(tokens, g)
        tokens = tokens + self._pe
        for blk in self.blocks:
            tokens = blk.forward(tokens, training, rng)
        normed = self.final_norm(tokens)
        last = normed[..., -1, :]
        h = self.head_fc1(last)
        h = self.head_act(h)
        h = self.head_drop(h, training=training, rng=rng)
        out = self.head_fc2(h)
        new_shape = out.shape[:-1] + (self.config.horizon, len(self.config.quantiles))
        self._cache = {"normed_shape": normed.shape}
        return out.reshape(new_shape)

    def backward(self, grad_out: np.ndarray):
        grad = grad_out.reshape(*grad_out.shape[:-2], -1)
        g = self.head_fc2.backward(grad)
        g = self.head_drop.backward(g)
        g = self.head_act.backward(g)
        g_last = self.head_fc1.backward(g)
        g_norm = np.zeros(self._cache["normed_shape"])
        g_norm[..., -1, :] = g_last
        g_tokens = self.final_norm.backward(g_norm)
        for blk in reversed(self.blocks):
            g_tokens = blk.backward(g_tokens)
        # positional encoding is constant; broadcast context sums over positions
        self._backward_context(g_tokens.sum(axis=-2))
        self.value_embed.backward(g_tokens)

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()


@dataclass(frozen=True)
class TrainSpec:
    epochs: int = 20
    batch_size: int = 64
    lr: float = 1e-4
    weight_decay: float = 1e-3
    max_lr: float = 3e-4
    patience: int | None = None
    seed: int = 0


@dataclass
class WindowBatch:
    """Materialized training arrays for a list of windows."""

    contexts: np.ndarray  # (M, L)
    targets: np.ndarray  # (M, H)
    temporal: np.ndarray  # (M, temporal_dim)
    tda: np.ndarray | None = None  # (M, 125)
    sheaf: np.ndarray | None = None  # (M, 256)
    entity_ids: np.ndarray | None = None
    series_rows: np.ndarray | None = None

    def __len__(self):
        return self.contexts.shape[0]

    def features(self, idx) -> dict:
        out = {"temporal": self.temporal[idx]}
        if self.tda is not None:
            out["tda"] = self.tda[idx]
        if self.sheaf is not None:
            out["sheaf"] = self.sheaf[idx]
        if self.entity_ids is not None:
            out["entity_ids"] = self.entity_ids[idx]
        return out


def assemble_windows(corpus, windows, config: BackboneConfig,
                     tda_by_series: np.ndarray | None = None,
                     sheaf_coords: np.ndarray | None = None,
                     entity_ids: np.ndarray | None = None) -> WindowBatch:
    """Materialize contexts/targets/features for a window list.

    ``tda_by_series`` is an (N, 125) matrix (a shared fingerprint broadcast,
    per-group rows, or a control); ``sheaf_coords`` the (N, 256) coordinate
    matrix.
    """
    m = len(windows)
    contexts = np.zeros((m, config.context_len))
    targets = np.zeros((m, config.horizon))
    temporal = np.zeros((m, config.temporal_dim))
    rows = np.zeros(m, dtype=int)
    for i, w in enumerate(windows):
        ctx = w.context(corpus.values)
        if len(ctx) != config.context_len:
            raise ContractViolation("window context length mismatch with config")
        tgt = w.target(corpus.values)
        if len(tgt) != config.horizon:
            raise ContractViolation("window horizon mismatch with config")
        contexts[i] = ctx
        targets[i] = tgt
        temporal[i] = temporal_features(int(corpus.time_index[w.ctx_end - 1]) if w.ctx_end > 0 else 0,
                                        config.temporal_periods)
        rows[i] = w.series
    return WindowBatch(
        contexts=contexts,
        targets=targets,
        temporal=temporal,
        tda=tda_by_series[rows] if tda_by_series is not None else None,
        sheaf=sheaf_coords[rows] if sheaf_coords is not None else None,
        entity_ids=entity_ids[rows] if entity_ids is not None else None,
        series_rows=rows,
    )


@dataclass
class TrainResult:
    model: QuantileBackbone
    log: list[dict]
    optimizer_state: dict | None = None
    rng_state: dict | None = None

    def final_val_loss(self) -> float | None:
        for entry in reversed(self.log):
            if entry.get("val_loss") is not None:
                return entry["val_loss"]
        return None


def train_backbone(train_data: WindowBatch, val_data: WindowBatch | None,
                   config: BackboneConfig, variant: str, spec: TrainSpec) -> TrainResult:
    """AdamW + one-cycle training of the quantile head under the huber-pinball loss."""
    model = QuantileBackbone(config, variant=variant, seed=spec.seed)
    opt = AdamW(model.parameters(), lr=spec.lr, weight_decay=spec.weight_decay)
    rng = np.random.Generator(np.random.PCG64(spec.seed + 0x5EED))
    m = len(train_data)
    steps_per_epoch = max(1, math.ceil(m / spec.batch_size))
    total_steps = max(1, spec.epochs * steps_per_epoch)
    log: list[dict] = []
    best_val = math.inf
    bad_epochs = 0
    step = 0
    for epoch in range(spec.epochs):
        order = rng.permutation(m)
        epoch_loss = 0.0
        for b in range(steps_per_epoch):
            idx = order[b * spec.batch_size : (b + 1) * spec.batch_size]
            if idx.size == 0:
                continue
            lr = one_cycle_lr(step, total_steps, spec.max_lr)
            model.zero_grad()
            pred = model.forward(train_data.contexts[idx], train_data.features(idx),
                                 training=True, rng=rng)
            loss, grad = huber_quantile_loss(pred, train_data.targets[idx], config.quantiles)
            if not math.isfinite(loss):
                raise DivergenceError("backbone training loss is non-finite",
                                      diagnostics={"epoch": epoch, "step": step, "log": log})
            model.backward(grad)
            opt.step(lr=lr)
            epoch_loss += loss * idx.size
            step += 1
        val_loss = None
        if val_data is not None and len(val_data):
            val_pred = model.forward(val_data.contexts, val_data.features(slice(None)))
            val_loss, _ = huber_quantile_loss(val_pred, val_data.targets, config.quantiles)
        log.append(
            {
                "epoch": epoch,
                "train_loss": epoch_loss / m if m else None,
                "val_loss": val_loss,
                "lr": one_cycle_lr(min(step, total_steps), total_steps, spec.max_lr),
            }
        )
        if spec.patience is not None and val_loss is not None:
            if val_loss < best_val - 1e-12:
                best_val = val_loss
                bad_epochs = 0
            else:
                bad_epochs += 1
                if bad_epochs > spec.patience:
                    break
    return TrainResult(
        model=model,
        log=log,
        optimizer_state=opt.state_dict(),
        rng_state={"bit_generator": rng.bit_generator.state},
    )


def forecast(model: QuantileBackbone, data: WindowBatch) -> np.ndarray:
    """Deterministic eval-mode forecasts, (M, H, Q)."""
    return model.forward(data.contexts, data.features(slice(None)))
