"""Four-branch topology adapter: residual corrections over cached base forecasts.

Each branch projects its input to 128 dims; the concatenated representation
passes through an output MLP whose final layer starts at zero, so the
adapter is exactly the base forecast until training moves it.  Disabled
branches receive zero inputs and are excluded from the backward pass, which
keeps the output MLP identical across ablation variants while isolating
gradient flow.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import SeriesCorpus, Window
from .errors import ConfigError, ContractViolation, DivergenceError
from .landscape import FINGERPRINT_DIM
from .nn import AdamW, Dense, LayerNorm, ReLU, Sequential, cosine_lr, huber_quantile_loss
from .nn.losses import QUANTILES
from .sheaf import EMBED_DIM

ADAPTER_VARIANTS = ("vanilla", "tda", "tda+sheaf")
BRANCH_DIM = 128
CONTEXT_STAT_DIM = 4


def adapter_variant_flags(variant: str) -> tuple[bool, bool]:
    if variant not in ADAPTER_VARIANTS:
        raise ConfigError(f"unknown adapter variant {variant!r}")
    return "tda" in variant, "sheaf" in variant


@dataclass(frozen=True)
class AdapterConfig:
    horizon: int
    branch_dim: int = BRANCH_DIM
    hidden_dim: int = 256
    quantiles: tuple[float, ...] = QUANTILES
    lr: float = 3e-4
    weight_decay: float = 1e-3
    epochs: int = 40
    batch_size: int = 64

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")

    @property
    def concat_dim(self) -> int:
        return 4 * self.branch_dim

    def arch_dict(self) -> dict:
        """Architecture + training hyperparameters; identical across variants."""
        return {
            "horizon": self.horizon,
            "branch_dim": self.branch_dim,
            "hidden_dim": self.hidden_dim,
            "quantiles": list(self.quantiles),
            "lr": self.lr,
            "weight_decay": self.weight_decay,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
        }


class TopologyAdapter:
    def __init__(self, config: AdapterConfig, variant: str = "tda+sheaf", seed: int = 0):
        self.config = config
        self.variant = variant
        self.use_tda, self.use_sheaf = adapter_variant_flags(variant)
        bd = config.branch_dim
        h = config.horizon
        nq = len(config.quantiles)
        self.tda_branch = Sequential([
            Dense(FINGERPRINT_DIM, bd, "tda.fc1", seed=seed),
            ReLU(),
            Dense(bd, bd, "tda.fc2", seed=seed),
            LayerNorm(bd, "tda.ln"),
        ])
        self.sheaf_branch = Sequential([
            Dense(EMBED_DIM, bd, "sheaf.fc1", seed=seed),
            ReLU(),
            Dense(bd, bd, "sheaf.fc2", seed=seed),
            LayerNorm(bd, "sheaf.ln"),
        ])
        self.ctx_branch = Sequential([
            Dense(CONTEXT_STAT_DIM, bd, "ctx.fc", seed=seed),
            LayerNorm(bd, "ctx.ln"),
        ])
        self.fc_branch = Sequential([
            Dense(h, bd, "fc.fc", seed=seed),
            LayerNorm(bd, "fc.ln"),
        ])
        self.output_mlp = Sequential([
            Dense(config.concat_dim, config.hidden_dim, "out.fc1", seed=seed),
            ReLU(),
            Dense(config.hidden_dim, nq * h, "out.fc2", seed=seed, zero_init=True),
        ])
        self._cache = None

    def parameters(self):
        return (
            self.tda_branch.parameters()
            + self.sheaf_branch.parameters()
            + self.ctx_branch.parameters()
            + self.fc_branch.parameters()
            + self.output_mlp.parameters()
        )

    def named_parameters(self) -> dict[str, np.ndarray]:
        return {p.name: p.value for p in self.parameters()}

    def output_mlp_shapes(self) -> list[tuple[int, ...]]:
        return [tuple(p.value.shape) for p in self.output_mlp.parameters()]

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def forward(self, tda, sheaf, ctx, base, training: bool = False, rng=None) -> np.ndarray:
        """(..., H, Q) forecasts: base broadcast over quantiles plus the learned residual."""
        base = np.asarray(base, dtype=np.float64)
        if base.shape[-1] != self.config.horizon:
            raise ContractViolation(
                f"base forecast length {base.shape[-1]} != horizon {self.config.horizon}"
            )
        lead = base.shape[:-1]
        tda_in = np.asarray(tda, dtype=np.float64) if self.use_tda else np.zeros(lead + (FINGERPRINT_DIM,))
        sheaf_in = np.asarray(sheaf, dtype=np.float64) if self.use_sheaf else np.zeros(lead + (EMBED_DIM,))
        h = np.concatenate(
            [
                self.tda_branch(tda_in, training=training, rng=rng),
                self.sheaf_branch(sheaf_in, training=training, rng=rng),
                self.ctx_branch(np.asarray(ctx, dtype=np.float64), training=training, rng=rng),
                self.fc_branch(base, training=training, rng=rng),
            ],
            axis=-1,
        )
        delta = self.output_mlp(h, training=training, rng=rng)
        nq = len(self.config.quantiles)
        delta = delta.reshape(lead + (self.config.horizon, nq))
        return base[..., None] + delta

    def backward(self, grad_out: np.ndarray):
        """Backprop into branch parameters; disabled branches stay untouched."""
        grad = grad_out.reshape(*grad_out.shape[:-2], -1)
        g_h = self.output_mlp.backward(grad)
        bd = self.config.branch_dim
        g_tda, g_sheaf, g_ctx, g_fc = (
            g_h[..., :bd],
            g_h[..., bd : 2 * bd],
            g_h[..., 2 * bd : 3 * bd],
            g_h[..., 3 * bd :],
        )
        if self.use_tda:
            self.tda_branch.backward(g_tda)
        if self.use_sheaf:
            self.sheaf_branch.backward(g_sheaf)
        self.ctx_branch.backward(g_ctx)
        self.fc_branch.backward(g_fc)


def adapter_forward(adapter: TopologyAdapter, tda, sheaf, ctx, base) -> np.ndarray:
    """Eval-mode adapter output for a single window or a batch."""
    return adapter.forward(tda, sheaf, ctx, base)


@dataclass
class BaseForecastCache:
    """Median forecasts per (series_id, window_id), produced by a named provider."""

    provider: str
    horizon: int
    entries: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)

    def get(self, series_id: str, window_id: int) -> np.ndarray:
        key = (series_id, window_id)
        if key not in self.entries:
            raise ConfigError(f"base cache is missing window {key}; run build-cache first")
        return self.entries[key]

    def digest(self) -> str:
        h = hashlib.sha256()
        for key in sorted(self.entries):
            h.update(repr(key).encode())
            h.update(self.entries[key].tobytes())
        return h.hexdigest()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["series_id", "window_id", "h", "value"])
            for (sid, wid) in sorted(self.entries):
                vec = self.entries[(sid, wid)]
                for h, v in enumerate(vec):
                    writer.writerow([sid, wid, h, repr(float(v))])

    @classmethod
    def read_csv(cls, path, provider: str = "external_file") -> "BaseForecastCache":
        rows: dict[tuple[str, int], dict[int, float]] = {}
        try:
            with open(path, newline="") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if header != ["series_id", "window_id", "h", "value"]:
                    raise ConfigError(f"unexpected base-forecast CSV header: {header}")
                for rec in reader:
                    sid, wid, h, v = rec[0], int(rec[1]), int(rec[2]), float(rec[3])
                    rows.setdefault((sid, wid), {})[h] = v
        except OSError as exc:
            raise ConfigError(f"cannot read base forecasts {path}: {exc}") from exc
        if not rows:
            raise ConfigError(f"no base forecasts in {path}")
        horizon = max(max(per.keys()) for per in rows.values()) + 1
        entries = {}
        gaps = []
        for key, per in rows.items():
            missing = [h for h in range(horizon) if h not in per]
            if missing:
                gaps.append((key, missing))
                continue
            entries[key] = np.array([per[h] for h in range(horizon)])
        if gaps:
            raise ConfigError(f"base-forecast coverage gaps: {gaps[:5]}")
        return cls(provider=provider, horizon=horizon, entries=entries)

    @staticmethod
    def validate_coverage(cache: "BaseForecastCache", corpus: SeriesCorpus, windows: list[Window]):
        gaps = [
            (corpus.series_ids[w.series], w.tgt_start)
            for w in windows
            if (corpus.series_ids[w.series], w.tgt_start) not in cache.entries
        ]
        if gaps:
            raise ConfigError(f"base cache does not cover {len(gaps)} windows, e.g. {gaps[:5]}")


def build_base_cache(corpus: SeriesCorpus, windows: list[Window], provider: str,
                     period: int | None = None, path=None) -> BaseForecastCache:
    """Deterministic base median forecasts for every window.

    seasonal_naive copies the last full period before the target; drift
    extrapolates last value plus the context's endpoint slope; external_file
    ingests a precomputed CSV and validates coverage.
    """
    if not windows:
        raise ConfigError("no windows to cache")
    horizon = windows[0].tgt_end - windows[0].tgt_start
    if provider == "external_file":
        if path is None:
            raise ConfigError("external_file provider needs a path")
        cache = BaseForecastCache.read_csv(path)
        BaseForecastCache.validate_coverage(cache, corpus, windows)
        return cache
    cache = BaseForecastCache(provider=provider, horizon=horizon)
    for w in windows:
        sid = corpus.series_ids[w.series]
        if provider == "seasonal_naive":
            if period is None or period < 1:
                raise ConfigError("seasonal_naive needs a positive period")
            if w.tgt_start < period:
                raise ConfigError(
                    f"window at t={w.tgt_start} lacks a full period of history for seasonal_naive"
                )
            hist = corpus.values[w.series, w.tgt_start - period : w.tgt_start]
            fc = np.array([hist[h % period] for h in range(horizon)])
        elif provider == "drift":
            ctx = corpus.values[w.series, w.ctx_start : w.ctx_end]
            if len(ctx) >= 2:
                slope = (ctx[-1] - ctx[0]) / (len(ctx) - 1)
                last = ctx[-1]
            elif len(ctx) == 1:
                slope, last = 0.0, ctx[0]
            else:
                slope, last = 0.0, 0.0
            fc = last + slope * np.arange(1, horizon + 1)
        else:
            raise ConfigError(f"unknown base-forecast provider {provider!r}")
        cache.entries[(sid, w.tgt_start)] = fc
    return cache


@dataclass
class AdapterData:
    """Aligned per-window inputs used by adapter training and evaluation."""

    tda: np.ndarray  # (M, 125)
    sheaf: np.ndarray  # (M, 256)
    ctx: np.ndarray  # (M, 4)
    base: np.ndarray  # (M, H)
    targets: np.ndarray  # (M, H)
    series_rows: np.ndarray

    def __len__(self):
        return self.base.shape[0]


def assemble_adapter_data(corpus: SeriesCorpus, windows: list[Window],
                          cache: BaseForecastCache, tda_by_series: np.ndarray,
                          sheaf_coords: np.ndarray, ctx_stats: np.ndarray) -> AdapterData:
    m = len(windows)
    horizon = cache.horizon
    base = np.zeros((m, horizon))
    targets = np.zeros((m, horizon))
    rows = np.zeros(m, dtype=int)
    for i, w in enumerate(windows):
        sid = corpus.series_ids[w.series]
        base[i] = cache.get(sid, w.tgt_start)
        tgt = w.target(corpus.values)
        if len(tgt) != horizon:
            raise ContractViolation("window horizon mismatch with cache horizon")
        targets[i] = tgt
        rows[i] = w.series
    return AdapterData(
        tda=tda_by_series[rows],
        sheaf=sheaf_coords[rows],
        ctx=ctx_stats[rows],
        base=base,
        targets=targets,
        series_rows=rows,
    )


@dataclass
class AdapterTrainResult:
    adapter: TopologyAdapter
    log: list[dict]
    optimizer_state: dict | None = None
    rng_state: dict | None = None

    def final_val_loss(self) -> float | None:
        for entry in reversed(self.log):
            if entry.get("val_loss") is not None:
                return entry["val_loss"]
        return None


def train_adapter(cache: BaseForecastCache, train_data: AdapterData,
                  val_data: AdapterData | None, config: AdapterConfig,
                  variant: str, seed: int = 0) -> AdapterTrainResult:
    """Minimize the huber-pinball loss of residual-corrected forecasts.

    The cache is read-only; a digest check fails the run if anything
    mutates it.
    """
    cache_digest = cache.digest()
    adapter = TopologyAdapter(config, variant=variant, seed=seed)
    opt = AdamW(adapter.parameters(), lr=config.lr, weight_decay=config.weight_decay)
    rng = np.random.Generator(np.random.PCG64(seed + 0xADA7))
    m = len(train_data)
    steps_per_epoch = max(1, math.ceil(m / config.batch_size))
    total_steps = max(1, config.epochs * steps_per_epoch)
    log: list[dict] = []
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(m)
        epoch_loss = 0.0
        for b in range(steps_per_epoch):
            idx = order[b * config.batch_size : (b + 1) * config.batch_size]
            if idx.size == 0:
                continue
            lr = cosine_lr(step, total_steps, config.lr)
            adapter.zero_grad()
            pred = adapter.forward(
                train_data.tda[idx], train_data.sheaf[idx], train_data.ctx[idx],
                train_data.base[idx], training=True, rng=rng,
            )
            loss, grad = huber_quantile_loss(pred, train_data.targets[idx], config.quantiles)
            if not math.isfinite(loss):
                raise DivergenceError("adapter training loss is non-finite",
                                      diagnostics={"epoch": epoch, "step": step, "log": log})
            adapter.backward(grad)
            opt.step(lr=lr)
            epoch_loss += loss * idx.size
            step += 1
        val_loss = None
        if val_data is not None and len(val_data):
            pred = adapter.forward(val_data.tda, val_data.sheaf, val_data.ctx, val_data.base)
            val_loss, _ = huber_quantile_loss(pred, val_data.targets, config.quantiles)
        log.append({"epoch": epoch, "train_loss": epoch_loss / m if m else None,
                    "val_loss": val_loss, "lr": cosine_lr(min(step, total_steps), total_steps, config.lr)})
    if cache.digest() != cache_digest:
        raise ContractViolation("base forecast cache was mutated during training")
    return AdapterTrainResult(
        adapter=adapter,
        log=log,
        optimizer_state=opt.state_dict(),
        rng_state={"bit_generator": rng.bit_generator.state},
    )
