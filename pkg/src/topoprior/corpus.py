"""Dataset ingestion, normalization, per-series statistics, and window slicing."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractViolation

SIGMA_FLOOR = 1e-8


@dataclass
class SeriesCorpus:
    """Dense N x T entity-time matrix with ids, optional group labels, time index.

    ``values`` carries no NaN after ingestion; ``time_index`` is strictly
    increasing with one entry per column.  ``norm_mean``/``norm_std`` are
    populated by :func:`zscore_per_series` so forecasts can be mapped back
    to the original scale.
    """

    values: np.ndarray
    series_ids: list[str]
    group_labels: list[str] | None = None
    time_index: np.ndarray | None = None
    norm_mean: np.ndarray | None = None
    norm_std: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ContractViolation("corpus values must be a 2-D matrix")
        n, t = self.values.shape
        if len(self.series_ids) != n:
            raise ContractViolation(f"{len(self.series_ids)} ids for {n} rows")
        if self.group_labels is not None and len(self.group_labels) != n:
            raise ContractViolation("group_labels length must equal series count")
        if self.time_index is None:
            self.time_index = np.arange(t, dtype=np.int64)
        else:
            self.time_index = np.asarray(self.time_index, dtype=np.int64)
        if len(self.time_index) != t:
            raise ContractViolation("time_index length must equal column count")
        if t > 1 and not np.all(np.diff(self.time_index) > 0):
            raise ContractViolation("time_index must be strictly increasing")
        if np.isnan(self.values).any():
            raise ContractViolation("corpus values contain NaN after ingestion")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def t(self) -> int:
        return self.values.shape[1]

    def summary(self) -> dict:
        """Corpus summary as emitted in the JSON artifact."""
        group_counts: dict[str, int] = {}
        if self.group_labels is not None:
            for g in self.group_labels:
                group_counts[g] = group_counts.get(g, 0) + 1
        return {"n": self.n, "t": self.t, "group_counts": group_counts}


@dataclass(frozen=True)
class IngestionConfig:
    group_column: str | None = None
    reject_fraction: float = 0.5
    missing_tokens: tuple[str, ...] = ("", "na", "nan", "null", "none")


@dataclass
class RejectionReport:
    rejected_ids: list[str] = field(default_factory=list)
    reasons: dict[str, str] = field(default_factory=dict)


def load_wide_csv(path, config: IngestionConfig | None = None) -> tuple[SeriesCorpus, RejectionReport]:
    """Load a wide CSV: first column series id, remaining columns time steps.

    Missing cells are forward-filled, with leading gaps zero-filled.  A row
    whose missing fraction exceeds ``config.reject_fraction`` is dropped and
    listed in the rejection report.
    """
    config = config or IngestionConfig()
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read corpus CSV {path}: {exc}") from exc
    except csv.Error as exc:
        raise ConfigError(f"malformed CSV {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"empty corpus CSV: {path}")

    header = rows[0]
    if len(header) < 2:
        raise ConfigError("CSV needs an id column plus at least one time column")
    group_idx = None
    value_cols = list(range(1, len(header)))
    if config.group_column is not None:
        if config.group_column not in header:
            raise ConfigError(f"group column {config.group_column!r} not in header")
        group_idx = header.index(config.group_column)
        value_cols = [c for c in value_cols if c != group_idx]
    if not value_cols:
        raise ConfigError("no value columns left after removing the group column")

    time_index = _parse_time_index([header[c] for c in value_cols])

    ids: list[str] = []
    groups: list[str] = []
    data: list[np.ndarray] = []
    report = RejectionReport()
    width = len(header)
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ConfigError(
                f"line {lineno}: expected {width} fields, got {len(row)} (inconsistent row length)"
            )
        sid = row[0]
        raw = [row[c] for c in value_cols]
        vals, n_missing = _parse_values(raw, config.missing_tokens, lineno)
        frac = n_missing / len(raw)
        if frac > config.reject_fraction:
            report.rejected_ids.append(sid)
            report.reasons[sid] = f"missing fraction {frac:.3f} > {config.reject_fraction}"
            continue
        ids.append(sid)
        if group_idx is not None:
            groups.append(row[group_idx])
        data.append(_impute_forward(vals))

    if not ids:
        raise ConfigError("all series were rejected during ingestion")
    corpus = SeriesCorpus(
        values=np.vstack(data),
        series_ids=ids,
        group_labels=groups if group_idx is not None else None,
        time_index=time_index,
    )
    return corpus, report


def _parse_time_index(labels: list[str]) -> np.ndarray:
    try:
        idx = np.array([int(x) for x in labels], dtype=np.int64)
    except ValueError:
        return np.arange(len(labels), dtype=np.int64)
    if np.all(np.diff(idx) > 0):
        return idx
    return np.arange(len(labels), dtype=np.int64)


def _parse_values(raw, missing_tokens, lineno):
    out = np.empty(len(raw), dtype=np.float64)
    n_missing = 0
    for i, cell in enumerate(raw):
        token = cell.strip()
        if token.lower() in missing_tokens:
            out[i] = np.nan
            n_missing += 1
            continue
        try:
            v = float(token)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: cannot parse value {cell!r}") from exc
        if math.isnan(v):
            out[i] = np.nan
            n_missing += 1
        else:
            out[i] = v
    return out, n_missing


def _impute_forward(vals: np.ndarray) -> np.ndarray:
    out = vals.copy()
    last = 0.0  # leading gaps fall back to zero
    for i in range(len(out)):
        if np.isnan(out[i]):
            out[i] = last
        else:
            last = out[i]
    return out


def zscore_per_series(corpus: SeriesCorpus) -> SeriesCorpus:
    """Row-wise (x - mean) / max(std, floor) with population std.

    Constant rows map to zeros.  The per-row mean/std are attached to the
    returned corpus so downstream reports can undo the scaling.
    """
    if corpus.t < 2:
        raise ContractViolation("z-scoring needs at least 2 time steps")
    mu = corpus.values.mean(axis=1, keepdims=True)
    sigma = corpus.values.std(axis=1, keepdims=True)
    denom = np.maximum(sigma, SIGMA_FLOOR)
    return SeriesCorpus(
        values=(corpus.values - mu) / denom,
        series_ids=list(corpus.series_ids),
        group_labels=list(corpus.group_labels) if corpus.group_labels is not None else None,
        time_index=corpus.time_index.copy(),
        norm_mean=mu.ravel(),
        norm_std=denom.ravel(),
    )


@dataclass(frozen=True)
class ContextStats:
    """Four per-series statistics, z-scored across the population."""

    mean: float
    std: float
    trend_slope: float
    last_value: float

    def as_array(self) -> np.ndarray:
        return np.array([self.mean, self.std, self.trend_slope, self.last_value])


def context_stats(corpus: SeriesCorpus) -> list[ContextStats]:
    """Per-series mean/std/OLS-slope/last-value, z-scored across series.

    A statistic that is constant across the population comes back as all
    zeros rather than dividing by ~0.
    """
    if corpus.t < 2:
        raise ContractViolation("context stats need at least 2 time steps")
    x = corpus.values
    t = np.arange(corpus.t, dtype=np.float64)
    tc = t - t.mean()
    raw = np.column_stack(
        [
            x.mean(axis=1),
            x.std(axis=1),
            (x - x.mean(axis=1, keepdims=True)) @ tc / (tc @ tc),
            x[:, -1],
        ]
    )
    mu = raw.mean(axis=0)
    sigma = raw.std(axis=0)
    z = np.where(sigma > 1e-12, (raw - mu) / np.maximum(sigma, 1e-12), 0.0)
    return [ContextStats(*row) for row in z]


def context_stats_matrix(corpus: SeriesCorpus) -> np.ndarray:
    """N x 4 matrix form of :func:`context_stats`."""
    return np.vstack([s.as_array() for s in context_stats(corpus)])


@dataclass(frozen=True)
class Window:
    """One (context, target) index pair for a single series.

    ``ctx_start:ctx_end`` are real context columns; ``zero_pad`` extra zero
    steps are prepended when materialized (cold-start windows).  ``week``
    records post-launch history length for cold-start windows; ``tag``
    labels tagged evaluation windows.
    """

    series: int
    ctx_start: int
    ctx_end: int
    tgt_start: int
    tgt_end: int
    zero_pad: int = 0
    week: int | None = None
    tag: str | None = None

    def context(self, values: np.ndarray) -> np.ndarray:
        real = values[self.series, self.ctx_start : self.ctx_end]
        if self.zero_pad:
            return np.concatenate([np.zeros(self.zero_pad), real])
        return real

    def target(self, values: np.ndarray) -> np.ndarray:
        return values[self.series, self.tgt_start : self.tgt_end]


@dataclass(frozen=True)
class WindowSpec:
    context_len: int
    horizon: int
    stride: int = 1
    mode: str = "standard"  # standard | cold_start | tagged
    train_frac: float = 0.7
    val_frac: float = 0.15
    cold_start_weeks: tuple[int, ...] = (0, 1, 2, 3)
    tag_start: int | None = None
    tag_length: int | None = None


@dataclass
class WindowSet:
    train: list[Window]
    val: list[Window]
    test: list[Window]

    def all(self) -> list[Window]:
        return self.train + self.val + self.test


def slice_windows(corpus: SeriesCorpus, spec: WindowSpec) -> WindowSet:
    """Emit (context, target) window index pairs per series.

    Standard mode slides a context+horizon window with the given stride and
    splits chronologically into train/val/test.  Cold-start mode emits one
    evaluation window per requested week w: w real observations left-padded
    with zeros to the context length, targets starting at w.  Tagged mode
    selects exactly the configured target columns.
    """
    L, H, T = spec.context_len, spec.horizon, corpus.t
    if L + H > T:
        raise ConfigError(f"infeasible window: context {L} + horizon {H} > T {T}")
    if spec.mode == "standard":
        return _standard_windows(corpus, spec)
    if spec.mode == "cold_start":
        wins = []
        for s in range(corpus.n):
            for w in spec.cold_start_weeks:
                if w + H > T:
                    raise ConfigError(f"cold-start week {w} + horizon {H} > T {T}")
                wins.append(
                    Window(
                        series=s,
                        ctx_start=max(0, w - L),
                        ctx_end=w,
                        tgt_start=w,
                        tgt_end=w + H,
                        zero_pad=max(0, L - w),
                        week=w,
                    )
                )
        return WindowSet(train=[], val=[], test=wins)
    if spec.mode == "tagged":
        if spec.tag_start is None or spec.tag_length is None:
            raise ConfigError("tagged mode needs tag_start and tag_length")
        t0, m = spec.tag_start, spec.tag_length
        if t0 < L or t0 + m > T:
            raise ConfigError("tagged window does not fit after a full context")
        wins = [
            Window(series=s, ctx_start=t0 - L, ctx_end=t0, tgt_start=t0, tgt_end=t0 + m, tag=f"t{t0}+{m}")
            for s in range(corpus.n)
        ]
        return WindowSet(train=[], val=[], test=wins)
    raise ConfigError(f"unknown window mode {spec.mode!r}")


def _standard_windows(corpus: SeriesCorpus, spec: WindowSpec) -> WindowSet:
    L, H, T = spec.context_len, spec.horizon, corpus.t
    starts = list(range(0, T - L - H + 1, spec.stride))
    n_train = int(round(spec.train_frac * len(starts)))
    n_val = int(round(spec.val_frac * len(starts)))
    if len(starts) == 1:
        n_train, n_val = 1, 0
    n_train = min(n_train, len(starts))
    n_val = min(n_val, len(starts) - n_train)
    sets: dict[str, list[Window]] = {"train": [], "val": [], "test": []}
    for s in range(corpus.n):
        for k, start in enumerate(starts):
            w = Window(
                series=s,
                ctx_start=start,
                ctx_end=start + L,
                tgt_start=start + L,
                tgt_end=start + L + H,
            )
            if k < n_train:
                sets["train"].append(w)
            elif k < n_train + n_val:
                sets["val"].append(w)
            else:
                sets["test"].append(w)
    return WindowSet(**sets)
