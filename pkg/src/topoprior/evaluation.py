"""Forecast metrics (MAE, MSE, MAPE, WAPE, pinball QLoss) and slicing summaries."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .nn.losses import QUANTILES


@dataclass(frozen=True)
class MetricReport:
    mae: float
    mse: float
    mape_pct: float | None
    wape: float | None
    qloss: float | None
    n_points: int
    n_mape_excluded: int
    slice_label: str = "all"

    def to_dict(self) -> dict:
        return {
            "slice": self.slice_label,
            "mae": self.mae,
            "mse": self.mse,
            "mape_pct": self.mape_pct,
            "wape": self.wape,
            "qloss": self.qloss,
            "n_points": self.n_points,
            "n_mape_excluded": self.n_mape_excluded,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def pinball_loss(quantile_preds, target, quantiles=QUANTILES) -> float:
    """Average pinball loss q*u+ + (1-q)*(-u)+ over quantiles and points."""
    pred = np.asarray(quantile_preds, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    q = np.asarray(quantiles, dtype=np.float64)
    if pred.shape[-1] != q.shape[0] or pred.shape[:-1] != target.shape:
        raise ContractViolation(
            f"quantile preds {pred.shape} incompatible with target {target.shape}"
        )
    u = target[..., None] - pred
    return float(np.mean(q * np.maximum(u, 0.0) + (1.0 - q) * np.maximum(-u, 0.0)))


def metrics(pred, target, quantile_preds=None, quantiles=QUANTILES,
            slice_label: str = "all") -> MetricReport:
    """Point metrics on aligned arrays, plus QLoss when quantile forecasts are given.

    MAPE excludes zero targets (the excluded count is reported); WAPE comes
    back None with only zero targets.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ContractViolation(f"pred shape {pred.shape} != target shape {target.shape}")
    err = pred - target
    abs_err = np.abs(err)
    mae = float(abs_err.mean())
    mse = float((err**2).mean())
    nonzero = target != 0.0
    n_excluded = int(np.sum(~nonzero))
    mape = float(100.0 * np.mean(abs_err[nonzero] / np.abs(target[nonzero]))) if nonzero.any() else None
    denom = float(np.abs(target).sum())
    wape = float(abs_err.sum() / denom) if denom > 0 else None
    qloss = None
    if quantile_preds is not None:
        qloss = pinball_loss(quantile_preds, target, quantiles)
    return MetricReport(
        mae=mae,
        mse=mse,
        mape_pct=mape,
        wape=wape,
        qloss=qloss,
        n_points=int(target.size),
        n_mape_excluded=n_excluded,
        slice_label=slice_label,
    )


@dataclass
class ColdStartTable:
    """MAE per post-launch week, per model variant."""

    weeks: list[int]
    rows: dict[str, list[float | None]]
    gaps: list[tuple[str, int]]

    def to_json(self) -> str:
        return json.dumps(
            {"weeks": self.weeks, "rows": self.rows, "gaps": [list(g) for g in self.gaps]},
            sort_keys=True,
        )

    def render(self) -> str:
        header = "variant".ljust(20) + "".join(f"week {w}".rjust(10) for w in self.weeks)
        lines = [header]
        for name, vals in sorted(self.rows.items()):
            cells = "".join(
                (f"{v:.4f}".rjust(10) if v is not None else "gap".rjust(10)) for v in vals
            )
            lines.append(name.ljust(20) + cells)
        return "\n".join(lines)


def cold_start_table(per_week: dict[str, dict[int, tuple[np.ndarray, np.ndarray]]],
                     weeks=(0, 1, 2, 3)) -> ColdStartTable:
    """Build the weeks-of-history MAE table from {variant: {week: (pred, target)}}.

    Missing weeks are flagged as gaps rather than silently skipped.
    """
    weeks = list(weeks)
    rows: dict[str, list[float | None]] = {}
    gaps: list[tuple[str, int]] = []
    for variant, by_week in per_week.items():
        row: list[float | None] = []
        for w in weeks:
            if w not in by_week:
                row.append(None)
                gaps.append((variant, w))
                continue
            pred, target = by_week[w]
            row.append(metrics(pred, target).mae)
        rows[variant] = row
    return ColdStartTable(weeks=weeks, rows=rows, gaps=gaps)
