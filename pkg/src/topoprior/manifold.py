"""Correlation-distance manifold over the series population and its kNN sparsification."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import SeriesCorpus
from .errors import ConfigError, ContractViolation


@dataclass(frozen=True)
class DistanceGraph:
    """Edge list (i < j, canonical order) over n points with d = 1 - |pearson|.

    mode is "dense" or "knn(k)".  In knn mode the edge set is the symmetrized
    union of per-node nearest-neighbor lists.
    """

    n: int
    edges: list[tuple[int, int, float]]
    mode: str = "dense"

    def weight_edges(self) -> list[tuple[int, int, float]]:
        """Same edge set with w = 1 - d (absolute correlation weights)."""
        return [(i, j, 1.0 - d) for i, j, d in self.edges]

    def to_jsonl(self) -> str:
        return "\n".join(
            json.dumps({"i": i, "j": j, "d": d}) for i, j, d in self.edges
        )


def pearson(x, y) -> float:
    """Pearson correlation; 0 for constant input (degenerate, not an error)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ContractViolation(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ContractViolation("pearson needs at least 2 samples")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc @ xc) * (yc @ yc))
    if denom == 0.0:
        return 0.0
    return float(np.clip((xc @ yc) / denom, -1.0, 1.0))


def _abs_correlations(values: np.ndarray) -> np.ndarray:
    """|pearson| for all pairs; constant rows correlate 0 with everything."""
    n = values.shape[0]
    centered = values - values.mean(axis=1, keepdims=True)
    norms = np.sqrt((centered**2).sum(axis=1))
    constant = norms == 0.0
    safe = np.where(constant, 1.0, norms)
    unit = centered / safe[:, None]
    rho = np.clip(np.abs(unit @ unit.T), 0.0, 1.0)
    rho[constant, :] = 0.0
    rho[:, constant] = 0.0
    np.fill_diagonal(rho, 1.0)
    return rho


def correlation_distance_graph(corpus: SeriesCorpus, k: int | None = None) -> DistanceGraph:
    """Distance graph with d_ij = 1 - |rho_ij|; dense, or symmetrized kNN for k given."""
    if corpus.n < 2:
        raise ContractViolation("need at least 2 series for a correlation graph")
    if k is not None and k >= corpus.n:
        raise ConfigError(f"k={k} must be smaller than the series count {corpus.n}")
    absrho = _abs_correlations(corpus.values)
    dist = 1.0 - absrho
    n = corpus.n
    if k is None:
        edges = [(i, j, float(dist[i, j])) for i in range(n) for j in range(i + 1, n)]
        return DistanceGraph(n=n, edges=edges, mode="dense")
    keep: set[tuple[int, int]] = set()
    for i in range(n):
        # ties broken by lower index: sort key (distance, index)
        order = sorted((float(dist[i, j]), j) for j in range(n) if j != i)
        for _, j in order[:k]:
            keep.add((min(i, j), max(i, j)))
    edges = [(i, j, float(dist[i, j])) for i, j in sorted(keep)]
    return DistanceGraph(n=n, edges=edges, mode=f"knn({k})")


def knn_weight_graph(corpus: SeriesCorpus, k: int) -> DistanceGraph:
    """Same symmetrized kNN edge set carrying w = |rho| instead of distance.

    Returned as a DistanceGraph whose edge value is the weight; w + d = 1
    holds exactly against :func:`correlation_distance_graph` on the same k.
    """
    g = correlation_distance_graph(corpus, k=k)
    return DistanceGraph(
        n=g.n,
        edges=[(i, j, 1.0 - d) for i, j, d in g.edges],
        mode=f"knn_weight({k})",
    )
