"""Synthetic corpora with planted correlation-manifold structure.

These generators back the experiment harness and the sample CLI workflow:
a phase ring plus two phase-concentrated clusters plants at least one
persistent loop, and a two-level cluster population exercises the
cold-start path where cluster identity determines the level.
"""

from __future__ import annotations

import math

import numpy as np

from .corpus import SeriesCorpus


def planted_topology_corpus(n_ring: int = 24, n_cluster: int = 18, t: int = 160,
                            period: int = 16, noise: float = 0.5,
                            seed: int = 0) -> SeriesCorpus:
    """Ring of phase-shifted sinusoids plus two phase-concentrated clusters.

    Ring phases sweep [0, pi) so the absolute-correlation metric keeps the
    cycle closed (phase u and u+pi collapse to distance 0).  Cluster members
    share a phase up to a small jitter, giving two dense groups on the same
    manifold.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    time = np.arange(t)
    omega = 2.0 * math.pi / period
    rows = []
    ids = []
    groups = []
    for j in range(n_ring):
        phase = math.pi * j / n_ring
        rows.append(np.sin(omega * time + phase) + noise * rng.standard_normal(t))
        ids.append(f"ring_{j:03d}")
        groups.append("ring")
    for label, center in (("cluster_a", 0.4), ("cluster_b", 1.2)):
        for j in range(n_cluster):
            phase = center + 0.05 * rng.standard_normal()
            rows.append(np.sin(omega * time + phase) + noise * rng.standard_normal(t))
            ids.append(f"{label}_{j:03d}")
            groups.append(label)
    return SeriesCorpus(values=np.vstack(rows), series_ids=ids, group_labels=groups)


def cold_start_corpus(n_per_cluster: int = 20, t: int = 72, period: int = 12,
                      levels: tuple[float, float] = (5.0, 1.0), noise: float = 0.2,
                      seed: int = 0) -> SeriesCorpus:
    """Two clusters whose identity determines the demand level.

    Values stay on the original scale (no z-scoring) so the level survives
    into the spectral coordinates and the forecast targets.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    time = np.arange(t)
    shape = 1.0 + 0.3 * np.sin(2.0 * math.pi * time / period)
    rows = []
    ids = []
    groups = []
    for c, level in enumerate(levels):
        label = f"cluster_{chr(ord('a') + c)}"
        for j in range(n_per_cluster):
            rows.append(level * shape + noise * rng.standard_normal(t))
            ids.append(f"{label}_{j:03d}")
            groups.append(label)
    return SeriesCorpus(values=np.vstack(rows), series_ids=ids, group_labels=groups)


def ar1_corpus(n: int = 16, t: int = 200, phi: float = 0.9, noise: float = 0.3,
               seed: int = 0) -> SeriesCorpus:
    """Independent AR(1) series; learnable short-range structure for training tests."""
    rng = np.random.Generator(np.random.PCG64(seed))
    values = np.zeros((n, t))
    for i in range(n):
        shocks = noise * rng.standard_normal(t)
        for k in range(1, t):
            values[i, k] = phi * values[i, k - 1] + shocks[k]
    return SeriesCorpus(
        values=values,
        series_ids=[f"ar_{i:03d}" for i in range(n)],
    )
