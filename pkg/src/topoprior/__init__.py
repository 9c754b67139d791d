"""Population-topology priors for time-series forecasting.

Builds persistence-landscape fingerprints of the cross-series correlation
manifold, per-series spectral sheaf coordinates, a loop-density screening
diagnostic, and two injection paths: a broadcast-conditioned quantile
transformer and a residual topology adapter over cached base forecasts.
"""

__version__ = "0.1.0"

from .corpus import SeriesCorpus, load_wide_csv, zscore_per_series, context_stats
from .manifold import DistanceGraph, correlation_distance_graph, knn_weight_graph, pearson
from .persistence import (
    PersistenceDiagram,
    build_vr_filtration,
    compute_persistence,
    betti_numbers_at,
    bottleneck_distance,
    wasserstein2_distance,
)
from .landscape import Fingerprint, fingerprint, landscape_value, stability_check
from .sheaf import SheafCoordinates, spectral_coordinates, svd_truncated, sheaf_dirichlet_energy
from .screening import ScreeningReport, screen

__all__ = [
    "SeriesCorpus",
    "load_wide_csv",
    "zscore_per_series",
    "context_stats",
    "DistanceGraph",
    "correlation_distance_graph",
    "knn_weight_graph",
    "pearson",
    "PersistenceDiagram",
    "build_vr_filtration",
    "compute_persistence",
    "betti_numbers_at",
    "bottleneck_distance",
    "wasserstein2_distance",
    "Fingerprint",
    "fingerprint",
    "landscape_value",
    "stability_check",
    "SheafCoordinates",
    "spectral_coordinates",
    "svd_truncated",
    "sheaf_dirichlet_energy",
    "ScreeningReport",
    "screen",
]
