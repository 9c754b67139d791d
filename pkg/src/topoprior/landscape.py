"""Persistence-landscape vectorization into the fixed 125-dim fingerprint."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .manifold import correlation_distance_graph
from .persistence import (
    PersistenceDiagram,
    bottleneck_distance,
    build_vr_filtration,
    compute_persistence,
)

GRID_POINTS = 25
FINGERPRINT_DIM = 125
# layout: H0 layers 1,2 -> dims 0-49; H1 layers 1,2 -> dims 50-99; H2 layer 1 -> dims 100-124
BLOCKS = ((0, 1), (0, 2), (1, 1), (1, 2), (2, 1))
DEFAULT_STABILITY_CONSTANT = math.sqrt(FINGERPRINT_DIM)


def landscape_value(pairs, layer: int, t: float) -> float:
    """layer-th largest tent value max(0, min(t - b, d - t)) over the pairs."""
    if layer < 1:
        raise ContractViolation("landscape layer must be >= 1")
    if layer > len(pairs):
        return 0.0
    tents = sorted((max(0.0, min(t - b, d - t)) for b, d in pairs), reverse=True)
    return tents[layer - 1]


@dataclass
class Fingerprint:
    """125-dim landscape vector on a shared 25-point grid.

    Infinite deaths were replaced by ``cap_value`` before sampling; two
    fingerprints are comparable only when grid and cap match.
    """

    values: np.ndarray
    t_min: float
    t_max: float
    cap_value: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (FINGERPRINT_DIM,):
            raise ContractViolation(f"fingerprint must have {FINGERPRINT_DIM} entries")
        if (self.values < 0).any():
            raise ContractViolation("fingerprint entries must be non-negative")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, GRID_POINTS)

    def block(self, dim: int, layer: int) -> np.ndarray:
        offset = {(0, 1): 0, (0, 2): 25, (1, 1): 50, (1, 2): 75, (2, 1): 100}[(dim, layer)]
        return self.values[offset : offset + GRID_POINTS]

    def same_grid(self, other: "Fingerprint") -> bool:
        return (
            self.t_min == other.t_min
            and self.t_max == other.t_max
            and self.cap_value == other.cap_value
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "layout": "125:h0(50)h1(50)h2(25)",
                "grid": {"t_min": self.t_min, "t_max": self.t_max, "points": GRID_POINTS},
                "cap_value": self.cap_value,
                "values": self.values.tolist(),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Fingerprint":
        obj = json.loads(text)
        return cls(
            values=np.array(obj["values"]),
            t_min=obj["grid"]["t_min"],
            t_max=obj["grid"]["t_max"],
            cap_value=obj["cap_value"],
        )


def _capped_pairs(diagram: PersistenceDiagram, dim: int, cap: float):
    out = []
    for b, d in diagram.pairs.get(dim, []):
        dd = cap if math.isinf(d) else d
        if dd > b:
            out.append((b, dd))
    return out


def fingerprint(diagram: PersistenceDiagram, cap_value: float | None = None) -> Fingerprint:
    """Sample landscape layers on [0, cap] into the fixed 125-dim layout.

    cap defaults to the max finite death across all dimensions (1.0 for a
    diagram with no finite pairs); pass ``cap_value`` to share a grid
    across diagrams.
    """
    if cap_value is None:
        cap_value = diagram.max_finite_death()
        if cap_value is None:
            cap_value = 1.0
    grid = np.linspace(0.0, cap_value, GRID_POINTS)
    values = np.zeros(FINGERPRINT_DIM)
    for blk, (dim, layer) in enumerate(BLOCKS):
        pairs = _capped_pairs(diagram, dim, cap_value)
        if not pairs:
            continue
        for g, t in enumerate(grid):
            values[blk * GRID_POINTS + g] = landscape_value(pairs, layer, float(t))
    return Fingerprint(values=values, t_min=0.0, t_max=float(cap_value), cap_value=float(cap_value))


def diagram_of_cloud(corpus) -> PersistenceDiagram:
    """Dense correlation manifold -> filtration -> diagram, in one step."""
    graph = correlation_distance_graph(corpus)
    return compute_persistence(build_vr_filtration(graph))


@dataclass(frozen=True)
class StabilityResult:
    lhs: float
    rhs: float
    holds: bool
    bottleneck_by_dim: tuple[float, float, float]
    cap_value: float


def stability_check(cloud_a, cloud_b, constant: float = DEFAULT_STABILITY_CONSTANT) -> StabilityResult:
    """Compare ||h_a - h_b||_2 against constant * max-dim bottleneck distance.

    Both fingerprints are sampled on a shared grid with a shared cap (the
    max finite death across both diagrams) as the comparison requires.
    """
    diag_a = diagram_of_cloud(cloud_a)
    diag_b = diagram_of_cloud(cloud_b)
    caps = [c for c in (diag_a.max_finite_death(), diag_b.max_finite_death()) if c is not None]
    cap = max(caps) if caps else 1.0
    fp_a = fingerprint(diag_a, cap_value=cap)
    fp_b = fingerprint(diag_b, cap_value=cap)
    if not fp_a.same_grid(fp_b):
        raise ContractViolation("fingerprints must share grid and cap")
    lhs = float(np.linalg.norm(fp_a.values - fp_b.values))
    per_dim = tuple(bottleneck_distance(diag_a, diag_b, dim=k) for k in (0, 1, 2))
    rhs = constant * max(per_dim)
    return StabilityResult(
        lhs=lhs,
        rhs=rhs,
        holds=lhs <= rhs + 1e-9,
        bottleneck_by_dim=per_dim,
        cap_value=cap,
    )
