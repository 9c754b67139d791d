"""Loop-density screening: H1 count per series, with a verdict and thresholds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import ContractViolation
from .persistence import PersistenceDiagram

RICH_THRESHOLD = 0.4
SPARSE_THRESHOLD = 0.3


@dataclass(frozen=True)
class ScreeningReport:
    n: int
    h1_count: int
    ratio: float
    verdict: str  # sparse | borderline | rich
    persistence_floor: float
    sparse_threshold: float
    rich_threshold: float
    artifact_suspect: bool = False

    def table_row(self, label: str = "corpus") -> str:
        flag = " (artifact-suspect)" if self.artifact_suspect else ""
        return (
            f"{label:<16} N={self.n:<7d} H1={self.h1_count:<7d} "
            f"H1/N={self.ratio:.2f}  verdict={self.verdict}{flag}"
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "h1_count": self.h1_count,
                "ratio": self.ratio,
                "verdict": self.verdict,
                "persistence_floor": self.persistence_floor,
                "thresholds": {"sparse": self.sparse_threshold, "rich": self.rich_threshold},
                "artifact_suspect": self.artifact_suspect,
            },
            sort_keys=True,
        )


def screen(diagram: PersistenceDiagram, n: int, floor: float = 0.0,
           sparse_threshold: float = SPARSE_THRESHOLD,
           rich_threshold: float = RICH_THRESHOLD,
           artifact_suspect: bool = False) -> ScreeningReport:
    """Count H1 classes with persistence above the floor and rate loop density.

    Essential loops count at any floor.  The verdict thresholds are recorded
    in the report; the artifact-suspect flag is caller-supplied (harmonic
    inflation is judged by inspecting the landscape curves, not detected
    automatically).
    """
    if n < 1:
        raise ContractViolation("series count must be >= 1")
    h1 = sum(
        1
        for b, d in diagram.pairs.get(1, [])
        if (math.isinf(d) or d - b > floor)
    )
    ratio = h1 / n
    if ratio >= rich_threshold:
        verdict = "rich"
    elif ratio <= sparse_threshold:
        verdict = "sparse"
    else:
        verdict = "borderline"
    return ScreeningReport(
        n=n,
        h1_count=h1,
        ratio=ratio,
        verdict=verdict,
        persistence_floor=floor,
        sparse_threshold=sparse_threshold,
        rich_threshold=rich_threshold,
        artifact_suspect=artifact_suspect,
    )
