"""Vietoris-Rips filtration, persistent homology, and persistence-diagram distances.

The complex is built from vertices, edges, and triangles (clique complex of
the distance graph).  With triangles as the top simplices, H0 and H1 carry
finite birth-death pairs while every 2-cycle is an essential class; that
choice is recorded in the diagram artifact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ContractViolation
from .manifold import DistanceGraph

INF = math.inf


@dataclass(frozen=True)
class FilteredSimplex:
    """A vertex, edge, or triangle with its filtration value.

    The value of an edge is its distance; a triangle enters at the max of
    its three edge values; vertices enter at 0.
    """

    vertices: tuple[int, ...]
    value: float

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    def sort_key(self):
        return (self.value, self.dim, self.vertices)


@dataclass
class PersistenceDiagram:
    """Birth-death pairs per homology dimension 0..2; inf marks essential classes."""

    pairs: dict[int, list[tuple[float, float]]] = field(default_factory=dict)
    complex_note: str = "clique complex up to triangles; 2-cycles never die"

    def __post_init__(self):
        for k in (0, 1, 2):
            self.pairs.setdefault(k, [])
        for k, plist in self.pairs.items():
            for b, d in plist:
                if b < 0:
                    raise ContractViolation(f"negative birth {b} in H{k}")
                if d <= b:
                    raise ContractViolation(f"death {d} <= birth {b} in H{k}")

    def finite_pairs(self, dim: int) -> list[tuple[float, float]]:
        return [(b, d) for b, d in self.pairs.get(dim, []) if math.isfinite(d)]

    def essential_births(self, dim: int) -> list[float]:
        return [b for b, d in self.pairs.get(dim, []) if math.isinf(d)]

    def betti_at(self, epsilon: float, dim: int) -> int:
        """Classes alive at scale epsilon: birth <= epsilon < death."""
        return sum(1 for b, d in self.pairs.get(dim, []) if b <= epsilon < d)

    def max_finite_death(self) -> float | None:
        deaths = [d for plist in self.pairs.values() for _, d in plist if math.isfinite(d)]
        return max(deaths) if deaths else None

    def to_json(self) -> str:
        obj = {
            "note": self.complex_note,
            "dims": {
                str(k): [[b, None if math.isinf(d) else d] for b, d in sorted(self.pairs[k])]
                for k in (0, 1, 2)
            },
        }
        return json.dumps(obj, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PersistenceDiagram":
        obj = json.loads(text)
        pairs = {
            int(k): [(b, INF if d is None else d) for b, d in plist]
            for k, plist in obj["dims"].items()
        }
        return cls(pairs=pairs, complex_note=obj.get("note", ""))


def build_vr_filtration(graph: DistanceGraph, max_dim: int = 2) -> list[FilteredSimplex]:
    """Vertices at 0, edges at their distance, triangles at their max edge value.

    Triangles are formed only from edges present in the graph, so a kNN
    graph yields the clique complex of the sparsified manifold.  The list is
    sorted by (value, dimension, vertex tuple), which is face-closed.
    """
    if max_dim != 2:
        raise ContractViolation("only filtrations up to dimension 2 are supported")
    simplices = [FilteredSimplex((i,), 0.0) for i in range(graph.n)]
    edge_val: dict[tuple[int, int], float] = {}
    adj: dict[int, set[int]] = {i: set() for i in range(graph.n)}
    for i, j, d in graph.edges:
        if i == j:
            raise ContractViolation("self-loop in distance graph")
        key = (min(i, j), max(i, j))
        if key in edge_val:
            raise ContractViolation(f"duplicate edge {key}")
        edge_val[key] = d
        adj[i].add(j)
        adj[j].add(i)
        simplices.append(FilteredSimplex(key, d))
    for u in range(graph.n):
        nbrs = sorted(v for v in adj[u] if v > u)
        for a_idx in range(len(nbrs)):
            for b_idx in range(a_idx + 1, len(nbrs)):
                v, w = nbrs[a_idx], nbrs[b_idx]
                if w in adj[v]:
                    val = max(edge_val[(u, v)], edge_val[(u, w)], edge_val[(v, w)])
                    simplices.append(FilteredSimplex((u, v, w), val))
    simplices.sort(key=FilteredSimplex.sort_key)
    return simplices


def _check_filtration(filtration: list[FilteredSimplex]) -> dict[tuple[int, ...], int]:
    index: dict[tuple[int, ...], int] = {}
    prev_key = None
    for pos, s in enumerate(filtration):
        key = s.sort_key()
        if prev_key is not None and key < prev_key:
            raise ContractViolation(f"filtration not sorted at position {pos}")
        prev_key = key
        index[s.vertices] = pos
    for pos, s in enumerate(filtration):
        if s.dim == 0:
            continue
        for face in combinations(s.vertices, len(s.vertices) - 1):
            fpos = index.get(face)
            if fpos is None or fpos > pos:
                raise ContractViolation(f"face {face} missing or late for {s.vertices}")
    return index


def compute_persistence(filtration: list[FilteredSimplex]) -> PersistenceDiagram:
    """Standard Z/2 boundary-matrix column reduction with low-pivot lookup.

    Zero-persistence pairs are dropped; unpaired simplices become essential
    classes with infinite death.
    """
    index = _check_filtration(filtration)
    columns: list[int] = []
    for s in filtration:
        col = 0
        if s.dim > 0:
            for face in combinations(s.vertices, len(s.vertices) - 1):
                col ^= 1 << index[face]
        columns.append(col)

    pivot_of_low: dict[int, int] = {}
    reduced: list[int] = [0] * len(columns)
    paired_as_birth: set[int] = set()
    pairs: dict[int, list[tuple[float, float]]] = {0: [], 1: [], 2: []}
    for j, col in enumerate(columns):
        while col:
            low = col.bit_length() - 1
            other = pivot_of_low.get(low)
            if other is None:
                break
            col ^= reduced[other]
        reduced[j] = col
        if col:
            low = col.bit_length() - 1
            pivot_of_low[low] = j
            paired_as_birth.add(low)
            birth = filtration[low].value
            death = filtration[j].value
            if death > birth:
                pairs[filtration[low].dim].append((birth, death))
    for j, col in enumerate(reduced):
        if col == 0 and j not in paired_as_birth:
            pairs[filtration[j].dim].append((filtration[j].value, INF))
    for k in pairs:
        pairs[k].sort()
    return PersistenceDiagram(pairs=pairs)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def betti_numbers_at(graph: DistanceGraph, epsilon: float) -> tuple[int, int]:
    """Brute-force (beta0, beta1) of the clique complex at a fixed scale.

    beta0 by union-find; beta1 = dim(cycle space) - rank of the triangle
    boundary map over Z/2.  Intended as an independent oracle for small n.
    """
    present = [(i, j) for i, j, d in graph.edges if d <= epsilon]
    uf = _UnionFind(graph.n)
    for i, j in present:
        uf.union(i, j)
    beta0 = len({uf.find(v) for v in range(graph.n)})

    edge_index = {e: idx for idx, e in enumerate(sorted(present))}
    adj: dict[int, set[int]] = {i: set() for i in range(graph.n)}
    for i, j in present:
        adj[i].add(j)
        adj[j].add(i)
    tri_cols: list[int] = []
    for u in range(graph.n):
        nbrs = sorted(v for v in adj[u] if v > u)
        for a_idx in range(len(nbrs)):
            for b_idx in range(a_idx + 1, len(nbrs)):
                v, w = nbrs[a_idx], nbrs[b_idx]
                if w in adj[v]:
                    col = (
                        (1 << edge_index[(u, v)])
                        ^ (1 << edge_index[(u, w)])
                        ^ (1 << edge_index[(v, w)])
                    )
                    tri_cols.append(col)
    rank = 0
    pivots: dict[int, int] = {}
    for col in tri_cols:
        while col:
            low = col.bit_length() - 1
            if low not in pivots:
                pivots[low] = col
                rank += 1
                break
            col ^= pivots[low]
    cycle_dim = len(present) - graph.n + beta0
    return beta0, cycle_dim - rank


def _linf(p, q) -> float:
    return max(abs(p[0] - q[0]), abs(p[1] - q[1]))


def _split_dim(diagram: PersistenceDiagram, dim: int):
    finite = diagram.finite_pairs(dim)
    essential = sorted(diagram.essential_births(dim))
    return finite, essential


def _essential_linf(ea: list[float], eb: list[float]) -> float:
    if len(ea) != len(eb):
        raise ContractViolation(
            f"mismatched infinite-pair counts: {len(ea)} vs {len(eb)}"
        )
    if not ea:
        return 0.0
    return max(abs(a - b) for a, b in zip(ea, eb))


def _matching_feasible(a, b, r: float) -> bool:
    """Perfect matching test: every point matches a cross point within r or its diagonal."""
    m, n = len(a), len(b)
    size = m + n
    # left nodes: a points then n diagonal slots; right nodes: b points then m slots
    adjacency: list[list[int]] = []
    for i in range(m):
        row = [j for j in range(n) if _linf(a[i], b[j]) <= r]
        if (a[i][1] - a[i][0]) / 2.0 <= r:
            row.extend(range(n, size))
        adjacency.append(row)
    for k in range(n):
        row = [j for j in range(n) if (b[j][1] - b[j][0]) / 2.0 <= r]
        row.extend(range(n, size))
        adjacency.append(row)

    match_right = [-1] * size

    def try_assign(u, seen):
        for v in adjacency[u]:
            if seen[v]:
                continue
            seen[v] = True
            if match_right[v] == -1 or try_assign(match_right[v], seen):
                match_right[v] = u
                return True
        return False

    for u in range(size):
        if not try_assign(u, [False] * size):
            return False
    return True


def bottleneck_distance(a: PersistenceDiagram, b: PersistenceDiagram, dim: int) -> float:
    """Exact bottleneck distance in one homology dimension.

    Binary search over candidate radii with a bipartite perfect-matching
    feasibility test; diagonal matches allowed.  Essential classes must
    match in count and are paired by sorted birth.
    """
    fa, ea = _split_dim(a, dim)
    fb, eb = _split_dim(b, dim)
    ess = _essential_linf(ea, eb)
    if not fa and not fb:
        return ess
    candidates = {0.0}
    candidates.update(_linf(p, q) for p in fa for q in fb)
    candidates.update((d - bb) / 2.0 for bb, d in fa)
    candidates.update((d - bb) / 2.0 for bb, d in fb)
    values = sorted(candidates)
    lo, hi = 0, len(values) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _matching_feasible(fa, fb, values[mid]):
            hi = mid
        else:
            lo = mid + 1
    return max(values[lo], ess)


def wasserstein2_distance(a: PersistenceDiagram, b: PersistenceDiagram, dim: int) -> float:
    """Exact Wasserstein-2 with squared Euclidean ground metric and diagonal augmentation."""
    fa, ea = _split_dim(a, dim)
    fb, eb = _split_dim(b, dim)
    if len(ea) != len(eb):
        raise ContractViolation(
            f"mismatched infinite-pair counts: {len(ea)} vs {len(eb)}"
        )
    total = sum((x - y) ** 2 for x, y in zip(sorted(ea), sorted(eb)))
    m, n = len(fa), len(fb)
    if m or n:
        size = m + n
        cost = np.zeros((size, size))
        diag_b = [(q[1] - q[0]) ** 2 / 2.0 for q in fb]
        for i, p in enumerate(fa):
            diag_i = (p[1] - p[0]) ** 2 / 2.0
            for j in range(n):
                q = fb[j]
                cost[i, j] = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
            cost[i, n:] = diag_i
        # left diagonal slots: cost to a real b point is that point's diagonal
        # projection; diagonal-to-diagonal stays 0
        cost[m:, :n] = diag_b
        rows, cols = linear_sum_assignment(cost)
        total += float(cost[rows, cols].sum())
    return math.sqrt(total)
