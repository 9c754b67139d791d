import math

import numpy as np
import pytest

from conftest import euclidean_graph, random_metric_graph
from topoprior.errors import ContractViolation
from topoprior.manifold import DistanceGraph
from topoprior.persistence import (
    INF,
    PersistenceDiagram,
    betti_numbers_at,
    bottleneck_distance,
    build_vr_filtration,
    compute_persistence,
    wasserstein2_distance,
)

SQUARE = euclidean_graph([(0, 0), (1, 0), (1, 1), (0, 1)])


class TestFiltration:
    def test_three_points_mutual_distance(self):
        g = DistanceGraph(n=3, edges=[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])
        filt = build_vr_filtration(g)
        dims = [s.dim for s in filt]
        assert dims == [0, 0, 0, 1, 1, 1, 2]
        assert filt[-1].value == 1.0

    def test_two_points(self):
        g = DistanceGraph(n=2, edges=[(0, 1, 0.3)])
        filt = build_vr_filtration(g)
        assert [(s.vertices, s.value) for s in filt] == [((0,), 0.0), ((1,), 0.0), ((0, 1), 0.3)]

    def test_square_triangle_values(self):
        # each triple includes a diagonal, so all 4 triangles appear at sqrt(2)
        filt = build_vr_filtration(SQUARE)
        triangles = [s for s in filt if s.dim == 2]
        assert len(triangles) == 4
        assert all(s.value == pytest.approx(math.sqrt(2)) for s in triangles)

    def test_sorted_and_face_closed(self):
        rng = np.random.default_rng(3)
        filt = build_vr_filtration(random_metric_graph(rng, 7))
        keys = [s.sort_key() for s in filt]
        assert keys == sorted(keys)

    def test_knn_mode_only_present_edges(self):
        # path graph 0-1-2: no (0,2) edge, so no triangle
        g = DistanceGraph(n=3, edges=[(0, 1, 0.2), (1, 2, 0.2)], mode="knn(1)")
        filt = build_vr_filtration(g)
        assert all(s.dim < 2 for s in filt)

    def test_max_dim_fixed(self):
        with pytest.raises(ContractViolation):
            build_vr_filtration(SQUARE, max_dim=3)


class TestComputePersistence:
    def test_single_point(self):
        diag = compute_persistence(build_vr_filtration(DistanceGraph(n=1, edges=[])))
        assert diag.pairs[0] == [(0.0, INF)]
        assert diag.pairs[1] == [] and diag.pairs[2] == []

    def test_three_point_clique(self):
        g = DistanceGraph(n=3, edges=[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])
        diag = compute_persistence(build_vr_filtration(g))
        assert diag.pairs[0] == [(0.0, 1.0), (0.0, 1.0), (0.0, INF)]
        assert diag.pairs[1] == []

    def test_square_loop(self):
        diag = compute_persistence(build_vr_filtration(SQUARE))
        assert len(diag.pairs[1]) == 1
        b, d = diag.pairs[1][0]
        assert b == pytest.approx(1.0, abs=1e-12)
        assert d == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_unsorted_input_rejected(self):
        filt = build_vr_filtration(SQUARE)
        filt[0], filt[-1] = filt[-1], filt[0]
        with pytest.raises(ContractViolation):
            compute_persistence(filt)

    def test_h0_pair_conservation(self):
        rng = np.random.default_rng(5)
        for n in (2, 5, 8):
            g = random_metric_graph(rng, n)
            diag = compute_persistence(build_vr_filtration(g))
            finite = len([1 for _, d in diag.pairs[0] if math.isfinite(d)])
            infinite = len(diag.pairs[0]) - finite
            assert finite + infinite == n

    def test_determinism(self):
        rng = np.random.default_rng(6)
        g = random_metric_graph(rng, 8)
        a = compute_persistence(build_vr_filtration(g)).to_json()
        b = compute_persistence(build_vr_filtration(g)).to_json()
        assert a == b

    def test_json_round_trip(self):
        diag = compute_persistence(build_vr_filtration(SQUARE))
        back = PersistenceDiagram.from_json(diag.to_json())
        assert back.pairs == diag.pairs


class TestBettiOracle:
    def test_isolated_points(self):
        rng = np.random.default_rng(7)
        g = random_metric_graph(rng, 6)
        assert betti_numbers_at(g, 0.0) == (6, 0)

    def test_filled_triangle(self):
        g = DistanceGraph(n=3, edges=[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])
        assert betti_numbers_at(g, 1.0) == (1, 0)

    def test_open_square_cycle(self):
        assert betti_numbers_at(SQUARE, 1.2) == (1, 1)
        assert betti_numbers_at(SQUARE, 1.5) == (1, 0)

    def test_oracle_equivalence_random_graphs(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            n = int(rng.integers(2, 9))
            g = random_metric_graph(rng, n)
            diag = compute_persistence(build_vr_filtration(g))
            for eps in rng.random(20) * 1.8:
                expected = betti_numbers_at(g, float(eps))
                got = (diag.betti_at(float(eps), 0), diag.betti_at(float(eps), 1))
                assert got == expected


def diag_of(pairs1, pairs0=(), pairs2=()):
    return PersistenceDiagram(pairs={0: list(pairs0), 1: list(pairs1), 2: list(pairs2)})


class TestBottleneck:
    def test_self_distance_zero(self):
        d = diag_of([(0.0, 2.0), (0.5, 1.0)])
        assert bottleneck_distance(d, d, 1) == 0.0

    def test_single_point_to_empty(self):
        # only option is the diagonal at persistence/2
        assert bottleneck_distance(diag_of([(0.0, 2.0)]), diag_of([]), 1) == pytest.approx(1.0)

    def test_two_matchings(self):
        a = diag_of([(0.0, 2.0)])
        b = diag_of([(0.5, 2.5)])
        # direct match costs 0.5; double diagonal costs 1.0
        assert bottleneck_distance(a, b, 1) == pytest.approx(0.5)

    def test_mismatched_infinite_counts(self):
        a = diag_of([(0.0, INF)])
        b = diag_of([])
        with pytest.raises(ContractViolation, match="infinite"):
            bottleneck_distance(a, b, 1)

    def test_infinite_pairs_matched_by_birth(self):
        a = diag_of([(0.0, INF), (1.0, INF)])
        b = diag_of([(0.2, INF), (1.1, INF)])
        assert bottleneck_distance(a, b, 1) == pytest.approx(0.2)

    def test_symmetry_random(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            a = diag_of([(b, b + p) for b, p in rng.random((4, 2)) + 0.01])
            b = diag_of([(x, x + p) for x, p in rng.random((3, 2)) + 0.01])
            assert bottleneck_distance(a, b, 1) == pytest.approx(bottleneck_distance(b, a, 1))


class TestWasserstein:
    def test_self_distance_zero(self):
        d = diag_of([(0.0, 2.0), (0.5, 1.0)])
        assert wasserstein2_distance(d, d, 1) == pytest.approx(0.0)

    def test_diagonal_projection(self):
        # L2 distance from (0,2) to the diagonal is 2/sqrt(2)
        got = wasserstein2_distance(diag_of([(0.0, 2.0)]), diag_of([]), 1)
        assert got == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_symmetry_random(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            a = diag_of([(b, b + p) for b, p in rng.random((5, 2)) + 0.01])
            b = diag_of([(x, x + p) for x, p in rng.random((4, 2)) + 0.01])
            assert wasserstein2_distance(a, b, 1) == pytest.approx(
                wasserstein2_distance(b, a, 1)
            )

    def test_brute_force_two_points(self):
        a = diag_of([(0.0, 1.0), (2.0, 3.0)])
        b = diag_of([(0.1, 1.1)])
        # enumerate the three matchings; diagonal cost of (b,d) is (d-b)^2/2
        direct = math.sqrt((0.1**2 + 0.1**2) + 0.5)
        cross = math.sqrt((1.9**2 + 1.9**2) + 0.5)
        both_diag = math.sqrt(0.5 + 0.5 + 0.5)
        assert wasserstein2_distance(a, b, 1) == pytest.approx(
            min(direct, cross, both_diag)
        )
