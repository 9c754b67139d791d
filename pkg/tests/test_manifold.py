import json
import math

import numpy as np
import pytest

from topoprior.corpus import SeriesCorpus
from topoprior.errors import ConfigError, ContractViolation
from topoprior.manifold import correlation_distance_graph, knn_weight_graph, pearson


class TestPearson:
    def test_identity(self):
        x = [1.0, 2.0, 4.0, 3.0]
        assert pearson(x, x) == pytest.approx(1.0)

    def test_negation(self):
        x = np.array([1.0, 2.0, 4.0, 3.0])
        assert pearson(x, -x) == pytest.approx(-1.0)

    def test_hand_computed_value(self):
        # centered products: sum(xc*yc)=5.25? direct formula gives 0.98271
        assert pearson([1, 2, 3, 4], [1, 2, 3, 5]) == pytest.approx(0.982707, abs=1e-6)

    def test_constant_input_degenerates_to_zero(self):
        assert pearson([2.0, 2.0, 2.0], [1.0, 2.0, 3.0]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ContractViolation):
            pearson([1.0, 2.0], [1.0, 2.0, 3.0])


def phase_corpus(n=12, t=400):
    time = np.arange(t)
    rows = [np.sin(2 * math.pi * time / 50 + math.pi * j / n) for j in range(n)]
    return SeriesCorpus(values=np.vstack(rows), series_ids=[str(j) for j in range(n)])


class TestDistanceGraph:
    def test_identical_series_distance_zero(self):
        corpus = SeriesCorpus(
            values=np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]), series_ids=["a", "b"]
        )
        g = correlation_distance_graph(corpus)
        assert len(g.edges) == 1
        assert g.edges[0][2] == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_sinusoids_near_one(self):
        t = np.arange(2000)
        a = np.sin(2 * math.pi * t / 200)
        b = np.sin(2 * math.pi * t / 200 + math.pi / 2)
        corpus = SeriesCorpus(values=np.vstack([a, b]), series_ids=["a", "b"])
        g = correlation_distance_graph(corpus)
        assert g.edges[0][2] == pytest.approx(1.0, abs=0.05)

    def test_dense_edge_count(self):
        corpus = phase_corpus(n=5)
        g = correlation_distance_graph(corpus)
        assert len(g.edges) == 10
        assert g.mode == "dense"

    def test_distances_in_unit_interval(self):
        rng = np.random.default_rng(0)
        corpus = SeriesCorpus(values=rng.normal(0, 1, (8, 60)), series_ids=[str(i) for i in range(8)])
        g = correlation_distance_graph(corpus)
        assert all(0.0 <= d <= 1.0 for _, _, d in g.edges)

    def test_knn_union_symmetrization(self):
        corpus = phase_corpus(n=10)
        g = correlation_distance_graph(corpus, k=2)
        edge_set = {(i, j) for i, j, _ in g.edges}
        # every node retains degree >= k under union symmetrization
        degree = {v: 0 for v in range(10)}
        for i, j in edge_set:
            assert i < j
            degree[i] += 1
            degree[j] += 1
        assert min(degree.values()) >= 2

    def test_k_too_large(self):
        with pytest.raises(ConfigError):
            correlation_distance_graph(phase_corpus(n=4), k=4)

    def test_constant_series_becomes_outlier(self):
        values = np.vstack([np.ones(30), np.arange(30.0), np.arange(30.0) * 2 + 1])
        corpus = SeriesCorpus(values=values, series_ids=["const", "a", "b"])
        g = correlation_distance_graph(corpus)
        dist = {(i, j): d for i, j, d in g.edges}
        assert dist[(0, 1)] == pytest.approx(1.0)
        assert dist[(0, 2)] == pytest.approx(1.0)
        assert dist[(1, 2)] == pytest.approx(0.0, abs=1e-12)

    def test_weight_plus_distance_is_one(self):
        corpus = phase_corpus(n=8)
        dg = correlation_distance_graph(corpus, k=3)
        wg = knn_weight_graph(corpus, k=3)
        dist = {(i, j): d for i, j, d in dg.edges}
        for i, j, w in wg.edges:
            assert w + dist[(i, j)] == pytest.approx(1.0, abs=1e-15)
            assert 0.0 <= w <= 1.0

    def test_anticorrelated_weight_is_one(self):
        t = np.arange(100.0)
        corpus = SeriesCorpus(values=np.vstack([t, -t]), series_ids=["a", "b"])
        wg = knn_weight_graph(corpus, k=1)
        assert wg.edges[0][2] == pytest.approx(1.0)

    def test_jsonl_export(self):
        corpus = phase_corpus(n=3)
        g = correlation_distance_graph(corpus)
        lines = g.to_jsonl().splitlines()
        assert len(lines) == 3
        rec = json.loads(lines[0])
        assert set(rec) == {"i", "j", "d"}
