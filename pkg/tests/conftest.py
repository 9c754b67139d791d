import numpy as np
import pytest

from topoprior.corpus import SeriesCorpus
from topoprior.manifold import DistanceGraph


@pytest.fixture
def tiny_corpus():
    values = np.array(
        [
            [1.0, 2.0, 3.0, 4.0],
            [2.0, 2.0, 2.0, 2.0],
            [4.0, 3.0, 2.0, 1.0],
        ]
    )
    return SeriesCorpus(values=values, series_ids=["a", "b", "c"])


def euclidean_graph(points) -> DistanceGraph:
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    edges = [
        (i, j, float(np.linalg.norm(pts[i] - pts[j])))
        for i in range(n)
        for j in range(i + 1, n)
    ]
    return DistanceGraph(n=n, edges=edges)


def random_metric_graph(rng, n) -> DistanceGraph:
    pts = rng.random((n, 3))
    return euclidean_graph(pts)
