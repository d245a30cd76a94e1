from __future__ import annotations

import numpy as np
import pytest

from rigid_coverage.rigidity import Graph, edge_splitting, vertex_addition


def random_henneberg_graph(rng: np.random.Generator, n: int) -> Graph:
    """Grow a graph from a single edge by random growth operations."""
    g = Graph.make(2, [(0, 1)])
    while g.n < n:
        if g.n >= 3 and rng.random() < 0.5:
            edge = g.edges[int(rng.integers(len(g.edges)))]
            third = [v for v in range(g.n) if v not in edge]
            g = edge_splitting(g, edge, int(rng.choice(third)))
        else:
            i, j = rng.choice(g.n, size=2, replace=False)
            g = vertex_addition(g, (int(i), int(j)))
    return g


def generic_positions(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    return scale * rng.random((n, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
