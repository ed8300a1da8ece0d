import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from netdiff.graph import DirectedGraph, from_edge_list


@pytest.fixture
def four_node_graph() -> DirectedGraph:
    """The 4-node, 6-edge example graph; (target, source) pairs."""
    return from_edge_list([(0, 2), (0, 1), (1, 0), (1, 2), (2, 3), (3, 1)], 4)


def random_graph(n, n_edges, rng) -> DirectedGraph:
    """Uniform random simple directed graph for randomized properties."""
    pairs = set()
    attempts = 0
    while len(pairs) < n_edges and attempts < 50 * n_edges:
        i, j = rng.integers(0, n, size=2)
        attempts += 1
        if i != j:
            pairs.add((int(i), int(j)))
    return from_edge_list(sorted(pairs), n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
