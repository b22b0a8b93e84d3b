import numpy as np
import pytest

from probfwd.topology import GeneralKind, Topology


def random_connected_topology(rng: np.random.Generator, max_nodes: int = 50) -> Topology:
    """Random tree plus a few extra edges: connected by construction."""
    n = int(rng.integers(2, max_nodes + 1))
    edges = set()
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.add((u, v))
    for _ in range(int(rng.integers(0, n))):
        a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
        if a != b:
            edges.add((min(a, b), max(a, b)))
    adjacency = [[] for _ in range(n)]
    for u, v in edges:
        adjacency[u].append(v)
        adjacency[v].append(u)
    return Topology(
        node_count=n,
        adjacency=[sorted(nbrs) for nbrs in adjacency],
        source=int(rng.integers(0, n)),
        transmit_eligible=np.ones(n, dtype=bool),
        kind=GeneralKind(),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
