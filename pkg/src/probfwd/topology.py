"""Graphs the forwarding protocol runs on.

Three constructions: rooted complete d-ary trees (leaves marked
non-transmitting), odd m x m grids with 4-connectivity (source at the
center), and arbitrary symmetric edge lists. Node ids are dense integers
0..N-1 so the Monte Carlo loops can index flat arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable

import numpy as np

from .errors import EdgeListError, ParameterError

__all__ = [
    "TreeKind",
    "GridKind",
    "GeneralKind",
    "Topology",
    "build_tree",
    "build_grid",
    "load_edge_list",
    "dump_edge_list",
    "tree_node_count",
]


@dataclass(frozen=True)
class TreeKind:
    height: int
    arity: int


@dataclass(frozen=True)
class GridKind:
    m: int


@dataclass(frozen=True)
class GeneralKind:
    pass


@dataclass(eq=False)
class Topology:
    """Immutable connected graph with a source node and per-node transmit flags.

    `adjacency[u]` lists u's neighbors in ascending order. `transmit_eligible`
    generalizes the tree leaf rule: a node with the flag off receives packets
    but never forwards them.
    """

    node_count: int
    adjacency: list[list[int]]
    source: int
    transmit_eligible: np.ndarray
    kind: TreeKind | GridKind | GeneralKind = field(default_factory=GeneralKind)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) arrays for flat neighbor iteration."""
        indptr = np.zeros(self.node_count + 1, dtype=np.int64)
        for u, nbrs in enumerate(self.adjacency):
            indptr[u + 1] = indptr[u] + len(nbrs)
        indices = np.empty(indptr[-1], dtype=np.int64)
        for u, nbrs in enumerate(self.adjacency):
            indices[indptr[u]:indptr[u + 1]] = nbrs
        return indptr, indices

    @cached_property
    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.adjacency) // 2

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    def validate(self) -> None:
        """Check symmetry, simplicity, connectivity, and id ranges."""
        n = self.node_count
        if n <= 0:
            raise ParameterError("topology must have at least one node")
        if not 0 <= self.source < n:
            raise ParameterError(f"source {self.source} outside 0..{n - 1}")
        if len(self.adjacency) != n or len(self.transmit_eligible) != n:
            raise ParameterError("adjacency/eligibility length mismatch")
        seen = set()
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if not 0 <= v < n:
                    raise ParameterError(f"neighbor id {v} outside 0..{n - 1}")
                if v == u:
                    raise ParameterError(f"self-loop at node {u}")
                if (u, v) in seen:
                    raise ParameterError(f"duplicate edge {u}-{v}")
                seen.add((u, v))
        for u, v in list(seen):
            if (v, u) not in seen:
                raise ParameterError(f"asymmetric edge {u}->{v}")
        if self._reachable_from_source() != n:
            raise ParameterError("graph is not connected")

    def _reachable_from_source(self) -> int:
        visited = np.zeros(self.node_count, dtype=bool)
        visited[self.source] = True
        frontier = [self.source]
        count = 1
        while frontier:
            nxt = []
            for u in frontier:
                for v in self.adjacency[u]:
                    if not visited[v]:
                        visited[v] = True
                        nxt.append(v)
                        count += 1
            frontier = nxt
        return count


def tree_node_count(height: int, arity: int) -> int:
    """Number of nodes in a complete arity-ary tree: (d^(H+1) - 1) / (d - 1)."""
    return (arity ** (height + 1) - 1) // (arity - 1)


def build_tree(height: int, arity: int = 2) -> Topology:
    """Rooted complete `arity`-ary tree of the given height.

    Node 0 is the root (and source); nodes are numbered level by level, so
    the children of node u are arity*u+1 .. arity*u+arity. Level-`height`
    nodes (the leaves) are flagged as non-transmitting.
    """
    if height < 1:
        raise ParameterError(f"tree height must be >= 1, got {height}")
    if arity < 2:
        raise ParameterError(f"tree arity must be >= 2, got {arity}")
    n = tree_node_count(height, arity)
    internal = tree_node_count(height - 1, arity)  # nodes above the leaf level
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for u in range(internal):
        for c in range(arity * u + 1, arity * u + arity + 1):
            adjacency[u].append(c)
            adjacency[c].append(u)
    for u in range(n):
        adjacency[u].sort()
    eligible = np.ones(n, dtype=bool)
    eligible[internal:] = False  # leaf level
    return Topology(
        node_count=n,
        adjacency=adjacency,
        source=0,
        transmit_eligible=eligible,
        kind=TreeKind(height=height, arity=arity),
    )


def grid_node_id(x: int, y: int, m: int) -> int:
    """Row-major id of lattice coordinate (x, y), both in [-(m-1)/2, (m-1)/2]."""
    h = (m - 1) // 2
    return (x + h) * m + (y + h)


def grid_coordinate(node: int, m: int) -> tuple[int, int]:
    """Inverse of grid_node_id."""
    h = (m - 1) // 2
    return node // m - h, node % m - h


def build_grid(m: int) -> Topology:
    """m x m 4-connected lattice centred at the origin, source at (0, 0)."""
    if m < 3 or m % 2 == 0:
        raise ParameterError(f"grid side must be an odd integer >= 3, got {m}")
    n = m * m
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for u in range(n):
        r, c = divmod(u, m)
        if r > 0:
            adjacency[u].append(u - m)
        if c > 0:
            adjacency[u].append(u - 1)
        if c < m - 1:
            adjacency[u].append(u + 1)
        if r < m - 1:
            adjacency[u].append(u + m)
    return Topology(
        node_count=n,
        adjacency=adjacency,
        source=grid_node_id(0, 0, m),
        transmit_eligible=np.ones(n, dtype=bool),
        kind=GridKind(m=m),
    )


def load_edge_list(stream: IO[str] | Iterable[str]) -> Topology:
    """Parse a whitespace-separated edge list into a validated Topology.

    One "u v" pair per line; 0-based ids; blank lines and '#' comments are
    skipped; an optional "source <id>" directive overrides the default
    source 0. All nodes are transmit-eligible.
    """
    edges: list[tuple[int, int]] = []
    source = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "source":
            if len(parts) != 2:
                raise EdgeListError(f"line {lineno}: malformed source directive")
            try:
                source = int(parts[1])
            except ValueError:
                raise EdgeListError(f"line {lineno}: source id {parts[1]!r} is not an integer")
            continue
        if len(parts) != 2:
            raise EdgeListError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(f"line {lineno}: non-integer node id in {line!r}")
        if u < 0 or v < 0:
            raise EdgeListError(f"line {lineno}: negative node id in {line!r}")
        if u == v:
            raise EdgeListError(f"line {lineno}: self-loop at node {u}")
        edges.append((u, v))

    if not edges:
        raise EdgeListError("edge list contains no edges")
    n = max(max(u, v) for u, v in edges) + 1
    if source >= n or source < 0:
        raise EdgeListError(f"source {source} does not appear in the edge list")
    seen = set()
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        key = (min(u, v), max(u, v))
        if key in seen:
            raise EdgeListError(f"duplicate edge {key[0]}-{key[1]}")
        seen.add(key)
        adjacency[u].append(v)
        adjacency[v].append(u)
    for u in range(n):
        adjacency[u].sort()

    topo = Topology(
        node_count=n,
        adjacency=adjacency,
        source=source,
        transmit_eligible=np.ones(n, dtype=bool),
        kind=GeneralKind(),
    )
    try:
        topo.validate()
    except ParameterError as exc:
        raise EdgeListError(str(exc)) from exc
    return topo


def dump_edge_list(topology: Topology) -> str:
    """Serialize a Topology in the load_edge_list format.

    Emits the source directive first, then edges in ascending (u, v) order
    with u < v, one per line.
    """
    lines = [f"source {topology.source}"]
    for u in range(topology.node_count):
        for v in topology.adjacency[u]:
            if u < v:
                lines.append(f"{u} {v}")
    return "\n".join(lines) + "\n"
