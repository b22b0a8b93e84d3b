import io

import numpy as np
import pytest

from probfwd.errors import EdgeListError, ParameterError
from probfwd.topology import (
    GridKind,
    TreeKind,
    build_grid,
    build_tree,
    dump_edge_list,
    grid_coordinate,
    grid_node_id,
    load_edge_list,
    tree_node_count,
)


def bfs_depths(topo):
    depth = {topo.source: 0}
    frontier = [topo.source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in topo.adjacency[u]:
                if v not in depth:
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        frontier = nxt
    return depth


class TestBuildTree:
    def test_binary_height_two(self):
        t = build_tree(2, 2)
        assert t.node_count == 7
        assert int((~t.transmit_eligible).sum()) == 4
        assert all(not t.transmit_eligible[u] for u in range(3, 7))
        assert t.degree(0) == 2
        assert t.source == 0
        assert t.kind == TreeKind(height=2, arity=2)

    def test_ternary_height_one_is_star(self):
        t = build_tree(1, 3)
        assert t.node_count == 4
        assert int((~t.transmit_eligible).sum()) == 3
        assert t.adjacency[0] == [1, 2, 3]

    def test_huge_tree_node_count_closed_form(self):
        # Fifty levels of a binary tree; the count is all the analytics need.
        assert tree_node_count(50, 2) == 2**51 - 1
        assert tree_node_count(3, 3) == (3**4 - 1) // 2

    @pytest.mark.parametrize("height,arity", [(0, 2), (-1, 2), (3, 1), (3, 0)])
    def test_rejects_bad_parameters(self, height, arity):
        with pytest.raises(ParameterError):
            build_tree(height, arity)

    @pytest.mark.parametrize("height,arity", [(3, 2), (2, 3), (4, 2)])
    def test_level_populations(self, height, arity):
        t = build_tree(height, arity)
        depth = bfs_depths(t)
        assert len(depth) == t.node_count  # connected
        for level in range(height + 1):
            count = sum(1 for d in depth.values() if d == level)
            assert count == arity**level
        # exactly the last level is non-transmitting
        for u, d in depth.items():
            assert t.transmit_eligible[u] == (d < height)

    def test_degree_sum_is_twice_edges(self):
        t = build_tree(3, 2)
        assert sum(t.degree(u) for u in range(t.node_count)) == 2 * t.edge_count
        assert t.edge_count == t.node_count - 1


class TestBuildGrid:
    def test_three_by_three(self):
        g = build_grid(3)
        assert g.node_count == 9
        assert g.degree(g.source) == 4
        for corner in (0, 2, 6, 8):
            assert g.degree(corner) == 2
        assert g.kind == GridKind(m=3)
        assert g.source == grid_node_id(0, 0, 3) == 4

    def test_node_counts(self):
        assert build_grid(31).node_count == 961
        # m=501 is exercised by the acceptance suite; the id mapping is O(1)
        assert grid_node_id(0, 0, 501) == (501 * 501 - 1) // 2

    @pytest.mark.parametrize("m", [2, 4, 1, -3, 0])
    def test_rejects_bad_m(self, m):
        with pytest.raises(ParameterError):
            build_grid(m)

    def test_degree_histogram(self):
        m = 7
        g = build_grid(m)
        degrees = [g.degree(u) for u in range(g.node_count)]
        hist = {d: degrees.count(d) for d in set(degrees)}
        assert hist == {2: 4, 3: 4 * (m - 2), 4: (m - 2) ** 2}

    def test_all_transmit_eligible(self):
        assert build_grid(5).transmit_eligible.all()

    def test_coordinate_round_trip(self):
        m = 5
        for u in range(m * m):
            x, y = grid_coordinate(u, m)
            assert grid_node_id(x, y, m) == u

    def test_bfs_reaches_everything(self):
        g = build_grid(9)
        assert len(bfs_depths(g)) == g.node_count


class TestEdgeList:
    def test_path_of_three(self):
        topo = load_edge_list(io.StringIO("0 1\n1 2\n"))
        assert topo.node_count == 3
        assert topo.source == 0
        assert topo.adjacency == [[1], [0, 2], [1]]
        assert topo.transmit_eligible.all()

    def test_source_directive(self):
        topo = load_edge_list(io.StringIO("source 2\n0 1\n1 2\n"))
        assert topo.source == 2

    def test_disconnected_rejected(self):
        with pytest.raises(EdgeListError, match="connected"):
            load_edge_list(io.StringIO("0 1\n2 3\n"))

    def test_self_loop_rejected(self):
        with pytest.raises(EdgeListError, match="self-loop"):
            load_edge_list(io.StringIO("0 1\n1 1\n"))

    def test_duplicate_edge_rejected(self):
        with pytest.raises(EdgeListError, match="duplicate"):
            load_edge_list(io.StringIO("0 1\n1 0\n"))

    def test_dangling_source_rejected(self):
        with pytest.raises(EdgeListError, match="source"):
            load_edge_list(io.StringIO("source 9\n0 1\n"))

    def test_garbage_rejected(self):
        with pytest.raises(EdgeListError):
            load_edge_list(io.StringIO("0 one\n"))
        with pytest.raises(EdgeListError):
            load_edge_list(io.StringIO("0 1 2\n"))
        with pytest.raises(EdgeListError, match="no edges"):
            load_edge_list(io.StringIO("\n"))

    def test_round_trip_grid(self):
        g = build_grid(3)
        text = dump_edge_list(g)
        reloaded = load_edge_list(io.StringIO(text))
        assert reloaded.adjacency == g.adjacency
        assert reloaded.source == g.source
        assert reloaded.node_count == g.node_count

    def test_dump_ordering_is_stable(self):
        g = build_grid(3)
        lines = dump_edge_list(g).splitlines()
        assert lines[0] == "source 4"
        pairs = [tuple(map(int, ln.split())) for ln in lines[1:]]
        assert all(u < v for u, v in pairs)
        assert pairs == sorted(pairs)

    def test_comments_and_blanks_ignored(self):
        topo = load_edge_list(io.StringIO("# a path\n\n0 1\n1 2  # tail\n"))
        assert topo.node_count == 3


def test_validate_catches_asymmetry():
    topo = build_grid(3)
    topo.adjacency[0].append(5)  # simulate corruption
    with pytest.raises(ParameterError):
        topo.validate()
