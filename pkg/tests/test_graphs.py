"""Plain-graph containers, constructors, and cycle machinery."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from detgraph import (
    Graph,
    InvalidArgument,
    complete_graph,
    cycle_graph,
    grid_graph,
    path_graph,
    subdivide,
    torus_graph,
)
from detgraph.graphs import girth_upto, simple_cycles_upto, wired_contraction


@pytest.mark.parametrize(
    "g, nv, ne",
    [
        (complete_graph(4), 4, 6),
        (cycle_graph(5), 5, 5),
        (path_graph(4), 4, 3),
        (grid_graph(3, 3), 9, 12),
        (torus_graph(3), 9, 18),
    ],
)
def test_constructor_sizes(g, nv, ne):
    assert g.num_vertices == nv
    assert g.num_edges == ne
    assert g.is_connected()


def test_degrees_regular():
    assert list(complete_graph(5).degrees()) == [4] * 5
    assert list(torus_graph(4).degrees()) == [4] * 16


def test_edge_endpoint_validation():
    with pytest.raises(InvalidArgument):
        Graph(2, ((0, 5),))
    with pytest.raises(InvalidArgument):
        Graph(-1, ())


def test_multigraph_and_loops_allowed():
    g = Graph(2, ((0, 1), (0, 1), (1, 1)))
    assert g.num_edges == 3
    assert g.loop_edge_ids() == [2]
    assert g.nonloop_edge_ids() == [0, 1]
    assert g.degrees()[1] == 4  # loop counts twice


def test_laplacian_matches_incidence():
    g = grid_graph(2, 3)
    b = g.incidence()
    np.testing.assert_allclose(g.laplacian(), b @ b.T, atol=1e-12)


def test_laplacian_row_sums_zero():
    lap = torus_graph(3).laplacian()
    np.testing.assert_allclose(lap.sum(axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(lap, lap.T, atol=0)


def test_components_and_bfs():
    g = Graph(5, ((0, 1), (1, 2), (3, 4)))
    count, labels = g.components()
    assert count == 2
    assert labels[0] == labels[2] != labels[3]
    assert not g.is_connected()
    assert list(g.bfs_distances(0)[:3]) == [0, 1, 2]


def test_json_round_trip():
    g = Graph(3, ((0, 1), (1, 2), (2, 2)), vertex_marks=(0, 1, 0))
    assert Graph.from_json(g.to_json()) == g


def test_subdivide_triangle():
    """Each edge gains a midpoint: triangle becomes a 6-cycle."""
    h = subdivide(complete_graph(3))
    assert (h.num_vertices, h.num_edges) == (6, 6)
    assert girth_upto(h, range(h.num_edges), 6) == 6


def test_subdivide_doubles_edge_count():
    g = grid_graph(3, 3)
    h = subdivide(g)
    assert h.num_vertices == g.num_vertices + g.num_edges
    assert h.num_edges == 2 * g.num_edges


def test_wired_contraction_path():
    """Gluing both path endpoints leaves two vertices with parallel edges."""
    h, vmap = wired_contraction(path_graph(3), [0, 2])
    assert (h.num_vertices, h.num_edges) == (2, 2)
    assert vmap[0] == vmap[2] == 0
    assert all(tuple(sorted(e)) == (0, 1) for e in h.edges)


def test_wired_contraction_grid_rim():
    # rim-to-rim edges turn into loops at the wired vertex and are dropped
    g = grid_graph(3, 3)
    rim = [v for v in range(9) if v != 4]
    h, vmap = wired_contraction(g, rim)
    assert h.num_vertices == 2
    assert h.num_edges == 4  # one per neighbor of the centre
    assert len(set(vmap[v] for v in rim)) == 1
    assert all(tuple(sorted(e)) == (0, 1) for e in h.edges)


def test_wired_contraction_maps_surviving_edges_in_order():
    g = cycle_graph(4)
    h, vmap = wired_contraction(g, [0, 1])
    survivors = [
        (int(vmap[u]), int(vmap[v])) for (u, v) in g.edges if vmap[u] != vmap[v]
    ]
    assert list(h.edges) == survivors
    assert h.num_edges == 3  # the glued edge (0, 1) became a loop


@pytest.mark.parametrize("max_len, count", [(3, 4), (4, 7)])
def test_simple_cycle_counts_k4(max_len, count):
    assert len(simple_cycles_upto(complete_graph(4), max_len)) == count


def test_cycle_vectors_lie_in_cycle_space():
    g = complete_graph(4)
    b = g.incidence()
    for vec in simple_cycles_upto(g, 4):
        np.testing.assert_allclose(b @ vec, 0.0, atol=1e-12)
        assert np.sum(vec != 0) >= 3


def test_cycle_budget_enforced():
    from detgraph import CapacityExceeded

    with pytest.raises(CapacityExceeded):
        simple_cycles_upto(torus_graph(4), 8, budget=10)


def test_girth_detection():
    k4 = complete_graph(4)
    assert girth_upto(k4, range(6), 2) is None
    assert girth_upto(k4, range(6), 3) == 3
    assert girth_upto(k4, range(6), 4) == 3
    # a spanning tree of K4 has no cycle at all
    assert girth_upto(k4, [0, 1, 2], 4) in (None, 3)


def test_girth_on_edge_subsets():
    g = torus_graph(3)
    tree_like = [0, 1, 2, 3]
    assert girth_upto(g, tree_like, 6) is None


@given(st.integers(min_value=3, max_value=9))
def test_cycle_graph_girth_is_its_length(n):
    g = cycle_graph(n)
    assert girth_upto(g, range(n), n) == n
    assert girth_upto(g, range(n), n - 1) is None


@given(st.integers(min_value=2, max_value=6), st.integers(min_value=2, max_value=6))
def test_grid_cycle_space_dimension(rows, cols):
    """|E| - |V| + 1 independent cycles on a connected graph."""
    g = grid_graph(rows, cols)
    b = g.incidence()
    rank = np.linalg.matrix_rank(b)
    assert g.num_edges - rank == (rows - 1) * (cols - 1)
