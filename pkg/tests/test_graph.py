import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vne.graph import (
    Direction, EmptyCandidateSet, Graph, GraphError, OrientedEdgeRef, Unreachable,
    all_pairs_distances, closeness_center, shortest_path, shortest_path_len,
)
from vne.instance import random_connected_graph


def test_rejects_self_loops_duplicates_and_disconnected():
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 0)])
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 1), (1, 0)])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 1)])
    assert Graph.from_edges(3, [(0, 1)], allow_disconnected=True).m == 1


def test_orientation_and_arcs():
    g = Graph.from_edges(3, [(0, 1), (2, 1)])
    assert (g.s(1), g.t(1)) == (2, 1)
    fwd = OrientedEdgeRef(1, Direction.FORWARD)
    rev = OrientedEdgeRef(1, Direction.REVERSE)
    assert (g.arc_tail(fwd), g.arc_head(fwd)) == (2, 1)
    assert (g.arc_tail(rev), g.arc_head(rev)) == (1, 2)
    assert sorted((a.edge, int(a.direction)) for a in g.out_arcs(1)) == [(0, -1), (1, -1)]
    assert g.edge_between(1, 2) == 1 and g.edge_between(0, 2) is None


def test_shortest_path_on_path_graph():
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    assert shortest_path_len(g, 0, 3) == 3
    assert shortest_path_len(g, 2, 2) == 0
    route = shortest_path(g, 3, 0)
    assert [(a.edge, a.direction) for a in route] == [(2, Direction.REVERSE), (1, Direction.REVERSE), (0, Direction.REVERSE)]


def test_unreachable_raises():
    g = Graph.from_edges(4, [(0, 1), (2, 3)], allow_disconnected=True)
    with pytest.raises(Unreachable):
        shortest_path_len(g, 0, 3)
    assert shortest_path(g, 0, 3) is None


def test_closeness_center():
    star = Graph.from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)])
    assert closeness_center(star, range(5)) == 0
    cycle = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert closeness_center(cycle, range(4)) == 0  # all tie: smallest id
    with pytest.raises(EmptyCandidateSet):
        closeness_center(star, [])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 18), st.integers(0, 25), st.integers(0, 2**31 - 1))
def test_distances_are_a_metric_matching_networkx(n, extra, seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(n, extra, rng)
    w = rng.integers(1, 7, size=g.m)
    d = all_pairs_distances(g, w)
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0)
    k = int(rng.integers(n))
    assert np.all(d <= d[:, [k]] + d[[k], :])
    h = nx.Graph()
    for e, (a, b) in enumerate(g.edges.tolist()):
        h.add_edge(a, b, weight=int(w[e]))
    src = int(rng.integers(n))
    ref = nx.single_source_dijkstra_path_length(h, src)
    for v, val in ref.items():
        assert d[src, v] == val
        assert shortest_path_len(g, src, v, w) == val
        path = shortest_path(g, src, v, w)
        assert sum(int(w[a.edge]) for a in path) == val
