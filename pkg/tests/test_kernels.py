import networkx as nx
import numpy as np
import pytest

from vne import _kernels
from vne.graph import Graph
from vne.instance import random_connected_graph


def _nx(g, w):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    for e, (a, b) in enumerate(g.edges.tolist()):
        h.add_edge(a, b, weight=float(w[e]))
    return h


@pytest.mark.parametrize("seed", range(8))
def test_floyd_warshall_matches_networkx(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(int(rng.integers(2, 25)), int(rng.integers(0, 20)), rng)
    w = rng.integers(1, 9, size=g.m).astype(float)
    ref = dict(nx.all_pairs_dijkstra_path_length(_nx(g, w)))
    for fw in (_kernels.floyd_warshall_numpy, _kernels.floyd_warshall):
        d = fw(g.weight_matrix(w))
        for a in range(g.n):
            for b in range(g.n):
                assert d[a, b] == ref[a][b]


@pytest.mark.skipif(not _kernels.HAS_NUMBA, reason="numba unavailable")
@pytest.mark.parametrize("seed", range(8))
def test_numba_and_numpy_paths_agree(seed):
    rng = np.random.default_rng(100 + seed)
    g = random_connected_graph(int(rng.integers(2, 30)), int(rng.integers(0, 30)), rng)
    w = rng.integers(0, 5, size=g.m).astype(float)
    mat = g.weight_matrix(w)
    assert np.array_equal(_kernels.floyd_warshall_numba(mat), _kernels.floyd_warshall_numpy(mat))
    edge_ok = rng.random(g.m) < 0.8
    node_ok = rng.random(g.n) < 0.9
    src = int(rng.integers(g.n))
    node_ok[src] = True
    a = _kernels.dijkstra_numba(g.indptr, g.adj_node, g.adj_edge, w, edge_ok, node_ok, src)
    b = _kernels.dijkstra_numpy(g.indptr, g.adj_node, g.adj_edge, w, edge_ok, node_ok, src)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_dijkstra_respects_masks():
    g = Graph.from_edges(4, [(0, 1), (1, 2), (0, 3), (3, 2)])
    w = np.array([1.0, 1.0, 5.0, 5.0])
    edge_ok = np.array([True, False, True, True])
    node_ok = np.ones(4, dtype=bool)
    dist, pe, pn = _kernels.dijkstra(g.indptr, g.adj_node, g.adj_edge, w, edge_ok, node_ok, 0)
    assert dist[2] == 10.0
    node_ok[3] = False
    dist, pe, pn = _kernels.dijkstra(g.indptr, g.adj_node, g.adj_edge, w, edge_ok, node_ok, 0)
    assert np.isinf(dist[2]) and pe[2] == -1
