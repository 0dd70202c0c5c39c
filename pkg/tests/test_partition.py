import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vne.fixtures import example1
from vne.graph import Graph
from vne.instance import ParseError, random_connected_graph
from vne.partition import (
    InfeasibleK, Partition, PartitionError, cut_edges, default_k, dumps_partition,
    expand_substrate_parts, is_refinement, load_partition, loads_partition,
    partition_balanced_connected, store_partition, subgraph_views,
)


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def test_k1_single_part():
    g = example1().virtual
    p = partition_balanced_connected(g, 1)
    assert p.parts() == [list(range(6))]
    assert cut_edges(g, p) == []


def test_k_equals_n_singletons():
    g = example1().virtual
    p = partition_balanced_connected(g, g.n)
    assert sorted(p.sizes().tolist()) == [1] * 6
    assert cut_edges(g, p) == list(range(g.m))


def test_example1_triangles():
    g = example1().virtual
    p = partition_balanced_connected(g, 2, seed=0)
    assert sorted(p.parts()) == [[0, 1, 2], [3, 4, 5]]
    assert cut_edges(g, p) == [3]


def test_example1_matches_exhaustive_bipartition():
    """Independent check: enumerate all balanced connected bipartitions and take the minimum cut."""
    g = example1().virtual
    best = None
    for side in itertools.combinations(range(6), 3):
        other = [u for u in range(6) if u not in side]
        if not (g.is_connected(list(side)) and g.is_connected(other)):
            continue
        p = Partition.from_parts([side, other], 6)
        key = (len(cut_edges(g, p)), sorted(map(tuple, p.parts())))
        best = key if best is None or key < best else best
    p = partition_balanced_connected(g, 2, seed=0)
    assert len(cut_edges(g, p)) == best[0]
    assert sorted(map(tuple, p.parts())) == best[1]


def test_infeasible_k():
    with pytest.raises(InfeasibleK):
        partition_balanced_connected(path_graph(3), 4)


def test_partition_validation():
    with pytest.raises(PartitionError):
        Partition(np.array([0, 0, 2]), 3)  # part 1 empty
    with pytest.raises(PartitionError):
        Partition.from_parts([[0, 1], [1, 2]], 3)
    with pytest.raises(PartitionError):
        Partition.from_parts([[0], [2]], 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 24), st.data())
def test_partition_properties(seed, n, data):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(n, int(rng.integers(0, n)), rng)
    k = data.draw(st.integers(1, n))
    p = partition_balanced_connected(g, k, seed)
    assert p.k == k and p.is_valid_for(g)
    assert p.sizes().sum() == n
    assert p.sizes().max() <= 2 * math.ceil(n / k)
    assert p == partition_balanced_connected(g, k, seed)
    cut = set(cut_edges(g, p))
    views = subgraph_views(g, p)
    inside = [e for v in views for e in v.induced_edges]
    assert len(inside) == len(set(inside))
    assert set(inside) | cut == set(range(g.m)) and not set(inside) & cut
    for v in views:
        assert v.boundary_nodes | v.internal_nodes == v.members
        assert not v.boundary_nodes & v.internal_nodes
        assert all(any(g.s(e) == u or g.t(e) == u for e in cut) for u in v.boundary_nodes)


def test_weighted_partition_balances_weight():
    g = path_graph(10)
    w = np.array([1, 1, 1, 1, 1, 0, 0, 0, 0, 1], dtype=float)
    p = partition_balanced_connected(g, 2, weights=w)
    loads = [w[part].sum() for part in p.parts()]
    assert max(loads) - min(loads) <= 2


def test_refinement_relation():
    g = example1().virtual
    tri = Partition.from_parts([[0, 1, 2], [3, 4, 5]])
    pairs = Partition.from_parts([[0, 1], [2, 3], [4, 5]])
    singles = Partition(np.arange(6), 6)
    assert is_refinement(singles, tri)
    assert is_refinement(tri, tri)
    assert not is_refinement(pairs, tri)
    assert is_refinement(tri, Partition(np.zeros(6, dtype=int), 1))
    assert tri.is_valid_for(g)


def test_expand_target_below_part_size():
    g = path_graph(8)
    p = Partition.from_parts([[0, 1, 2, 3], [4, 5, 6, 7]])
    views = expand_substrate_parts(g, p, 3)
    assert [sorted(v.members) for v in views] == p.parts()


def test_expand_whole_graph():
    g = path_graph(8)
    p = Partition.from_parts([[0, 1, 2, 3], [4, 5, 6, 7]])
    assert all(len(v.members) == 8 for v in expand_substrate_parts(g, p, 8))


def test_expand_path_halves_overlap_in_middle():
    g = path_graph(8)
    p = Partition.from_parts([[0, 1, 2, 3], [4, 5, 6, 7]])
    a, b = expand_substrate_parts(g, p, 6)
    assert sorted(a.members) == [0, 1, 2, 3, 4, 5]
    assert sorted(b.members) == [2, 3, 4, 5, 6, 7]
    assert g.is_connected(sorted(a.members)) and g.is_connected(sorted(b.members))


def test_default_k():
    assert [default_k(n) for n in (3, 10, 29, 30)] == [1, 1, 2, 3]


def test_partition_file_round_trip(tmp_path):
    p = Partition.from_parts([[0, 1, 2], [3, 4, 5]])
    path = tmp_path / "p.txt"
    store_partition(p, path)
    assert load_partition(path, 6) == p
    assert dumps_partition(p).splitlines()[3] == "3 1"


def test_partition_file_relabels_and_rejects():
    assert loads_partition("0 7\n1 7\n2 3\n").parts() == [[2], [0, 1]]  # labels kept in sorted order
    with pytest.raises(ParseError):
        loads_partition("0 0\n0 1\n")
    with pytest.raises(ParseError):
        loads_partition("0 0\n2 1\n")
    with pytest.raises(ParseError):
        loads_partition("0 a\n")
    with pytest.raises(ParseError):
        loads_partition("0 0\n1 0\n", 3)
