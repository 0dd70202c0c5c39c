"""Seeded instance suites for property checks and benchmarks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .instance import CapacityRegime, Instance, generate, random_connected_graph
from .partition import Partition, partition_balanced_connected

REGIMES = (CapacityRegime.LARGE, CapacityRegime.MEDIUM, CapacityRegime.SMALL)


@dataclass
class SmallCase:
    index: int
    instance: Instance
    partition: Partition       # random connected virtual partition
    refinement: Partition      # connected refinement of ``partition``


def induced_graph(g: Graph, nodes) -> tuple[Graph, list[int]]:
    nodes = sorted(set(nodes))
    pos = {u: i for i, u in enumerate(nodes)}
    edges = [(pos[int(g.edges[e, 0])], pos[int(g.edges[e, 1])]) for e in g.induced_edges(nodes)]
    return Graph.from_edges(len(nodes), edges, allow_disconnected=True), nodes


def refine(g: Graph, p: Partition, rng: np.random.Generator) -> Partition:
    """Split every part of size >= 2 into two connected halves (at random seeds)."""
    parts = []
    for members in p.parts():
        if len(members) < 2:
            parts.append(members)
            continue
        sub, ids = induced_graph(g, members)
        q = partition_balanced_connected(sub, 2, int(rng.integers(2**31)))
        parts += [[ids[x] for x in part] for part in q.parts()]
    return Partition.from_parts(parts, g.n)


def small_case(index: int, base_seed: int = 0) -> SmallCase:
    """Tiny instance (n_r <= 5, n_s <= 10) within the brute-force guard."""
    rng = np.random.default_rng([base_seed, index])
    n_r = int(rng.integers(2, 6))
    n_s = int(rng.integers(max(n_r, 4), 11))
    v = random_connected_graph(n_r, int(rng.integers(0, 3)), rng)
    s = random_connected_graph(n_s, int(rng.integers(1, n_s)), rng)
    regime = REGIMES[index % 3]
    inst = generate(v, s, regime, int(rng.integers(2**31)), name=f"small_{index}")
    k = int(rng.integers(1, n_r + 1))
    p = partition_balanced_connected(v, k, int(rng.integers(2**31)))
    return SmallCase(index, inst, p, refine(v, p, rng))


def small_suite(count: int = 200, base_seed: int = 0) -> list[SmallCase]:
    return [small_case(i, base_seed) for i in range(count)]


def heuristic_instance(index: int, base_seed: int = 0) -> Instance:
    """Virtual 20-30 nodes on a 40-60 node substrate, Medium capacities."""
    rng = np.random.default_rng([base_seed, 7, index])
    n_r = int(rng.integers(20, 31))
    n_s = int(rng.integers(40, 61))
    v = random_connected_graph(n_r, n_r // 2, rng)
    s = random_connected_graph(n_s, n_s, rng)
    return generate(v, s, CapacityRegime.MEDIUM, int(rng.integers(2**31)), name=f"medium_{index}")


def heuristic_suite(count: int = 20, base_seed: int = 0) -> list[Instance]:
    return [heuristic_instance(i, base_seed) for i in range(count)]
