"""Undirected simple graphs with a fixed orientation per edge."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from . import _kernels


class GraphError(ValueError):
    pass


class Unreachable(GraphError):
    pass


class EmptyCandidateSet(GraphError):
    pass


class Direction(IntEnum):
    FORWARD = 1   # s(e) -> t(e)
    REVERSE = -1  # t(e) -> s(e)


@dataclass(frozen=True)
class OrientedEdgeRef:
    edge: int
    direction: Direction


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph on nodes ``0..n-1``.

    Edge ``e`` is stored as ``(s(e), t(e))`` in construction order; that order
    is the canonical orientation used by the flow formulations.
    """

    n: int
    edges: np.ndarray  # (m, 2) int64, row e = (s(e), t(e))
    allow_disconnected: bool = False
    indptr: np.ndarray = field(init=False, repr=False)
    adj_node: np.ndarray = field(init=False, repr=False)
    adj_edge: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "edges", edges)
        edges.flags.writeable = False
        if self.n < 0:
            raise GraphError("negative node count")
        seen = set()
        for e, (a, b) in enumerate(edges.tolist()):
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise GraphError(f"edge {e} has endpoint outside 0..{self.n - 1}")
            if a == b:
                raise GraphError(f"edge {e} is a self-loop")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise GraphError(f"edge {e} duplicates {key}")
            seen.add(key)
        # CSR adjacency, neighbours in edge-id order
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, edges[:, 0], 1)
        np.add.at(deg, edges[:, 1], 1)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        fill = indptr[:-1].copy()
        adj_node = np.empty(2 * len(edges), dtype=np.int64)
        adj_edge = np.empty(2 * len(edges), dtype=np.int64)
        for e, (a, b) in enumerate(edges.tolist()):
            adj_node[fill[a]], adj_edge[fill[a]] = b, e
            fill[a] += 1
            adj_node[fill[b]], adj_edge[fill[b]] = a, e
            fill[b] += 1
        for arr in (indptr, adj_node, adj_edge):
            arr.flags.writeable = False
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "adj_node", adj_node)
        object.__setattr__(self, "adj_edge", adj_edge)
        if not self.allow_disconnected and self.n > 0 and not self.is_connected():
            raise GraphError("graph is not connected")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], allow_disconnected: bool = False) -> "Graph":
        return cls(n, np.array(list(edges), dtype=np.int64).reshape(-1, 2), allow_disconnected)

    # ------------------------------------------------------------ queries

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    def s(self, e: int) -> int:
        return int(self.edges[e, 0])

    def t(self, e: int) -> int:
        return int(self.edges[e, 1])

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def incident(self, u: int) -> list[tuple[int, int]]:
        """``delta(u)`` as ``(edge, neighbour)`` pairs."""
        lo, hi = self.indptr[u], self.indptr[u + 1]
        return list(zip(self.adj_edge[lo:hi].tolist(), self.adj_node[lo:hi].tolist()))

    def neighbors(self, u: int) -> list[int]:
        return self.adj_node[self.indptr[u]:self.indptr[u + 1]].tolist()

    def out_arcs(self, u: int) -> list[OrientedEdgeRef]:
        """``delta+(u)``: one oriented reference per incident edge, leaving ``u``."""
        return [
            OrientedEdgeRef(e, Direction.FORWARD if self.s(e) == u else Direction.REVERSE)
            for e, _ in self.incident(u)
        ]

    def in_arcs(self, u: int) -> list[OrientedEdgeRef]:
        return [
            OrientedEdgeRef(e, Direction.REVERSE if self.s(e) == u else Direction.FORWARD)
            for e, _ in self.incident(u)
        ]

    def arc_tail(self, a: OrientedEdgeRef) -> int:
        return self.s(a.edge) if a.direction == Direction.FORWARD else self.t(a.edge)

    def arc_head(self, a: OrientedEdgeRef) -> int:
        return self.t(a.edge) if a.direction == Direction.FORWARD else self.s(a.edge)

    def edge_between(self, a: int, b: int) -> int | None:
        for e, v in self.incident(a):
            if v == b:
                return e
        return None

    def is_connected(self, nodes: Iterable[int] | None = None) -> bool:
        members = set(range(self.n)) if nodes is None else set(nodes)
        if not members:
            return True
        start = min(members)
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in self.neighbors(u):
                if v in members and v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == len(members)

    def induced_edges(self, nodes: Iterable[int]) -> list[int]:
        members = np.zeros(self.n, dtype=bool)
        members[list(nodes)] = True
        keep = members[self.edges[:, 0]] & members[self.edges[:, 1]]
        return np.flatnonzero(keep).tolist()

    # ------------------------------------------------------------ distances

    def weight_matrix(self, edge_weights=None) -> np.ndarray:
        w = self._weights(edge_weights)
        mat = np.full((self.n, self.n), np.inf)
        np.fill_diagonal(mat, 0.0)
        mat[self.edges[:, 0], self.edges[:, 1]] = w
        mat[self.edges[:, 1], self.edges[:, 0]] = w
        return mat

    def _weights(self, edge_weights) -> np.ndarray:
        if edge_weights is None:
            return np.ones(self.m)
        w = np.asarray(edge_weights, dtype=np.float64)
        if w.shape != (self.m,):
            raise GraphError(f"expected {self.m} edge weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise GraphError("edge weights must be finite and non-negative")
        return w

    def dijkstra(self, src: int, edge_weights=None, edge_ok=None, node_ok=None):
        w = self._weights(edge_weights)
        edge_ok = np.ones(self.m, dtype=np.bool_) if edge_ok is None else np.asarray(edge_ok, dtype=np.bool_)
        node_ok = np.ones(self.n, dtype=np.bool_) if node_ok is None else np.asarray(node_ok, dtype=np.bool_)
        return _kernels.dijkstra(self.indptr, self.adj_node, self.adj_edge, w, edge_ok, node_ok, int(src))


def shortest_path_len(g: Graph, src: int, dst: int, edge_weights=None) -> float:
    """Weighted shortest-path length; raises ``Unreachable`` if none exists."""
    if src == dst:
        return 0 if edge_weights is None else 0.0
    dist, _, _ = g.dijkstra(src, edge_weights)
    if not np.isfinite(dist[dst]):
        raise Unreachable(f"no path from {src} to {dst}")
    d = dist[dst]
    return int(d) if edge_weights is None else float(d)


def shortest_path(g: Graph, src: int, dst: int, edge_weights=None, edge_ok=None, node_ok=None) -> list[OrientedEdgeRef] | None:
    """Cheapest path as oriented edge references, or ``None`` if unreachable."""
    if src == dst:
        return []
    dist, pred_edge, pred_node = g.dijkstra(src, edge_weights, edge_ok, node_ok)
    return path_from_tree(g, src, dst, dist, pred_edge, pred_node)


def path_from_tree(g: Graph, src: int, dst: int, dist, pred_edge, pred_node) -> list[OrientedEdgeRef] | None:
    """Walk a Dijkstra predecessor tree back from ``dst``."""
    if not np.isfinite(dist[dst]):
        return None
    route = []
    v = dst
    while v != src:
        e, u = int(pred_edge[v]), int(pred_node[v])
        route.append(OrientedEdgeRef(e, Direction.FORWARD if g.s(e) == u else Direction.REVERSE))
        v = u
    route.reverse()
    return route


def all_pairs_distances(g: Graph, edge_weights=None) -> np.ndarray:
    """Floyd-Warshall distance matrix; unreachable pairs are ``inf``.

    Values are float64, which is exact for integer weights below 2**53.
    """
    return _kernels.floyd_warshall(g.weight_matrix(edge_weights))


def closeness_center(g: Graph, candidates: Iterable[int]) -> int:
    """Candidate minimising the hop-distance sum to all candidates (ties: smallest id)."""
    cand = sorted(set(int(c) for c in candidates))
    if not cand:
        raise EmptyCandidateSet("closeness_center needs at least one candidate")
    if len(cand) == 1:
        return cand[0]
    node_ok = np.zeros(g.n, dtype=np.bool_)
    node_ok[cand] = True
    best, best_sum = cand[0], np.inf
    for c in cand:
        dist, _, _ = g.dijkstra(c, None, None, node_ok)
        total = dist[cand].sum()
        if total < best_sum:
            best, best_sum = c, total
    return best
