"""Hot graph kernels: all-pairs distances and masked Dijkstra.

Each kernel exists twice, a numba ``@njit`` version and a pure-numpy
version with identical results (ties resolve to the smallest node index in
both). The numba path is used when numba imports and the environment
variable ``VNE_NUMBA`` is not set to ``0``.
"""
from __future__ import annotations

import os

import numpy as np

_WANT_NUMBA = os.environ.get("VNE_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _WANT_NUMBA


# ---------------------------------------------------------------- numpy path


def floyd_warshall_numpy(weights: np.ndarray) -> np.ndarray:
    d = np.array(weights, dtype=np.float64, copy=True)
    n = d.shape[0]
    np.fill_diagonal(d, np.minimum(np.diag(d), 0.0))
    for k in range(n):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    return d


def dijkstra_numpy(indptr, adj_node, adj_edge, weights, edge_ok, node_ok, src):
    """Single-source shortest paths over usable nodes/edges.

    Returns ``(dist, pred_edge, pred_node)``; unreachable nodes keep
    ``inf`` and predecessor ``-1``.
    """
    n = indptr.shape[0] - 1
    dist = np.full(n, np.inf)
    pred_edge = np.full(n, -1, dtype=np.int64)
    pred_node = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    if not node_ok[src]:
        return dist, pred_edge, pred_node
    dist[src] = 0.0
    for _ in range(n):
        cand = np.where(done, np.inf, dist)
        u = int(np.argmin(cand))
        if not np.isfinite(cand[u]):
            break
        done[u] = True
        lo, hi = indptr[u], indptr[u + 1]
        nbrs = adj_node[lo:hi]
        eids = adj_edge[lo:hi]
        ok = edge_ok[eids] & node_ok[nbrs] & ~done[nbrs]
        if not ok.any():
            continue
        nbrs = nbrs[ok]
        eids = eids[ok]
        alt = dist[u] + weights[eids]
        better = alt < dist[nbrs]
        # a neighbour can appear once per incident edge; simple graphs only
        dist[nbrs[better]] = alt[better]
        pred_edge[nbrs[better]] = eids[better]
        pred_node[nbrs[better]] = u
    return dist, pred_edge, pred_node


# ---------------------------------------------------------------- numba path

if HAS_NUMBA:

    @njit(cache=True)
    def floyd_warshall_numba(weights):
        n = weights.shape[0]
        d = weights.copy()
        for i in range(n):
            if d[i, i] > 0.0:
                d[i, i] = 0.0
        for k in range(n):
            for i in range(n):
                dik = d[i, k]
                if dik == np.inf:
                    continue
                for j in range(n):
                    alt = dik + d[k, j]
                    if alt < d[i, j]:
                        d[i, j] = alt
        return d

    @njit(cache=True)
    def dijkstra_numba(indptr, adj_node, adj_edge, weights, edge_ok, node_ok, src):
        n = indptr.shape[0] - 1
        dist = np.full(n, np.inf)
        pred_edge = np.full(n, -1, dtype=np.int64)
        pred_node = np.full(n, -1, dtype=np.int64)
        done = np.zeros(n, dtype=np.bool_)
        if not node_ok[src]:
            return dist, pred_edge, pred_node
        dist[src] = 0.0
        for _ in range(n):
            u = -1
            best = np.inf
            for v in range(n):
                if not done[v] and dist[v] < best:
                    best = dist[v]
                    u = v
            if u < 0:
                break
            done[u] = True
            for p in range(indptr[u], indptr[u + 1]):
                v = adj_node[p]
                e = adj_edge[p]
                if done[v] or not edge_ok[e] or not node_ok[v]:
                    continue
                alt = dist[u] + weights[e]
                if alt < dist[v]:
                    dist[v] = alt
                    pred_edge[v] = e
                    pred_node[v] = u
        return dist, pred_edge, pred_node

else:  # pragma: no cover
    floyd_warshall_numba = floyd_warshall_numpy
    dijkstra_numba = dijkstra_numpy


if USE_NUMBA:
    floyd_warshall = floyd_warshall_numba
    dijkstra = dijkstra_numba
else:
    floyd_warshall = floyd_warshall_numpy
    dijkstra = dijkstra_numpy
