"""Randomized greedy embedding: distance-ranked placement, then successive
shortest-path routing on residual capacities."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import _kernels
from .graph import path_from_tree
from .instance import Instance, Mapping, mapping_cost

DEFAULT_RESTARTS = 100


@dataclass(frozen=True)
class NoSolutionFound:
    reason: str = ""

    def __bool__(self):
        return False


class ResidualState:
    """Remaining node and edge capacity; never negative."""

    def __init__(self, inst: Instance):
        self.node = inst.node_capacity.astype(np.int64).copy()
        self.edge = inst.edge_capacity.astype(np.int64).copy()

    def take_node(self, u: int, demand: int) -> None:
        if self.node[u] < demand:
            raise ValueError(f"node {u} has {self.node[u]} left, {demand} requested")
        self.node[u] -= demand

    def take_route(self, route, demand: int) -> None:
        for a in route:
            if self.edge[a.edge] < demand:
                raise ValueError(f"edge {a.edge} has {self.edge[a.edge]} left, {demand} requested")
        for a in route:
            self.edge[a.edge] -= demand


class GreedyContext:
    """Per-(instance, scope, view) data shared by all trajectories."""

    def __init__(self, inst: Instance, virtual_nodes: Iterable[int] | None = None, view: Iterable[int] | None = None):
        self.inst = inst
        v, s = inst.virtual, inst.substrate
        self.vnodes = list(range(v.n)) if virtual_nodes is None else sorted(set(virtual_nodes))
        self.vedges = v.induced_edges(self.vnodes)
        in_scope = set(self.vnodes)
        self.nbrs = {vu: [w for w in v.neighbors(vu) if w in in_scope] for vu in self.vnodes}
        self.node_ok = np.ones(s.n, dtype=bool)
        if view is not None:
            self.node_ok[:] = False
            self.node_ok[sorted(set(view))] = True
        keep = self.node_ok[s.edges[:, 0]] & self.node_ok[s.edges[:, 1]]
        w = inst.edge_cost.astype(np.float64)
        mat = s.weight_matrix(w)
        mat[~self.node_ok, :] = np.inf
        mat[:, ~self.node_ok] = np.inf
        np.fill_diagonal(mat, 0.0)
        self.dist = _kernels.floyd_warshall(mat)
        self.edge_in_view = keep
        self.weights = w
        # edges routed heaviest first, ties by id
        self.route_order = sorted(self.vedges, key=lambda ve: (-int(inst.edge_demand[ve]), ve))


def _trajectory(ctx: GreedyContext, rng: np.random.Generator, cost_override: np.ndarray | None) -> Mapping | NoSolutionFound:
    inst = ctx.inst
    v, s = inst.virtual, inst.substrate
    res = ResidualState(inst)
    free = ctx.node_ok.copy()
    place: dict[int, int] = {}

    def candidates(vu):
        return np.flatnonzero(free & (res.node >= inst.node_demand[vu]))

    first = ctx.vnodes[int(rng.integers(len(ctx.vnodes)))]
    cand = candidates(first)
    if cand.size == 0:
        return NoSolutionFound(f"no substrate node can host virtual node {first}")
    u0 = int(cand[int(rng.integers(cand.size))])
    place[first] = u0
    free[u0] = False
    res.take_node(u0, int(inst.node_demand[first]))

    frontier = set(ctx.nbrs[first])
    unplaced = set(ctx.vnodes) - {first}
    while unplaced:
        pool = sorted(frontier & unplaced)
        if not pool:  # scope not connected: restart from any unplaced node
            pool = sorted(unplaced)
        vu = pool[int(rng.integers(len(pool)))]
        cand = candidates(vu)
        if cand.size == 0:
            return NoSolutionFound(f"no free substrate node can host virtual node {vu}")
        score = np.zeros(cand.size)
        for w in ctx.nbrs[vu]:
            if w in place:
                score += ctx.dist[place[w], cand]
        if cost_override is not None:
            score = score + cost_override[vu, cand]
        best = np.flatnonzero(score == score.min())
        u = int(cand[best[0]])  # ties: smallest id
        place[vu] = u
        free[u] = False
        res.take_node(u, int(inst.node_demand[vu]))
        unplaced.discard(vu)
        frontier.update(ctx.nbrs[vu])

    routes = {}
    for ve in ctx.route_order:
        d = int(inst.edge_demand[ve])
        edge_ok = ctx.edge_in_view & (res.edge >= d)
        src, dst = place[v.s(ve)], place[v.t(ve)]
        tree = _kernels.dijkstra(s.indptr, s.adj_node, s.adj_edge, ctx.weights, edge_ok, ctx.node_ok, src)
        route = path_from_tree(s, src, dst, *tree)
        if route is None:
            return NoSolutionFound(f"virtual edge {ve} cannot be routed on residual capacities")
        res.take_route(route, d)
        routes[ve] = route
    return Mapping(place, {ve: routes[ve] for ve in sorted(routes)})


def greedy_embed(
    inst: Instance,
    seed=0,
    cost_override: np.ndarray | None = None,
    virtual_nodes: Iterable[int] | None = None,
    view: Iterable[int] | None = None,
    context: GreedyContext | None = None,
) -> Mapping | NoSolutionFound:
    """One greedy trajectory.

    ``cost_override`` is an ``(n_r, n_s)`` array added to the distance score
    of each candidate host; routing is unaffected by it. ``virtual_nodes``
    and ``view`` restrict the embedding to an induced virtual subgraph and
    to a set of substrate nodes.
    """
    ctx = context or GreedyContext(inst, virtual_nodes, view)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return _trajectory(ctx, rng, cost_override)


def trajectory_rngs(seed, restarts: int) -> list[np.random.Generator]:
    """Trajectory 0 uses ``seed`` itself, so one restart equals ``greedy_embed(seed)``."""
    rngs = [np.random.default_rng(seed)]
    if restarts > 1:
        ss = np.random.SeedSequence(seed)
        rngs += [np.random.default_rng(c) for c in ss.spawn(restarts - 1)]
    return rngs


def greedy_multi(
    inst: Instance,
    restarts: int = DEFAULT_RESTARTS,
    seed=0,
    score: Callable[[Mapping], float] | None = None,
    cost_override: np.ndarray | None = None,
    virtual_nodes: Iterable[int] | None = None,
    view: Iterable[int] | None = None,
    threads: int = 1,
) -> Mapping | NoSolutionFound:
    """Best of ``restarts`` independent trajectories under ``score`` (default: mapping cost).

    Ties go to the lowest trajectory index, so the result does not depend on
    ``threads``.
    """
    if restarts < 1:
        raise ValueError("restarts must be positive")
    ctx = GreedyContext(inst, virtual_nodes, view)
    if score is None:
        scope = ctx.vnodes

        def score(m):
            return mapping_cost(inst, m, scope)

    rngs = trajectory_rngs(seed, restarts)

    def run(rng):
        return _trajectory(ctx, rng, cost_override)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, rngs))
    else:
        results = [run(r) for r in rngs]
    best, best_val = None, math.inf
    reason = ""
    seen: dict[tuple, float] = {}
    for r in results:
        if isinstance(r, NoSolutionFound):
            reason = reason or r.reason
            continue
        key = r.key()
        if key not in seen:
            seen[key] = score(r)
        val = seen[key]
        if val < best_val:
            best, best_val = r, val
    return best if best is not None else NoSolutionFound(reason or "all trajectories failed")
