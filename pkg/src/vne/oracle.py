"""Exhaustive VNE solver for tiny instances; ground truth for the test suites.

Independent of the LP machinery: enumerates injective placements with a
distance-based bound, then routes edges by depth-first search over
precomputed loop-free paths under residual capacities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .graph import Direction, OrientedEdgeRef
from .instance import Instance, Mapping

MAX_VIRTUAL = 6
MAX_SUBSTRATE = 12


class TooLarge(ValueError):
    pass


@dataclass
class OracleResult:
    value: float          # math.inf when infeasible
    mapping: Mapping | None

    @property
    def feasible(self) -> bool:
        return self.mapping is not None


def _simple_paths(inst: Instance):
    g = inst.substrate
    w = inst.edge_cost

    @lru_cache(maxsize=None)
    def paths(src: int, dst: int) -> tuple[tuple[int, tuple[int, ...]], ...]:
        # (cost, edge ids) for every loop-free src->dst path, cheapest first
        found = []
        stack = [(src, (src,), ())]
        while stack:
            u, visited, edges = stack.pop()
            if u == dst:
                found.append((int(sum(int(w[e]) for e in edges)), edges, visited))
                continue
            for e, v in g.incident(u):
                if v not in visited:
                    stack.append((v, visited + (v,), edges + (e,)))
        found.sort(key=lambda t: (t[0], len(t[1]), t[1]))
        return tuple((c, es, vs, sum(1 << e for e in es)) for c, es, vs in found)

    return paths


def brute_force_optimum(inst: Instance) -> OracleResult:
    n_r, n_s = inst.n_r, inst.n_s
    if n_r > MAX_VIRTUAL or n_s > MAX_SUBSTRATE:
        raise TooLarge(f"oracle limited to n_r <= {MAX_VIRTUAL}, n_s <= {MAX_SUBSTRATE} (got {n_r}, {n_s})")
    v, g = inst.virtual, inst.substrate
    paths = _simple_paths(inst)

    # hop-free weighted distances, for the placement bound only
    dist = np.full((n_s, n_s), math.inf)
    for a in range(n_s):
        dist[a, a] = 0
        for b in range(n_s):
            p = paths(a, b) if a != b else ()
            if p:
                dist[a, b] = p[0][0]

    # virtual nodes in BFS order so each new node tends to touch placed ones
    order = []
    seen = set()
    for root in range(n_r):
        if root in seen:
            continue
        seen.add(root)
        queue = [root]
        while queue:
            x = queue.pop(0)
            order.append(x)
            for y in sorted(v.neighbors(x)):
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
    pos = {vu: i for i, vu in enumerate(order)}
    # edges whose later endpoint (in order) is placed at step i
    closing = [[] for _ in range(n_r)]
    for ve in range(v.m):
        a, b = v.s(ve), v.t(ve)
        closing[max(pos[a], pos[b])].append(ve)

    d_node = inst.node_demand
    d_edge = inst.edge_demand
    cap_n = inst.node_capacity
    cap_e = inst.edge_capacity
    w_node = inst.node_cost

    best_val = math.inf
    best_map: Mapping | None = None
    place = {}
    used = np.zeros(n_s, dtype=bool)

    min_host = [min((int(d_node[vu]) * int(w_node[u]) for u in range(n_s) if cap_n[u] >= d_node[vu]), default=math.inf)
                for vu in range(n_r)]
    rest_host = [sum(min_host[order[j]] for j in range(i, n_r)) for i in range(n_r + 1)]

    edge_list = list(range(v.m))
    edge_list.sort(key=lambda ve: (-int(d_edge[ve]), ve))

    def route_all(lower_node_cost: float):
        """Optimal routing of all edges for the current placement."""
        nonlocal best_val, best_map
        options = []
        for ve in edge_list:
            src, dst = place[v.s(ve)], place[v.t(ve)]
            options.append((ve, int(d_edge[ve]), paths(src, dst)))
        lb_tail = [0.0] * (len(options) + 1)
        for i in range(len(options) - 1, -1, -1):
            ps = options[i][2]
            lb_tail[i] = lb_tail[i + 1] + (options[i][1] * ps[0][0] if ps else math.inf)
        residual = [int(c) for c in cap_e]
        m_s = len(residual)
        chosen = [None] * len(options)

        def dfs(i: int, acc: float):
            nonlocal best_val, best_map
            if acc + lb_tail[i] >= best_val:
                return
            if i == len(options):
                best_val = acc
                mp = Mapping(dict(place), {})
                for (ve, _, _), (es, vs) in zip(options, chosen):
                    route = []
                    for e, tail in zip(es, vs):
                        route.append(OrientedEdgeRef(e, Direction.FORWARD if g.s(e) == tail else Direction.REVERSE))
                    mp.edge_route[ve] = route
                best_map = mp
                return
            ve, dem, ps = options[i]
            blocked = 0
            for e in range(m_s):
                if residual[e] < dem:
                    blocked |= 1 << e
            for cost, es, vs, mask in ps:
                c = acc + dem * cost
                if c + lb_tail[i + 1] >= best_val:
                    break  # paths sorted by cost
                if mask & blocked:
                    continue
                for e in es:
                    residual[e] -= dem
                chosen[i] = (es, vs)
                dfs(i + 1, c)
                for e in es:
                    residual[e] += dem

        dfs(0, lower_node_cost)

    def place_next(i: int, node_cost: float, edge_lb: float):
        if node_cost + edge_lb + rest_host[i] >= best_val:
            return
        if i == n_r:
            route_all(node_cost)
            return
        vu = order[i]
        cand = []
        for u in range(n_s):
            if used[u] or cap_n[u] < d_node[vu]:
                continue
            add_e = 0.0
            for ve in closing[i]:
                other = v.t(ve) if v.s(ve) == vu else v.s(ve)
                add_e += int(d_edge[ve]) * dist[place[other], u]
            cand.append((int(d_node[vu]) * int(w_node[u]) + add_e, u, add_e))
        cand.sort()
        for inc, u, add_e in cand:
            if not math.isfinite(inc):
                continue
            place[vu] = u
            used[u] = True
            place_next(i + 1, node_cost + int(d_node[vu]) * int(w_node[u]), edge_lb + add_e)
            used[u] = False
            del place[vu]

    place_next(0, 0.0, 0.0)
    if best_map is None:
        return OracleResult(math.inf, None)
    return OracleResult(float(best_val), best_map)
