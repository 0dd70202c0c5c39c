"""Undirected Flow Formulation (FF) with bidirected arc variables.

The same builder serves as the exact solver for a whole instance and, with
overridden objective coefficients, a scoped virtual subgraph and a
substrate view, as the exact pricing engine.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .graph import Direction, Graph, OrientedEdgeRef
from .instance import Instance, Mapping
from .mip import GE, LE, EQ, Model, SolveOutcome, solve_lp, solve_mip

FWD, REV = int(Direction.FORWARD), int(Direction.REVERSE)


class ExtractionFailure(RuntimeError):
    pass


@dataclass
class FFModelHandles:
    virtual_nodes: list[int]
    virtual_edges: list[int]
    substrate_nodes: list[int]      # nodes usable for routing (the view)
    substrate_edges: list[int]      # edges usable for routing
    x: dict[tuple[int, int], int] = field(default_factory=dict)        # (vnode, snode) -> var
    y: dict[tuple[int, int, int], int] = field(default_factory=dict)   # (vedge, sedge, dir) -> var
    rows: dict[str, list] = field(default_factory=dict)                # family -> row keys


def build_ff(
    inst: Instance,
    relaxed: bool = False,
    x_cost: np.ndarray | None = None,
    y_cost: np.ndarray | None = None,
    constant: float = 0.0,
    view: Iterable[int] | None = None,
    virtual_nodes: Iterable[int] | None = None,
    departure: bool = True,
    name: str = "FF",
) -> tuple[Model, FFModelHandles]:
    """Build FF for ``inst`` (optionally scoped).

    ``x_cost`` is an ``(n_r, n_s)`` array of placement coefficients and
    ``y_cost`` an ``(m_r, m_s)`` array of per-arc routing coefficients (both
    orientations share it). ``view`` restricts placement and routing to a
    set of substrate nodes; ``virtual_nodes`` restricts to an induced
    virtual subgraph. ``departure=False`` drops the flow-departure rows.
    """
    v, s = inst.virtual, inst.substrate
    vnodes = list(range(v.n)) if virtual_nodes is None else sorted(set(virtual_nodes))
    vedges = v.induced_edges(vnodes)
    if view is None:
        snodes = list(range(s.n))
        sedges = list(range(s.m))
    else:
        snodes = sorted(set(view))
        sedges = s.induced_edges(snodes)
    if x_cost is None:
        x_cost = np.outer(inst.node_demand, inst.node_cost)
    if y_cost is None:
        y_cost = np.outer(inst.edge_demand, inst.edge_cost)

    model = Model(name=name, obj_constant=float(constant))
    h = FFModelHandles(vnodes, vedges, snodes, sedges)
    integer = not relaxed
    hosts = [u for u in snodes if inst.node_capacity[u] > 0]
    for vu in vnodes:
        for u in hosts:
            h.x[vu, u] = model.add_var(0.0, 1.0, float(x_cost[vu, u]), integer, f"x_{vu}_{u}")
    for ve in vedges:
        for e in sedges:
            c = float(y_cost[ve, e])
            h.y[ve, e, FWD] = model.add_var(0.0, 1.0, c, integer, f"yp_{ve}_{e}")
            h.y[ve, e, REV] = model.add_var(0.0, 1.0, c, integer, f"ym_{ve}_{e}")

    edge_in = np.zeros(s.m, dtype=bool)
    edge_in[sedges] = True

    def out_in(ve, u):
        outs, ins = [], []
        for e, _ in s.incident(u):
            if not edge_in[e]:
                continue
            if s.s(e) == u:
                outs.append(h.y[ve, e, FWD])
                ins.append(h.y[ve, e, REV])
            else:
                outs.append(h.y[ve, e, REV])
                ins.append(h.y[ve, e, FWD])
        return outs, ins

    fam = {k: [] for k in ("place", "flow", "one", "ncap", "ecap", "dep", "arr")}
    for vu in vnodes:
        cols = [h.x[vu, u] for u in hosts]
        model.add_row(("place", vu), EQ, 1.0, cols, [1.0] * len(cols))
        fam["place"].append(("place", vu))
    for ve in vedges:
        a, b = v.s(ve), v.t(ve)
        for u in snodes:
            outs, ins = out_in(ve, u)
            cols, vals = [], []
            if (a, u) in h.x:
                cols.append(h.x[a, u])
                vals.append(1.0)
            if (b, u) in h.x:
                cols.append(h.x[b, u])
                vals.append(-1.0)
            cols += outs + ins
            vals += [-1.0] * len(outs) + [1.0] * len(ins)
            model.add_row(("flow", ve, u), EQ, 0.0, cols, vals)
            fam["flow"].append(("flow", ve, u))
    for u in hosts:
        cols = [h.x[vu, u] for vu in vnodes]
        model.add_row(("one", u), LE, 1.0, cols, [1.0] * len(cols))
        model.add_row(("ncap", u), LE, float(inst.node_capacity[u]), cols, [float(inst.node_demand[vu]) for vu in vnodes])
        fam["one"].append(("one", u))
        fam["ncap"].append(("ncap", u))
    for e in sedges:
        cols, vals = [], []
        for ve in vedges:
            d = float(inst.edge_demand[ve])
            cols += [h.y[ve, e, FWD], h.y[ve, e, REV]]
            vals += [d, d]
        model.add_row(("ecap", e), LE, float(inst.edge_capacity[e]), cols, vals)
        fam["ecap"].append(("ecap", e))
    if departure:
        for ve in vedges:
            a, b = v.s(ve), v.t(ve)
            for u in hosts:
                outs, ins = out_in(ve, u)
                model.add_row(("dep", ve, u), GE, 0.0, outs + [h.x[a, u]], [1.0] * len(outs) + [-1.0])
                model.add_row(("arr", ve, u), GE, 0.0, ins + [h.x[b, u]], [1.0] * len(ins) + [-1.0])
                fam["dep"].append(("dep", ve, u))
                fam["arr"].append(("arr", ve, u))
    h.rows = fam
    return model, h


def solve_ff(inst: Instance, relaxed: bool = False, time_limit: float | None = None, **kwargs) -> tuple[SolveOutcome, Model, FFModelHandles]:
    model, h = build_ff(inst, relaxed=relaxed, **kwargs)
    out = solve_lp(model) if relaxed else solve_mip(model, time_limit)
    return out, model, h


def extract_route(g: Graph, arcs: Iterable[OrientedEdgeRef], src: int, dst: int) -> list[OrientedEdgeRef]:
    """Loop-free src->dst path inside a set of used arcs; flow cycles are dropped."""
    out: dict[int, list[OrientedEdgeRef]] = {}
    for a in sorted(arcs, key=lambda r: (r.edge, -int(r.direction))):
        out.setdefault(g.arc_tail(a), []).append(a)
    pred: dict[int, OrientedEdgeRef | None] = {src: None}
    queue = deque([src])
    while queue and dst not in pred:
        u = queue.popleft()
        for a in out.get(u, []):
            w = g.arc_head(a)
            if w not in pred:
                pred[w] = a
                queue.append(w)
    if dst not in pred:
        raise ExtractionFailure(f"no path from {src} to {dst} in flow support")
    route = []
    node = dst
    while node != src:
        a = pred[node]
        route.append(a)
        node = g.arc_tail(a)
    route.reverse()
    return route


def extract_mapping(inst: Instance, h: FFModelHandles, outcome: SolveOutcome, threshold: float = 0.5) -> Mapping:
    if not outcome.status.has_solution or outcome.x is None:
        raise ExtractionFailure(f"no primal solution (status {outcome.status.value})")
    x = outcome.x
    v, s = inst.virtual, inst.substrate
    m = Mapping()
    hosts_of: dict[int, list[int]] = {vu: [] for vu in h.virtual_nodes}
    for (vu, u), j in h.x.items():
        if x[j] > threshold:
            hosts_of[vu].append(u)
    arcs_of: dict[int, list[OrientedEdgeRef]] = {ve: [] for ve in h.virtual_edges}
    for (ve, e, d), j in h.y.items():
        if x[j] > threshold:
            arcs_of[ve].append(OrientedEdgeRef(e, Direction(d)))
    for vu in h.virtual_nodes:
        hosts = hosts_of[vu]
        if len(hosts) != 1:
            raise ExtractionFailure(f"virtual node {vu} has {len(hosts)} placements above {threshold}")
        m.node_place[vu] = hosts[0]
    for ve in h.virtual_edges:
        m.edge_route[ve] = extract_route(s, arcs_of[ve], m.node_place[v.s(ve)], m.node_place[v.t(ve)])
    return m
