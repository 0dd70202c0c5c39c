"""VNE instances, mappings, validation, cost evaluation, generation and file IO."""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

from .graph import Direction, Graph, GraphError, OrientedEdgeRef


class VNEError(Exception):
    pass


class VirtualLargerThanSubstrate(VNEError):
    pass


class StructurallyInvalidMapping(VNEError):
    pass


class ParseError(VNEError):
    def __init__(self, msg: str, line: int | None = None, source: str | None = None):
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {msg}".strip())
        self.line = line


class CapacityRegime(str, Enum):
    LARGE = "large"
    MEDIUM = "medium"
    SMALL = "small"


def _intvec(values, n: int, name: str, minimum: int) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64).reshape(-1)
    if arr.shape != (n,):
        raise VNEError(f"{name}: expected {n} values, got {arr.shape[0]}")
    if np.any(arr < minimum):
        raise VNEError(f"{name}: values must be >= {minimum}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Instance:
    virtual: Graph
    substrate: Graph
    node_demand: np.ndarray
    edge_demand: np.ndarray
    node_capacity: np.ndarray
    edge_capacity: np.ndarray
    node_cost: np.ndarray
    edge_cost: np.ndarray
    regime: CapacityRegime | None = None
    name: str = ""

    def __post_init__(self):
        v, s = self.virtual, self.substrate
        object.__setattr__(self, "node_demand", _intvec(self.node_demand, v.n, "node_demand", 1))
        object.__setattr__(self, "edge_demand", _intvec(self.edge_demand, v.m, "edge_demand", 1))
        object.__setattr__(self, "node_capacity", _intvec(self.node_capacity, s.n, "node_capacity", 0))
        object.__setattr__(self, "edge_capacity", _intvec(self.edge_capacity, s.m, "edge_capacity", 0))
        object.__setattr__(self, "node_cost", _intvec(self.node_cost, s.n, "node_cost", 0))
        object.__setattr__(self, "edge_cost", _intvec(self.edge_cost, s.m, "edge_cost", 0))
        if v.n > s.n:
            raise VirtualLargerThanSubstrate(f"virtual network has {v.n} nodes, substrate only {s.n}")

    @property
    def n_r(self) -> int:
        return self.virtual.n

    @property
    def n_s(self) -> int:
        return self.substrate.n

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.regime == other.regime
            and self.virtual.n == other.virtual.n
            and self.substrate.n == other.substrate.n
            and np.array_equal(self.virtual.edges, other.virtual.edges)
            and np.array_equal(self.substrate.edges, other.substrate.edges)
            and all(
                np.array_equal(getattr(self, f), getattr(other, f))
                for f in ("node_demand", "edge_demand", "node_capacity", "edge_capacity", "node_cost", "edge_cost")
            )
        )

    __hash__ = None

    def with_capacities(self, node_capacity=None, edge_capacity=None, regime=None) -> "Instance":
        return Instance(
            self.virtual, self.substrate, self.node_demand, self.edge_demand,
            self.node_capacity if node_capacity is None else node_capacity,
            self.edge_capacity if edge_capacity is None else edge_capacity,
            self.node_cost, self.edge_cost, regime if regime is not None else self.regime, self.name,
        )

    def cost_bound(self) -> int:
        """Upper bound on the cost of any feasible mapping."""
        wmax = int(max(self.node_cost.max(initial=0), self.edge_cost.max(initial=0), 1))
        total_demand = int(self.node_demand.sum() + self.edge_demand.sum())
        return total_demand * wmax * max(self.n_s, 1)


# ---------------------------------------------------------------- mappings


@dataclass
class Mapping:
    """Node placement plus one oriented substrate route per virtual edge.

    May be partial (a sub-mapping of an induced virtual subgraph).
    """

    node_place: dict[int, int] = field(default_factory=dict)
    edge_route: dict[int, list[OrientedEdgeRef]] = field(default_factory=dict)

    def key(self) -> tuple:
        return (
            tuple(sorted(self.node_place.items())),
            tuple(sorted((e, tuple((a.edge, int(a.direction)) for a in r)) for e, r in self.edge_route.items())),
        )


def route_to_nodes(g: Graph, start: int, route: list[OrientedEdgeRef]) -> list[int]:
    nodes = [start]
    for a in route:
        if g.arc_tail(a) != nodes[-1]:
            raise StructurallyInvalidMapping(f"route is not contiguous at edge {a.edge}")
        nodes.append(g.arc_head(a))
    return nodes


def nodes_to_route(g: Graph, nodes: list[int]) -> list[OrientedEdgeRef]:
    route = []
    for a, b in zip(nodes, nodes[1:]):
        e = g.edge_between(a, b)
        if e is None:
            raise StructurallyInvalidMapping(f"no substrate edge between {a} and {b}")
        route.append(OrientedEdgeRef(e, Direction.FORWARD if g.s(e) == a else Direction.REVERSE))
    return route


def _scope(inst: Instance, scope: Iterable[int] | None) -> tuple[list[int], list[int]]:
    if scope is None:
        return list(range(inst.n_r)), list(range(inst.virtual.m))
    nodes = sorted(set(scope))
    return nodes, inst.virtual.induced_edges(nodes)


def _check_structure(inst: Instance, m: Mapping, nodes, vedges) -> list[str]:
    problems = []
    for vu in nodes:
        u = m.node_place.get(vu)
        if u is None:
            problems.append(f"virtual node {vu} is not placed")
        elif not 0 <= u < inst.n_s:
            problems.append(f"virtual node {vu} placed on unknown substrate node {u}")
    if problems:
        return problems
    for ve in vedges:
        route = m.edge_route.get(ve)
        a, b = inst.virtual.s(ve), inst.virtual.t(ve)
        if route is None:
            problems.append(f"virtual edge {ve} has no route")
            continue
        if not route:
            problems.append(f"virtual edge {ve} has an empty route")
            continue
        if any(not 0 <= r.edge < inst.substrate.m for r in route):
            problems.append(f"virtual edge {ve} uses an unknown substrate edge")
            continue
        try:
            path = route_to_nodes(inst.substrate, m.node_place[a], route)
        except StructurallyInvalidMapping as exc:
            problems.append(f"virtual edge {ve}: {exc}")
            continue
        if path[-1] != m.node_place[b]:
            problems.append(f"virtual edge {ve} route ends at {path[-1]}, expected {m.node_place[b]}")
        if len(set(path)) != len(path):
            problems.append(f"virtual edge {ve} route is not loop-free")
    return problems


def mapping_cost(inst: Instance, m: Mapping, scope: Iterable[int] | None = None) -> int:
    """W_m: demand-weighted node and edge utilisation cost."""
    nodes, vedges = _scope(inst, scope)
    problems = _check_structure(inst, m, nodes, vedges)
    if problems:
        raise StructurallyInvalidMapping("; ".join(problems))
    cost = sum(int(inst.node_demand[vu]) * int(inst.node_cost[m.node_place[vu]]) for vu in nodes)
    for ve in vedges:
        d = int(inst.edge_demand[ve])
        cost += d * sum(int(inst.edge_cost[a.edge]) for a in m.edge_route[ve])
    return cost


@dataclass
class Violation:
    kind: str  # structure | injectivity | node_capacity | edge_capacity
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


def validate(inst: Instance, m: Mapping, scope: Iterable[int] | None = None) -> ValidationReport:
    nodes, vedges = _scope(inst, scope)
    out = [Violation("structure", p) for p in _check_structure(inst, m, nodes, vedges)]
    hosts: dict[int, list[int]] = {}
    for vu in nodes:
        if vu in m.node_place:
            hosts.setdefault(m.node_place[vu], []).append(vu)
    for u, vus in sorted(hosts.items()):
        if len(vus) > 1:
            out.append(Violation("injectivity", f"substrate node {u} hosts virtual nodes {vus}"))
        if 0 <= u < inst.n_s:
            load = sum(int(inst.node_demand[vu]) for vu in vus)
            if load > inst.node_capacity[u]:
                out.append(Violation("node_capacity", f"substrate node {u}: load {load} > capacity {inst.node_capacity[u]}"))
    load_e = np.zeros(inst.substrate.m, dtype=np.int64)
    for ve in vedges:
        for a in m.edge_route.get(ve, []):
            if 0 <= a.edge < inst.substrate.m:
                load_e[a.edge] += inst.edge_demand[ve]
    for e in np.flatnonzero(load_e > inst.edge_capacity).tolist():
        out.append(Violation("edge_capacity", f"substrate edge {e}: load {load_e[e]} > capacity {inst.edge_capacity[e]}"))
    return ValidationReport(out)


def mapping_load(inst: Instance, m: Mapping, scope=None) -> tuple[np.ndarray, np.ndarray]:
    """Per substrate node and edge demand consumed by ``m``."""
    nodes, vedges = _scope(inst, scope)
    ln = np.zeros(inst.n_s, dtype=np.int64)
    le = np.zeros(inst.substrate.m, dtype=np.int64)
    for vu in nodes:
        ln[m.node_place[vu]] += inst.node_demand[vu]
    for ve in vedges:
        for a in m.edge_route[ve]:
            le[a.edge] += inst.edge_demand[ve]
    return ln, le


# ---------------------------------------------------------------- generation


def _rng(seed) -> np.random.Generator:
    # PCG64 via numpy's default_rng: documented, portable, bit-reproducible
    return np.random.default_rng(seed)


def regime_capacities(virtual: Graph, substrate: Graph, seed: int) -> dict[CapacityRegime, tuple[np.ndarray, np.ndarray]]:
    """Node and edge capacities for all three regimes, drawn from one stream.

    Small <= Medium <= Large holds element-wise by clamping.
    """
    rng = _rng(seed)
    n_r, m_r = virtual.n, virtual.m
    ms = substrate.m
    med_draw = rng.integers(2, 6, size=ms)
    small_draw = rng.integers(1, 4, size=ms)

    large_e = np.full(ms, max(m_r, 1), dtype=np.int64)
    large_n = np.full(substrate.n, max(n_r, 1), dtype=np.int64)
    med_e = np.minimum(med_draw, large_e)
    med_n = large_n.copy()
    small_e = np.minimum(small_draw, med_e)
    small_n = np.minimum(np.ones(substrate.n, dtype=np.int64), med_n)
    n_zero = int(np.floor(0.2 * substrate.n))
    deg = substrate.degree()
    order = np.lexsort((np.arange(substrate.n), deg))  # lowest degree first, ties by id
    small_n[order[:n_zero]] = 0
    return {
        CapacityRegime.LARGE: (large_n, large_e),
        CapacityRegime.MEDIUM: (med_n, med_e),
        CapacityRegime.SMALL: (small_n, small_e),
    }


def degree_costs(substrate: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Better-connected resources are cheaper."""
    deg = substrate.degree()
    penalty = deg.max(initial=0) - deg
    w_node = 1 + penalty
    w_edge = 1 + np.maximum(penalty[substrate.edges[:, 0]], penalty[substrate.edges[:, 1]]) if substrate.m else np.zeros(0, dtype=np.int64)
    return w_node.astype(np.int64), np.asarray(w_edge, dtype=np.int64)


def generate(topology_virtual: Graph, topology_substrate: Graph, regime: CapacityRegime | str, seed: int, name: str = "") -> Instance:
    regime = CapacityRegime(regime)
    if topology_virtual.n > topology_substrate.n:
        raise VirtualLargerThanSubstrate(
            f"virtual network has {topology_virtual.n} nodes, substrate only {topology_substrate.n}"
        )
    if not topology_virtual.is_connected() or not topology_substrate.is_connected():
        raise GraphError("topologies must be connected")
    caps = regime_capacities(topology_virtual, topology_substrate, seed)
    node_cap, edge_cap = caps[regime]
    w_node, w_edge = degree_costs(topology_substrate)
    return Instance(
        topology_virtual, topology_substrate,
        np.ones(topology_virtual.n, dtype=np.int64), np.ones(topology_virtual.m, dtype=np.int64),
        node_cap, edge_cap, w_node, w_edge, regime, name,
    )


def random_connected_graph(n: int, extra_edges: int, rng: np.random.Generator) -> Graph:
    """Random spanning tree plus up to ``extra_edges`` random chords."""
    if n <= 1:
        return Graph.from_edges(n, [])
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        a, b = int(order[i]), int(order[rng.integers(0, i)])
        edges.add((min(a, b), max(a, b)))
    possible = [(a, b) for a in range(n) for b in range(a + 1, n) if (a, b) not in edges]
    if possible and extra_edges > 0:
        pick = rng.choice(len(possible), size=min(extra_edges, len(possible)), replace=False)
        edges.update(possible[i] for i in sorted(pick.tolist()))
    return Graph.from_edges(n, sorted(edges))


# ---------------------------------------------------------------- file IO

_HEADER = "VNE 1"


def dumps(inst: Instance) -> str:
    out = io.StringIO()
    out.write(_HEADER + "\n")
    if inst.name:
        out.write(f"# {inst.name}\n")
    if inst.regime is not None:
        out.write(f"REGIME {inst.regime.value}\n")
    out.write(f"VNODES {inst.n_r}\n")
    for u in range(inst.n_r):
        out.write(f"{u} {inst.node_demand[u]}\n")
    out.write(f"VEDGES {inst.virtual.m}\n")
    for e, (a, b) in enumerate(inst.virtual.edges.tolist()):
        out.write(f"{e} {a} {b} {inst.edge_demand[e]}\n")
    out.write(f"SNODES {inst.n_s}\n")
    for u in range(inst.n_s):
        out.write(f"{u} {inst.node_capacity[u]} {inst.node_cost[u]}\n")
    out.write(f"SEDGES {inst.substrate.m}\n")
    for e, (a, b) in enumerate(inst.substrate.edges.tolist()):
        out.write(f"{e} {a} {b} {inst.edge_capacity[e]} {inst.edge_cost[e]}\n")
    return out.getvalue()


def loads(text: str, source: str | None = None) -> Instance:
    lines = [(i + 1, raw.split("#", 1)[0].strip()) for i, raw in enumerate(text.split("\n"))]
    lines = [(no, ln) for no, ln in lines if ln]
    name = ""
    for raw in text.split("\n")[1:2]:
        if raw.startswith("# "):
            name = raw[2:]
    pos = 0

    def take(expect_fields: int, label: str) -> tuple[int, list[int]]:
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(f"unexpected end of file while reading {label}", None, source)
        no, ln = lines[pos]
        pos += 1
        parts = ln.split()
        if len(parts) != expect_fields:
            raise ParseError(f"{label}: expected {expect_fields} fields, got {len(parts)}", no, source)
        try:
            return no, [int(p) for p in parts]
        except ValueError:
            bad = next(p for p in parts if not _is_int(p))
            raise ParseError(f"{label}: field {bad!r} is not a decimal integer", no, source) from None

    def section(keyword: str) -> int:
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(f"missing section {keyword}", None, source)
        no, ln = lines[pos]
        parts = ln.split()
        if len(parts) != 2 or parts[0] != keyword or not _is_int(parts[1]):
            raise ParseError(f"expected '{keyword} <count>', got {ln!r}", no, source)
        pos += 1
        return int(parts[1])

    if not lines or lines[0][1] != _HEADER:
        raise ParseError(f"missing header {_HEADER!r}", lines[0][0] if lines else None, source)
    pos = 1
    regime = None
    if pos < len(lines) and lines[pos][1].startswith("REGIME"):
        no, ln = lines[pos]
        try:
            regime = CapacityRegime(ln.split()[1])
        except (IndexError, ValueError):
            raise ParseError(f"bad regime line {ln!r}", no, source) from None
        pos += 1

    def rows(keyword, width, label):
        count = section(keyword)
        data = []
        for i in range(count):
            no, vals = take(width, label)
            if vals[0] != i:
                raise ParseError(f"{label}: expected id {i}, got {vals[0]}", no, source)
            data.append((no, vals))
        return data

    vn = rows("VNODES", 2, "virtual node")
    ve = rows("VEDGES", 4, "virtual edge")
    sn = rows("SNODES", 3, "substrate node")
    se = rows("SEDGES", 5, "substrate edge")
    if pos != len(lines):
        raise ParseError("trailing content after SEDGES", lines[pos][0], source)

    def check_nonneg(data, col, label, minimum):
        for no, vals in data:
            if vals[col] < minimum:
                raise ParseError(f"{label} must be >= {minimum}, got {vals[col]}", no, source)

    check_nonneg(vn, 1, "virtual node demand", 1)
    check_nonneg(ve, 3, "virtual edge demand", 1)
    check_nonneg(sn, 1, "substrate node capacity", 0)
    check_nonneg(sn, 2, "substrate node cost", 0)
    check_nonneg(se, 3, "substrate edge capacity", 0)
    check_nonneg(se, 4, "substrate edge cost", 0)
    try:
        virtual = Graph.from_edges(len(vn), [v[1:3] for _, v in ve])
        substrate = Graph.from_edges(len(sn), [v[1:3] for _, v in se])
    except GraphError as exc:
        raise ParseError(str(exc), None, source) from None
    return Instance(
        virtual, substrate,
        [v[1] for _, v in vn], [v[3] for _, v in ve],
        [v[1] for _, v in sn], [v[3] for _, v in se],
        [v[2] for _, v in sn], [v[4] for _, v in se],
        regime, name,
    )


def _is_int(tok: str) -> bool:
    try:
        int(tok)
        return True
    except ValueError:
        return False


def store(inst: Instance, path: str | os.PathLike) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps(inst))


def load(path: str | os.PathLike) -> Instance:
    with open(path) as fh:
        return loads(fh.read(), str(path))


# ---------------------------------------------------------------- mapping files


def dumps_mapping(inst: Instance, m: Mapping) -> str:
    out = io.StringIO()
    for vu in sorted(m.node_place):
        out.write(f"PLACE {vu} {m.node_place[vu]}\n")
    for ve in sorted(m.edge_route):
        start = m.node_place[inst.virtual.s(ve)]
        nodes = route_to_nodes(inst.substrate, start, m.edge_route[ve])
        out.write("ROUTE " + " ".join(str(x) for x in [ve, *nodes]) + "\n")
    return out.getvalue()


def loads_mapping(inst: Instance, text: str, source: str | None = None) -> Mapping:
    m = Mapping()
    for no, raw in enumerate(text.split("\n"), start=1):
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        parts = ln.split()
        try:
            nums = [int(p) for p in parts[1:]]
        except ValueError:
            raise ParseError(f"non-integer field in {ln!r}", no, source) from None
        if parts[0] == "PLACE" and len(nums) == 2:
            m.node_place[nums[0]] = nums[1]
        elif parts[0] == "ROUTE" and len(nums) >= 2:
            ve, nodes = nums[0], nums[1:]
            if any(not 0 <= x < inst.n_s for x in nodes):
                raise ParseError(f"unknown substrate node in route of edge {ve}", no, source)
            try:
                m.edge_route[ve] = nodes_to_route(inst.substrate, nodes)
            except StructurallyInvalidMapping as exc:
                raise ParseError(str(exc), no, source) from None
        else:
            raise ParseError(f"unrecognised mapping line {ln!r}", no, source)
    return m


def store_mapping(inst: Instance, m: Mapping, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_mapping(inst, m))


def load_mapping(inst: Instance, path) -> Mapping:
    with open(path) as fh:
        return loads_mapping(inst, fh.read(), str(path))
