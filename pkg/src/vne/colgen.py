"""Column generation for the Virtual Partition Formulation.

The restricted master selects one sub-mapping per virtual part and routes
cut edges with flow variables. Pricing a part is itself a VNE problem,
solved exactly with the flow formulation or heuristically with the greedy
embedder. Dual conventions follow :mod:`vne.mip`.
"""
from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .flow import FWD, REV, build_ff, extract_mapping, extract_route
from .graph import Direction, OrientedEdgeRef
from .greedy import NoSolutionFound, greedy_multi
from .instance import Instance, Mapping, mapping_cost, validate
from .mip import EQ, GE, LE, TOL, Model, SolveOutcome, Status, solve_lp, solve_mip
from .partition import Partition, SubgraphView, cut_edges, expand_substrate_parts, partition_balanced_connected

RC_TOL = 1e-6


class NoNegativeColumn(Exception):
    pass


@dataclass
class Column:
    part: int
    mapping: Mapping
    cost: float
    footprint: dict[Hashable, float]
    reduced_cost: float = math.nan   # as reported by the pricer that produced it
    source: str = ""
    artificial: bool = False


# ---------------------------------------------------------------- footprints


class PartitionData:
    """Virtual partition with the derived sets the master and pricers need."""

    def __init__(self, inst: Instance, partition: Partition):
        v = inst.virtual
        if len(partition.part_of) != v.n:
            raise ValueError("partition does not cover the virtual node set")
        self.partition = partition
        self.parts = partition.parts()
        self.cut = cut_edges(v, partition)
        self.part_edges = [v.induced_edges(p) for p in self.parts]
        self.cut_from = {vu: [] for vu in range(v.n)}  # cut edges with s(e) = vu
        self.cut_to = {vu: [] for vu in range(v.n)}    # cut edges with t(e) = vu
        for ve in self.cut:
            self.cut_from[v.s(ve)].append(ve)
            self.cut_to[v.t(ve)].append(ve)

    @property
    def k(self) -> int:
        return len(self.parts)


def column_footprint(inst: Instance, pd: PartitionData, part: int, m: Mapping) -> dict[Hashable, float]:
    """Master coefficients of the sub-mapping ``m`` of part ``part``."""
    fp: dict[Hashable, float] = {("conv", part): 1.0}

    def add(key, val):
        fp[key] = fp.get(key, 0.0) + val

    for vu in pd.parts[part]:
        u = m.node_place[vu]
        d = float(inst.node_demand[vu])
        add(("one", u), 1.0)
        add(("ncap", u), d)
        for ve in pd.cut_from[vu]:
            add(("flow", ve, u), 1.0)
            add(("dep", ve, u), -1.0)
        for ve in pd.cut_to[vu]:
            add(("flow", ve, u), -1.0)
            add(("arr", ve, u), -1.0)
    for ve in pd.part_edges[part]:
        d = float(inst.edge_demand[ve])
        for a in m.edge_route[ve]:
            add(("ecap", a.edge), d)
    return {k: v for k, v in fp.items() if v != 0.0}


# ---------------------------------------------------------------- master


@dataclass
class DualVector:
    """Row duals of the master, addressable by family."""

    keys: list
    values: np.ndarray
    index: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {k: i for i, k in enumerate(self.keys)}

    def get(self, key) -> float:
        i = self.index.get(key)
        return 0.0 if i is None else float(self.values[i])

    def theta(self, i):
        return self.get(("conv", i))

    def alpha(self, ve, u):
        return self.get(("flow", ve, u))

    def phi(self, u):
        return self.get(("one", u))

    def beta_node(self, u):
        return self.get(("ncap", u))

    def beta_edge(self, e):
        return self.get(("ecap", e))

    def gamma(self, ve, u, end="dep"):
        return self.get((end, ve, u))

    @classmethod
    def zeros(cls, keys) -> "DualVector":
        return cls(list(keys), np.zeros(len(keys)))

    def dot(self, footprint: dict) -> float:
        return sum(self.get(k) * v for k, v in footprint.items())


def smooth_duals(prev: DualVector, current: DualVector, sigma: float = 0.9) -> DualVector:
    """Element-wise ``sigma * prev + (1 - sigma) * current``."""
    if prev.keys != current.keys:
        raise ValueError("dual vectors are over different rows")
    if not 0.0 <= sigma <= 1.0:
        raise ValueError("sigma must lie in [0, 1]")
    return DualVector(current.keys, sigma * prev.values + (1.0 - sigma) * current.values, current.index)


class Master:
    """Restricted master LP/MIP built incrementally from columns."""

    def __init__(self, inst: Instance, pd: PartitionData, artificial: bool = True):
        self.inst, self.pd = inst, pd
        s = inst.substrate
        model = Model(name="RMP")
        self.model = model
        self.columns: list[Column] = []
        self.col_var: list[int] = []
        self.keys_seen: list[set] = [set() for _ in range(pd.k)]
        self.y: dict[tuple[int, int, int], int] = {}
        hosts = [u for u in range(s.n) if inst.node_capacity[u] > 0]
        self.hosts = hosts
        for ve in pd.cut:
            c = float(inst.edge_demand[ve])
            for e in range(s.m):
                w = c * float(inst.edge_cost[e])
                self.y[ve, e, FWD] = model.add_var(0.0, 1.0, w, False, f"yp_{ve}_{e}")
                self.y[ve, e, REV] = model.add_var(0.0, 1.0, w, False, f"ym_{ve}_{e}")
        for i in range(pd.k):
            model.add_row(("conv", i), GE, 1.0)
        for ve in pd.cut:
            for u in range(s.n):
                cols, vals = [], []
                for a in s.out_arcs(u):
                    cols.append(self.y[ve, a.edge, int(a.direction)])
                    vals.append(-1.0)
                for a in s.in_arcs(u):
                    cols.append(self.y[ve, a.edge, int(a.direction)])
                    vals.append(1.0)
                model.add_row(("flow", ve, u), EQ, 0.0, cols, vals)
        for u in hosts:
            model.add_row(("one", u), LE, 1.0)
            model.add_row(("ncap", u), LE, float(inst.node_capacity[u]))
        for e in range(s.m):
            cols, vals = [], []
            for ve in pd.cut:
                d = float(inst.edge_demand[ve])
                cols += [self.y[ve, e, FWD], self.y[ve, e, REV]]
                vals += [d, d]
            model.add_row(("ecap", e), LE, float(inst.edge_capacity[e]), cols, vals)
        for ve in pd.cut:
            for u in hosts:
                outs = [self.y[ve, a.edge, int(a.direction)] for a in s.out_arcs(u)]
                ins = [self.y[ve, a.edge, int(a.direction)] for a in s.in_arcs(u)]
                model.add_row(("dep", ve, u), GE, 0.0, outs, [1.0] * len(outs))
                model.add_row(("arr", ve, u), GE, 0.0, ins, [1.0] * len(ins))
        self.big_m = float(inst.cost_bound() + 1)
        if artificial:
            for i in range(pd.k):
                self.add_column(Column(i, Mapping(), self.big_m, {("conv", i): 1.0}, source="artificial", artificial=True))

    @property
    def row_keys(self) -> list:
        return self.model.row_keys

    def pool_size(self) -> int:
        return sum(1 for c in self.columns if not c.artificial)

    def has_column(self, col: Column) -> bool:
        return col.mapping.key() in self.keys_seen[col.part]

    def add_column(self, col: Column) -> int | None:
        """Add ``col`` unless an identical sub-mapping is already pooled."""
        key = col.mapping.key()
        if not col.artificial:
            if key in self.keys_seen[col.part]:
                return None
            self.keys_seen[col.part].add(key)
        j = self.model.add_var(0.0, math.inf, col.cost, False, f"lam_{col.part}_{len(self.columns)}")
        for rk, val in col.footprint.items():
            r = self.model.row_index.get(rk)
            if r is None:
                raise KeyError(f"column footprint row {rk!r} is not in the master")
            self.model.add_terms(r, [j], [val])
        self.columns.append(col)
        self.col_var.append(j)
        return j

    def solve_lp(self) -> tuple[SolveOutcome, DualVector | None]:
        out = solve_lp(self.model)
        if not out.status.has_solution:
            return out, None
        return out, DualVector(self.model.row_keys, out.duals, self.model.row_index)

    def solve_mip(self, time_limit: float | None = None) -> SolveOutcome:
        saved = list(self.model.integer)
        self.model.integer = [True] * self.model.num_vars
        # artificial columns are not allowed in integer solutions
        saved_ub = list(self.model.ub)
        for col, j in zip(self.columns, self.col_var):
            if col.artificial:
                self.model.ub[j] = 0.0
        try:
            return solve_mip(self.model, time_limit)
        finally:
            self.model.integer = saved
            self.model.ub = saved_ub

    def reduced_cost_from_matrix(self, j: int, duals: DualVector) -> float:
        """``c_j - duals . A_j`` read back from the assembled master matrix."""
        col = self.model.column(j)
        return self.model.obj[j] - sum(duals.get(k) * v for k, v in col.items())

    def y_reduced_costs(self, duals: DualVector) -> np.ndarray:
        if not self.y:
            return np.zeros(0)
        a = self.model.matrix().tocsc()
        idx = np.array(sorted(self.y.values()))
        c = np.asarray(self.model.obj)[idx]
        return c - a[:, idx].T @ duals.values

    def artificial_weight(self, x: np.ndarray) -> float:
        return float(sum(x[j] for col, j in zip(self.columns, self.col_var) if col.artificial))

    def selected(self, x: np.ndarray, tol: float = 0.5) -> list[Column]:
        return [col for col, j in zip(self.columns, self.col_var) if not col.artificial and x[j] > tol]

    def assemble(self, x: np.ndarray) -> Mapping:
        """Full mapping from an integer master solution."""
        pd, s, v = self.pd, self.inst.substrate, self.inst.virtual
        chosen: dict[int, Column] = {}
        for col in self.selected(x):
            if col.part not in chosen or col.cost < chosen[col.part].cost:
                chosen[col.part] = col
        if len(chosen) != pd.k:
            raise ValueError("integer master solution does not cover every part")
        m = Mapping()
        for i in range(pd.k):
            m.node_place.update(chosen[i].mapping.node_place)
            m.edge_route.update(chosen[i].mapping.edge_route)
        for ve in pd.cut:
            arcs = [OrientedEdgeRef(e, Direction(d)) for (ce, e, d), j in self.y.items() if ce == ve and x[j] > 0.5]
            m.edge_route[ve] = extract_route(s, arcs, m.node_place[v.s(ve)], m.node_place[v.t(ve)])
        m.edge_route = {ve: m.edge_route[ve] for ve in sorted(m.edge_route)}
        return m


def build_master(inst: Instance, partition: Partition, pool: Iterable[tuple[int, Mapping]] = (), artificial: bool = False) -> Master:
    """Master over ``pool`` given as ``(part index, sub-mapping)`` pairs."""
    pd = PartitionData(inst, partition)
    master = Master(inst, pd, artificial=artificial)
    for i, sub in pool:
        scope = pd.parts[i]
        master.add_column(Column(i, sub, float(mapping_cost(inst, sub, scope)), column_footprint(inst, pd, i, sub), source="given"))
    return master


# ---------------------------------------------------------------- pricing


def pricing_costs(inst: Instance, pd: PartitionData, part: int, duals: DualVector) -> tuple[np.ndarray, np.ndarray, float]:
    """Reduced-cost coefficients ``(x_cost, y_cost, constant)`` for part ``part``.

    Every coefficient is ``cost - duals . footprint`` of the corresponding
    placement or arc, so FF's objective equals the column's reduced cost.
    """
    s = inst.substrate
    n_r, n_s = inst.n_r, inst.n_s
    x_cost = np.zeros((n_r, n_s))
    y_cost = np.zeros((inst.virtual.m, s.m))
    beta_e = np.array([duals.beta_edge(e) for e in range(s.m)])
    for vu in pd.parts[part]:
        d = float(inst.node_demand[vu])
        for u in range(n_s):
            val = d * float(inst.node_cost[u]) - duals.phi(u) - d * duals.beta_node(u)
            for ve in pd.cut_from[vu]:
                val -= duals.alpha(ve, u) - duals.gamma(ve, u, "dep")
            for ve in pd.cut_to[vu]:
                val -= -duals.alpha(ve, u) - duals.gamma(ve, u, "arr")
            x_cost[vu, u] = val
    for ve in pd.part_edges[part]:
        y_cost[ve, :] = float(inst.edge_demand[ve]) * (inst.edge_cost.astype(float) - beta_e)
    return x_cost, y_cost, -duals.theta(part)


@dataclass
class PricingResult:
    part: int
    column: Column | None   # best column found (any sign); None if none exists
    value: float            # its reduced cost (inf if none)
    bound: float            # proven lower bound on the part's minimum reduced cost
    exact: bool             # value/bound certify the full-substrate optimum
    status: str = ""


def price_exact(
    inst: Instance, pd: PartitionData, part: int, duals: DualVector,
    view: SubgraphView | Iterable[int] | None = None, time_limit: float | None = None,
) -> PricingResult:
    """Minimum reduced-cost sub-mapping by solving FF with reduced-cost objective."""
    x_cost, y_cost, const = pricing_costs(inst, pd, part, duals)
    members = None
    if view is not None:
        members = view.members if isinstance(view, SubgraphView) else view
    model, h = build_ff(inst, relaxed=False, x_cost=x_cost, y_cost=y_cost, constant=const,
                        view=members, virtual_nodes=pd.parts[part], name=f"PP{part}")
    out = solve_mip(model, time_limit)
    full = view is None
    if out.status == Status.INFEASIBLE:
        return PricingResult(part, None, math.inf, math.inf, full, "infeasible")
    if not out.status.has_solution:
        return PricingResult(part, None, math.inf, out.bound, False, out.status.value)
    m = extract_mapping(inst, h, out)
    scope = pd.parts[part]
    col = Column(part, m, float(mapping_cost(inst, m, scope)), column_footprint(inst, pd, part, m),
                 reduced_cost=out.objective, source="exact" if full else "exact_sub")
    bound = out.bound if math.isfinite(out.bound) else out.objective
    return PricingResult(part, col, out.objective, bound, full and out.status == Status.OPTIMAL, out.status.value)


def price_greedy(
    inst: Instance, pd: PartitionData, part: int, duals: DualVector,
    view: SubgraphView | Iterable[int] | None = None, restarts: int = 100, seed=0,
) -> PricingResult:
    """Best-of-``restarts`` greedy sub-mapping scored by reduced cost."""
    x_cost, _, _ = pricing_costs(inst, pd, part, duals)
    scope = pd.parts[part]
    members = None
    if view is not None:
        members = view.members if isinstance(view, SubgraphView) else view

    def rc(m):
        return mapping_cost(inst, m, scope) - duals.dot(column_footprint(inst, pd, part, m))

    m = greedy_multi(inst, restarts, seed, score=rc, cost_override=x_cost, virtual_nodes=scope, view=members)
    if isinstance(m, NoSolutionFound):
        return PricingResult(part, None, math.inf, -math.inf, False, "no_solution")
    val = rc(m)
    col = Column(part, m, float(mapping_cost(inst, m, scope)), column_footprint(inst, pd, part, m),
                 reduced_cost=val, source="greedy")
    return PricingResult(part, col, val, -math.inf, False, "heuristic")


def lagrangian_bound(v_rmp: float, pricer_optima: Sequence[float]) -> float:
    """``v_rmp`` plus the full-substrate pricing optima (valid at the master's own duals)."""
    return float(v_rmp) + float(sum(pricer_optima))


def lagrangian_value(master: Master, duals: DualVector, part_minima: Sequence[float]) -> float:
    """Lagrangian dual function at an arbitrary sign-feasible dual vector.

    ``part_minima`` are lower bounds on each part's minimum reduced cost
    (convexity dual included). Reduces to :func:`lagrangian_bound` at the
    master's optimal duals.
    """
    rhs = np.asarray(master.model.rhs)
    conv = np.array([isinstance(k, tuple) and k[0] == "conv" for k in master.row_keys])
    val = float(np.dot(duals.values[~conv], rhs[~conv]))
    for i, pm in enumerate(part_minima):
        val += pm + duals.theta(i)
    rc_y = master.y_reduced_costs(duals)
    val += float(np.minimum(rc_y, 0.0).sum())  # y in [0, 1]
    return val


# ---------------------------------------------------------------- schedule


@dataclass
class CGConfig:
    k_r: int | None = None
    partition: Partition | None = None
    greedy_columns: int = 800
    sub_columns: int = 2500
    sub_time: float = 1200.0
    time_limit: float = 3600.0
    restarts: int = 100
    sigma: float = 0.9
    seed: int = 0
    threads: int = 1
    pricer_time_limit: float | None = None
    max_iterations: int = 10_000
    phases: tuple = ("greedy", "exact_sub", "exact")
    log_path: str | None = None


@dataclass
class IterationLog:
    iteration: int
    phase: str
    v_rmp: float
    lgb: float
    columns_added: int
    pool_size: int
    wall_seconds: float


@dataclass
class AuditEntry:
    part: int
    reported: float
    recomputed: float

    @property
    def error(self) -> float:
        return abs(self.reported - self.recomputed)


@dataclass
class CGResult:
    status: str                 # converged | budget | infeasible | infeasible_for_pi
    lgb: float
    v_rmp: float
    partition: Partition
    columns: int
    iterations: int
    seconds: float
    phase_seconds: dict
    log: list[IterationLog]
    audit: list[AuditEntry]
    lgb_history: list[float]
    v_rmp_history: list[float]
    master: Master | None = None

    @property
    def gap(self) -> float:
        """Relative gap between the master value and the Lagrangian bound."""
        if not (math.isfinite(self.v_rmp) and math.isfinite(self.lgb)) or self.v_rmp == 0:
            return 0.0 if self.v_rmp == self.lgb else math.inf
        return (self.v_rmp - self.lgb) / abs(self.v_rmp)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def value(self) -> float:
        """Relaxation value for this partition: inf when it has no feasible point."""
        if self.status in ("infeasible", "infeasible_for_pi"):
            return math.inf
        return self.v_rmp


def sub_pricer_views(inst: Instance, pd: PartitionData, seed: int = 0) -> list[SubgraphView]:
    """Substrate split into parts of about the average virtual part size, each grown to three times that."""
    s = inst.substrate
    avg = inst.n_r / pd.k
    k_s = int(min(s.n, max(1, round(s.n / avg))))
    ps = partition_balanced_connected(s, k_s, seed)
    return expand_substrate_parts(s, ps, int(math.ceil(3 * avg)))


def run_lower_bound(inst: Instance, config: CGConfig | None = None) -> CGResult:
    """Three-phase column generation: greedy sub-pricers, exact sub-pricers, exact pricers."""
    cfg = config or CGConfig()
    t0 = time.perf_counter()
    if cfg.partition is not None:
        partition = cfg.partition
    else:
        k = cfg.k_r if cfg.k_r is not None else max(1, inst.n_r // 10)
        partition = partition_balanced_connected(inst.virtual, k, cfg.seed)
    pd = PartitionData(inst, partition)
    master = Master(inst, pd)
    views = sub_pricer_views(inst, pd, cfg.seed) if any(p != "exact" for p in cfg.phases) else []

    log: list[IterationLog] = []
    audit: list[AuditEntry] = []
    lgb_hist: list[float] = []
    vr_hist: list[float] = []
    phase_seconds = {p: 0.0 for p in cfg.phases}
    lgb = -math.inf
    v_rmp = math.inf
    it = 0
    status = "budget"
    out = None
    smoothed: DualVector | None = None
    pool = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None

    def run_tasks(fn, tasks):
        if pool is None:
            return [fn(t) for t in tasks]
        return list(pool.map(fn, tasks))

    def add_results(results, duals) -> int:
        added = 0
        for r in results:  # deterministic task order
            col = r.column
            if col is None or r.value >= -RC_TOL or master.has_column(col):
                continue
            j = master.add_column(col)
            audit.append(AuditEntry(col.part, col.reduced_cost, master.reduced_cost_from_matrix(j, duals)))
            added += 1
        return added

    def elapsed():
        return time.perf_counter() - t0

    def _result():
        return CGResult(status, lgb, v_rmp, partition, master.pool_size(), it, elapsed(), phase_seconds,
                        log, audit, lgb_hist, vr_hist, master)

    try:
        for phase in cfg.phases:
            ts = time.perf_counter()
            rounds = 0
            while it < cfg.max_iterations and elapsed() < cfg.time_limit:
                if phase == "greedy" and master.pool_size() >= cfg.greedy_columns:
                    break
                if phase == "exact_sub" and (master.pool_size() >= cfg.sub_columns or time.perf_counter() - ts >= cfg.sub_time):
                    break
                out, duals = master.solve_lp()
                if duals is None:  # pragma: no cover - artificial columns keep the master feasible
                    status = "infeasible"
                    return _result()
                if out.objective > v_rmp + 1e-7 * max(1.0, abs(v_rmp)):
                    raise AssertionError(f"master value increased: {v_rmp} -> {out.objective}")
                v_rmp = out.objective
                vr_hist.append(v_rmp)
                smoothed = duals if smoothed is None else smooth_duals(smoothed, duals, cfg.sigma)
                it += 1
                rounds += 1

                def tasks_for(dv):
                    if phase == "exact":
                        return [(i, None, dv) for i in range(pd.k)]
                    return [(i, views[(rounds + i) % len(views)], dv) for i in range(pd.k)]

                def price(task):
                    i, view, dv = task
                    if phase == "greedy":
                        return price_greedy(inst, pd, i, dv, view, cfg.restarts, seed=(cfg.seed, it, i))
                    return price_exact(inst, pd, i, dv, view, cfg.pricer_time_limit)

                results = run_tasks(price, tasks_for(smoothed))
                used = smoothed
                added = add_results(results, smoothed)
                if phase == "exact":
                    lgb = max(lgb, _lgb_from(master, smoothed, results, pd))
                if added == 0 and smoothed is not duals:
                    # mispricing: retry with the master's own duals
                    results = run_tasks(price, tasks_for(duals))
                    used = duals
                    added = add_results(results, duals)
                    if phase == "exact":
                        lgb = max(lgb, _lgb_from(master, duals, results, pd))
                    smoothed = duals
                lgb_hist.append(lgb)
                log.append(IterationLog(it, phase, v_rmp, lgb, added, master.pool_size(), elapsed()))
                if phase == "exact" and any(r.status == "infeasible" for r in results):
                    status = "infeasible"
                    return _result()
                if added == 0:
                    if phase == "exact" and used is duals and all(r.exact for r in results):
                        status = "converged"
                    break
            phase_seconds[phase] += time.perf_counter() - ts
            if status != "budget":
                break
        if status == "converged" and master.artificial_weight(out.x) > 1e-9:
            status = "infeasible_for_pi"
        return _result()
    finally:
        if pool is not None:
            pool.shutdown()
        if cfg.log_path:
            write_run_log(log, cfg.log_path)


def _lgb_from(master: Master, duals: DualVector, results: list[PricingResult], pd: PartitionData) -> float:
    if len(results) != pd.k:
        return -math.inf
    minima = [r.bound for r in sorted(results, key=lambda r: r.part)]
    if any(not math.isfinite(b) for b in minima):
        return math.inf if any(b == math.inf for b in minima) else -math.inf
    return lagrangian_value(master, duals, minima)


def write_run_log(log: Sequence[IterationLog], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "phase", "v_rmp", "lgb", "columns_added", "pool_size", "wall_seconds"])
        for r in log:
            w.writerow([r.iteration, r.phase, f"{r.v_rmp:.9g}", f"{r.lgb:.9g}", r.columns_added, r.pool_size, f"{r.wall_seconds:.3f}"])
