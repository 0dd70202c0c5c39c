"""Backend-neutral LP/MIP model building, solved with HiGHS through scipy.

Dual convention (minimisation): the dual of a row is d(objective)/d(rhs),
so ``>=`` rows have duals >= 0, ``<=`` rows duals <= 0, ``=`` rows free.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

TOL = 1e-6


class BackendFailure(RuntimeError):
    pass


class Status(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"          # time-limited with incumbent
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NO_SOLUTION = "no_solution"    # time-limited without incumbent

    @property
    def has_solution(self) -> bool:
        return self in (Status.OPTIMAL, Status.FEASIBLE)


LE, EQ, GE = "<=", "=", ">="


@dataclass
class SolveOutcome:
    status: Status
    objective: float = math.nan
    x: np.ndarray | None = None
    duals: np.ndarray | None = None          # per row, LP only
    reduced_costs: np.ndarray | None = None  # per variable, LP only
    dual_objective: float = math.nan         # LP only
    bound: float = math.nan                  # MIP only
    message: str = ""

    def dual(self, model: "Model", key: Hashable) -> float:
        return float(self.duals[model.row_index[key]])


@dataclass
class Model:
    """Minimisation model with named variables and keyed rows."""

    name: str = "model"
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    obj: list[float] = field(default_factory=list)
    integer: list[bool] = field(default_factory=list)
    var_names: list[str] = field(default_factory=list)
    obj_constant: float = 0.0
    _rows: list[int] = field(default_factory=list)
    _cols: list[int] = field(default_factory=list)
    _vals: list[float] = field(default_factory=list)
    sense: list[str] = field(default_factory=list)
    rhs: list[float] = field(default_factory=list)
    row_keys: list[Hashable] = field(default_factory=list)
    row_index: dict = field(default_factory=dict)

    @property
    def num_vars(self) -> int:
        return len(self.lb)

    @property
    def num_rows(self) -> int:
        return len(self.rhs)

    def add_var(self, lb: float = 0.0, ub: float = math.inf, obj: float = 0.0, integer: bool = False, name: str = "") -> int:
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.obj.append(float(obj))
        self.integer.append(bool(integer))
        self.var_names.append(name or f"v{len(self.lb) - 1}")
        return len(self.lb) - 1

    def add_row(self, key: Hashable, sense: str, rhs: float, cols: Sequence[int] = (), vals: Sequence[float] = ()) -> int:
        if key in self.row_index:
            raise ValueError(f"duplicate row key {key!r}")
        if sense not in (LE, EQ, GE):
            raise ValueError(f"bad sense {sense!r}")
        r = len(self.rhs)
        self.row_index[key] = r
        self.row_keys.append(key)
        self.sense.append(sense)
        self.rhs.append(float(rhs))
        self.add_terms(r, cols, vals)
        return r

    def add_terms(self, row: int, cols: Sequence[int], vals: Sequence[float]) -> None:
        cols = list(cols)
        vals = list(vals)
        if len(cols) != len(vals):
            raise ValueError("cols/vals length mismatch")
        n = self.num_vars
        for c in cols:
            if not 0 <= c < n:
                raise ValueError(f"row {row} references unknown variable {c}")
        self._rows.extend([row] * len(cols))
        self._cols.extend(cols)
        self._vals.extend(float(v) for v in vals)

    def matrix(self) -> sp.csr_matrix:
        a = sp.coo_matrix((self._vals, (self._rows, self._cols)), shape=(self.num_rows, self.num_vars))
        return a.tocsr()  # duplicates summed

    def column(self, j: int) -> dict[Hashable, float]:
        """Nonzero coefficients of variable ``j`` keyed by row key."""
        col = self.matrix().getcol(j).tocoo()
        return {self.row_keys[r]: float(v) for r, v in zip(col.row, col.data) if v != 0.0}

    # ------------------------------------------------------------ export

    def to_lp(self) -> str:
        """CPLEX LP text, for debugging."""
        out = io.StringIO()
        out.write(f"\\ {self.name}\nMinimize\n obj:")
        for j, c in enumerate(self.obj):
            if c:
                out.write(f" {c:+.12g} {self.var_names[j]}")
        out.write("\nSubject To\n")
        a = self.matrix()
        for r in range(self.num_rows):
            row = a.getrow(r).tocoo()
            terms = " ".join(f"{v:+.12g} {self.var_names[c]}" for c, v in zip(row.col, row.data))
            op = {LE: "<=", GE: ">=", EQ: "="}[self.sense[r]]
            out.write(f" r{r}: {terms or '0 ' + self.var_names[0]} {op} {self.rhs[r]:.12g}\n")
        out.write("Bounds\n")
        for j in range(self.num_vars):
            lo = "-inf" if math.isinf(self.lb[j]) else f"{self.lb[j]:.12g}"
            hi = "+inf" if math.isinf(self.ub[j]) else f"{self.ub[j]:.12g}"
            out.write(f" {lo} <= {self.var_names[j]} <= {hi}\n")
        ints = [self.var_names[j] for j in range(self.num_vars) if self.integer[j]]
        if ints:
            out.write("General\n " + " ".join(ints) + "\n")
        out.write("End\n")
        return out.getvalue()


def _split(model: Model):
    a = model.matrix()
    sense = np.array(model.sense, dtype=object)
    rhs = np.array(model.rhs, dtype=float)
    le = np.flatnonzero(sense == LE)
    ge = np.flatnonzero(sense == GE)
    eq = np.flatnonzero(sense == EQ)
    ub_rows = np.concatenate([le, ge])
    flip = np.concatenate([np.ones(len(le)), -np.ones(len(ge))])
    a_ub = sp.diags(flip) @ a[ub_rows] if len(ub_rows) else None
    b_ub = flip * rhs[ub_rows] if len(ub_rows) else None
    a_eq = a[eq] if len(eq) else None
    b_eq = rhs[eq] if len(eq) else None
    return a, ub_rows, flip, eq, a_ub, b_ub, a_eq, b_eq


def solve_lp(model: Model) -> SolveOutcome:
    """Solve the continuous relaxation (integrality ignored) and return duals."""
    c = np.array(model.obj, dtype=float)
    if model.num_vars == 0:
        return _solve_empty(model)
    a, ub_rows, flip, eq, a_ub, b_ub, a_eq, b_eq = _split(model)
    bounds = list(zip(model.lb, [None if math.isinf(u) else u for u in model.ub]))
    bounds = [(None if math.isinf(lo) else lo, hi) for lo, hi in bounds]
    try:
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    except Exception as exc:  # noqa: BLE001
        raise BackendFailure(f"HiGHS LP failed on {model.name}: {exc}") from exc
    if res.status == 2:
        return SolveOutcome(Status.INFEASIBLE, message=res.message)
    if res.status == 3:
        return SolveOutcome(Status.UNBOUNDED, message=res.message)
    if res.status != 0:
        raise BackendFailure(f"HiGHS LP status {res.status} on {model.name}: {res.message}")
    duals = np.zeros(model.num_rows)
    if len(ub_rows):
        duals[ub_rows] = flip * res.ineqlin.marginals
    if len(eq):
        duals[eq] = res.eqlin.marginals
    rc = c - a.T @ duals
    lb = np.array(model.lb)
    ubv = np.array(model.ub)
    dual_obj = float(np.dot(duals, model.rhs))
    lo_m = np.asarray(res.lower.marginals)
    hi_m = np.asarray(res.upper.marginals)
    fin_lo = np.isfinite(lb)
    fin_hi = np.isfinite(ubv)
    dual_obj += float(np.dot(lo_m[fin_lo], lb[fin_lo])) + float(np.dot(hi_m[fin_hi], ubv[fin_hi]))
    return SolveOutcome(
        Status.OPTIMAL,
        objective=float(res.fun) + model.obj_constant,
        x=np.asarray(res.x),
        duals=duals,
        reduced_costs=rc,
        dual_objective=dual_obj + model.obj_constant,
        message=res.message,
    )


def solve_mip(model: Model, time_limit: float | None = None) -> SolveOutcome:
    """Solve with integrality. ``bound`` is the best proven lower bound."""
    if model.num_vars == 0:
        return _solve_empty(model)
    c = np.array(model.obj, dtype=float)
    a = model.matrix()
    sense = model.sense
    rhs = np.array(model.rhs, dtype=float)
    lo = np.where([s == LE for s in sense], -np.inf, rhs)
    hi = np.where([s == GE for s in sense], np.inf, rhs)
    options = {"disp": False}
    if time_limit is not None:
        options["time_limit"] = float(max(time_limit, 0.01))

    def run(opts):
        try:
            return milp(
                c,
                constraints=LinearConstraint(a, lo, hi) if model.num_rows else None,
                integrality=np.array(model.integer, dtype=int),
                bounds=Bounds(np.array(model.lb), np.array(model.ub)),
                options=opts,
            )
        except Exception as exc:  # noqa: BLE001
            raise BackendFailure(f"HiGHS MIP failed on {model.name}: {exc}") from exc

    res = run(options)
    # HiGHS presolve occasionally reports an infeasible point as optimal; re-solve without it
    if res.status in (0, 1) and res.x is not None and check_feasible(model, np.asarray(res.x), 1e-5):
        res = run({**options, "presolve": False})
    bound = getattr(res, "mip_dual_bound", None)
    bound = math.nan if bound is None else float(bound) + model.obj_constant
    if res.status == 0:
        obj = float(res.fun) + model.obj_constant
        return SolveOutcome(Status.OPTIMAL, objective=obj, x=np.asarray(res.x),
                            bound=obj if math.isnan(bound) else bound, message=res.message)
    if res.status == 1:
        if res.x is not None:
            return SolveOutcome(Status.FEASIBLE, objective=float(res.fun) + model.obj_constant,
                                x=np.asarray(res.x), bound=bound, message=res.message)
        return SolveOutcome(Status.NO_SOLUTION, bound=bound, message=res.message)
    if res.status == 2:
        return SolveOutcome(Status.INFEASIBLE, message=res.message)
    if res.status == 3:
        return SolveOutcome(Status.UNBOUNDED, message=res.message)
    raise BackendFailure(f"HiGHS MIP status {res.status} on {model.name}: {res.message}")


def _solve_empty(model: Model) -> SolveOutcome:
    ok = all(
        (s == LE and 0 <= r + TOL) or (s == GE and 0 >= r - TOL) or (s == EQ and abs(r) <= TOL)
        for s, r in zip(model.sense, model.rhs)
    )
    if not ok:
        return SolveOutcome(Status.INFEASIBLE)
    return SolveOutcome(
        Status.OPTIMAL, objective=model.obj_constant, x=np.zeros(0),
        duals=np.zeros(model.num_rows), reduced_costs=np.zeros(0),
        dual_objective=model.obj_constant, bound=model.obj_constant,
    )


def check_feasible(model: Model, x: np.ndarray, tol: float = TOL) -> list[str]:
    """Rows, bounds or integrality violated by ``x`` (empty when feasible)."""
    bad = []
    ax = model.matrix() @ x
    for r, (s, b) in enumerate(zip(model.sense, model.rhs)):
        if (s == LE and ax[r] > b + tol) or (s == GE and ax[r] < b - tol) or (s == EQ and abs(ax[r] - b) > tol):
            bad.append(f"row {model.row_keys[r]!r}: {ax[r]:.9g} {s} {b:.9g}")
    for j in range(model.num_vars):
        if x[j] < model.lb[j] - tol or x[j] > model.ub[j] + tol:
            bad.append(f"var {model.var_names[j]} = {x[j]:.9g} outside bounds")
        if model.integer[j] and abs(x[j] - round(x[j])) > tol:
            bad.append(f"var {model.var_names[j]} = {x[j]:.9g} not integral")
    return bad
