"""Command-line front end: ``vne <subcommand> ...``.

Exit codes: 0 success, 1 infeasible or no solution, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from pathlib import Path

import networkx as nx

from . import instance as inst_mod
from .colgen import CGConfig, run_lower_bound
from .flow import extract_mapping, solve_ff
from .graph import Graph, GraphError
from .greedy import NoSolutionFound, greedy_multi
from .instance import ParseError, VNEError, mapping_cost, validate
from .oracle import TooLarge, brute_force_optimum
from .partition import load_partition
from .pbh import PbhConfig, solve_pbh

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2

REPORT_FIELDS = ["instance", "regime", "method", "value", "status", "seconds"]


class UsageError(Exception):
    pass


def _write_report(path, rows) -> None:
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(REPORT_FIELDS)
        for r in rows:
            w.writerow(r)


def _fmt(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.9g}"


# ---------------------------------------------------------------- topology files


def read_topology(path: str, fmt: str = "edgelist") -> Graph:
    """Largest connected component, relabelled 0..n-1 in sorted original-id order."""
    try:
        if fmt == "edgelist":
            g = nx.read_edgelist(path, comments="#", nodetype=str, data=False)
        elif fmt == "graphml":
            g = nx.Graph(nx.read_graphml(path))
        else:
            raise UsageError(f"--format: unknown format {fmt!r}")
    except (OSError, nx.NetworkXError, TypeError, ValueError) as exc:
        raise ParseError(f"cannot read {fmt} topology: {exc}", source=path) from exc
    g.remove_edges_from(list(nx.selfloop_edges(g)))
    if g.number_of_nodes() == 0:
        raise ParseError("topology has no nodes", source=path)
    comp = max(nx.connected_components(g), key=lambda c: (len(c), sorted(map(str, c))))
    h = g.subgraph(comp)

    def order(x):
        s = str(x)
        return (0, int(s), s) if s.lstrip("-").isdigit() else (1, 0, s)

    ids = {node: i for i, node in enumerate(sorted(h.nodes, key=order))}
    edges = sorted((min(ids[a], ids[b]), max(ids[a], ids[b])) for a, b in h.edges)
    return Graph.from_edges(len(ids), edges)


def write_topology(g: Graph, path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        for a, b in g.edges.tolist():
            fh.write(f"{a} {b}\n")


# ---------------------------------------------------------------- commands


def cmd_gen(a) -> int:
    v = read_topology(a.virtual)
    s = read_topology(a.substrate)
    name = a.name or Path(a.out).stem
    inst = inst_mod.generate(v, s, a.regime, a.seed, name=name)
    inst_mod.store(inst, a.out)
    print(f"wrote {a.out}: n_r={inst.n_r} n_s={inst.n_s} regime={inst.regime.value}")
    return EXIT_OK


def cmd_import(a) -> int:
    g = read_topology(a.input, a.format)
    write_topology(g, a.out)
    print(f"wrote {a.out}: {g.n} nodes, {g.m} edges")
    return EXIT_OK


def _finish_mapping(inst, m, a, method, status, seconds) -> int:
    if isinstance(m, NoSolutionFound) or m is None:
        print(f"{method}: no solution ({status})")
        if a.report:
            _write_report(a.report, [[inst.name, _regime(inst), method, "", status, f"{seconds:.3f}"]])
        return EXIT_INFEASIBLE
    rep = validate(inst, m)
    if not rep.ok:  # pragma: no cover - every solver validates its output
        print(f"{method}: produced an invalid mapping", file=sys.stderr)
        for v in rep.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_INFEASIBLE
    cost = mapping_cost(inst, m)
    print(f"{method}: cost {cost} ({status}, {seconds:.2f}s)")
    if a.mapping:
        inst_mod.store_mapping(inst, m, a.mapping)
    if a.report:
        _write_report(a.report, [[inst.name, _regime(inst), method, cost, status, f"{seconds:.3f}"]])
    return EXIT_OK


def _regime(inst) -> str:
    return inst.regime.value if inst.regime is not None else ""


def cmd_solve(a) -> int:
    inst = inst_mod.load(a.instance)
    partition = load_partition(a.partition, inst.n_r) if a.partition else None
    t0 = time.perf_counter()
    if a.method == "ff":
        out, _, h = solve_ff(inst, relaxed=a.relaxed, time_limit=a.time_limit)
        secs = time.perf_counter() - t0
        if a.relaxed:
            if not out.status.has_solution:
                print(f"ff-lp: {out.status.value}")
                return EXIT_INFEASIBLE
            print(f"ff-lp: bound {_fmt(out.objective)}")
            if a.report:
                _write_report(a.report, [[inst.name, _regime(inst), "ff-lp", _fmt(out.objective), out.status.value, f"{secs:.3f}"]])
            return EXIT_OK
        m = extract_mapping(inst, h, out) if out.status.has_solution else None
        return _finish_mapping(inst, m, a, "ff", out.status.value, secs)
    if a.method == "cg":
        cfg = CGConfig(k_r=a.kr, partition=partition, seed=a.seed, threads=a.threads, log_path=a.log)
        if a.time_limit is not None:
            cfg.time_limit = a.time_limit
            cfg.sub_time = a.time_limit / 3
        if a.columns is not None:
            cfg.sub_columns = a.columns
            cfg.greedy_columns = min(cfg.greedy_columns, a.columns)
        res = run_lower_bound(inst, cfg)
        secs = time.perf_counter() - t0
        print(f"cg: LGB {_fmt(res.lgb)}  v_rmp {_fmt(res.v_rmp)}  gap {res.gap:.4%}  columns {res.columns}  ({res.status}, {secs:.2f}s)")
        if a.report:
            _write_report(a.report, [[inst.name, _regime(inst), "cg", _fmt(res.lgb), res.status, f"{secs:.3f}"]])
        return EXIT_INFEASIBLE if res.status in ("infeasible", "infeasible_for_pi") else EXIT_OK
    if a.method == "pbh":
        cfg = PbhConfig(k_r=a.kr, seed=a.seed, partition=partition, pricer_kind=a.pricer)
        if a.columns is not None:
            cfg.column_target = a.columns
        if a.time_limit is not None:
            cfg.rmp_time_limit = a.time_limit
        m, rep = solve_pbh(inst, cfg)
        return _finish_mapping(inst, m, a, "pbh", rep.status, rep.wall_seconds)
    if a.method == "greedy":
        m = greedy_multi(inst, a.restarts, a.seed, threads=a.threads)
        return _finish_mapping(inst, m, a, "greedy", "heuristic", time.perf_counter() - t0)
    raise UsageError(f"unknown solve method {a.method!r}")  # pragma: no cover - argparse choices


def cmd_validate(a) -> int:
    inst = inst_mod.load(a.instance)
    try:
        m = inst_mod.load_mapping(inst, a.mapping)
        rep = validate(inst, m)
    except inst_mod.StructurallyInvalidMapping as exc:
        print(f"invalid: {exc}")
        return EXIT_INFEASIBLE
    if not rep.ok:
        print("invalid mapping:")
        for v in rep.violations:
            print(f"  {v}")
        return EXIT_INFEASIBLE
    print(f"valid: cost {mapping_cost(inst, m)}")
    return EXIT_OK


def cmd_oracle(a) -> int:
    inst = inst_mod.load(a.instance)
    try:
        res = brute_force_optimum(inst)
    except TooLarge as exc:
        raise UsageError(f"--instance: {exc}") from exc
    if not res.feasible:
        print("oracle: infeasible")
        return EXIT_INFEASIBLE
    print(f"oracle: optimum {_fmt(res.value)}")
    if a.mapping:
        inst_mod.store_mapping(inst, res.mapping, a.mapping)
    return EXIT_OK


def cmd_bench(a) -> int:
    files = sorted(p for p in Path(a.suite).iterdir() if p.is_file() and p.suffix in (".vne", ".txt"))
    if not files:
        raise UsageError(f"--suite: no instance files (*.vne) in {a.suite}")
    methods = a.methods.split(",")
    rows = []
    for path in files:
        inst = inst_mod.load(path)
        for method in methods:
            t0 = time.perf_counter()
            if method == "ff-lp":
                out, _, _ = solve_ff(inst, relaxed=True)
                val, status = out.objective, out.status.value
            elif method == "cg":
                res = run_lower_bound(inst, CGConfig(k_r=a.kr, seed=a.seed, time_limit=a.time_limit, sub_time=a.time_limit / 3))
                val, status = res.lgb, res.status
            elif method == "greedy":
                m = greedy_multi(inst, 100, a.seed)
                val, status = (math.nan, "no_solution") if isinstance(m, NoSolutionFound) else (mapping_cost(inst, m), "feasible")
            elif method == "pbh":
                m, rep = solve_pbh(inst, PbhConfig(k_r=a.kr, seed=a.seed, rmp_time_limit=a.time_limit))
                val, status = rep.cost, rep.status
            else:
                raise UsageError(f"--methods: unknown method {method!r}")
            secs = time.perf_counter() - t0
            rows.append([inst.name or path.stem, _regime(inst), method, _fmt(float(val)), status, f"{secs:.3f}"])
            print(",".join(map(str, rows[-1])), flush=True)
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_FIELDS)
        w.writerows(rows)
    return EXIT_OK


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 2 and name the flag
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vne", description="Virtual network embedding solvers.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate an instance from two topologies")
    g.add_argument("--virtual", required=True, help="virtual topology edge list")
    g.add_argument("--substrate", required=True, help="substrate topology edge list")
    g.add_argument("--regime", required=True, choices=["large", "medium", "small"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--name", default="")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    i = sub.add_parser("import", help="normalise an external topology to an edge list")
    i.add_argument("--format", required=True, choices=["edgelist", "graphml"])
    i.add_argument("--in", dest="input", required=True)
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_import)

    s = sub.add_parser("solve", help="run a solver")
    s.add_argument("method", choices=["ff", "cg", "pbh", "greedy"])
    s.add_argument("--instance", required=True)
    s.add_argument("--relaxed", action="store_true", help="ff only: solve the LP relaxation")
    s.add_argument("--kr", type=int, default=None, help="number of virtual parts")
    s.add_argument("--columns", type=int, default=None, help="column budget")
    s.add_argument("--pricer", choices=["auto", "greedy", "exact"], default="auto")
    s.add_argument("--time-limit", type=float, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--restarts", type=int, default=100, help="greedy only")
    s.add_argument("--partition", default=None, help="virtual partition file")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--report", default=None, help="append a CSV result row")
    s.add_argument("--mapping", default=None, help="write the mapping here")
    s.add_argument("--log", default=None, help="cg only: per-iteration CSV log")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="check a mapping against an instance")
    v.add_argument("--instance", required=True)
    v.add_argument("--mapping", required=True)
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle", help="brute-force optimum of a tiny instance")
    o.add_argument("--instance", required=True)
    o.add_argument("--mapping", default=None)
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="run methods over a directory of instances")
    b.add_argument("--suite", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--methods", default="ff-lp,cg,greedy,pbh")
    b.add_argument("--kr", type=int, default=None)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--time-limit", type=float, default=600.0)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    for flag in ("kr", "columns", "threads", "restarts"):
        val = getattr(a, flag, None)
        if val is not None and val < 1:
            print(f"vne: error: --{flag} must be a positive integer", file=sys.stderr)
            return EXIT_USAGE
    try:
        return a.func(a)
    except UsageError as exc:
        print(f"vne: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"vne: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"vne: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (VNEError, GraphError, ValueError) as exc:
        print(f"vne: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
