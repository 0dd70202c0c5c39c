import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vne.colgen import (
    CGConfig, DualVector, Master, PartitionData, build_master, column_footprint,
    lagrangian_bound, lagrangian_value, price_exact, price_greedy, run_lower_bound, smooth_duals,
)
from vne.fixtures import EXAMPLE1_TRIANGLES, EXAMPLE2_TRIANGLES, example1, example2, example2_columns
from vne.flow import solve_ff
from vne.instance import CapacityRegime, generate, mapping_cost, random_connected_graph
from vne.mip import Status
from vne.oracle import brute_force_optimum
from vne.partition import Partition, partition_balanced_connected


def tri():
    return Partition.from_parts(EXAMPLE1_TRIANGLES)


def zero_duals(inst, partition):
    return DualVector.zeros(Master(inst, PartitionData(inst, partition)).row_keys)


def with_theta(duals, part, value):
    vals = duals.values.copy()
    vals[duals.index[("conv", part)]] = value
    return DualVector(duals.keys, vals, duals.index)


def small_instance(seed, n_r=None, n_s=None, regime=None):
    rng = np.random.default_rng(seed)
    n_r = n_r or int(rng.integers(2, 5))
    n_s = n_s or int(rng.integers(max(n_r, 4), 8))
    regime = regime or list(CapacityRegime)[seed % 3]
    inst = generate(random_connected_graph(n_r, 1, rng), random_connected_graph(n_s, 3, rng), regime, seed)
    p = partition_balanced_connected(inst.virtual, int(rng.integers(1, n_r + 1)), seed)
    return inst, p


# ---------------------------------------------------------------- master


def test_example2_four_columns_lp_ten_integer_infeasible():
    inst = example2()
    cols = example2_columns(inst)
    for part, sub in cols.values():
        assert mapping_cost(inst, sub, EXAMPLE2_TRIANGLES[part]) == 4
    master = build_master(inst, Partition.from_parts(EXAMPLE2_TRIANGLES), cols.values())
    out, duals = master.solve_lp()
    assert out.objective == pytest.approx(10, abs=1e-6)
    assert master.solve_mip().status is Status.INFEASIBLE


def test_single_part_master_with_optimal_mapping():
    inst = example1()
    best = brute_force_optimum(inst)
    master = build_master(inst, Partition(np.zeros(6, dtype=int), 1), [(0, best.mapping)])
    out, _ = master.solve_lp()
    assert out.objective == pytest.approx(best.value)


def test_no_cut_edges_means_no_flow_rows():
    inst = example1()
    master = Master(inst, PartitionData(inst, Partition(np.zeros(6, dtype=int), 1)))
    assert not master.y
    assert not any(k[0] in ("flow", "dep", "arr") for k in master.row_keys)


def test_cut_edge_rows_present_for_triangles():
    inst = example1()
    master = Master(inst, PartitionData(inst, tri()))
    assert len(master.y) == 9 * 2
    assert ("flow", 3, 0) in master.model.row_index


def test_duplicate_columns_are_skipped():
    inst = example2()
    p = Partition.from_parts(EXAMPLE2_TRIANGLES)
    part, sub = example2_columns(inst)["a"]
    master = build_master(inst, p, [(part, sub), (part, sub)])
    assert master.pool_size() == 1


def test_integer_master_assembles_valid_mapping():
    inst = example1()
    res = run_lower_bound(inst, CGConfig(partition=tri()))
    out = res.master.solve_mip()
    m = res.master.assemble(out.x)
    assert mapping_cost(inst, m) == pytest.approx(out.objective) == 9


# ---------------------------------------------------------------- pricing


def test_zero_duals_price_is_plain_cost():
    inst = example2()
    p = Partition.from_parts(EXAMPLE2_TRIANGLES)
    pd = PartitionData(inst, p)
    r = price_exact(inst, pd, 0, zero_duals(inst, p))
    assert r.value == pytest.approx(4)
    assert r.exact and r.column.cost == 4


def test_theta_shifts_reduced_cost():
    inst = example2()
    p = Partition.from_parts(EXAMPLE2_TRIANGLES)
    pd = PartitionData(inst, p)
    duals = with_theta(zero_duals(inst, p), 0, 10.0)
    assert price_exact(inst, pd, 0, duals).value == pytest.approx(-6)
    g = price_greedy(inst, pd, 0, duals, view=[0, 1, 2, 3])
    assert g.value == pytest.approx(-6)
    assert not g.exact


def test_reported_reduced_cost_matches_master_matrix():
    inst = example1()
    p = tri()
    pd = PartitionData(inst, p)
    master = Master(inst, pd)
    rng = np.random.default_rng(3)
    _, base = master.solve_lp()
    # arbitrary sign-feasible duals exercise every coefficient family
    vals = base.values.copy()
    for k, j in base.index.items():
        sense = master.model.sense[j]
        mag = float(rng.uniform(0, 2))
        vals[j] = mag if sense == ">=" else (-mag if sense == "<=" else float(rng.uniform(-2, 2)))
    duals = DualVector(base.keys, vals, base.index)
    for part in range(2):
        r = price_exact(inst, pd, part, duals)
        j = master.add_column(r.column)
        assert r.value == pytest.approx(master.reduced_cost_from_matrix(j, duals), abs=1e-6)


def test_footprint_of_example2_column():
    inst = example2()
    p = Partition.from_parts(EXAMPLE2_TRIANGLES)
    pd = PartitionData(inst, p)
    part, sub = example2_columns(inst)["a"]
    fp = column_footprint(inst, pd, part, sub)
    assert fp[("conv", 0)] == 1
    assert sum(v for k, v in fp.items() if k[0] == "one") == 3
    # cut edges (0,3) and (1,4) start inside part 0
    assert fp[("flow", 3, sub.node_place[0])] == 1
    assert fp[("flow", 4, sub.node_place[1])] == 1


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_greedy_pricer_never_beats_exact(seed):
    inst, p = small_instance(seed)
    pd = PartitionData(inst, p)
    master = Master(inst, pd)
    _, duals = master.solve_lp()
    for part in range(pd.k):
        if len(pd.parts[part]) > 4:
            continue
        ex = price_exact(inst, pd, part, duals)
        gr = price_greedy(inst, pd, part, duals, seed=seed)
        assert gr.value >= ex.value - 1e-6


# ---------------------------------------------------------------- duals and bounds


def test_smoothing_arithmetic():
    keys = [("conv", 0), ("one", 1)]
    idx = {k: i for i, k in enumerate(keys)}
    prev = DualVector(keys, np.array([10.0, -2.0]), idx)
    cur = DualVector(keys, np.array([0.0, -4.0]), idx)
    assert np.allclose(smooth_duals(prev, cur, 0.0).values, cur.values)
    assert np.allclose(smooth_duals(prev, cur, 1.0).values, prev.values)
    assert smooth_duals(prev, cur, 0.9).values[0] == pytest.approx(9.0)
    with pytest.raises(ValueError):
        smooth_duals(prev, cur, 1.5)


def test_lagrangian_bound_trivial():
    assert lagrangian_bound(12.5, [0.0, 0.0]) == 12.5
    assert lagrangian_bound(12.5, [-1.0, -0.5]) == 11.0


def test_lagrangian_value_matches_bound_at_master_duals():
    inst = example2()
    p = Partition.from_parts(EXAMPLE2_TRIANGLES)
    master = build_master(inst, p, example2_columns(inst).values(), artificial=True)
    out, duals = master.solve_lp()
    pd = master.pd
    minima = [price_exact(inst, pd, i, duals).value for i in range(2)]
    assert lagrangian_value(master, duals, minima) == pytest.approx(lagrangian_bound(out.objective, minima), abs=1e-6)


# ---------------------------------------------------------------- schedule


@pytest.mark.parametrize("inst_fn,parts,expected", [
    (example1, EXAMPLE1_TRIANGLES, 9.0),
    (example1, [[u] for u in range(6)], 7.0),
    (example2, EXAMPLE2_TRIANGLES, 10.0),
])
def test_fixture_values(inst_fn, parts, expected):
    res = run_lower_bound(inst_fn(), CGConfig(partition=Partition.from_parts(parts)))
    assert res.converged
    assert res.lgb == pytest.approx(expected, abs=1e-5)
    assert res.v_rmp == pytest.approx(expected, abs=1e-5)
    assert res.value == pytest.approx(expected, abs=1e-5)
    assert max(a.error for a in res.audit) <= 1e-6


def test_singletons_match_flow_relaxation():
    inst = example2()
    res = run_lower_bound(inst, CGConfig(partition=Partition(np.arange(6), 6)))
    lp = solve_ff(inst, relaxed=True)[0]
    assert res.value == pytest.approx(lp.objective, abs=1e-5)


def test_histories_monotone():
    res = run_lower_bound(example2(), CGConfig(partition=Partition.from_parts(EXAMPLE2_TRIANGLES)))
    assert all(b <= a + 1e-7 for a, b in zip(res.v_rmp_history, res.v_rmp_history[1:]))
    assert all(b >= a for a, b in zip(res.lgb_history, res.lgb_history[1:]))


def test_run_log_csv(tmp_path):
    path = tmp_path / "log.csv"
    res = run_lower_bound(example1(), CGConfig(partition=tri(), log_path=str(path)))
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["iteration", "phase", "v_rmp", "lgb", "columns_added", "pool_size", "wall_seconds"]
    assert len(rows) == len(res.log) + 1
    assert {r[1] for r in rows[1:]} <= {"greedy", "exact_sub", "exact"}


def test_threads_give_identical_results():
    cfg = dict(partition=Partition.from_parts(EXAMPLE2_TRIANGLES), seed=4)
    a = run_lower_bound(example2(), CGConfig(**cfg))
    b = run_lower_bound(example2(), CGConfig(threads=3, **cfg))
    assert a.lgb == b.lgb and a.columns == b.columns
    assert [r.columns_added for r in a.log] == [r.columns_added for r in b.log]


def test_infeasible_instance_reports_infinite_value():
    inst = example1().with_capacities(edge_capacity=[0] * 9)
    res = run_lower_bound(inst, CGConfig(partition=tri()))
    assert res.status in ("infeasible", "infeasible_for_pi")
    assert math.isinf(res.value)


def test_budget_status_when_iterations_exhausted():
    res = run_lower_bound(example2(), CGConfig(partition=Partition.from_parts(EXAMPLE2_TRIANGLES), max_iterations=1))
    assert res.status == "budget" and not res.converged


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_sandwich_on_random_instances(seed):
    inst, p = small_instance(seed)
    res = run_lower_bound(inst, CGConfig(partition=p, seed=seed))
    oracle = brute_force_optimum(inst)
    lp = solve_ff(inst, relaxed=True)[0]
    ff_lp = lp.objective if lp.status is Status.OPTIMAL else math.inf
    assert res.converged or res.status in ("infeasible", "infeasible_for_pi")
    assert ff_lp <= res.value + 1e-5
    assert res.value <= oracle.value + 1e-5
    assert all(b <= oracle.value + 1e-5 for b in res.lgb_history)
