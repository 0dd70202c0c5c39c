import csv
import math

import numpy as np
import pytest

from vne.colgen import CGConfig, DualVector, Master, PartitionData, run_lower_bound
from vne.fixtures import EXAMPLE1_TRIANGLES, EXAMPLE2_TRIANGLES, example1, example2
from vne.greedy import NoSolutionFound
from vne.instance import CapacityRegime, generate, mapping_cost, random_connected_graph, validate
from vne.partition import Partition
from vne.pbh import (
    AUTO, EXACT, GREEDY, PartCountMismatch, PbhConfig, _adjustment, generate_integer_columns,
    solve_pbh, substrate_partition, write_reports,
)

SQUARES = [[0, 1, 2, 3], [6, 7, 8, 9]]  # u1..u4 and u7..u10


def ex2_config(**kw):
    return PbhConfig(partition=Partition.from_parts(EXAMPLE2_TRIANGLES), substrate_parts=SQUARES, **kw)


def cut_cost(inst, m, partition):
    pd = PartitionData(inst, partition)
    return sum(int(inst.edge_demand[ve]) * int(inst.edge_cost[a.edge]) for ve in pd.cut for a in m.edge_route[ve])


def test_example1_defaults():
    inst = example1()
    m, rep = solve_pbh(inst)
    assert mapping_cost(inst, m) == 9 and rep.cost == 9
    assert rep.pricer == EXACT  # small parts resolve the automatic pricer to the exact one


def test_example1_triangles():
    inst = example1()
    m, rep = solve_pbh(inst, PbhConfig(partition=Partition.from_parts(EXAMPLE1_TRIANGLES)))
    assert validate(inst, m).ok and mapping_cost(inst, m) == 9


def test_example2_squares():
    inst = example2()
    m, rep = solve_pbh(inst, ex2_config())
    assert validate(inst, m).ok
    assert mapping_cost(inst, m) == 10
    assert rep.cost == pytest.approx(10) and rep.status == "optimal"


def test_example2_greedy_pricer():
    inst = example2()
    m, rep = solve_pbh(inst, ex2_config(pricer_kind=GREEDY))
    assert mapping_cost(inst, m) == 10 and rep.pricer == GREEDY


def test_all_capacities_zero():
    inst = example1().with_capacities(node_capacity=[0] * 8)
    m, rep = solve_pbh(inst)
    assert isinstance(m, NoSolutionFound)
    assert rep.status == "no_solution" and math.isnan(rep.cost)


def test_part_count_mismatch():
    inst = example2()
    with pytest.raises(PartCountMismatch):
        solve_pbh(inst, PbhConfig(partition=Partition.from_parts(EXAMPLE2_TRIANGLES), substrate_parts=[list(range(12))]))


def test_config_validation():
    with pytest.raises(ValueError):
        PbhConfig(k_r=0)
    with pytest.raises(ValueError):
        PbhConfig(pricer_kind="magic")
    assert PbhConfig().pricer_kind == AUTO


def test_single_part_adjustment_is_identity():
    inst = example1()
    pd = PartitionData(inst, Partition(np.zeros(6, dtype=int), 1))
    dist = np.ones((8, 8))
    assert not _adjustment(inst, pd, 0, {u: 0 for u in range(6)}, dist).any()


def test_adjustment_uses_tentative_hosts():
    inst = example1()
    pd = PartitionData(inst, Partition.from_parts(EXAMPLE1_TRIANGLES))
    dist = np.arange(64, dtype=float).reshape(8, 8)
    t_v = {u: 0 for u in range(3)} | {u: 5 for u in range(3, 6)}
    adj = _adjustment(inst, pd, 0, t_v, dist)
    # only node 0 touches the cut edge (0, 3); its other end sits on host 5
    assert np.allclose(adj[0], dist[5])
    assert not adj[1:].any()


def test_batch_columns_do_not_intersect():
    inst = example2()
    p = Partition.from_parts(EXAMPLE2_TRIANGLES)
    pd = PartitionData(inst, p)
    duals = DualVector.zeros(Master(inst, pd).row_keys)
    cfg = ex2_config()
    for seed in range(5):
        cols = generate_integer_columns(inst, pd, SQUARES, duals, cfg, np.random.default_rng(seed))
        assert len(cols) == 2
        hosts = [set(c.mapping.node_place.values()) for c in cols]
        assert not hosts[0] & hosts[1]


def test_batches_are_deterministic():
    inst = example2()
    pd = PartitionData(inst, Partition.from_parts(EXAMPLE2_TRIANGLES))
    duals = DualVector.zeros(Master(inst, pd).row_keys)
    runs = [[c.mapping.key() for c in generate_integer_columns(inst, pd, SQUARES, duals, ex2_config(), np.random.default_rng(7))]
            for _ in range(2)]
    assert runs[0] == runs[1]


def test_adjustment_does_not_raise_cut_cost_on_example2():
    inst = example2()
    p = Partition.from_parts(EXAMPLE2_TRIANGLES)
    for seed in range(3):
        on, _ = solve_pbh(inst, ex2_config(seed=seed))
        off, _ = solve_pbh(inst, ex2_config(seed=seed, adjust=False))
        assert cut_cost(inst, on, p) <= cut_cost(inst, off, p)


def test_substrate_partition_sizes():
    inst = example2()
    pd = PartitionData(inst, Partition.from_parts(EXAMPLE2_TRIANGLES))
    parts = substrate_partition(inst, pd)
    # 12 capacitated nodes, largest virtual part 3 -> round(12 / 4.5) = 3 parts
    assert len(parts) == 3
    assert sorted(u for p in parts for u in p) == list(range(12))


@pytest.mark.parametrize("seed", range(6))
def test_cost_at_least_cg_bound(seed):
    rng = np.random.default_rng(seed)
    inst = generate(random_connected_graph(4, 1, rng), random_connected_graph(9, 4, rng), CapacityRegime.LARGE, seed)
    p = Partition.from_parts([[u] for u in range(4)]) if seed % 2 else Partition(np.zeros(4, dtype=int), 1)
    m, rep = solve_pbh(inst, PbhConfig(partition=p, seed=seed))
    cg = run_lower_bound(inst, CGConfig(partition=p, seed=seed))
    if isinstance(m, NoSolutionFound):
        return
    assert validate(inst, m).ok
    assert mapping_cost(inst, m) == pytest.approx(rep.cost)
    assert rep.cost >= cg.value - 1e-6


def test_report_csv(tmp_path):
    _, rep = solve_pbh(example1())
    path = tmp_path / "r.csv"
    write_reports([rep], path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["instance", "regime", "k_r", "columns", "pricer", "cost", "status", "wall_seconds"]
    assert rows[1][0] == "example1" and rows[1][5] == "9"
