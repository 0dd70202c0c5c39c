"""Balanced connected graph partitioning, substrate views and partition files."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .graph import Graph


class InfeasibleK(ValueError):
    pass


class PartitionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Partition:
    part_of: np.ndarray  # per node, 0..k-1
    k: int

    def __post_init__(self):
        arr = np.asarray(self.part_of, dtype=np.int64).reshape(-1)
        arr.flags.writeable = False
        object.__setattr__(self, "part_of", arr)
        if self.k < 1:
            raise PartitionError("k must be >= 1")
        if arr.size and (arr.min() < 0 or arr.max() >= self.k):
            raise PartitionError("part index outside 0..k-1")
        if np.bincount(arr, minlength=self.k).min(initial=1) == 0:
            raise PartitionError("every part must be nonempty")

    @classmethod
    def from_parts(cls, parts: Sequence[Iterable[int]], n: int | None = None) -> "Partition":
        parts = [sorted(set(p)) for p in parts]
        n = sum(len(p) for p in parts) if n is None else n
        part_of = np.full(n, -1, dtype=np.int64)
        for i, p in enumerate(parts):
            for u in p:
                if part_of[u] != -1:
                    raise PartitionError(f"node {u} appears in two parts")
                part_of[u] = i
        if (part_of < 0).any():
            raise PartitionError("parts do not cover every node")
        return cls(part_of, len(parts))

    def parts(self) -> list[list[int]]:
        out = [[] for _ in range(self.k)]
        for u, p in enumerate(self.part_of.tolist()):
            out[p].append(u)
        return out

    def sizes(self) -> np.ndarray:
        return np.bincount(self.part_of, minlength=self.k)

    def __eq__(self, other):
        return isinstance(other, Partition) and self.k == other.k and np.array_equal(self.part_of, other.part_of)

    __hash__ = None

    def is_valid_for(self, g: Graph) -> bool:
        return len(self.part_of) == g.n and all(g.is_connected(p) for p in self.parts())


@dataclass(frozen=True)
class SubgraphView:
    parent: Graph
    members: frozenset
    induced_edges: frozenset
    boundary_nodes: frozenset

    @property
    def internal_nodes(self) -> frozenset:
        return self.members - self.boundary_nodes


def cut_edges(g: Graph, p: Partition) -> list[int]:
    a = p.part_of[g.edges[:, 0]]
    b = p.part_of[g.edges[:, 1]]
    return np.flatnonzero(a != b).tolist()


def subgraph_views(g: Graph, p: Partition) -> list[SubgraphView]:
    cut = set(cut_edges(g, p))
    boundary = set()
    for e in cut:
        boundary.add(g.s(e))
        boundary.add(g.t(e))
    views = []
    for members in p.parts():
        ms = frozenset(members)
        views.append(SubgraphView(g, ms, frozenset(g.induced_edges(members)), frozenset(boundary & ms)))
    return views


def is_refinement(p_fine: Partition, p_coarse: Partition) -> bool:
    """True iff every part of ``p_fine`` lies inside one part of ``p_coarse``."""
    if len(p_fine.part_of) != len(p_coarse.part_of):
        raise PartitionError("partitions are over different node sets")
    for part in p_fine.parts():
        if len(set(p_coarse.part_of[part].tolist())) != 1:
            return False
    return True


# ---------------------------------------------------------------- partitioner


def _grow(g: Graph, k: int, seeds: list[int], weight: np.ndarray, cap: float) -> np.ndarray:
    """Simultaneous BFS region growing; lightest region with a frontier grows first."""
    n = g.n
    part = np.full(n, -1, dtype=np.int64)
    load = np.zeros(k)
    for i, sd in enumerate(seeds):
        part[sd] = i
        load[i] += weight[sd]
    remaining = n - k
    while remaining:
        order = np.lexsort((np.arange(k), load))
        grew = False
        for i in order.tolist():
            # frontier node with the most links into region i (ties: smallest id)
            score: dict[int, int] = {}
            for u in np.flatnonzero(part == i).tolist():
                for v in g.neighbors(u):
                    if part[v] == -1:
                        score[v] = score.get(v, 0) + 1
            if not score:
                continue
            if load[i] + 1e-9 >= cap and any(
                load[j] < cap and any(part[v] == -1 for u in np.flatnonzero(part == j).tolist() for v in g.neighbors(u))
                for j in range(k) if j != i
            ):
                continue
            v = min(score, key=lambda x: (-score[x], x))
            part[v] = i
            load[i] += weight[v]
            remaining -= 1
            grew = True
            break
        if not grew:  # pragma: no cover - connected graphs always have a frontier
            raise PartitionError("region growing stalled on a disconnected graph")
    return part


def _connected_without(g: Graph, part: np.ndarray, u: int) -> bool:
    members = [x for x in np.flatnonzero(part == part[u]).tolist() if x != u]
    return bool(members) and g.is_connected(members)


def _refine(g: Graph, part: np.ndarray, k: int, weight: np.ndarray, lo: float, hi: float, max_passes: int = 20) -> np.ndarray:
    """Greedy boundary moves that cut fewer edges and keep parts connected and balanced."""
    part = part.copy()
    load = np.bincount(part, weights=weight, minlength=k).astype(float)
    count = np.bincount(part, minlength=k)
    for _ in range(max_passes):
        moved = False
        for u in range(g.n):
            src = part[u]
            links: dict[int, int] = {}
            for v in g.neighbors(u):
                links[int(part[v])] = links.get(int(part[v]), 0) + 1
            own = links.get(int(src), 0)
            best, gain = None, 0
            for dst, cnt in sorted(links.items()):
                if dst == src or cnt - own <= gain:
                    continue
                if count[src] <= 1 or load[src] - weight[u] < lo - 1e-9 or load[dst] + weight[u] > hi + 1e-9:
                    continue
                best, gain = dst, cnt - own
            if best is None or not _connected_without(g, part, u):
                continue
            part[u] = best
            load[src] -= weight[u]
            load[best] += weight[u]
            count[src] -= 1
            count[best] += 1
            moved = True
        if not moved:
            break
    return part


def _spread_seeds(g: Graph, k: int, rng: np.random.Generator) -> list[int]:
    """Random first seed, then farthest-first (hop distance)."""
    seeds = [int(rng.integers(g.n))]
    dmin = np.full(g.n, np.inf)
    while len(seeds) < k:
        dist, _, _ = g.dijkstra(seeds[-1])
        dmin = np.minimum(dmin, dist)
        dmin[seeds] = -1
        far = np.flatnonzero(dmin == dmin.max())
        seeds.append(int(rng.choice(far)))
    return seeds


def partition_balanced_connected(
    g: Graph, k: int, seed: int = 0, weights: Sequence[float] | None = None, starts: int = 16
) -> Partition:
    """Split ``g`` into ``k`` connected parts of similar weight with few cut edges.

    Seeded multi-start region growing followed by connectivity- and
    balance-preserving boundary moves. Among the starts, the split with the
    fewest cut edges wins among those within 25% of the mean
    part weight (when any is), then the most balanced one.
    """
    n = g.n
    if k < 1:
        raise InfeasibleK("k must be >= 1")
    if k > n:
        raise InfeasibleK(f"cannot split {n} nodes into {k} nonempty parts")
    if k == 1:
        return Partition(np.zeros(n, dtype=np.int64), 1)
    if k == n:
        return Partition(np.arange(n), n)
    if not g.is_connected():
        raise PartitionError("graph must be connected")
    weight = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    target = math.ceil(weight.sum() / k)
    # refinement keeps parts within 25% of the mean; well inside [0, 2 * target]
    lo = math.floor(0.75 * weight.sum() / k)
    hi = max(target, math.ceil(1.25 * weight.sum() / k))
    rng = np.random.default_rng(seed)
    best, best_key = None, None
    for _ in range(starts):
        seeds = _spread_seeds(g, k, rng)
        part = _grow(g, k, seeds, weight, target)
        part = _refine(g, part, k, weight, lo, hi)
        if np.bincount(part, minlength=k).min() == 0:
            continue
        a, b = part[g.edges[:, 0]], part[g.edges[:, 1]]
        cut = int((a != b).sum())
        loads = np.bincount(part, weights=weight, minlength=k)
        imbalance = float(np.abs(loads - weight.sum() / k).max())
        outside = bool((loads < lo - 1e-9).any() or (loads > hi + 1e-9).any())
        key = (outside, cut, imbalance)
        if best_key is None or key < best_key:
            best, best_key = part, key
    return Partition(_canonical(best), k)


def _canonical(part: np.ndarray) -> np.ndarray:
    """Relabel parts in order of first appearance so equal splits compare equal."""
    relabel: dict[int, int] = {}
    out = np.empty_like(part)
    for u, p in enumerate(part.tolist()):
        if p not in relabel:
            relabel[p] = len(relabel)
        out[u] = relabel[p]
    return out


def expand_substrate_parts(gs: Graph, p: Partition | Sequence[Iterable[int]], target_size: int) -> list[SubgraphView]:
    """Grow each part breadth-first (layer by layer, smallest id first) up to ``target_size`` nodes."""
    parts = p.parts() if isinstance(p, Partition) else [sorted(set(x)) for x in p]
    full = Partition.from_parts(parts, gs.n) if isinstance(p, Partition) or sum(map(len, parts)) == gs.n else None
    cut = set(cut_edges(gs, full)) if full is not None else set()
    boundary_all = {gs.s(e) for e in cut} | {gs.t(e) for e in cut}
    views = []
    for members in parts:
        chosen = set(members)
        frontier = sorted(members)
        while len(chosen) < target_size and frontier:
            layer = sorted({v for u in frontier for v in gs.neighbors(u) if v not in chosen})
            nxt = []
            for v in layer:
                if len(chosen) >= target_size:
                    break
                chosen.add(v)
                nxt.append(v)
            frontier = nxt
        ms = frozenset(chosen)
        views.append(SubgraphView(gs, ms, frozenset(gs.induced_edges(ms)), frozenset(boundary_all & ms)))
    return views


def default_k(n_r: int) -> int:
    return max(1, n_r // 10)


# ---------------------------------------------------------------- files


def dumps_partition(p: Partition) -> str:
    return "".join(f"{u} {q}\n" for u, q in enumerate(p.part_of.tolist()))


def loads_partition(text: str, n: int | None = None) -> Partition:
    from .instance import ParseError

    entries = {}
    for no, raw in enumerate(text.split("\n"), start=1):
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        parts = ln.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'node part', got {ln!r}", no)
        try:
            u, q = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer field in {ln!r}", no) from None
        if u in entries:
            raise ParseError(f"node {u} listed twice", no)
        entries[u] = q
    n = len(entries) if n is None else n
    if sorted(entries) != list(range(n)):
        raise ParseError(f"partition must list nodes 0..{n - 1} exactly once")
    labels = sorted(set(entries.values()))
    remap = {q: i for i, q in enumerate(labels)}
    return Partition(np.array([remap[entries[u]] for u in range(n)]), len(labels))


def store_partition(p: Partition, path: str | os.PathLike) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_partition(p))


def load_partition(path: str | os.PathLike, n: int | None = None) -> Partition:
    with open(path) as fh:
        return loads_partition(fh.read(), n)
