"""Small hand-built instances used by tests, docs and the CLI demo.

Node ids are 0-based: virtual node ``k`` here is the figure's ``k+1``.
"""
from __future__ import annotations

from .graph import Graph
from .instance import Instance, Mapping, nodes_to_route


def _unit_instance(vedges, n_r, sedges, n_s, node_cost=0, edge_cost=1, capacity=1, name="") -> Instance:
    virtual = Graph.from_edges(n_r, vedges)
    substrate = Graph.from_edges(n_s, sedges)
    return Instance(
        virtual, substrate,
        [1] * n_r, [1] * virtual.m,
        [capacity] * n_s, [capacity] * substrate.m,
        [node_cost] * n_s, [edge_cost] * substrate.m,
        name=name,
    )


def figure1() -> tuple[Instance, Mapping]:
    """4-node virtual network on a 5-node substrate, with the drawn mapping."""
    vedges = [(0, 1), (0, 3), (1, 3), (0, 2), (2, 3)]
    sedges = [(0, 1), (0, 2), (1, 3), (1, 2), (2, 3), (3, 4), (2, 4)]
    inst = _unit_instance(vedges, 4, sedges, 5, node_cost=1, capacity=2, name="figure1")
    g = inst.substrate
    m = Mapping(
        {0: 0, 1: 1, 2: 4, 3: 3},
        {
            0: nodes_to_route(g, [0, 2, 1]),  # drawn u2-u3-u1, stored from m(s(e))
            1: nodes_to_route(g, [0, 1, 3]),
            2: nodes_to_route(g, [1, 3]),
            3: nodes_to_route(g, [0, 2, 4]),
            4: nodes_to_route(g, [4, 3]),
        },
    )
    return inst, m


def example1() -> Instance:
    """Two virtual triangles joined by one edge; substrate is two squares joined by one edge."""
    vedges = [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 5), (5, 3)]
    sedges = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4), (0, 4)]
    return _unit_instance(vedges, 6, sedges, 8, name="example1")


EXAMPLE1_TRIANGLES = [[0, 1, 2], [3, 4, 5]]


def example2() -> Instance:
    """Two virtual triangles joined by two edges; substrate is four squares around a central one."""
    vedges = [(0, 1), (1, 2), (2, 0), (0, 3), (1, 4), (3, 4), (4, 5), (5, 3)]
    sedges = [
        (0, 3), (3, 6), (6, 9), (9, 0),      # central square u1 u4 u7 u10
        (0, 11), (11, 10), (10, 9),          # u1 u12 u11 u10
        (0, 1), (1, 2), (2, 3),              # u1 u2 u3 u4
        (3, 4), (4, 5), (5, 6),              # u4 u5 u6 u7
        (6, 7), (7, 8), (8, 9),              # u7 u8 u9 u10
    ]
    return _unit_instance(vedges, 6, sedges, 12, name="example2")


EXAMPLE2_TRIANGLES = [[0, 1, 2], [3, 4, 5]]


def example2_columns(inst: Instance | None = None) -> dict[str, tuple[int, Mapping]]:
    """The four sub-mappings m^a..m^d as ``name -> (part index, sub-mapping)``.

    Route node sequences are normalised to run from the placement of the
    virtual edge's first endpoint.
    """
    inst = inst or example2()
    g = inst.substrate
    v = inst.virtual

    def sub(place: dict[int, int], routes: dict[tuple[int, int], list[int]]) -> Mapping:
        m = Mapping(dict(place), {})
        for (a, b), nodes in routes.items():
            e = v.edge_between(a, b)
            if v.s(e) != a:
                nodes = nodes[::-1]
            m.edge_route[e] = nodes_to_route(g, nodes)
        return m

    u = lambda k: k - 1  # noqa: E731  figure labels are 1-based
    return {
        "a": (0, sub({0: u(1), 1: u(4), 2: u(2)},
                     {(0, 1): [u(1), u(4)], (1, 2): [u(4), u(3), u(2)], (2, 0): [u(2), u(1)]})),
        "b": (0, sub({0: u(7), 1: u(10), 2: u(8)},
                     {(0, 1): [u(7), u(10)], (1, 2): [u(10), u(9), u(8)], (2, 0): [u(8), u(7)]})),
        "c": (1, sub({3: u(4), 4: u(7), 5: u(5)},
                     {(3, 4): [u(4), u(7)], (4, 5): [u(7), u(6), u(5)], (5, 3): [u(5), u(4)]})),
        "d": (1, sub({3: u(10), 4: u(1), 5: u(11)},
                     {(3, 4): [u(10), u(1)], (4, 5): [u(1), u(12), u(11)], (5, 3): [u(11), u(10)]})),
    }
