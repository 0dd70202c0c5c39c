"""Virtual network embedding: exact flow model, column-generation lower
bounds, Price-and-Branch and greedy heuristics, and a brute-force oracle."""
from .graph import Direction, Graph, GraphError, OrientedEdgeRef
from .instance import (
    CapacityRegime,
    Instance,
    Mapping,
    ParseError,
    generate,
    mapping_cost,
    validate,
)
from .partition import Partition, cut_edges, partition_balanced_connected
from .flow import solve_ff
from .greedy import NoSolutionFound, greedy_embed, greedy_multi
from .colgen import CGConfig, run_lower_bound
from .pbh import PbhConfig, solve_pbh
from .oracle import brute_force_optimum

__all__ = [
    "CGConfig", "CapacityRegime", "Direction", "Graph", "GraphError", "Instance", "Mapping",
    "NoSolutionFound", "OrientedEdgeRef", "ParseError", "Partition", "PbhConfig",
    "brute_force_optimum", "cut_edges", "generate", "greedy_embed", "greedy_multi",
    "mapping_cost", "partition_balanced_connected", "run_lower_bound", "solve_ff",
    "solve_pbh", "validate",
]
__version__ = "0.1.0"
