"""Probabilistic forwarding of erasure-coded packets on networks.

A source encodes k data packets into n coded ones and floods them through
a graph where each node relays a first-seen packet with probability p.
This package computes the minimum p achieving a near-broadcast and the
resulting expected transmission count: exactly on trees, via site
percolation on grids, and by Monte Carlo simulation on anything.
"""

__version__ = "0.1.0"

from .errors import (
    BracketError,
    EdgeListError,
    ParameterError,
    ProbFwdError,
    SubcriticalError,
    UndecodableError,
)
from .topology import Topology, build_grid, build_tree, dump_edge_list, load_edge_list

__all__ = [
    "__version__",
    "ProbFwdError",
    "ParameterError",
    "EdgeListError",
    "UndecodableError",
    "BracketError",
    "SubcriticalError",
    "Topology",
    "build_tree",
    "build_grid",
    "load_edge_list",
    "dump_edge_list",
]
