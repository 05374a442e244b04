"""Signal-flow-graph S-parameter simulation of pseudo-Doherty load-modulated balanced amplifiers."""
from .netcore import FrequencyGrid, NPortNetwork, cascade, check_reciprocal
from .sfg import FlowGraph, enumerate_loops, enumerate_paths, mason_transfer, solve_linear

__version__ = "0.1.0"

__all__ = [
    "FlowGraph", "FrequencyGrid", "NPortNetwork", "cascade", "check_reciprocal",
    "enumerate_loops", "enumerate_paths", "mason_transfer", "solve_linear",
]
