"""Model exchange with external solvers."""
from .external import (
    SolutionParseError,
    SolverAdapterConfig,
    SolverFailureError,
    default_adapter,
    highs_adapter,
    parse_solution,
    run_external,
    scip_adapter,
)
from .mps import MpsError, mps_text, read_mps, write_mps

__all__ = [
    "MpsError",
    "SolutionParseError",
    "SolverAdapterConfig",
    "SolverFailureError",
    "default_adapter",
    "highs_adapter",
    "mps_text",
    "parse_solution",
    "read_mps",
    "run_external",
    "scip_adapter",
    "write_mps",
]
