"""Built-in desk-scale MIP solving."""
from .audit import AuditReport, audit_solution, pwl_consistency
from .bnb import branch_and_bound, solve_lp
from .brute import brute_force
from .kernel import BACKEND
from .lp import ModelTooLargeError, NumericalError, compile_lp
from .result import SolveConfig, SolveResult, relative_gap

__all__ = [
    "AuditReport",
    "BACKEND",
    "ModelTooLargeError",
    "NumericalError",
    "SolveConfig",
    "SolveResult",
    "audit_solution",
    "branch_and_bound",
    "brute_force",
    "compile_lp",
    "pwl_consistency",
    "relative_gap",
    "solve_lp",
]
