from .build import (
    ValidationError,
    assemble,
    build_balance,
    build_commitment_logic,
    build_conversion,
    build_investment_linking,
    build_min_updown,
    build_objectives,
    build_ramping,
    build_storage,
    build_variables,
)
from .model import BINARY, CONTINUOUS, LinConstraint, LinExpr, MilpModel, ModelBuilder, VarRef

__all__ = [
    "BINARY",
    "CONTINUOUS",
    "LinConstraint",
    "LinExpr",
    "MilpModel",
    "ModelBuilder",
    "ValidationError",
    "VarRef",
    "assemble",
    "build_balance",
    "build_commitment_logic",
    "build_conversion",
    "build_investment_linking",
    "build_min_updown",
    "build_objectives",
    "build_ramping",
    "build_storage",
    "build_variables",
]
