"""Solver-agnostic MILP container.

Variables are dense-indexed; constraint terms reference variables by index.
A model is immutable once built; derived models (extra rows, a different
objective order) are cheap shallow copies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"
SENSES = ("<=", "=", ">=")


class ModelError(ValueError):
    pass


def format_name(family: str, entity: str | None = None, resource: str | None = None,
                step: int | None = None) -> str:
    parts = [str(p) for p in (entity, resource, step) if p is not None]
    return f"{family}[{','.join(parts)}]" if parts else family


@dataclass(frozen=True)
class VarRef:
    index: int
    name: str
    kind: str
    lower: float = 0.0
    upper: float = math.inf
    key: tuple = ()

    @property
    def is_binary(self) -> bool:
        return self.kind == BINARY


@dataclass(frozen=True)
class LinExpr:
    terms: tuple[tuple[int, float], ...] = ()
    constant: float = 0.0

    def value(self, x: Sequence[float]) -> float:
        return self.constant + sum(c * x[j] for j, c in self.terms)

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for j, c in self.terms:
            out[j] += c
        return out


@dataclass(frozen=True)
class LinConstraint:
    """``terms . x  (sense)  rhs``; ``range_`` follows MPS RANGES semantics."""

    name: str
    terms: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    range_: float | None = None
    group: str = ""

    def bounds(self) -> tuple[float, float]:
        """Activity interval ``[lo, hi]`` implied by sense, rhs and range."""
        r = self.range_
        if self.sense == "<=":
            return (self.rhs - abs(r) if r is not None else -math.inf, self.rhs)
        if self.sense == ">=":
            return (self.rhs, self.rhs + abs(r) if r is not None else math.inf)
        if r is None or r == 0:
            return (self.rhs, self.rhs)
        return (self.rhs, self.rhs + r) if r > 0 else (self.rhs + r, self.rhs)

    def activity(self, x: Sequence[float]) -> float:
        return sum(c * x[j] for j, c in self.terms)


def _merge_terms(terms: Iterable[tuple[int, float]]) -> tuple[tuple[int, float], ...]:
    acc: dict[int, float] = {}
    for j, c in terms:
        acc[j] = acc.get(j, 0.0) + c
    return tuple((j, c) for j, c in acc.items() if c != 0.0)


@dataclass(frozen=True)
class MilpModel:
    variables: tuple[VarRef, ...]
    constraints: tuple[LinConstraint, ...]
    objectives: Mapping[str, LinExpr]
    sense: str = "min"
    name: str = "model"
    diagnostics: tuple = ()
    _by_key: Mapping[tuple, int] = field(default=None, repr=False, compare=False)
    _by_name: Mapping[str, int] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._by_name is None:
            object.__setattr__(self, "_by_name", {v.name: v.index for v in self.variables})
        if self._by_key is None:
            object.__setattr__(
                self, "_by_key", {v.key: v.index for v in self.variables if v.key}
            )

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.constraints)

    @property
    def binaries(self) -> list[int]:
        return [v.index for v in self.variables if v.is_binary]

    @property
    def nonzeros(self) -> int:
        return sum(len(c.terms) for c in self.constraints)

    def index(self, key_or_name) -> int:
        if isinstance(key_or_name, tuple):
            return self._by_key[key_or_name]
        return self._by_name[key_or_name]

    def has(self, key_or_name) -> bool:
        table = self._by_key if isinstance(key_or_name, tuple) else self._by_name
        return key_or_name in table

    def var(self, key_or_name) -> VarRef:
        return self.variables[self.index(key_or_name)]

    def vars_of(self, family: str) -> list[VarRef]:
        return [v for v in self.variables if v.key and v.key[0] == family]

    def rows_in(self, group: str) -> list[LinConstraint]:
        return [c for c in self.constraints if c.group == group]

    def counts(self) -> dict[str, int]:
        return {
            "variables": self.n_vars,
            "constraints": self.n_rows,
            "binaries": len(self.binaries),
            "nonzeros": self.nonzeros,
        }

    def evaluate(self, objective: str, x: Sequence[float]) -> float:
        return self.objectives[objective].value(x)

    def with_rows(self, rows: Iterable[LinConstraint]) -> "MilpModel":
        return replace(self, constraints=self.constraints + tuple(rows))

    def with_objective_first(self, objective: str) -> "MilpModel":
        """Same model with ``objective`` moved to the front of the objective order."""
        objs = {objective: self.objectives[objective]}
        objs.update((k, v) for k, v in self.objectives.items() if k != objective)
        return replace(self, objectives=objs)

    def cap_row(self, objective: str, limit: float, name: str | None = None) -> LinConstraint:
        """Row ``objective <= limit`` expressed on the variables."""
        expr = self.objectives[objective]
        return LinConstraint(
            name or f"cap[{objective}]", expr.terms, "<=", limit - expr.constant, group="cap"
        )

    def self_check(self) -> list[str]:
        """Structural problems: dangling indices, bad bounds, non-finite data."""
        problems = []
        n = self.n_vars
        for i, v in enumerate(self.variables):
            if v.index != i:
                problems.append(f"{v.name}: index {v.index} at position {i}")
            if not v.lower <= v.upper:
                problems.append(f"{v.name}: lower > upper")
            if v.is_binary and (v.lower < 0 or v.upper > 1):
                problems.append(f"{v.name}: binary bounds outside [0,1]")
        if len(self._by_name) != n:
            problems.append("duplicate variable names")
        for c in self.constraints:
            if c.sense not in SENSES:
                problems.append(f"{c.name}: unknown sense {c.sense}")
            if not math.isfinite(c.rhs):
                problems.append(f"{c.name}: non-finite rhs")
            for j, a in c.terms:
                if not 0 <= j < n:
                    problems.append(f"{c.name}: term references missing variable {j}")
                if not math.isfinite(a):
                    problems.append(f"{c.name}: non-finite coefficient")
        for name, expr in self.objectives.items():
            for j, a in expr.terms:
                if not 0 <= j < n or not math.isfinite(a):
                    problems.append(f"objective {name}: bad term ({j}, {a})")
        return problems


class ModelBuilder:
    """Mutable accumulator used while assembling a :class:`MilpModel`."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[VarRef] = []
        self.constraints: list[LinConstraint] = []
        self.objectives: dict[str, LinExpr] = {}
        self.diagnostics: list = []
        self._by_key: dict[tuple, int] = {}

    def add_var(self, family: str, entity=None, resource=None, step=None, *,
                kind: str = CONTINUOUS, lower: float = 0.0, upper: float = math.inf) -> int:
        key = (family, entity, resource, step)
        if key in self._by_key:
            raise ModelError(f"duplicate variable key {key}")
        if kind == BINARY:
            lower, upper = max(lower, 0.0), min(upper, 1.0)
        if not lower <= upper:
            raise ModelError(f"{format_name(*key)}: lower {lower} > upper {upper}")
        j = len(self.variables)
        self.variables.append(
            VarRef(j, format_name(*key), kind, float(lower), float(upper), key)
        )
        self._by_key[key] = j
        return j

    def idx(self, family, entity=None, resource=None, step=None) -> int:
        return self._by_key[(family, entity, resource, step)]

    def get(self, family, entity=None, resource=None, step=None) -> int | None:
        return self._by_key.get((family, entity, resource, step))

    def add_row(self, group: str, name: str, terms: Iterable[tuple[int, float]],
                sense: str, rhs: float) -> LinConstraint:
        row = LinConstraint(name, _merge_terms(terms), sense, float(rhs), group=group)
        self.constraints.append(row)
        return row

    def set_objective(self, name: str, terms: Iterable[tuple[int, float]], constant: float = 0.0):
        self.objectives[name] = LinExpr(_merge_terms(terms), float(constant))

    def freeze(self) -> MilpModel:
        return MilpModel(
            tuple(self.variables),
            tuple(self.constraints),
            dict(self.objectives),
            name=self.name,
            diagnostics=tuple(self.diagnostics),
            _by_key=dict(self._by_key),
        )
