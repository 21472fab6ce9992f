"""Free-format MPS export and import.

Both objectives are written as ``N`` rows named ``__obj__<name>``; the first
one is the active objective by MPS convention, the rest are free rows a
reader can re-activate. An objective constant ``k`` is stored as RHS ``-k``
on its row.
"""
from __future__ import annotations

import math
import os
from pathlib import Path

from ..milp.model import BINARY, CONTINUOUS, LinConstraint, LinExpr, MilpModel, VarRef

OBJ_PREFIX = "__obj__"
MAX_NAME = 255
SECTIONS = ("NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA")
_SENSE_CODE = {"<=": "L", ">=": "G", "=": "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}


class MpsError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _num(v: float) -> str:
    return repr(float(v))


def _safe_names(names: list[str], what: str) -> list[str]:
    out = []
    bad = [n for n in names if not n or any(ch.isspace() for ch in n)]
    if bad:
        raise MpsError(f"{what} names with whitespace or empty: {bad[:10]}")
    seen: dict[str, str] = {}
    clashes = []
    for n in names:
        short = n[:MAX_NAME]
        if short in seen and seen[short] != n:
            clashes.append((seen[short], n))
        seen.setdefault(short, n)
        out.append(short)
    if clashes:
        raise MpsError(f"{what} names collide after {MAX_NAME}-char truncation: {clashes[:10]}")
    return out


def mps_text(model: MilpModel) -> str:
    obj_names = list(model.objectives)
    obj_rows = _safe_names([OBJ_PREFIX + k for k in obj_names], "objective")
    row_names = _safe_names([c.name for c in model.constraints], "row")
    col_names = _safe_names([v.name for v in model.variables], "column")
    if len(set(row_names) | set(obj_rows)) != len(row_names) + len(obj_rows):
        raise MpsError("duplicate row names")

    columns: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for oname, expr in zip(obj_rows, model.objectives.values()):
        acc: dict[int, float] = {}
        for j, a in expr.terms:
            acc[j] = acc.get(j, 0.0) + a
        for j, a in acc.items():
            columns[j].append((oname, a))
    for rname, row in zip(row_names, model.constraints):
        acc = {}
        for j, a in row.terms:
            acc[j] = acc.get(j, 0.0) + a
        for j, a in acc.items():
            columns[j].append((rname, a))

    out = [f"NAME {model.name.replace(' ', '_') or 'model'}"]
    if model.sense == "max":
        out += ["OBJSENSE", "    MAX"]
    out.append("ROWS")
    out += [f" N  {r}" for r in obj_rows]
    out += [f" {_SENSE_CODE[c.sense]}  {r}" for r, c in zip(row_names, model.constraints)]
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for v, name, entries in zip(model.variables, col_names, columns):
        if v.is_binary != in_int:
            tag = "'INTORG'" if v.is_binary else "'INTEND'"
            out.append(f"    MARKER{marker:04d} 'MARKER' {tag}")
            marker += 1
            in_int = v.is_binary
        if not entries:
            entries = [(obj_rows[0] if obj_rows else row_names[0], 0.0)]
        for rname, a in entries:
            out.append(f"    {name} {rname} {_num(a)}")
    if in_int:
        out.append(f"    MARKER{marker:04d} 'MARKER' 'INTEND'")
    out.append("RHS")
    for oname, expr in zip(obj_rows, model.objectives.values()):
        if expr.constant:
            out.append(f"    RHS {oname} {_num(-expr.constant)}")
    for rname, c in zip(row_names, model.constraints):
        if c.rhs:
            out.append(f"    RHS {rname} {_num(c.rhs)}")
    ranged = [(r, c) for r, c in zip(row_names, model.constraints) if c.range_ is not None]
    if ranged:
        out.append("RANGES")
        out += [f"    RNG {r} {_num(c.range_)}" for r, c in ranged]
    out.append("BOUNDS")
    for v, name in zip(model.variables, col_names):
        lo, hi = v.lower, v.upper
        if v.is_binary and lo == 0.0 and hi == 1.0:
            out.append(f" BV BND {name}")
        elif lo == hi:
            out.append(f" FX BND {name} {_num(lo)}")
        elif lo == -math.inf and hi == math.inf:
            out.append(f" FR BND {name}")
        else:
            if lo == -math.inf:
                out.append(f" MI BND {name}")
            elif lo != 0.0 or v.is_binary:
                out.append(f" LO BND {name} {_num(lo)}")
            if hi != math.inf:
                out.append(f" UP BND {name} {_num(hi)}")
            elif v.is_binary:
                raise MpsError(f"binary {name} without finite upper bound")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def write_mps(model: MilpModel, path: str | os.PathLike) -> int:
    """Write ``model`` as free MPS; returns the number of bytes written."""
    data = mps_text(model).encode("utf-8")
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise MpsError(f"cannot write {path}: {exc}") from exc
    return len(data)


def _split_pairs(fields: list[str], lineno: int) -> tuple[str | None, list[tuple[str, str]]]:
    """RHS/RANGES lines: optional set name then (row, value) pairs."""
    if len(fields) % 2 == 1:
        setname, rest = fields[0], fields[1:]
    else:
        setname, rest = None, fields
    if not rest:
        raise MpsError("expected row/value pairs", lineno)
    return setname, [(rest[i], rest[i + 1]) for i in range(0, len(rest), 2)]


def _float(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise MpsError(f"not a number: {tok!r}", lineno) from None


def read_mps(path: str | os.PathLike) -> MilpModel:
    text = Path(path).read_text(encoding="utf-8")
    name = "model"
    sense = "min"
    section = None
    row_order: list[str] = []
    row_code: dict[str, str] = {}
    obj_rows: list[str] = []
    col_index: dict[str, int] = {}
    col_names: list[str] = []
    col_int: list[bool] = []
    coefs: dict[str, dict[int, float]] = {}
    rhs: dict[str, float] = {}
    ranges: dict[str, float] = {}
    lower: dict[int, float] = {}
    upper: dict[int, float] = {}
    bv: set[int] = set()
    in_int = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        fields = line.split()
        if not raw[0].isspace():
            head = fields[0].upper()
            if head not in SECTIONS:
                raise MpsError(f"unknown section {fields[0]!r}", lineno)
            section = head
            if head == "NAME":
                name = fields[1] if len(fields) > 1 else name
            elif head == "OBJSENSE" and len(fields) > 1:
                sense = "max" if fields[1].upper().startswith("MAX") else "min"
            elif head == "ENDATA":
                break
            continue
        if section is None:
            raise MpsError("data before any section", lineno)
        if section == "OBJSENSE":
            sense = "max" if fields[0].upper().startswith("MAX") else "min"
        elif section == "ROWS":
            if len(fields) != 2 or fields[0].upper() not in ("N", "L", "G", "E"):
                raise MpsError(f"bad ROWS entry {line.strip()!r}", lineno)
            code, rname = fields[0].upper(), fields[1]
            if rname in row_code:
                raise MpsError(f"duplicate row {rname}", lineno)
            row_code[rname] = code
            coefs[rname] = {}
            if code == "N":
                obj_rows.append(rname)
            else:
                row_order.append(rname)
        elif section == "COLUMNS":
            if len(fields) >= 3 and fields[1] == "'MARKER'":
                if fields[2] == "'INTORG'":
                    in_int = True
                elif fields[2] == "'INTEND'":
                    in_int = False
                else:
                    raise MpsError(f"unknown marker {fields[2]}", lineno)
                continue
            if len(fields) not in (3, 5):
                raise MpsError(f"bad COLUMNS entry {line.strip()!r}", lineno)
            cname = fields[0]
            j = col_index.get(cname)
            if j is None:
                j = col_index[cname] = len(col_names)
                col_names.append(cname)
                col_int.append(in_int)
            for k in range(1, len(fields), 2):
                rname = fields[k]
                if rname not in row_code:
                    raise MpsError(f"unknown row {rname!r}", lineno)
                coefs[rname][j] = coefs[rname].get(j, 0.0) + _float(fields[k + 1], lineno)
        elif section in ("RHS", "RANGES"):
            _, pairs = _split_pairs(fields, lineno)
            target = rhs if section == "RHS" else ranges
            for rname, val in pairs:
                if rname not in row_code:
                    raise MpsError(f"unknown row {rname!r}", lineno)
                target[rname] = _float(val, lineno)
        elif section == "BOUNDS":
            kind = fields[0].upper()
            novalue = kind in ("FR", "MI", "PL", "BV")
            want = 3 if novalue else 4
            if kind == "BV" and len(fields) == 4:
                want = 4
            if len(fields) == want:
                cname = fields[2]
                val = fields[3] if len(fields) == 4 else None
            elif len(fields) == want - 1:
                cname = fields[1]
                val = fields[2] if len(fields) == 3 and not novalue else None
            else:
                raise MpsError(f"bad BOUNDS entry {line.strip()!r}", lineno)
            if cname not in col_index:
                raise MpsError(f"unknown column {cname!r}", lineno)
            j = col_index[cname]
            v = _float(val, lineno) if val is not None else None
            if kind == "UP":
                upper[j] = v
                if v < 0 and j not in lower:
                    lower[j] = -math.inf
            elif kind == "LO":
                lower[j] = v
            elif kind == "FX":
                lower[j] = upper[j] = v
            elif kind == "FR":
                lower[j], upper[j] = -math.inf, math.inf
            elif kind == "MI":
                lower[j] = -math.inf
            elif kind == "PL":
                upper[j] = math.inf
            elif kind == "BV":
                bv.add(j)
                lower[j], upper[j] = 0.0, 1.0
            else:
                raise MpsError(f"unsupported bound type {kind}", lineno)
    if section != "ENDATA":
        raise MpsError("missing ENDATA")

    variables = []
    for j, cname in enumerate(col_names):
        lo, hi = lower.get(j, 0.0), upper.get(j, math.inf)
        integer = col_int[j] or j in bv
        if integer and not (lo >= 0 and hi <= 1):
            raise MpsError(f"general integer column {cname} is not supported")
        variables.append(VarRef(j, cname, BINARY if integer else CONTINUOUS, lo, hi))
    constraints = []
    for rname in row_order:
        sense_code = row_code[rname]
        terms = tuple(sorted(coefs[rname].items()))
        constraints.append(LinConstraint(rname, terms, _CODE_SENSE[sense_code],
                                         rhs.get(rname, 0.0), ranges.get(rname)))
    objectives = {}
    for rname in obj_rows:
        key = rname[len(OBJ_PREFIX):] if rname.startswith(OBJ_PREFIX) else rname
        objectives[key] = LinExpr(tuple(sorted(coefs[rname].items())), -rhs.get(rname, 0.0))
    return MilpModel(tuple(variables), tuple(constraints), objectives, sense=sense, name=name)
