"""
Reader and writer for a small free-format MPS subset.

Supported: NAME, ROWS (N/L/G/E), COLUMNS, RHS and BOUNDS with the kinds
UP, FX, FR, PL and LO 0.  Everything is canonicalized to
``min c'x, A x = b, x >= 0``:

* L and G rows get a slack column (``+s`` and ``-s``);
* an upper bound ``x_j <= u`` becomes a new row ``x_j + w = u``;
* a fixed bound ``x_j = v`` becomes a new row ``x_j = v``;
* a free variable is split into ``x+ - x-``.
"""
from dataclasses import dataclass, field

import numpy as np

from ..errors import MPSParseError
from ..problem import LOProblem

__all__ = ["ColumnMap", "read_mps", "write_mps", "parse_mps"]

SECTIONS = ("NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA")
ROW_KINDS = ("N", "L", "G", "E")


@dataclass
class ColumnMap:
    """Standard-form column names and how to map a solution back.

    ``terms[name]`` lists ``(column, sign)`` pairs whose signed sum is the
    value of the original variable ``name``.
    """

    names: list
    terms: dict = field(default_factory=dict)
    objective_offset: float = 0.0

    def recover(self, x):
        x = np.asarray(x, dtype=float)
        return {name: float(sum(sign * x[j] for j, sign in pairs))
                for name, pairs in self.terms.items()}


def _num(token, lineno):
    try:
        return float(token)
    except ValueError:
        raise MPSParseError(f"expected a number, got {token!r}", lineno) from None


def parse_mps(text, name=None):
    """Parse MPS ``text``; see ``read_mps``."""
    section = None
    prob_name = name
    obj_row = None
    row_kind = {}
    row_order = []
    col_order = []
    entries = {}
    rhs = {}
    bounds = {}
    seen_columns = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        tokens = line.split()
        if not raw[0].isspace():
            head = tokens[0].upper()
            if head not in SECTIONS:
                raise MPSParseError(f"unsupported section {tokens[0]!r}", lineno)
            section = head
            if head == "NAME":
                prob_name = prob_name or (tokens[1] if len(tokens) > 1 else None)
            if head == "ENDATA":
                break
            continue
        if section == "ROWS":
            if len(tokens) != 2 or tokens[0].upper() not in ROW_KINDS:
                raise MPSParseError(f"bad ROWS entry {line.strip()!r}", lineno)
            kind, row = tokens[0].upper(), tokens[1]
            if row in row_kind:
                raise MPSParseError(f"duplicate row {row!r}", lineno)
            row_kind[row] = kind
            if kind == "N":
                if obj_row is None:
                    obj_row = row
            else:
                row_order.append(row)
        elif section == "COLUMNS":
            if "'MARKER'" in tokens:
                raise MPSParseError("integer markers are not supported", lineno)
            if len(tokens) not in (3, 5):
                raise MPSParseError(f"bad COLUMNS entry {line.strip()!r}", lineno)
            col = tokens[0]
            if col not in entries:
                col_order.append(col)
                entries[col] = {}
            for row, val in zip(tokens[1::2], tokens[2::2]):
                if row not in row_kind:
                    raise MPSParseError(f"unknown row {row!r}", lineno)
                entries[col][row] = _num(val, lineno)
            seen_columns = True
        elif section == "RHS":
            pairs = tokens[1:] if len(tokens) % 2 == 1 else tokens
            if len(pairs) not in (2, 4):
                raise MPSParseError(f"bad RHS entry {line.strip()!r}", lineno)
            for row, val in zip(pairs[0::2], pairs[1::2]):
                if row not in row_kind:
                    raise MPSParseError(f"unknown row {row!r}", lineno)
                rhs[row] = _num(val, lineno)
        elif section == "BOUNDS":
            if len(tokens) == 3 and tokens[0].upper() in ("FR", "PL", "MI", "BV"):
                kind, col, val = tokens[0].upper(), tokens[2], None
            elif len(tokens) == 4:
                kind, col, val = tokens[0].upper(), tokens[2], _num(tokens[3], lineno)
            elif len(tokens) == 3:
                kind, col, val = tokens[0].upper(), tokens[1], _num(tokens[2], lineno)
            else:
                raise MPSParseError(f"bad BOUNDS entry {line.strip()!r}", lineno)
            if col not in entries:
                raise MPSParseError(f"bound on unknown column {col!r}", lineno)
            if kind == "UP":
                if val < 0:
                    raise MPSParseError("negative upper bounds are not supported", lineno)
            elif kind == "LO":
                if val != 0:
                    raise MPSParseError("nonzero lower bounds are not supported", lineno)
                continue
            elif kind == "PL":
                continue
            elif kind == "FX":
                if val < 0:
                    raise MPSParseError("negative fixed values are not supported", lineno)
            elif kind == "FR":
                pass
            else:
                raise MPSParseError(f"unsupported bound kind {kind!r}", lineno)
            bounds.setdefault(col, []).append((kind, val))
        elif section is None:
            raise MPSParseError("data before the first section header", lineno)
        else:
            raise MPSParseError(f"unexpected data in section {section}", lineno)

    if not seen_columns:
        raise MPSParseError("COLUMNS section is empty")
    if not row_order:
        raise MPSParseError("no constraint rows")
    return _canonicalize(prob_name, obj_row, row_kind, row_order, col_order, entries, rhs, bounds)


def _canonicalize(name, obj_row, row_kind, row_order, col_order, entries, rhs, bounds):
    rows = list(row_order)
    row_index = {r: i for i, r in enumerate(rows)}
    cols = []          # list of (name, {row_index: value}, cost)
    terms = {}
    for col in col_order:
        coeffs = {row_index[r]: v for r, v in entries[col].items() if r in row_index}
        cost = entries[col].get(obj_row, 0.0) if obj_row else 0.0
        kinds = [k for k, _ in bounds.get(col, [])]
        j = len(cols)
        cols.append((col, coeffs, cost))
        terms[col] = [(j, 1.0)]
        if "FR" in kinds:
            cols.append((f"{col}-", {i: -v for i, v in coeffs.items()}, -cost))
            terms[col].append((j + 1, -1.0))
    b = [rhs.get(r, 0.0) for r in rows]
    for r in row_order:
        kind = row_kind[r]
        if kind in ("L", "G"):
            sign = 1.0 if kind == "L" else -1.0
            cols.append((f"slack:{r}", {row_index[r]: sign}, 0.0))
    for col in col_order:
        for kind, val in bounds.get(col, []):
            if kind not in ("UP", "FX"):
                continue
            i = len(rows)
            rows.append(f"{kind.lower()}:{col}")
            b.append(val)
            for j, sign in terms[col]:
                cols[j][1][i] = sign
            if kind == "UP":
                cols.append((f"slack:up:{col}", {i: 1.0}, 0.0))
    m, n = len(rows), len(cols)
    A = np.zeros((m, n))
    c = np.zeros(n)
    for j, (_, coeffs, cost) in enumerate(cols):
        for i, v in coeffs.items():
            A[i, j] = v
        c[j] = cost
    offset = -rhs.get(obj_row, 0.0) if obj_row else 0.0
    problem = LOProblem(A, np.asarray(b, dtype=float), c, name=name)
    return problem, ColumnMap([cname for cname, _, _ in cols], terms, offset)


def read_mps(path):
    """Read an MPS file and canonicalize it to standard form.

    Returns
    -------
    problem : LOProblem
    columns : ColumnMap
        Standard-form column names plus the map back to the file's variables.

    Raises
    ------
    MPSParseError
        For unsupported sections or bound kinds (with the line number),
        malformed entries or an empty COLUMNS section.
    FileNotFoundError
        If ``path`` does not exist.
    """
    with open(path) as fh:
        return parse_mps(fh.read())


def _fmt(v):
    return repr(float(v))


def write_mps(problem, path, column_names=None):
    """Write a standard-form problem as MPS with only E rows and no bounds."""
    names = column_names or [f"X{j + 1}" for j in range(problem.n)]
    rows = [f"R{i + 1}" for i in range(problem.m)]
    lines = [f"NAME          {problem.name or 'LO'}", "ROWS", " N  OBJ"]
    lines += [f" E  {r}" for r in rows]
    lines.append("COLUMNS")
    for j, name in enumerate(names):
        if problem.c[j] != 0:
            lines.append(f"    {name}  OBJ  {_fmt(problem.c[j])}")
        for i in np.nonzero(problem.A[:, j])[0]:
            lines.append(f"    {name}  {rows[i]}  {_fmt(problem.A[i, j])}")
        if problem.c[j] == 0 and not np.any(problem.A[:, j]):
            lines.append(f"    {name}  OBJ  0.0")
    lines.append("RHS")
    for i, r in enumerate(rows):
        if problem.b[i] != 0:
            lines.append(f"    RHS  {r}  {_fmt(problem.b[i])}")
    lines.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
