"""Fixed-format MPS export and import.

Names longer than eight characters (or containing blanks) are replaced by
indexed short names; the mapping is written as ``* NAMEMAP`` comment lines so
that :func:`parse_mps` restores the original names. Numbers are written in at
most twelve characters; values needing more digits are rounded to the longest
representation that fits.
"""
from __future__ import annotations

import math
import re

import numpy as np
import scipy.sparse as sp

from .errors import DataError
from .lp import LpInstance

OBJ_ROW = "OBJ"
_SHORT = re.compile(r"^[CR][0-9A-Z]{7}$")
_B36 = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def format_number(v: float) -> str:
    """Shortest faithful text for ``v`` in at most 12 characters.

    The result is a fixed point: formatting the parsed value again yields the
    same text, which makes export -> parse -> export byte-identical.
    """
    if not math.isfinite(v):
        raise DataError(f"cannot write non-finite number {v}")
    if v == 0:
        return "0"
    s = _fit(v)
    while True:
        t = _fit(float(s))
        if t == s:
            return s
        s = t


def _compact(s: str) -> str:
    mant, e, exp = s.partition("e")
    if mant.startswith("0."):
        mant = mant[1:]
    elif mant.startswith("-0."):
        mant = "-" + mant[2:]
    if e:
        sign = "-" if exp.startswith("-") else ""
        exp = exp.lstrip("+-").lstrip("0") or "0"
        return f"{mant}e{sign}{exp}"
    return mant


def _fit(v: float) -> str:
    s = repr(v)
    if s.endswith(".0"):
        s = s[:-2]
    s = _compact(s)
    if len(s) <= 12:
        return s
    best = None
    for p in range(16, 0, -1):
        for spec in ("g", "f"):
            t = _compact(f"{v:.{p}{spec}}")
            if len(t) <= 12 and float(t) != 0.0:
                err = abs(float(t) - v)
                if best is None or err < best[0]:
                    best = (err, t)
        if best is not None and best[0] == 0.0:
            break
    if best is None:
        raise DataError(f"cannot fit {v} into 12 characters")
    return best[1]


def _base36(k: int, width: int) -> str:
    out = []
    for _ in range(width):
        k, r = divmod(k, 36)
        out.append(_B36[r])
    if k:
        raise DataError("too many names for 8-character MPS identifiers")
    return "".join(reversed(out))


def short_names(names: list[str], prefix: str, reserved: frozenset = frozenset()) -> list[str]:
    """Deterministic 8-character names; valid unique originals are kept."""
    out = []
    seen: dict[str, int] = {}
    for n in names:
        seen[n] = seen.get(n, 0) + 1
    for k, n in enumerate(names):
        keep = (
            0 < len(n) <= 8
            and " " not in n
            and not n.startswith("*")
            and seen[n] == 1
            and not _SHORT.match(n)
            and n not in reserved
        )
        out.append(n if keep else prefix + _base36(k, 7))
    return out


def _line(f1="", f2="", f3="", f4="", f5="", f6="") -> str:
    s = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        s += f"   {f5:<8}  {f6:>12}"
    return s.rstrip()


def export_mps(lp: LpInstance) -> str:
    """Fixed-format MPS text of ``lp`` (objective constant in the objective RHS)."""
    cols = short_names(lp.var_names, "C")
    rows = short_names(lp.row_names, "R", frozenset({OBJ_ROW}))
    name = lp.name.replace(" ", "_")[:40] or "model"
    out = [f"NAME          {name}"]
    for kind, originals, shorts in (("C", lp.var_names, cols), ("R", lp.row_names, rows)):
        for o, s in zip(originals, shorts):
            if o != s:
                out.append(f"* NAMEMAP {kind} {s} {o}")
    out.append("ROWS")
    out.append(_line("N", OBJ_ROW))
    for s, r in zip(lp.sense, rows):
        out.append(_line(str(s), r))
    out.append("COLUMNS")
    A = lp.A.tocsc()
    A.sort_indices()
    for j, c in enumerate(cols):
        entries = []
        if lp.cost[j] != 0.0:
            entries.append((OBJ_ROW, lp.cost[j]))
        lo, hi = A.indptr[j], A.indptr[j + 1]
        entries.extend((rows[i], v) for i, v in zip(A.indices[lo:hi], A.data[lo:hi]))
        if not entries:
            entries.append((OBJ_ROW, 0.0))
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            fields = ["", c, pair[0][0], format_number(pair[0][1])]
            if len(pair) == 2:
                fields += [pair[1][0], format_number(pair[1][1])]
            out.append(_line(*fields))
    out.append("RHS")
    rhs_entries = []
    if lp.offset != 0.0:
        rhs_entries.append((OBJ_ROW, -lp.offset))
    rhs_entries.extend((rows[i], v) for i, v in enumerate(lp.rhs) if v != 0.0)
    for k in range(0, len(rhs_entries), 2):
        pair = rhs_entries[k:k + 2]
        fields = ["", "RHS", pair[0][0], format_number(pair[0][1])]
        if len(pair) == 2:
            fields += [pair[1][0], format_number(pair[1][1])]
        out.append(_line(*fields))
    out.append("BOUNDS")
    for j, c in enumerate(cols):
        lo, hi = lp.lb[j], lp.ub[j]
        if lo == hi:
            out.append(_line("FX", "BND", c, format_number(lo)))
            continue
        if lo == -math.inf and hi == math.inf:
            out.append(_line("FR", "BND", c))
            continue
        if lo == -math.inf:
            out.append(_line("MI", "BND", c))
        elif lo != 0.0:
            out.append(_line("LO", "BND", c, format_number(lo)))
        if hi != math.inf:
            out.append(_line("UP", "BND", c, format_number(hi)))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def parse_mps(text: str) -> LpInstance:
    """Read MPS text as written by :func:`export_mps` (also plain fixed/free MPS without RANGES)."""
    names = {"C": {}, "R": {}}
    section = None
    model = "model"
    obj_row = None
    row_order: list[str] = []
    senses: dict[str, str] = {}
    col_order: list[str] = []
    col_pos: dict[str, int] = {}
    cost: dict[int, float] = {}
    entries: list[tuple[str, int, float]] = []
    rhs: dict[str, float] = {}
    offset = 0.0
    bounds: dict[int, list[float]] = {}

    def num(tok, lineno):
        try:
            return float(tok)
        except ValueError:
            raise DataError(f"MPS line {lineno}: bad number {tok!r}") from None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.startswith("*"):
            parts = raw.split(None, 4)
            if len(parts) == 5 and parts[1] == "NAMEMAP" and parts[2] in names:
                names[parts[2]][parts[3]] = parts[4]
            continue
        if not raw.strip():
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0]
            if section == "NAME":
                model = head[1] if len(head) > 1 else model
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS"):
                raise DataError(f"MPS line {lineno}: unsupported section {section}")
            continue
        tok = raw.split()
        if section == "ROWS":
            if len(tok) != 2 or tok[0] not in ("N", "L", "E", "G"):
                raise DataError(f"MPS line {lineno}: bad row entry")
            if tok[0] == "N":
                if obj_row is None:
                    obj_row = tok[1]
                continue
            if tok[1] in senses:
                raise DataError(f"MPS line {lineno}: duplicate row {tok[1]}")
            senses[tok[1]] = tok[0]
            row_order.append(tok[1])
        elif section == "COLUMNS":
            if "'MARKER'" in tok:
                raise DataError(f"MPS line {lineno}: integer markers are not supported")
            if len(tok) not in (3, 5):
                raise DataError(f"MPS line {lineno}: bad column entry")
            c = tok[0]
            if c not in col_pos:
                col_pos[c] = len(col_order)
                col_order.append(c)
            j = col_pos[c]
            for r, v in zip(tok[1::2], tok[2::2]):
                val = num(v, lineno)
                if r == obj_row:
                    cost[j] = cost.get(j, 0.0) + val
                elif r in senses:
                    entries.append((r, j, val))
                else:
                    raise DataError(f"MPS line {lineno}: unknown row {r}")
        elif section == "RHS":
            if len(tok) not in (3, 5):
                raise DataError(f"MPS line {lineno}: bad RHS entry")
            for r, v in zip(tok[1::2], tok[2::2]):
                val = num(v, lineno)
                if r == obj_row:
                    offset = -val
                elif r in senses:
                    rhs[r] = val
                else:
                    raise DataError(f"MPS line {lineno}: unknown row {r}")
        elif section == "BOUNDS":
            kind = tok[0]
            if kind in ("FR", "MI", "PL", "BV"):
                if len(tok) < 3:
                    raise DataError(f"MPS line {lineno}: bad bound entry")
                c, val = tok[2], None
            elif len(tok) == 4:
                c, val = tok[2], num(tok[3], lineno)
            else:
                raise DataError(f"MPS line {lineno}: bad bound entry")
            if c not in col_pos:
                raise DataError(f"MPS line {lineno}: unknown column {c}")
            b = bounds.setdefault(col_pos[c], [0.0, math.inf])
            if kind == "UP":
                b[1] = val
            elif kind == "LO":
                b[0] = val
            elif kind == "FX":
                b[0] = b[1] = val
            elif kind == "FR":
                b[0], b[1] = -math.inf, math.inf
            elif kind == "MI":
                b[0] = -math.inf
            elif kind == "PL":
                b[1] = math.inf
            else:
                raise DataError(f"MPS line {lineno}: unsupported bound type {kind}")
        else:
            raise DataError(f"MPS line {lineno}: data outside a section")

    n, m = len(col_order), len(row_order)
    rpos = {r: i for i, r in enumerate(row_order)}
    lb = np.zeros(n)
    ub = np.full(n, math.inf)
    for j, (lo, hi) in bounds.items():
        lb[j], ub[j] = lo, hi
    c = np.zeros(n)
    for j, v in cost.items():
        c[j] = v
    A = sp.csr_matrix(
        (
            np.array([e[2] for e in entries], dtype=float),
            (np.array([rpos[e[0]] for e in entries], dtype=np.int64), np.array([e[1] for e in entries], dtype=np.int64)),
        ),
        shape=(m, n),
    )
    A.sum_duplicates()
    A.sort_indices()
    return LpInstance(
        name=model,
        var_names=[names["C"].get(k, k) for k in col_order],
        lb=lb, ub=ub, cost=c,
        row_names=[names["R"].get(k, k) for k in row_order],
        sense=np.array([senses[r] for r in row_order], dtype="<U1"),
        rhs=np.array([rhs.get(r, 0.0) for r in row_order]),
        A=A,
        offset=offset,
    )
