"""Sparse linear program container and an incremental builder."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import BuildError

SENSES = ("L", "E", "G")  # <=, =, >=


class VarMeta(NamedTuple):
    """Model entity behind a variable or row."""

    kind: str
    entity: str = ""
    region: str = ""
    step: int = -1


@dataclass
class LpInstance:
    """``min cost @ x + offset`` s.t. ``A x (sense) rhs``, ``lb <= x <= ub``."""

    name: str
    var_names: list[str]
    lb: np.ndarray
    ub: np.ndarray
    cost: np.ndarray
    row_names: list[str]
    sense: np.ndarray  # array of "L" / "E" / "G"
    rhs: np.ndarray
    A: sp.csr_matrix
    offset: float = 0.0
    var_meta: list[VarMeta] = field(default_factory=list)
    row_meta: list[VarMeta] = field(default_factory=list)
    layout: object = None  # model-entity map attached by the model builder

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    def var_index(self) -> dict[str, int]:
        return {n: k for k, n in enumerate(self.var_names)}

    def row_index(self) -> dict[str, int]:
        return {n: k for k, n in enumerate(self.row_names)}

    def objective(self, x: np.ndarray) -> float:
        return float(self.cost @ x) + self.offset

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """Per-row violation (zero when satisfied)."""
        ax = self.A @ x
        viol = np.zeros(self.n_rows)
        le = self.sense == "L"
        ge = self.sense == "G"
        eq = self.sense == "E"
        viol[le] = np.maximum(ax[le] - self.rhs[le], 0)
        viol[ge] = np.maximum(self.rhs[ge] - ax[ge], 0)
        viol[eq] = np.abs(ax[eq] - self.rhs[eq])
        return viol

    def bound_violation(self, x: np.ndarray) -> float:
        return float(max(np.max(self.lb - x, initial=0.0), np.max(x - self.ub, initial=0.0)))

    def check(self) -> None:
        """Raise :class:`BuildError` on structural defects."""
        if len(set(self.var_names)) != self.n_vars:
            raise BuildError("duplicate variable names")
        if len(set(self.row_names)) != self.n_rows:
            raise BuildError("duplicate row names")
        if self.A.shape != (self.n_rows, self.n_vars):
            raise BuildError("matrix shape does not match the declared rows and variables")
        if np.any(self.lb > self.ub):
            k = int(np.argmax(self.lb > self.ub))
            raise BuildError(f"variable {self.var_names[k]}: lower bound above upper bound")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)) or not np.all(np.isfinite(self.cost)):
            raise BuildError("bounds or costs contain NaN")
        if not np.all(np.isfinite(self.rhs)):
            raise BuildError("right-hand sides must be finite")
        if not set(np.unique(self.sense)) <= set(SENSES):
            raise BuildError("unknown row sense")

    def summary(self) -> dict:
        """Counts of variables and rows per kind."""
        def count(meta):
            out: dict[str, int] = {}
            for m in meta:
                out[m.kind] = out.get(m.kind, 0) + 1
            return dict(sorted(out.items()))

        return {
            "name": self.name,
            "variables": self.n_vars,
            "rows": self.n_rows,
            "nonzeros": int(self.A.nnz),
            "variables_by_kind": count(self.var_meta),
            "rows_by_kind": count(self.row_meta),
        }

    def permuted(self, col_perm, row_perm) -> "LpInstance":
        """Same program with columns and rows reordered."""
        col_perm = np.asarray(col_perm)
        row_perm = np.asarray(row_perm)
        return LpInstance(
            name=self.name,
            var_names=[self.var_names[k] for k in col_perm],
            lb=self.lb[col_perm], ub=self.ub[col_perm], cost=self.cost[col_perm],
            row_names=[self.row_names[k] for k in row_perm],
            sense=self.sense[row_perm], rhs=self.rhs[row_perm],
            A=self.A[row_perm][:, col_perm].tocsr(),
            offset=self.offset,
            var_meta=[self.var_meta[k] for k in col_perm] if self.var_meta else [],
            row_meta=[self.row_meta[k] for k in row_perm] if self.row_meta else [],
        )


class LpBuilder:
    """Accumulates variables and rows; :meth:`finish` freezes them."""

    def __init__(self, name: str = "model"):
        self.name = name
        self._vnames: list[str] = []
        self._vindex: dict[str, int] = {}
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._cost: list[float] = []
        self._vmeta: list[VarMeta] = []
        self._rnames: list[str] = []
        self._rindex: set[str] = set()
        self._sense: list[str] = []
        self._rhs: list[float] = []
        self._rmeta: list[VarMeta] = []
        self._ri: list[int] = []
        self._ci: list[int] = []
        self._val: list[float] = []
        self.offset = 0.0

    @property
    def n_vars(self) -> int:
        return len(self._vnames)

    @property
    def n_rows(self) -> int:
        return len(self._rnames)

    def var(self, name: str, lb: float = 0.0, ub: float = math.inf, cost: float = 0.0,
            meta: VarMeta | None = None) -> int:
        if name in self._vindex:
            raise BuildError(f"duplicate variable {name}")
        k = len(self._vnames)
        self._vindex[name] = k
        self._vnames.append(name)
        self._lb.append(lb)
        self._ub.append(ub)
        self._cost.append(cost)
        self._vmeta.append(meta or VarMeta("other"))
        return k

    def add_cost(self, k: int, c: float) -> None:
        self._cost[k] += c

    def row(self, name: str, coefs, sense: str, rhs: float = 0.0, meta: VarMeta | None = None) -> int:
        """Add a row from ``(variable index, coefficient)`` pairs.

        Duplicate indices are summed and exact zeros dropped; an empty row is
        checked against its right-hand side and then discarded (returns -1).
        """
        if sense not in SENSES:
            raise BuildError(f"row {name}: unknown sense {sense!r}")
        if name in self._rindex:
            raise BuildError(f"duplicate row {name}")
        merged: dict[int, float] = {}
        for k, v in coefs:
            if not 0 <= k < len(self._vnames):
                raise BuildError(f"row {name}: unknown variable index {k}")
            merged[k] = merged.get(k, 0.0) + v
        merged = {k: v for k, v in merged.items() if v != 0.0}
        if not merged:
            ok = (sense == "L" and rhs >= 0) or (sense == "G" and rhs <= 0) or (sense == "E" and rhs == 0)
            if not ok:
                raise BuildError(f"row {name}: no variables but right-hand side {rhs} cannot be met")
            return -1
        r = len(self._rnames)
        self._rindex.add(name)
        self._rnames.append(name)
        self._sense.append(sense)
        self._rhs.append(float(rhs))
        self._rmeta.append(meta or VarMeta("other"))
        for k in sorted(merged):
            self._ri.append(r)
            self._ci.append(k)
            self._val.append(merged[k])
        return r

    def finish(self) -> LpInstance:
        m, n = len(self._rnames), len(self._vnames)
        A = sp.csr_matrix(
            (np.array(self._val, dtype=float), (np.array(self._ri, dtype=np.int64), np.array(self._ci, dtype=np.int64))),
            shape=(m, n),
        )
        A.sum_duplicates()
        A.sort_indices()
        lp = LpInstance(
            name=self.name,
            var_names=list(self._vnames),
            lb=np.array(self._lb, dtype=float),
            ub=np.array(self._ub, dtype=float),
            cost=np.array(self._cost, dtype=float),
            row_names=list(self._rnames),
            sense=np.array(self._sense, dtype="<U1"),
            rhs=np.array(self._rhs, dtype=float),
            A=A,
            offset=self.offset,
            var_meta=list(self._vmeta),
            row_meta=list(self._rmeta),
        )
        lp.check()
        return lp


def from_dense(c, A, sense, b, lb=None, ub=None, name: str = "lp") -> LpInstance:
    """Convenience constructor for small programs given as dense arrays."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape if A.size else (0, len(c))
    bld = LpBuilder(name)
    lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=float)
    ub = np.full(n, math.inf) if ub is None else np.asarray(ub, dtype=float)
    for j in range(n):
        bld.var(f"x{j}", lb[j], ub[j], float(c[j]))
    for i in range(m):
        bld.row(f"c{i}", [(j, A[i, j]) for j in range(n)], sense[i], float(b[i]))
    return bld.finish()
