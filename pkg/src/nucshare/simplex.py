"""Bounded-variable revised simplex.

Each row ``a_i x (sense) b_i`` gets a logical variable ``r_i = a_i x`` whose
bounds encode the sense, so the working problem is

    min c^T x   s.t.   A x - r = 0,   l <= (x, r) <= u.

The basis starts with all logicals. When every cost has a sign compatible
with a finite bound (the usual case for cost-minimizing energy models) that
basis is dual feasible and the dual simplex with dual steepest-edge pricing
runs from it. Otherwise a composite primal phase 1 finds a feasible basis and
the primal simplex finishes. The basis inverse is kept as a sparse LU
factorization followed by a product-form eta file that is refreshed
periodically.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .lp import LpInstance


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL_ERROR = "numerical_error"


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-7
    optimality: float = 1e-7
    pivot: float = 1e-7
    max_iterations: int = 200_000
    refactor_every: int = 64
    bland_after: int = 1000


@dataclass(frozen=True)
class Snapshot:
    """Objective bounds at one iteration.

    ``dual_bound`` is the Lagrangian lower bound implied by the current
    multipliers (``-inf`` when they certify nothing); ``primal_objective`` is
    an upper bound only when ``primal_feasible`` is set.
    """

    iteration: int
    phase: str
    primal_objective: float
    dual_bound: float
    primal_feasible: bool


@dataclass
class Solution:
    status: Status
    x: np.ndarray
    duals: np.ndarray  # d objective / d rhs per row
    reduced_costs: np.ndarray
    objective: float
    iterations: int
    message: str = ""
    trace: list[Snapshot] = field(default_factory=list)
    var_names: list[str] = field(default_factory=list)
    row_names: list[str] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def value(self, name: str) -> float:
        return float(self.x[self.var_names.index(name)])

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.var_names, self.x)}


# nonbasic / basic states
_BASIC, _LB, _UB, _FREE, _FIXED = 0, 1, 2, 3, 4


class _Breakdown(Exception):
    pass


class _Engine:
    def __init__(self, A: sp.csc_matrix, c, lo, hi, tol: Tolerances, log, trace_every: int,
                 offset: float = 0.0):
        m, n = A.shape
        self.m, self.n = m, n
        self.M = sp.hstack([A, -sp.identity(m, format="csc")], format="csc")
        self.M.sort_indices()
        self.MT = self.M.T.tocsr()
        self.c = np.concatenate([c, np.zeros(m)])
        self.c_true = self.c
        self.lo = lo
        self.hi = hi
        self.tol = tol
        self.log = log
        self.trace_every = trace_every
        self.trace: list[Snapshot] = []
        self.offset = offset
        self.iters = 0
        N = n + m
        self.state = np.empty(N, dtype=np.int8)
        self.x = np.zeros(N)
        self.head = np.arange(n, n + m)
        self.state[n:] = _BASIC
        self.fixed = lo == hi
        self.lu = None
        self.etas: list = []

    # -- linear algebra ----------------------------------------------------------

    def refactor(self):
        B = self.M[:, self.head].tocsc()
        try:
            self.lu = splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
        except RuntimeError as exc:
            raise _Breakdown(f"basis factorization failed: {exc}") from None
        self.etas = []

    def ftran(self, v: np.ndarray) -> np.ndarray:
        y = self.lu.solve(v)
        for r, idx, vals, piv in self.etas:
            yr = y[r] / piv
            if yr != 0.0:
                y[idx] -= vals * yr
            y[r] = yr
        return y

    def btran(self, v: np.ndarray) -> np.ndarray:
        y = v.copy()
        for r, idx, vals, piv in reversed(self.etas):
            y[r] = (y[r] - vals @ y[idx]) / piv
        return self.lu.solve(y, trans="T")

    def column(self, j: int) -> np.ndarray:
        v = np.zeros(self.m)
        lo, hi = self.M.indptr[j], self.M.indptr[j + 1]
        v[self.M.indices[lo:hi]] = self.M.data[lo:hi]
        return v

    def push_eta(self, r: int, aq: np.ndarray):
        idx = np.flatnonzero(aq)
        idx = idx[idx != r]
        self.etas.append((r, idx, aq[idx].copy(), aq[r]))

    def compute_xb(self):
        xn = self.x.copy()
        xn[self.head] = 0.0
        self.x[self.head] = self.ftran(-(self.M @ xn))

    def compute_duals(self, cvec):
        pi = self.btran(cvec[self.head])
        d = cvec - self.MT @ pi
        d[self.head] = 0.0
        return pi, d

    # -- helpers -------------------------------------------------------------------

    def place_nonbasic(self, j: int, prefer_upper: bool):
        lo, hi = self.lo[j], self.hi[j]
        if lo == hi:
            self.state[j], self.x[j] = _FIXED, lo
        elif prefer_upper and hi < math.inf:
            self.state[j], self.x[j] = _UB, hi
        elif lo > -math.inf:
            self.state[j], self.x[j] = _LB, lo
        elif hi < math.inf:
            self.state[j], self.x[j] = _UB, hi
        else:
            self.state[j], self.x[j] = _FREE, 0.0

    def infeasibility(self):
        xb = self.x[self.head]
        below = self.lo[self.head] - xb
        above = xb - self.hi[self.head]
        return np.maximum(np.maximum(below, above), 0.0)

    def objective(self) -> float:
        return float(self.c_true @ self.x) + self.offset

    def lagrange_bound(self, d) -> float:
        t = self.tol.optimality
        pos = d > t
        neg = d < -t
        with np.errstate(invalid="ignore"):
            val = float(d[pos] @ self.lo[pos] + d[neg] @ self.hi[neg])
        return (val if math.isfinite(val) else -math.inf) + self.offset

    def snapshot(self, phase, feasible):
        if self.trace_every and self.iters % self.trace_every == 0:
            _, d = self.compute_duals(self.c_true)
            self.trace.append(Snapshot(self.iters, phase, self.objective(), self.lagrange_bound(d), feasible))

    def perturb(self, seed: int = 0):
        """Shift structural costs away from zero reduced cost (dual degeneracy)."""
        rng = np.random.default_rng(seed)
        n = self.n
        base = self.c_true[:n]
        xi = 3e-4 * (1.0 + np.abs(base)) * (1.0 + rng.random(n))
        sign = np.where(self.state[:n] == _LB, 1.0, np.where(self.state[:n] == _UB, -1.0, 0.0))
        self.c = self.c_true.copy()
        self.c[:n] += sign * xi

    def unperturb(self):
        self.c = self.c_true

    def watch(self, progress: float, best: float, bland: bool) -> tuple[bool, float]:
        """Every ``bland_after`` iterations compare ``progress`` (to be minimized)
        with the previous checkpoint; a flat window turns on the lowest-index
        rule, which stays on until a window shows progress again."""
        if self.iters % self.tol.bland_after:
            return bland, best
        moved = best == math.inf or progress < best - 1e-9 * (1.0 + abs(best))
        if moved == bland:
            bland = not moved
            self.note(f"iter {self.iters}: lowest-index rule {'on' if bland else 'off'}")
        return bland, progress

    def note(self, msg: str):
        if self.log:
            self.log(msg)

    # -- dual simplex ----------------------------------------------------------------

    def dual_feasible_start(self) -> bool:
        """Put nonbasics on the bound their cost sign asks for."""
        t = self.tol.optimality
        ok = True
        for j in range(self.n):
            cj = self.c[j]
            self.place_nonbasic(j, prefer_upper=cj < 0)
            s = self.state[j]
            if (cj > t and s not in (_LB, _FIXED)) or (cj < -t and s not in (_UB, _FIXED)):
                ok = False
        return ok

    def dual(self) -> Status:
        tol = self.tol
        m = self.m
        self.refactor()
        self.compute_xb()
        _, d = self.compute_duals(self.c)
        w = np.ones(m)
        since_refactor = 0
        best, bland = math.inf, False
        while True:
            if self.iters >= tol.max_iterations:
                return Status.ITERATION_LIMIT
            if since_refactor >= tol.refactor_every:
                self.refactor()
                self.compute_xb()
                _, d = self.compute_duals(self.c)
                since_refactor = 0
            head = self.head
            infeas = self.infeasibility()
            bad = infeas > tol.feasibility
            if not bad.any():
                self.snapshot("dual", False)
                return Status.OPTIMAL
            if bland:
                cand = np.flatnonzero(bad)
                r = int(cand[np.argmin(head[cand])])
            else:
                score = np.where(bad, infeas * infeas / w, -1.0)
                r = int(np.argmax(score))
            p = int(head[r])
            xp = self.x[p]
            to_lower = xp < self.lo[p]
            target = self.lo[p] if to_lower else self.hi[p]
            er = np.zeros(m)
            er[r] = 1.0
            rho = self.btran(er)
            arow = self.MT @ rho
            arow[head] = 0.0
            at = arow if to_lower else -arow
            st = self.state
            piv = tol.pivot
            lbm = ((st == _LB) & (at < -piv))
            ubm = ((st == _UB) & (at > piv))
            frm = ((st == _FREE) & (np.abs(at) > piv))
            cand = np.flatnonzero(lbm | ubm | frm)
            if cand.size == 0:
                return Status.INFEASIBLE
            a_abs = np.abs(at[cand])
            dc = d[cand]
            sd = np.where(lbm[cand], dc, np.where(ubm[cand], -dc, np.abs(dc)))
            sd = np.maximum(sd, 0.0)
            ratio = sd / a_abs
            if bland:
                tmin = ratio.min()
                ties = cand[ratio <= tmin + 1e-12]
                q = int(ties.min())
            else:
                tmax = ((sd + tol.optimality) / a_abs).min()
                elig = ratio <= tmax
                k = np.flatnonzero(elig)
                q = int(cand[k[np.argmax(a_abs[k])]])
            kq = int(np.searchsorted(cand, q))
            tstep = max(float(ratio[kq]), 0.0)

            aq = self.ftran(self.column(q))
            alpha_r = aq[r]
            if abs(alpha_r) < piv or abs(alpha_r - arow[q]) > 1e-6 * (1.0 + abs(alpha_r)):
                if since_refactor == 0:
                    raise _Breakdown(f"unstable pivot {alpha_r:.3e} at iteration {self.iters}")
                since_refactor = tol.refactor_every
                continue

            # dual update
            d += tstep * at
            d[q] = 0.0
            d[head] = 0.0
            d[p] = tstep if to_lower else -tstep
            # primal update
            theta = (xp - target) / alpha_r
            self.x[head] -= theta * aq
            xq = self.x[q] + theta
            # steepest-edge weights
            tau = self.ftran(rho)
            ratio_w = aq / alpha_r
            wr = float(rho @ rho)  # exact for the pivotal row
            w = np.maximum(w - 2.0 * ratio_w * tau + ratio_w * ratio_w * wr, 1e-8)
            w[r] = max(wr / (alpha_r * alpha_r), 1e-8)
            if not np.isfinite(w).all():
                w = np.ones(m)
            # basis change
            self.head[r] = q
            self.state[q] = _BASIC
            self.x[q] = xq
            self.state[p] = _FIXED if self.fixed[p] else (_LB if to_lower else _UB)
            self.x[p] = target
            self.push_eta(r, aq)
            since_refactor += 1
            self.iters += 1

            total = float(infeas.sum())
            # the dual objective never decreases; a flat stretch means degeneracy
            bland, best = self.watch(-float(self.c @ self.x), best, bland)
            if self.log and self.iters % 500 == 0:
                self.note(
                    f"iter {self.iters} dual obj {self.objective():.10g} "
                    f"infeas {total:.3e} etas {len(self.etas)}"
                )
            self.snapshot("dual", False)

    # -- primal simplex ------------------------------------------------------------------

    def primal(self, phase: int) -> Status:
        tol = self.tol
        m = self.m
        self.refactor()
        self.compute_xb()
        since_refactor = 0
        best, bland = math.inf, False
        while True:
            if self.iters >= tol.max_iterations:
                return Status.ITERATION_LIMIT
            if since_refactor >= tol.refactor_every:
                self.refactor()
                self.compute_xb()
                since_refactor = 0
            head = self.head
            xb = self.x[head]
            lob, hib = self.lo[head], self.hi[head]
            ftol = tol.feasibility
            below = xb < lob - ftol
            above = xb > hib + ftol
            if phase == 1:
                if not (below.any() or above.any()):
                    return Status.OPTIMAL
                cvec = np.zeros(self.n + m)
                cvec[head] = np.where(below, -1.0, np.where(above, 1.0, 0.0))
                progress = float(np.sum(np.maximum(lob - xb, 0) + np.maximum(xb - hib, 0)))
            else:
                cvec = self.c
                progress = self.objective()
            _, d = self.compute_duals(cvec)
            if phase == 2:
                self.snapshot("primal", True)
            st = self.state
            otol = tol.optimality
            elig = ((st == _LB) & (d < -otol)) | ((st == _UB) & (d > otol)) | ((st == _FREE) & (np.abs(d) > otol))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return Status.INFEASIBLE if phase == 1 else Status.OPTIMAL
            q = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            s = 1.0 if d[q] < 0 else -1.0
            aq = self.ftran(self.column(q))
            rate = -s * aq
            piv = tol.pivot
            # ratio test over basics: (distance, relaxed distance, leaving bound)
            dec = rate < -piv
            inc = rate > piv
            lim = np.full(m, math.inf)
            relaxed = np.full(m, math.inf)
            to_upper = np.zeros(m, dtype=bool)
            if phase == 1:
                # infeasible basics stop at the bound they violate
                a1 = dec & above
                lim[a1] = (xb[a1] - hib[a1]) / -rate[a1]
                relaxed[a1] = lim[a1]
                to_upper[a1] = True
                b1 = inc & below
                lim[b1] = (lob[b1] - xb[b1]) / rate[b1]
                relaxed[b1] = lim[b1]
                feas = ~(below | above)
            else:
                feas = np.ones(m, dtype=bool)
            d1 = dec & feas & (lob > -math.inf)
            lim[d1] = (xb[d1] - lob[d1]) / -rate[d1]
            relaxed[d1] = (xb[d1] - lob[d1] + ftol) / -rate[d1]
            i1 = inc & feas & (hib < math.inf)
            lim[i1] = (hib[i1] - xb[i1]) / rate[i1]
            relaxed[i1] = (hib[i1] - xb[i1] + ftol) / rate[i1]
            to_upper[i1] = True
            flip = self.hi[q] - self.lo[q]
            tmax = relaxed.min()
            if not math.isfinite(tmax) and not math.isfinite(flip):
                if phase == 1:
                    raise _Breakdown("phase 1 direction without breakpoint")
                return Status.UNBOUNDED
            if flip <= tmax:
                theta = flip
                r = -1
            else:
                ok = np.flatnonzero(lim <= tmax)
                if bland:
                    tmin = lim[ok].min()
                    ties = ok[lim[ok] <= tmin + 1e-12]
                    r = int(ties[np.argmin(head[ties])])
                else:
                    r = int(ok[np.argmax(np.abs(aq[ok]))])
                theta = max(float(lim[r]), 0.0)
            self.x[head] += theta * rate
            self.x[q] += s * theta
            if r < 0:
                self.state[q] = _UB if s > 0 else _LB
                self.x[q] = self.hi[q] if s > 0 else self.lo[q]
            else:
                p = int(head[r])
                self.head[r] = q
                self.state[q] = _BASIC
                self.state[p] = _FIXED if self.fixed[p] else (_UB if to_upper[r] else _LB)
                self.x[p] = self.hi[p] if to_upper[r] else self.lo[p]
                self.push_eta(r, aq)
                since_refactor += 1
            self.iters += 1
            bland, best = self.watch(progress, best, bland)
            if self.log and self.iters % 500 == 0:
                self.note(f"iter {self.iters} primal phase {phase} value {progress:.10g}")

    def primal_start(self):
        for j in range(self.n):
            self.place_nonbasic(j, prefer_upper=False)


def _logical_bounds(sense, rhs):
    lo = np.where(sense == "L", -np.inf, rhs)
    hi = np.where(sense == "G", np.inf, rhs)
    return lo, hi


def solve(lp: LpInstance, tol: Tolerances | None = None, log: Callable[[str], None] | None = None,
          trace_every: int = 0) -> Solution:
    """Solve ``lp``; never raises on numerical trouble (see ``Solution.status``).

    Fixed variables and rows left without entries are removed before the
    simplex runs and restored afterwards. ``trace_every > 0`` records a
    :class:`Snapshot` every that many iterations.
    """
    tol = tol or Tolerances()
    n, m = lp.n_vars, lp.n_rows
    A = lp.A.tocsc()
    fixed = lp.lb == lp.ub
    keep_c = np.flatnonzero(~fixed)
    xfix = np.where(fixed, lp.lb, 0.0)
    rhs = lp.rhs - A @ xfix
    offset = lp.offset + float(lp.cost[fixed] @ lp.lb[fixed]) if fixed.any() else lp.offset
    Ar = A[:, keep_c].tocsc()
    nnz_rows = np.diff(Ar.tocsr().indptr) > 0
    empty = np.flatnonzero(~nnz_rows)
    ftol = tol.feasibility
    for i in empty:
        s, b = lp.sense[i], rhs[i]
        if (s == "L" and b < -ftol) or (s == "G" and b > ftol) or (s == "E" and abs(b) > ftol):
            return _failed(lp, Status.INFEASIBLE, 0, f"row {lp.row_names[i]} cannot be satisfied")
    keep_r = np.flatnonzero(nnz_rows)
    Ar = Ar[keep_r, :].tocsc()
    lo_r, hi_r = _logical_bounds(lp.sense[keep_r], rhs[keep_r])
    rs, cs = _scale_factors(Ar)
    As = sp.diags(rs) @ Ar @ sp.diags(cs)
    lo = np.concatenate([lp.lb[keep_c] / cs, lo_r * rs])
    hi = np.concatenate([lp.ub[keep_c] / cs, hi_r * rs])
    eng = _Engine(As.tocsc(), lp.cost[keep_c] * cs, lo, hi, tol, log, trace_every, offset)

    try:
        status = _run(eng)
    except _Breakdown as exc:
        return _failed(lp, Status.NUMERICAL_ERROR, eng.iters, str(exc), eng.trace)

    nk = len(keep_c)
    x = xfix.copy()
    x[keep_c] = eng.x[:nk] * cs
    if status is Status.OPTIMAL:
        # basic values may sit a hair outside their bounds
        np.clip(x, lp.lb, lp.ub, out=x)
    duals = np.zeros(m)
    if status is Status.OPTIMAL:
        pi, _ = eng.compute_duals(eng.c)
        duals[keep_r] = pi * rs
    red = lp.cost - A.T @ duals
    obj = lp.objective(x)
    msg = f"{status.value} after {eng.iters} iterations"
    eng.note(msg)
    return Solution(status, x, duals, red, obj, eng.iters, msg, eng.trace,
                    list(lp.var_names), list(lp.row_names))


def _scale_factors(A: sp.csc_matrix, passes: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Geometric-mean row and column scaling rounded to powers of two."""
    m, n = A.shape
    rs, cs = np.ones(m), np.ones(n)
    if A.nnz == 0:
        return rs, cs
    coo = A.tocoo()
    i, j = coo.row, coo.col
    a = np.abs(coo.data)
    for _ in range(passes):
        v = a * rs[i] * cs[j]
        big = np.zeros(m)
        small = np.full(m, np.inf)
        np.maximum.at(big, i, v)
        np.minimum.at(small, i, v)
        ok = big > 0
        rs[ok] /= np.sqrt(big[ok] * small[ok])
        v = a * rs[i] * cs[j]
        big = np.zeros(n)
        small = np.full(n, np.inf)
        np.maximum.at(big, j, v)
        np.minimum.at(small, j, v)
        ok = big > 0
        cs[ok] /= np.sqrt(big[ok] * small[ok])
    return np.exp2(np.round(np.log2(rs))), np.exp2(np.round(np.log2(cs)))


def _run(eng: _Engine) -> Status:
    if eng.dual_feasible_start():
        eng.perturb()
        status = eng.dual()
        eng.unperturb()
        if status is not Status.OPTIMAL:
            return status
        # restore the true costs; the primal pass removes what the shift left behind
        return eng.primal(2)
    eng.primal_start()
    status = eng.primal(1)
    if status is not Status.OPTIMAL:
        return status
    return eng.primal(2)


def _failed(lp: LpInstance, status: Status, iters: int, msg: str, trace=None) -> Solution:
    nan = np.full(lp.n_vars, np.nan)
    return Solution(status, nan, np.full(lp.n_rows, np.nan), nan.copy(), math.nan, iters, msg,
                    list(trace or []), list(lp.var_names), list(lp.row_names))
