"""Independent reference computations used to freeze expected values."""

import itertools
import math

import numpy as np


def standard_form(c, A, sense, b, ub):
    """Rewrite ``min c x, A x (sense) b, 0 <= x <= ub`` as ``min c' z, M z = b', z >= 0``."""
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    rows, rhs = [], []
    slack_cols = []
    for i in range(m):
        rows.append(A[i])
        rhs.append(b[i])
        if sense[i] != "E":
            slack_cols.append((i, 1.0 if sense[i] == "L" else -1.0))
    for j in range(n):
        if math.isfinite(ub[j]):
            e = np.zeros(n)
            e[j] = 1.0
            slack_cols.append((len(rows), 1.0))
            rows.append(e)
            rhs.append(ub[j])
    M = np.zeros((len(rows), n + len(slack_cols)))
    M[:, :n] = np.array(rows)
    for k, (i, s) in enumerate(slack_cols):
        M[i, n + k] = s
    cost = np.concatenate([np.asarray(c, dtype=float), np.zeros(len(slack_cols))])
    return cost, M, np.array(rhs)


def vertex_enumeration(c, A, sense, b, ub, tol=1e-9):
    """Minimum of a bounded LP over all basic feasible solutions.

    Returns ``(objective, x)`` or ``(None, None)`` when no vertex is feasible.
    """
    cost, M, rhs = standard_form(c, A, sense, b, ub)
    # drop linearly dependent rows; the system is consistent by construction
    keep = []
    for i in range(M.shape[0]):
        if np.linalg.matrix_rank(M[keep + [i]]) == len(keep) + 1:
            keep.append(i)
    M, rhs = M[keep], rhs[keep]
    m, N = M.shape
    n = len(c)
    best, arg = None, None
    combos = np.array(list(itertools.combinations(range(N), m)))
    for chunk in np.array_split(combos, max(1, len(combos) // 20000)):
        B = M[:, chunk].transpose(1, 0, 2)  # (K, m, m)
        det = np.linalg.det(B)
        ok = np.abs(det) > 1e-10
        if not ok.any():
            continue
        sub = chunk[ok]
        z = np.linalg.solve(B[ok], np.broadcast_to(rhs, (ok.sum(), m))[..., None])[..., 0]
        resid = np.abs(np.einsum("kij,kj->ki", B[ok], z) - rhs).max(axis=1)
        feas = (z >= -tol).all(axis=1) & (resid <= 1e-7 * (1 + np.abs(rhs).max()))
        if not feas.any():
            continue
        vals = (cost[sub[feas]] * z[feas]).sum(axis=1)
        k = int(np.argmin(vals))
        if best is None or vals[k] < best:
            best = float(vals[k])
            full = np.zeros(N)
            full[sub[feas][k]] = z[feas][k]
            arg = full[:n]
    return best, arg


def random_bounded_lp(rng, max_vars=20, max_basis=60000):
    """Random LP with a known interior point and a bounded feasible region."""
    while True:
        n = int(rng.integers(1, max_vars + 1))
        m = int(rng.integers(1, 6))
        n_ub = int(rng.integers(0, 3))
        sense = list(rng.choice(["L", "G", "E"], size=m, p=[0.5, 0.3, 0.2])) + ["L"]
        rows = m + 1 + n_ub
        slacks = sum(s != "E" for s in sense) + n_ub
        if math.comb(n + slacks, rows) <= max_basis and n + slacks >= rows:
            break
    x0 = rng.uniform(0.1, 1.0, n)
    A = rng.integers(-4, 5, size=(m, n)).astype(float)
    A[rng.random((m, n)) < 0.3] = 0.0
    A = np.vstack([A, np.ones(n)])
    gap = rng.uniform(0.0, 1.0, m + 1)
    gap[-1] = rng.uniform(0.5, 3.0)
    b = A @ x0
    for i, s in enumerate(sense):
        b[i] += gap[i] if s == "L" else -gap[i] if s == "G" else 0.0
    ub = np.full(n, math.inf)
    for j in rng.choice(n, size=min(n_ub, n), replace=False):
        ub[j] = x0[j] + rng.uniform(0.0, 1.0)
    c = rng.normal(size=n).round(3)
    return c, A, sense, b, ub
