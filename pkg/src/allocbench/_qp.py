"""Primal active-set solver for small dense convex QPs with bounds.

Solves::

    min 0.5 x'Qx + c'x   s.t.  A x = b,  lb <= x <= ub

with Q positive semidefinite.  The working set holds variables fixed at one of
their bounds; on each face the equality-constrained subproblem is solved in
the null space of the free columns of A.  Free columns of A are kept at full
row rank so the equality multipliers are unique.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .exceptions import ConvergenceError, InfeasibleError

_LOWER, _FREE, _UPPER = -1, 0, 1


def _independent_rows(A, b, tol=1e-12):
    """Drop linearly dependent equality rows; raise if they are inconsistent."""
    if A.shape[0] == 0:
        return A, b
    keep = []
    for i in range(A.shape[0]):
        trial = A[keep + [i]]
        if np.linalg.matrix_rank(trial, tol=tol * max(1.0, np.abs(trial).max())) == len(keep) + 1:
            keep.append(i)
    if len(keep) < A.shape[0]:
        x, *_ = np.linalg.lstsq(A[keep], b[keep], rcond=None)
        if np.abs(A @ x - b).max() > 1e-9 * max(1.0, np.abs(b).max()):
            raise InfeasibleError("inconsistent equality constraints")
    return A[keep], b[keep]


def feasible_point(A, b, lb, ub) -> np.ndarray:
    """Any point of the polytope, via a zero-objective LP."""
    res = linprog(np.zeros(A.shape[1]), A_eq=A, b_eq=b, bounds=list(zip(lb, ub)), method="highs")
    if res.status != 0:
        raise InfeasibleError(f"no feasible point: {res.message}")
    return np.clip(res.x, lb, ub)


def _null_space(M, tol):
    if M.shape[0] == 0:
        return np.eye(M.shape[1])
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > tol))
    return vt[rank:].T


def solve_qp(Q, c, A, b, lb, ub, x0=None, *, max_iter=None, tol=1e-13):
    """Minimise ``0.5 x'Qx + c'x`` over ``{Ax = b, lb <= x <= ub}``.

    ``x0``, when given, must be feasible.  Returns the minimiser.
    """
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    n = c.size
    A = np.asarray(A, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float).ravel()
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    A, b = _independent_rows(A, b)
    m = A.shape[0]
    x = feasible_point(A, b, lb, ub) if x0 is None else np.clip(np.asarray(x0, dtype=float), lb, ub)

    scale = max(np.abs(Q).max(initial=0.0), np.abs(c).max(initial=0.0), 1e-300)
    a_tol = 1e-10 * max(1.0, np.abs(A).max(initial=0.0))
    bound_tol = 1e-12

    state = np.zeros(n, dtype=int)
    state[x <= lb + bound_tol] = _LOWER
    state[(x >= ub - bound_tol) & (state == _FREE)] = _UPPER
    # ties lb == ub: treat as lower
    x[state == _LOWER] = lb[state == _LOWER]
    x[state == _UPPER] = ub[state == _UPPER]

    def free_rank(st):
        f = st == _FREE
        return np.linalg.matrix_rank(A[:, f], tol=a_tol) if f.any() and m else 0

    # free fixed variables until the free columns of A span all m rows
    if m:
        r = free_rank(state)
        for i in np.flatnonzero(state != _FREE):
            if r == m:
                break
            if lb[i] == ub[i]:
                continue
            trial = state.copy()
            trial[i] = _FREE
            r2 = free_rank(trial)
            if r2 > r:
                state, r = trial, r2
        if r < m:
            raise InfeasibleError("degenerate constraint set (equalities fix the solution)")

    max_iter = max_iter or 50 * n + 100
    for _ in range(max_iter):
        free = state == _FREE
        fidx = np.flatnonzero(free)
        g = Q @ x + c
        d = np.zeros(n)
        if fidx.size:
            Z = _null_space(A[:, fidx], a_tol)
        else:
            Z = np.zeros((0, 0))
        moved = False
        if Z.size:
            gr = Z.T @ g[fidx]
            if np.abs(gr).max() > tol * scale * max(1.0, np.abs(x).max()):
                H = Z.T @ Q[np.ix_(fidx, fidx)] @ Z
                evals, evecs = np.linalg.eigh(0.5 * (H + H.T))
                cut = 1e-12 * max(evals.max(initial=0.0), scale)
                coef = evecs.T @ gr
                pos = evals > cut
                p_range = -evecs[:, pos] @ (coef[pos] / evals[pos])
                p_null = -evecs[:, ~pos] @ coef[~pos]
                unbounded = np.abs(coef[~pos]).max(initial=0.0) > tol * scale
                p = p_null if unbounded else p_range
                d[fidx] = Z @ p
                if np.abs(d).max() > 0:
                    moved = True
        if moved:
            with np.errstate(divide="ignore", invalid="ignore"):
                steps = np.where(d < 0, (lb - x) / d, np.where(d > 0, (ub - x) / d, np.inf))
            steps[~free] = np.inf
            j = int(np.argmin(steps))
            step_max = steps[j]
            if unbounded:
                if not np.isfinite(step_max):
                    raise InfeasibleError("objective unbounded below on the feasible set")
                step = step_max
            else:
                step = min(1.0, step_max)
            x = x + step * d
            if step == step_max:
                state[j] = _LOWER if d[j] < 0 else _UPPER
                x[j] = lb[j] if d[j] < 0 else ub[j]
            continue

        # stationary on the current face: check bound multipliers
        fixed = np.flatnonzero(~free)
        if fixed.size == 0:
            return x
        if m and fidx.size:
            lam, *_ = np.linalg.lstsq(A[:, fidx].T, g[fidx], rcond=None)
            z = g[fixed] - A[:, fixed].T @ lam
        else:
            z = g[fixed]
        mtol = 1e-10 * max(np.abs(g).max(), 1e-300)
        viol = np.where(state[fixed] == _LOWER, -z, z)
        viol[lb[fixed] == ub[fixed]] = -np.inf
        k = int(np.argmax(viol))
        if viol[k] <= mtol:
            return x
        state[fixed[k]] = _FREE
    raise ConvergenceError("active-set QP did not converge", last_iterate=x)
