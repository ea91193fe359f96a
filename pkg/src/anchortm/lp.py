"""Dense tableau simplex for small standard-form linear programs.

Solves ``min c @ x  s.t.  A @ x = b, x >= 0`` starting from a caller-supplied
feasible basis, so no phase one is needed. Pricing is Dantzig's rule; after a
run of degenerate pivots the solver switches to Bland's rule for good, which
rules out cycling.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularityError

PIVOT_TOL = 1e-10
DEGENERATE_STREAK = 25


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    status: str  # "optimal" | "stopped" | "unbounded" | "iteration_limit"
    iterations: int


def simplex(c, A, b, basis, *, tol=PIVOT_TOL, max_iter=None, stop_below=None):
    """Run primal simplex from the feasible basis ``basis``.

    If ``stop_below`` is given the solver returns as soon as the objective of
    the current vertex is at or below it (status ``"stopped"``).
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    basis = list(basis)
    if len(basis) != m:
        raise DomainError(f"basis has {len(basis)} columns, need {m}")
    try:
        body = np.linalg.solve(A[:, basis], np.column_stack([A, b]))
    except np.linalg.LinAlgError as exc:
        raise SingularityError("starting basis is singular") from exc
    if (body[:, -1] < -1e-9).any():
        raise DomainError("starting basis is not primal feasible")
    body[:, -1] = np.maximum(body[:, -1], 0.0)
    T = np.empty((m + 1, n + 1))
    T[:m] = body
    cb = c[basis]
    T[m, :n] = c - cb @ body[:, :n]
    T[m, n] = -cb @ body[:, n]

    if max_iter is None:
        max_iter = 50 * (m + n)
    bland = False
    streak = 0
    status = "iteration_limit"
    it = 0
    while it < max_iter:
        if stop_below is not None and -T[m, n] <= stop_below:
            status = "stopped"
            break
        rc = T[m, :n]
        if bland:
            cand = np.flatnonzero(rc < -tol)
            if cand.size == 0:
                status = "optimal"
                break
            e = int(cand[0])
        else:
            e = int(np.argmin(rc))
            if rc[e] >= -tol:
                status = "optimal"
                break
        col = T[:m, e]
        pos = np.flatnonzero(col > tol)
        if pos.size == 0:
            status = "unbounded"
            break
        ratios = T[pos, n] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + tol]
        if ties.size > 1:
            leave = int(ties[np.argmin([basis[i] for i in ties])])
        else:
            leave = int(ties[0])
        if best <= tol:
            streak += 1
            if streak >= DEGENERATE_STREAK:
                bland = True
        else:
            streak = 0
        prow = T[leave] / T[leave, e]
        T -= np.outer(T[:, e], prow)
        T[leave] = prow
        rhs = T[:m, n]
        rhs[(rhs < 0) & (rhs > -1e-9)] = 0.0
        basis[leave] = e
        it += 1

    x = np.zeros(n)
    x[basis] = T[:m, n]
    return LPResult(x=x, objective=float(c @ x), status=status, iterations=it)
