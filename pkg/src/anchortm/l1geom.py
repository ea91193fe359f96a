"""l1 simplicial geometry built on :mod:`anchortm.lp`.

* :func:`l1_distance_to_hull` -- l1 distance from a point to the convex hull
  of a set of rows, optionally forcing a minimum weight on one row.
* :func:`gamma_l1` -- the l1 condition number ``min_{|x|_1 = 1} |x B|_1`` of
  the row-normalized matrix.
* :func:`beta_robust_simplicial` -- smallest l1 distance of a vertex to the
  hull of the other vertices.
"""
import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .lp import simplex
from .matcore import as_mat, row_normalize

log = logging.getLogger(__name__)

EXACT_GAMMA_LIMIT = 20


@dataclass
class HullAnswer:
    """Optimal (or early-stopped) solution of a hull-distance LP.

    ``coefficients`` is a probability vector over the basis rows and
    ``distance`` equals ``|target - coefficients @ basis|_1``. When
    ``optimal`` is False the solver stopped early and ``distance`` is only an
    upper bound on the true minimum.
    """

    distance: float
    coefficients: np.ndarray
    optimal: bool = True


def l1_distance_to_hull(target, basis, floor=None, stop_below=None):
    """Minimize ``|target - sum_k c_k basis_k|_1`` over the simplex.

    ``floor=(j, w)`` adds the constraint ``c_j >= w``. The LP is the usual
    split of the residual into positive and negative slack parts.
    """
    basis = as_mat(basis, "basis")
    target = np.asarray(target, dtype=float).ravel()
    k, d = basis.shape
    if k == 0:
        raise DomainError("basis must contain at least one row")
    if target.shape[0] != d:
        raise DomainError(f"target has length {target.shape[0]}, basis rows have {d}")

    if floor is not None:
        j, w = floor
        j = int(j)
        if not 0 <= j < k:
            raise DomainError(f"floor index {j} out of range for {k} basis rows")
        if not 0.0 <= w <= 1.0:
            raise DomainError(f"floor weight {w} outside [0, 1]")
    else:
        j, w = None, 0.0

    if j is not None and w >= 1.0:
        coef = np.zeros(k)
        coef[j] = 1.0
        return HullAnswer(float(np.abs(target - basis[j]).sum()), coef)

    # drop coordinates where every point is zero
    live = (basis != 0).any(axis=0) | (target != 0)
    B = basis[:, live]
    t = target[live]
    dl = B.shape[1]
    if j is not None:
        t = t - w * B[j]
        start = j
    else:
        start = int(np.argmin(np.abs(B - t).sum(axis=1)))
    total = 1.0 - w

    if dl == 0:
        coef = np.zeros(k)
        coef[start] = total
        if j is not None:
            coef[j] += w
        return HullAnswer(0.0, coef)

    A = np.zeros((dl + 1, k + 2 * dl))
    A[:dl, :k] = B.T
    A[:dl, k:k + dl] = np.eye(dl)
    A[:dl, k + dl:] = -np.eye(dl)
    A[dl, :k] = 1.0
    rhs = np.append(t, total)
    cost = np.zeros(k + 2 * dl)
    cost[k:] = 1.0
    res = t - total * B[start]
    init = [k + i if res[i] >= 0 else k + dl + i for i in range(dl)] + [start]

    sol = simplex(cost, A, rhs, init, stop_below=stop_below)
    coef = np.maximum(sol.x[:k], 0.0)
    if j is not None:
        coef[j] += w
    dist = float(np.abs(target - coef @ basis).sum())
    return HullAnswer(dist, coef, optimal=sol.status == "optimal")


@dataclass
class GammaResult:
    value: float
    x: np.ndarray
    exact: bool


def _gamma_pattern(Bn, signs):
    ans = l1_distance_to_hull(np.zeros(Bn.shape[1]), signs[:, None] * Bn)
    return ans.distance, signs * ans.coefficients


def gamma_l1(B, *, detail=False, exact_limit=EXACT_GAMMA_LIMIT, n_patterns=10_000, seed=0):
    """l1 condition number of ``B`` after scaling rows to sum to one.

    For ``k <= exact_limit`` rows the minimum is exact: every sign pattern of
    ``x`` (up to global sign) gives one facet of the l1 sphere, and on that
    facet the problem is the distance from the origin to the hull of the
    signed rows. Above the limit, ``n_patterns`` random patterns are refined
    by single sign flips; the result is then an upper bound on the true value
    and ``exact`` is False.
    """
    Bn, _ = row_normalize(as_mat(B, "B"))
    k = Bn.shape[0]
    if k == 0:
        raise DomainError("B has no rows")
    best = (np.inf, None)
    if k <= exact_limit:
        for tail in itertools.product((1.0, -1.0), repeat=k - 1):
            signs = np.array((1.0,) + tail)
            val, x = _gamma_pattern(Bn, signs)
            if val < best[0]:
                best = (val, x)
        result = GammaResult(best[0], best[1], True)
    else:
        log.warning("gamma_l1: %d rows exceeds exact limit %d; returning estimate", k, exact_limit)
        rng = np.random.default_rng(seed)
        for _ in range(n_patterns):
            signs = rng.choice((1.0, -1.0), size=k)
            val, x = _gamma_pattern(Bn, signs)
            improved = True
            while improved:
                improved = False
                for i in range(k):
                    signs[i] = -signs[i]
                    v2, x2 = _gamma_pattern(Bn, signs)
                    if v2 < val - 1e-12:
                        val, x, improved = v2, x2, True
                    else:
                        signs[i] = -signs[i]
            if val < best[0]:
                best = (val, x)
        result = GammaResult(best[0], best[1], False)
    return result if detail else result.value


def simplicial_margins(W, by="columns"):
    """Distance of every vertex to the hull of the remaining vertices."""
    W = as_mat(W, "W")
    if by == "columns":
        V = W.T
    elif by == "rows":
        V = W
    else:
        raise DomainError(f"by must be 'columns' or 'rows', not {by!r}")
    k = V.shape[0]
    if k < 2:
        raise DomainError(f"need at least 2 {by}, got {k}")
    idx = np.arange(k)
    return np.array([l1_distance_to_hull(V[i], V[idx != i]).distance for i in range(k)])


def beta_robust_simplicial(W, by="columns", *, detail=False):
    """Largest beta for which ``W`` is beta-robustly simplicial.

    With ``detail=True`` returns ``(beta, argmin_indices, margins)``; ties
    within 1e-12 are all listed.
    """
    margins = simplicial_margins(W, by)
    beta = float(margins.min())
    if detail:
        return beta, np.flatnonzero(margins <= beta + 1e-12), margins
    return beta
