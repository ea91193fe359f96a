"""Almost-anchor words from the row-normalized Gram matrix.

Rows are points; a row far from the hull of everything outside its
neighborhood (a *robust loner*) sits near a vertex, and loners that can
represent each other are grouped so that one word per vertex survives.

Closeness ``j -> i`` at ``(delta, eps)`` means row ``i`` is within l1
distance ``eps`` of a convex combination of rows that puts weight at least
``1 - delta`` on row ``j``.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, StructuralError
from .l1geom import HullAnswer, beta_robust_simplicial, l1_distance_to_hull
from .matcore import as_mat

log = logging.getLogger(__name__)

PRECONDITION_RATIO = 100.0
LOOSE = 1e-12


@dataclass
class AnchorSet:
    """Chosen anchor rows and the evidence behind them."""

    word_indices: np.ndarray
    epsilon: float
    gamma: float
    certificates: List[HullAnswer]
    gamma_source: str = "given"
    loners: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    components: list = field(default_factory=list)
    precondition_met: bool = True
    gamma_raw: Optional[float] = None

    @property
    def r(self):
        return len(self.word_indices)

    def remap(self, index):
        """Translate row positions into ids via ``index[pos]``."""
        index = np.asarray(index)
        return AnchorSet(
            index[self.word_indices], self.epsilon, self.gamma, self.certificates,
            self.gamma_source, index[self.loners], [index[c].tolist() for c in self.components],
            self.precondition_met, self.gamma_raw,
        )

    def to_record(self):
        return {
            "word_indices": [int(i) for i in self.word_indices],
            "epsilon": self.epsilon,
            "gamma": self.gamma,
            "gamma_source": self.gamma_source,
            "gamma_raw": self.gamma_raw,
            "precondition_met": self.precondition_met,
            "loners": [int(i) for i in self.loners],
            "components": [[int(i) for i in c] for c in self.components],
            "certificate_distances": [c.distance for c in self.certificates],
        }

    @classmethod
    def from_record(cls, rec):
        certs = [HullAnswer(d, np.zeros(0)) for d in rec.get("certificate_distances", [])]
        return cls(
            np.asarray(rec["word_indices"], dtype=np.int64), rec["epsilon"], rec["gamma"], certs,
            rec.get("gamma_source", "given"), np.asarray(rec.get("loners", []), dtype=np.int64),
            rec.get("components", []), rec.get("precondition_met", True), rec.get("gamma_raw"),
        )


class _Geometry:
    """Pairwise l1 distances, cached for the bound checks."""

    def __init__(self, Mn):
        self.M = as_mat(Mn, "Mn")
        self.D = np.abs(self.M[:, None, :] - self.M[None, :, :]).sum(axis=2)
        self.radius = self.D.max(axis=1)

    def close(self, j, i, delta, eps):
        """True when row ``j`` is ``(delta, eps)``-close to row ``i``."""
        if i == j:
            return True
        delta = min(max(delta, 0.0), 1.0)
        d = self.D[i, j]
        # weight 1-delta on j and delta on i is always allowed
        if (1 - delta) * d <= eps:
            return True
        # any allowed point lies within delta * radius_j of row j
        if d - delta * self.radius[j] > eps + LOOSE:
            return False
        ans = l1_distance_to_hull(self.M[i], self.M, floor=(j, 1 - delta), stop_below=eps)
        return ans.distance <= eps + LOOSE

    def neighborhood(self, j, delta, eps):
        return np.array([i for i in range(len(self.M)) if self.close(j, i, delta, eps)], dtype=np.int64)


def neighborhood(Mn, j, delta, eps):
    """Indices ``i`` such that row ``j`` is ``(delta, eps)``-close to row ``i``."""
    if not 0 <= delta <= 1:
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    if eps < 0:
        raise DomainError(f"eps must be >= 0, got {eps}")
    return _Geometry(Mn).neighborhood(int(j), delta, eps)


def _check_precondition(eps, gamma, strict):
    ok = eps < gamma / PRECONDITION_RATIO
    if not ok:
        msg = f"need eps < gamma/{PRECONDITION_RATIO:g}, got eps={eps:.4g}, gamma={gamma:.4g}"
        if strict:
            raise DomainError(msg, epsilon=eps, gamma=gamma)
        log.warning("%s; continuing in non-strict mode", msg)
    return ok


def _loner_scan(geo, eps, gamma):
    delta = min(6 * eps / gamma, 1.0)
    k = len(geo.M)
    loners, certs = [], {}
    for j in range(k):
        inside = set(geo.neighborhood(j, delta, 2 * eps).tolist())
        outside = np.array([i for i in range(k) if i not in inside], dtype=np.int64)
        if outside.size == 0:
            loners.append(j)
            certs[j] = HullAnswer(np.inf, np.zeros(0))
            continue
        if geo.D[j, outside].min() <= 2 * eps:
            continue
        ans = l1_distance_to_hull(geo.M[j], geo.M[outside], stop_below=2 * eps)
        if ans.distance > 2 * eps + LOOSE:
            loners.append(j)
            full = np.zeros(k)
            full[outside] = ans.coefficients
            certs[j] = HullAnswer(ans.distance, full, ans.optimal)
    return np.array(loners, dtype=np.int64), certs


def robust_loners(Mn, eps, gamma, *, strict=True):
    """Rows at l1 distance more than ``2 eps`` from the hull of the rows
    outside their ``(6 eps/gamma, 2 eps)``-neighborhood.

    A row whose neighborhood is everything counts as a loner.
    """
    _check_precondition(eps, gamma, strict)
    loners, _ = _loner_scan(_Geometry(Mn), eps, gamma)
    return loners


def _cluster(geo, loners, certs, eps, gamma, r):
    if len(loners) == 0:
        raise StructuralError("no robust loners found", components=0)
    delta = min(10 * eps / gamma, 1.0)
    L = list(loners)
    rows, cols = [], []
    for x in range(len(L)):
        for y in range(x + 1, len(L)):
            a, b = L[x], L[y]
            if geo.close(a, b, delta, 2 * eps) or geo.close(b, a, delta, 2 * eps):
                rows.append(x)
                cols.append(y)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(L), len(L)))
    ncomp, labels = connected_components(graph, directed=False)
    comps = sorted(([L[x] for x in np.flatnonzero(labels == c)] for c in range(ncomp)), key=min)
    if r is not None and ncomp != r:
        raise StructuralError(
            f"found {ncomp} loner components, expected r={r} (eps/gamma miscalibrated?)",
            components=ncomp,
        )
    reps = np.array([min(c) for c in comps], dtype=np.int64)
    return reps, comps, [certs.get(int(i), HullAnswer(np.nan, np.zeros(0))) for i in reps]


def cluster_loners(Mn, loners, eps, gamma, r=None):
    """Group loners that are ``(10 eps/gamma, 2 eps)``-close in either
    direction and keep the lowest index of each connected component."""
    geo = _Geometry(Mn)
    loners = np.asarray(loners, dtype=np.int64)
    _, certs = _loner_scan(geo, eps, gamma) if len(loners) else (None, {})
    reps, comps, c = _cluster(geo, loners, certs, eps, gamma, r)
    return AnchorSet(reps, float(eps), float(gamma), c, "given", loners, comps)


def _run(geo, eps, gamma, r):
    loners, certs = _loner_scan(geo, eps, gamma)
    reps, comps, c = _cluster(geo, loners, certs, eps, gamma, r)
    return reps, comps, c, loners


def find_anchors(Mn, eps, r, gamma=None, *, strict=True):
    """Pick ``r`` almost-anchor rows of the row-normalized matrix ``Mn``.

    Without ``gamma`` a first pass runs at ``gamma = 100 eps``; the
    simpliciality of the rows it returns, minus ``2 eps``, becomes the
    ``gamma`` of a second pass. In non-strict mode a ``gamma`` below
    ``100 eps`` is raised to ``100 eps`` instead of being rejected, and
    ``precondition_met`` records what happened.
    """
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    geo = _Geometry(Mn)
    floor = PRECONDITION_RATIO * eps
    if gamma is not None:
        ok = _check_precondition(eps, gamma, strict)
        used = gamma if ok else max(gamma, floor)
        reps, comps, certs, loners = _run(geo, eps, used, r)
        return AnchorSet(reps, float(eps), float(used), certs, "given", loners, comps, ok, float(gamma))

    reps, _, _, _ = _run(geo, eps, floor, r)
    if len(reps) < 2:
        boot = floor
    else:
        boot = beta_robust_simplicial(geo.M[reps], by="rows") - 2 * eps
    log.info("bootstrapped gamma = %.4g from %d candidate rows", boot, len(reps))
    ok = eps < boot / PRECONDITION_RATIO
    if not ok:
        if strict:
            raise DomainError(
                f"bootstrapped gamma {boot:.4g} is not above 100*eps = {floor:.4g}",
                epsilon=eps, gamma=boot,
            )
        log.warning("bootstrapped gamma %.4g below 100*eps; using %.4g", boot, floor)
    used = boot if ok else floor
    reps, comps, certs, loners = _run(geo, eps, used, r)
    return AnchorSet(reps, float(eps), float(used), certs, "bootstrapped", loners, comps, ok, float(boot))
