"""Recover the topic matrix and topic covariance from Q and anchor words."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .matcore import as_mat, solve_linear

log = logging.getLogger(__name__)


@dataclass
class RecoveryResult:
    A_hat: np.ndarray
    R_hat: np.ndarray
    z: np.ndarray
    anchor_set: object
    diagnostics: dict = field(default_factory=dict)


def _inv_norm1(B):
    # ||B^{-1}||_1 from r solves against the identity
    return np.abs(np.column_stack([solve_linear(B, e) for e in np.eye(len(B))])).sum(axis=0).max()


def recover_from_anchors(Q, anchors):
    """Solve for ``A`` and ``R`` given anchor rows of ``Q``.

    With ``S`` the anchor rows (ascending): ``s = Q[S] @ 1``, solve
    ``Q[S,S] z = s``, then ``A^T = (Q[S,S] Diag(z))^{-1} Q[S]`` and
    ``R = Diag(z) Q[S,S] Diag(z)``. Negative entries of ``A`` are clipped
    and columns renormalized; ``R`` is symmetrized.
    """
    anchor_set = anchors
    Qm = as_mat(getattr(Q, "Q", Q), "Q")
    n = Qm.shape[0]
    S = np.sort(np.asarray(getattr(anchors, "word_indices", anchors), dtype=np.int64))
    if S.size == 0 or S.min() < 0 or S.max() >= n or np.unique(S).size != S.size:
        raise DomainError(f"anchor indices {S.tolist()} are not distinct rows of a {n}-row Q")
    QSS = Qm[np.ix_(S, S)]
    QS = Qm[S]
    s = QS.sum(axis=1)
    z = solve_linear(QSS, s)
    diag = {
        "anchor_order": S.tolist(),
        "z_residual_l1": float(np.abs(QSS @ z - s).sum()),
        "cond1_QSS": float(np.abs(QSS).sum(axis=0).max() * _inv_norm1(QSS)),
        "negative_z": bool((z <= 0).any()),
    }
    if diag["negative_z"]:
        log.warning("z has non-positive entries %s; anchors or samples are poor", z)
    At = solve_linear(QSS * z[None, :], QS)
    A_pre = At.T
    diag["clip_magnitude"] = float(-A_pre[A_pre < 0].sum()) if (A_pre < 0).any() else 0.0
    diag["min_pre_clip"] = float(A_pre.min())
    A_hat = np.clip(A_pre, 0.0, None)
    sums = A_hat.sum(axis=0)
    diag["pre_normalization_column_sums"] = A_pre.sum(axis=0).tolist()
    A_hat = A_hat / np.where(sums > 0, sums, 1.0)
    R_raw = z[:, None] * QSS * z[None, :]
    diag["R_asymmetry"] = float(np.abs(R_raw - R_raw.T).max())
    R_hat = (R_raw + R_raw.T) / 2
    return RecoveryResult(A_hat, R_hat, z, anchor_set, diag)
