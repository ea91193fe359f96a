"""Compare recovered parameters with ground truth."""
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DomainError
from .matcore import as_mat


@dataclass
class MatchReport:
    """``permutation[k]`` is the true topic matched to recovered column ``k``."""

    permutation: list
    per_column_l1: list
    max_error: float
    mean_error: float
    entrywise_max: float
    R_error_l1_as_vector: Optional[float] = None

    def to_record(self):
        return asdict(self)


def match_columns(A_hat, A_true, R_hat=None, R_true=None):
    """Optimal one-to-one matching of recovered to true columns under l1 cost."""
    A_hat = as_mat(A_hat, "A_hat")
    A_true = as_mat(A_true, "A_true")
    if A_hat.shape != A_true.shape:
        raise DomainError(f"shape mismatch: {A_hat.shape} vs {A_true.shape}")
    cost = np.abs(A_hat[:, :, None] - A_true[:, None, :]).sum(axis=0)
    rows, cols = linear_sum_assignment(cost)
    perm = cols[np.argsort(rows)]
    per_col = cost[np.arange(cost.shape[0]), perm]
    R_err = None
    if R_hat is not None and R_true is not None:
        R_hat = as_mat(R_hat, "R_hat")
        R_true = as_mat(R_true, "R_true")
        R_err = float(np.abs(R_hat - R_true[np.ix_(perm, perm)]).sum())
    return MatchReport(
        permutation=[int(i) for i in perm],
        per_column_l1=[float(e) for e in per_col],
        max_error=float(per_col.max()),
        mean_error=float(per_col.mean()),
        entrywise_max=float(np.abs(A_hat - A_true[:, perm]).max()),
        R_error_l1_as_vector=R_err,
    )


def required_documents_terms(n, r, a, p, gamma, eps, N, constants=(1.0, 1.0, 1.0)):
    """The three sample-size terms (topic matrix, condition number, covariance).

    Log factors are floored at 1 so that small ``n`` or ``r`` do not zero a term.
    """
    for name, v in dict(n=n, r=r, a=a, p=p, gamma=gamma, eps=eps, N=N).items():
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    for name, v in dict(p=p, gamma=gamma, eps=eps).items():
        if v > 1:
            raise DomainError(f"{name} must be at most 1, got {v}")
    c1, c2, c3 = constants
    log_n, log_r = max(math.log(n), 1.0), max(math.log(r), 1.0)
    return (
        c1 * log_n * a ** 4 * r ** 6 / (eps ** 2 * p ** 6 * gamma ** 2 * N),
        c2 * log_r * a ** 2 * r ** 4 / gamma ** 2,
        c3 * log_r * r ** 2 / eps ** 2,
    )


def required_documents(n, r, a, p, gamma, eps, N, constants=(1.0, 1.0, 1.0)):
    """Advisory document count: the largest term, rounded up.

    The hidden constants default to 1, so treat the result as a scale, not
    a guarantee.
    """
    return int(math.ceil(max(required_documents_terms(n, r, a, p, gamma, eps, N, constants))))
