"""Dirichlet priors: second-moment matrix, condition bound and parameter recovery."""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .matcore import as_mat


@dataclass(frozen=True)
class DirichletParams:
    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.ndim != 1 or alpha.size == 0 or not np.all(np.isfinite(alpha)) or (alpha <= 0).any():
            raise DomainError(f"Dirichlet parameters must be positive reals, got {np.ravel(self.alpha).tolist()}")
        object.__setattr__(self, "alpha", alpha)

    @property
    def alpha0(self):
        return float(self.alpha.sum())

    @property
    def a(self):
        return float(self.alpha.max() / self.alpha.min())

    @property
    def r(self):
        return self.alpha.size


def dirichlet_moment_matrix(params):
    """``E[theta theta^T]``: ``a_i a_j / (a0 (a0+1))`` off the diagonal,
    ``a_i (a_i + 1) / (a0 (a0+1))`` on it."""
    alpha = params.alpha
    a0 = params.alpha0
    return (np.outer(alpha, alpha) + np.diag(alpha)) / (a0 * (a0 + 1))


def gamma_lower_bound(params):
    """Lower bound ``1 / (2 (a0 + 1))`` on the l1 condition number of R(alpha)."""
    return 1.0 / (2.0 * (params.alpha0 + 1.0))


def recover_dirichlet(R, tol=1e-6):
    """Dirichlet parameters whose moment matrix is ``R``.

    ``alpha/a0`` is read off the row sums; ``a0`` comes from the diagonal
    entry of the row with the smallest l1 norm (lowest index on ties).
    ``tol`` bounds the relative asymmetry of ``R`` and how far its row sums
    may be from a probability vector.
    """
    R = as_mat(R, "R")
    r = R.shape[0]
    if R.shape != (r, r):
        raise DomainError(f"R must be square, got {R.shape}")
    scale = np.abs(R).max()
    if np.abs(R - R.T).max() > tol * scale:
        raise DomainError(f"R is not symmetric within tolerance {tol}")
    if (R <= 0).any():
        raise DomainError("R must have positive entries")
    ratios = R.sum(axis=1)
    if abs(ratios.sum() - 1.0) > tol:
        raise DomainError(f"row sums of R add up to {ratios.sum():.6g}, not 1")
    i = int(np.argmin(np.abs(R).sum(axis=1)))
    u = R[i, i]
    v = ratios[i]
    denom = u / v - v
    if denom <= 0:
        raise DomainError(f"degenerate R: u/v - v = {denom:.3g} <= 0 (u={u:.6g}, v={v:.6g})", u=u, v=v)
    alpha0 = (1 - u / v) / denom
    alpha = alpha0 * ratios
    return DirichletParams(alpha)
