"""Dense matrix helpers: row normalization and a pivoted direct solver.

Matrices are plain ``numpy.ndarray`` objects of dtype float64.
"""
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, SingularityError

PIVOT_RTOL = 1e-12
RESIDUAL_RTOL = 1e-9


def as_mat(M, name="matrix"):
    """Return ``M`` as a finite 2-D float64 array."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DomainError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(M))[0])
        raise DomainError(f"{name} has a non-finite entry at {bad}", index=bad)
    return M


@dataclass(frozen=True)
class RowScales:
    """Row sums removed by :func:`row_normalize`.

    All-zero rows have no scale; they are marked in ``absent`` and carry NaN
    in ``values``.
    """

    values: np.ndarray
    absent: np.ndarray

    def __len__(self):
        return len(self.values)

    def apply(self, M):
        """Undo the normalization (absent rows are left as they are)."""
        M = np.array(M, dtype=float, copy=True)
        keep = ~self.absent
        M[keep] *= self.values[keep, None]
        return M


def row_normalize(M):
    """Scale every nonzero row of a nonnegative matrix to sum to one.

    >>> N, s = row_normalize([[2, 2], [1, 3]])
    >>> N.tolist(), s.values.tolist()
    ([[0.5, 0.5], [0.25, 0.75]], [4.0, 4.0])
    """
    M = as_mat(M)
    if (M < 0).any():
        bad = tuple(int(i) for i in np.argwhere(M < 0)[0])
        raise DomainError(f"negative entry {M[bad]!r} at index {bad}", index=bad)
    sums = M.sum(axis=1)
    absent = sums == 0
    values = np.where(absent, np.nan, sums)
    out = M.copy()
    out[~absent] /= sums[~absent, None]
    return out, RowScales(values, absent)


def solve_linear(B, y):
    """Solve ``B x = y`` by LU with partial pivoting.

    Raises :class:`SingularityError` when a pivot falls below ``1e-12``
    relative to the largest entry of ``B``.
    """
    B = as_mat(B, "B")
    y = np.asarray(y, dtype=float)
    if B.shape[0] != B.shape[1]:
        raise DomainError(f"B must be square, got {B.shape}")
    if y.shape[0] != B.shape[0]:
        raise DomainError(f"y has length {y.shape[0]}, expected {B.shape[0]}")
    scale = np.abs(B).max() if B.size else 0.0
    if scale == 0.0:
        raise SingularityError("B is identically zero", pivot=0.0)
    with warnings.catch_warnings():
        # exact zero pivots are reported below with more context
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(B, check_finite=False)
    pivots = np.abs(np.diag(lu))
    k = int(np.argmin(pivots))
    if pivots[k] < PIVOT_RTOL * scale:
        raise SingularityError(
            f"B is numerically singular (pivot {pivots[k]:.3e} at step {k})",
            pivot=float(pivots[k]),
        )
    x = scipy.linalg.lu_solve((lu, piv), y, check_finite=False)
    # one step of iterative refinement keeps the residual at working precision
    x = x + scipy.linalg.lu_solve((lu, piv), y - B @ x, check_finite=False)
    if not np.all(np.isfinite(x)):
        raise SingularityError("solution is not finite", pivot=float(pivots[k]))
    return x


def residual_ok(B, x, y, rtol=RESIDUAL_RTOL):
    """Check ``||Bx - y||_1 <= rtol * (1 + ||y||_1)`` column by column."""
    r = np.abs(B @ x - y).sum(axis=0)
    return bool(np.all(r <= rtol * (1.0 + np.abs(y).sum(axis=0))))
