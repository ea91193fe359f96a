"""Word-word Gram matrix estimated from documents split into two halves."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .matcore import as_mat


@dataclass
class GramEstimate:
    """Empirical second-moment matrix ``Q`` plus its provenance.

    ``m`` and ``N`` are 0 for a Gram matrix computed analytically.
    """

    Q: np.ndarray
    m: int
    N: Optional[int]
    kept_rows: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.kept_rows is None:
            self.kept_rows = np.arange(self.Q.shape[0])

    @property
    def n(self):
        return self.Q.shape[0]

    @property
    def row_mass(self):
        return np.abs(self.Q).sum(axis=1)


def _half_matrices(corpus, mode, seed):
    L = corpus.lengths
    if (L < 2).any():
        raise DomainError(f"every document needs at least 2 words to split, shortest has {L.min()}")
    tokens = corpus.tokens
    doc_ids = np.repeat(np.arange(corpus.m), L)
    pos = np.arange(tokens.size) - np.repeat(corpus.offsets[:-1], L)
    if mode == "shuffle":
        rng = np.random.default_rng(seed)
        order = np.lexsort((rng.random(tokens.size), doc_ids))
        tokens = tokens[order]
    elif mode != "order":
        raise DomainError(f"split mode must be 'order' or 'shuffle', not {mode!r}")
    h1 = (L + 1) // 2
    first = pos < h1[doc_ids]
    shape = (corpus.n, corpus.m)
    ones = np.ones(tokens.size)
    M1 = sp.csr_matrix((ones[first], (tokens[first], doc_ids[first])), shape=shape)
    M2 = sp.csr_matrix((ones[~first], (tokens[~first], doc_ids[~first])), shape=shape)
    return M1, M2, h1, L - h1


def split_and_estimate_gram(corpus, seed=None, mode="order"):
    """``Q = (1/m) sum_j c1_j c2_j^T / (h1_j h2_j)``.

    ``c1_j`` and ``c2_j`` count the first ``ceil(L/2)`` and last
    ``floor(L/2)`` tokens of document ``j``. For even constant length ``N``
    the weight is the familiar ``4 / (N^2 m)``. ``mode="shuffle"`` splits a
    seeded random permutation of each document instead of stored order,
    which is what count-only data needs.
    """
    M1, M2, h1, h2 = _half_matrices(corpus, mode, seed)
    w = 1.0 / (h1 * h2 * corpus.m)
    Q = (M1 @ (M2 @ sp.diags(w)).T).toarray()
    return GramEstimate(Q, corpus.m, corpus.N)


def exact_gram(A, R):
    """Noise-free ``Q = A R A^T``."""
    A = as_mat(A, "A")
    R = as_mat(R, "R")
    return GramEstimate(A @ R @ A.T, 0, None)


def empirical_topic_covariance(W):
    """``(1/m) W W^T`` for an ``r x m`` matrix of topic weights."""
    W = as_mat(W, "W")
    R = W @ W.T / W.shape[1]
    return (R + R.T) / 2


def frequency_filter(g, p, a, r):
    """Keep rows whose l1 mass is at least ``p / (10 a r)``."""
    if p <= 0 or a <= 0 or r <= 0:
        raise DomainError("p, a and r must be positive")
    kept = np.flatnonzero(g.row_mass >= p / (10 * a * r))
    g.kept_rows = kept
    return kept


def estimate_row_noise(corpus, rows=None, seed=None, mode="order"):
    """Estimate the l1 noise of each row of the row-normalized Gram matrix.

    The documents are dealt into two halves (even and odd positions) and a
    Gram matrix is built from each. For row ``i`` the difference of the two
    normalized rows has about twice the l1 error of the full-corpus row, so
    half of it is returned. Rows with no mass in either half get ``inf``.
    """
    from .synth import Corpus
    if corpus.m < 2:
        raise DomainError("need at least 2 documents to estimate noise")
    Ms = []
    for part in (0, 1):
        docs = np.arange(part, corpus.m, 2)
        L = corpus.lengths[docs]
        idx = np.concatenate([np.arange(corpus.offsets[j], corpus.offsets[j + 1]) for j in docs])
        sub = Corpus(corpus.n, corpus.tokens[idx], np.concatenate([[0], np.cumsum(L)]))
        Q = split_and_estimate_gram(sub, seed, mode).Q
        if rows is not None:
            Q = Q[rows]
        Ms.append(Q)
    out = np.full(Ms[0].shape[0], np.inf)
    s0, s1 = Ms[0].sum(axis=1), Ms[1].sum(axis=1)
    ok = (s0 > 0) & (s1 > 0)
    out[ok] = np.abs(Ms[0][ok] / s0[ok, None] - Ms[1][ok] / s1[ok, None]).sum(axis=1) / 2
    return out
