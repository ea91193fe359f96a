"""Ground-truth topic models and sampled corpora.

Documents are stored as a flat token array in sampling order plus document
offsets, which keeps the first-half/second-half split exact and makes word
counts cheap to derive.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

log = logging.getLogger(__name__)


def child_rng(seed, index):
    """Generator for item ``index`` derived from the master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(index),)))


@dataclass
class PriorSpec:
    """Distribution of topic weights for one document.

    Build with :meth:`dirichlet`, :meth:`logistic_normal` or :meth:`custom`.
    """

    kind: str
    r: int
    alpha: Optional[np.ndarray] = None
    mean: Optional[np.ndarray] = None
    cov: Optional[np.ndarray] = None
    sampler: Optional[Callable] = field(default=None, repr=False)

    @classmethod
    def dirichlet(cls, alpha):
        alpha = np.asarray(alpha, dtype=float)
        if alpha.ndim != 1 or alpha.size == 0:
            raise DomainError("alpha must be a nonempty vector")
        if not np.all(np.isfinite(alpha)) or (alpha <= 0).any():
            raise DomainError(f"Dirichlet parameters must be positive, got {alpha.tolist()}")
        return cls("dirichlet", alpha.size, alpha=alpha)

    @classmethod
    def logistic_normal(cls, mean, cov):
        mean = np.asarray(mean, dtype=float)
        cov = np.asarray(cov, dtype=float)
        r = mean.size
        if cov.shape != (r, r):
            raise DomainError(f"covariance must be {r}x{r}, got {cov.shape}")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise DomainError("covariance must be symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-10:
            raise DomainError("covariance must be positive semidefinite")
        return cls("logistic_normal", r, mean=mean, cov=cov)

    @classmethod
    def custom(cls, r, sampler):
        """``sampler(rng)`` must return a probability vector of length ``r``."""
        if not callable(sampler):
            raise DomainError("sampler must be callable")
        return cls("custom", int(r), sampler=sampler)

    @property
    def imbalance(self):
        """Ratio of largest to smallest expected topic weight, if known."""
        if self.kind == "dirichlet":
            return float(self.alpha.max() / self.alpha.min())
        return None

    def moment_matrix(self):
        """Closed-form ``E[theta theta^T]``; only defined for Dirichlet."""
        if self.kind != "dirichlet":
            raise DomainError(f"no closed-form moment matrix for a {self.kind} prior")
        from .dirichlet import DirichletParams, dirichlet_moment_matrix
        return dirichlet_moment_matrix(DirichletParams(self.alpha))

    def to_record(self):
        if self.kind == "dirichlet":
            return {"kind": "dirichlet", "alpha": self.alpha.tolist()}
        if self.kind == "logistic_normal":
            return {"kind": "logistic_normal", "mean": self.mean.tolist(), "cov": self.cov.tolist()}
        return {"kind": "custom", "r": self.r}

    @classmethod
    def from_record(cls, rec):
        kind = rec.get("kind")
        if kind == "dirichlet":
            return cls.dirichlet(rec["alpha"])
        if kind == "logistic_normal":
            return cls.logistic_normal(rec["mean"], rec["cov"])
        raise DomainError(f"cannot build prior of kind {kind!r} from a record")


def _draw(spec, rng):
    if spec.kind == "dirichlet":
        while True:
            g = rng.standard_gamma(spec.alpha)
            s = g.sum()
            if s > 0:
                return g / s
    if spec.kind == "logistic_normal":
        eta = rng.multivariate_normal(spec.mean, spec.cov, method="eigh")
        eta = np.exp(eta - eta.max())
        return eta / eta.sum()
    theta = np.asarray(spec.sampler(rng), dtype=float)
    if theta.shape != (spec.r,) or (theta < 0).any() or abs(theta.sum() - 1) > 1e-9:
        raise DomainError("custom sampler did not return a probability vector")
    return theta


def sample_prior(spec, seed):
    """Draw one topic-weight vector. ``seed`` may be an int or a Generator.

    Dirichlet draws use the ratio of independent Gamma variates.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return _draw(spec, rng)


@dataclass
class TopicMatrix:
    """Column-stochastic ``n x r`` word-topic matrix with its anchor rows."""

    A: np.ndarray
    anchor_map: np.ndarray
    p: float
    a: float = 1.0

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def r(self):
        return self.A.shape[1]

    def check(self, tol=1e-12):
        A = self.A
        if (A < 0).any():
            raise DomainError("topic matrix has negative entries")
        if np.abs(A.sum(axis=0) - 1).max() > tol:
            raise DomainError("topic matrix columns must sum to 1")
        for i, row in enumerate(self.anchor_map):
            nz = np.flatnonzero(A[row])
            if nz.tolist() != [i] or A[row, i] < self.p - tol:
                raise DomainError(f"row {row} is not a p-anchor for topic {i}")


def make_separable_topic_matrix(n, r, p, a=1.0, seed=0):
    """Random p-separable topic matrix whose first ``r`` rows are anchors.

    Anchor weights are uniform on ``[p, min(2p, 1)]``; each column's remaining
    mass is spread over the non-anchor rows by a flat Dirichlet draw.
    """
    if n < 2 * r:
        raise DomainError(f"need n >= 2r, got n={n}, r={r}")
    if not 0 < p <= 1:
        raise DomainError(f"p must lie in (0, 1], got {p}")
    if a < 1:
        raise DomainError(f"topic imbalance a must be >= 1, got {a}")
    rng = np.random.default_rng(seed)
    A = np.zeros((n, r))
    anchors = rng.uniform(p, min(2 * p, 1.0), size=r)
    A[np.arange(r), np.arange(r)] = anchors
    rest = n - r
    for _ in range(100):
        body = rng.dirichlet(np.ones(rest), size=r).T * (1 - anchors)
        # a non-anchor row with a single nonzero entry would be an extra anchor
        if r == 1 or p == 1 or not ((body > 0).sum(axis=1) == 1).any():
            break
    else:
        raise DomainError("could not draw non-anchor rows without accidental anchors")
    A[r:] = body
    tm = TopicMatrix(A, np.arange(r), float(p), float(a))
    tm.check(1e-12)
    return tm


@dataclass
class Corpus:
    """Bag-of-words corpus: tokens in sampling order, split by ``offsets``."""

    n: int
    tokens: np.ndarray
    offsets: np.ndarray
    hidden_W: Optional[np.ndarray] = None
    seed: Optional[int] = None

    @property
    def m(self):
        return len(self.offsets) - 1

    @property
    def lengths(self):
        return np.diff(self.offsets)

    @property
    def N(self):
        """Words per document, or None when documents differ in length."""
        L = self.lengths
        if L.size and (L == L[0]).all():
            return int(L[0])
        return None

    def doc(self, j):
        return self.tokens[self.offsets[j]:self.offsets[j + 1]]

    def word_totals(self):
        return np.bincount(self.tokens, minlength=self.n)

    def counts(self):
        """Sparse ``n x m`` word-by-document count matrix."""
        import scipy.sparse as sp
        doc_ids = np.repeat(np.arange(self.m), self.lengths)
        data = np.ones(self.tokens.size)
        return sp.csr_matrix((data, (self.tokens, doc_ids)), shape=(self.n, self.m))

    def check(self):
        if self.offsets[0] != 0 or self.offsets[-1] != self.tokens.size or (np.diff(self.offsets) < 0).any():
            raise DomainError("corpus offsets are inconsistent with the token array")
        if self.tokens.size and (self.tokens.min() < 0 or self.tokens.max() >= self.n):
            raise DomainError("token id outside the vocabulary")
        if self.hidden_W is not None:
            W = self.hidden_W
            if W.shape[1] != self.m or np.abs(W.sum(axis=0) - 1).max() > 1e-12:
                raise DomainError("hidden_W columns must be probability vectors, one per document")


def sample_documents(A, W, N, seed):
    """Draw ``N`` words for every column of ``W`` from the mixture ``A @ W[:, j]``."""
    A = np.asarray(A, dtype=float)
    W = np.asarray(W, dtype=float)
    m = W.shape[1]
    tokens = np.empty(m * N, dtype=np.int32)
    for j in range(m):
        rng = child_rng(seed, j)
        tokens[j * N:(j + 1) * N] = _draw_words(A @ W[:, j], N, rng)
    offsets = np.arange(m + 1, dtype=np.int64) * N
    return Corpus(A.shape[0], tokens, offsets, hidden_W=W, seed=seed)


def _draw_words(dist, N, rng):
    cdf = np.cumsum(dist)
    u = rng.random(N) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), dist.size - 1)


def generate_corpus(A, spec, m, N, seed):
    """Sample ``m`` documents of ``N`` words from the topic model.

    Document ``j`` uses its own generator derived from ``(seed, j)``, so the
    output does not depend on how documents are scheduled.
    """
    tm = A if isinstance(A, TopicMatrix) else None
    A = tm.A if tm is not None else np.asarray(A, dtype=float)
    n, r = A.shape
    if spec.r != r:
        raise DomainError(f"prior has {spec.r} topics, topic matrix has {r}")
    if m < 1 or N < 1:
        raise DomainError(f"need m, N >= 1, got m={m}, N={N}")
    W = np.empty((r, m))
    tokens = np.empty(m * N, dtype=np.int32)
    for j in range(m):
        rng = child_rng(seed, j)
        theta = _draw(spec, rng)
        W[:, j] = theta
        tokens[j * N:(j + 1) * N] = _draw_words(A @ theta, N, rng)
    offsets = np.arange(m + 1, dtype=np.int64) * N
    return Corpus(n, tokens, offsets, hidden_W=W, seed=seed)


@dataclass
class WordMapping:
    """Old-to-new vocabulary map produced by :func:`merge_rare_words`."""

    old_n: int
    kept: np.ndarray
    runoff: Optional[int]
    threshold: float

    @property
    def new_n(self):
        return self.kept.size + (self.runoff is not None)

    def old_to_new(self):
        out = np.full(self.old_n, -1 if self.runoff is None else self.runoff, dtype=np.int64)
        out[self.kept] = np.arange(self.kept.size)
        return out

    def expand(self, A_new):
        """Lift rows back to the old vocabulary; merged words get weight 0."""
        A_new = np.asarray(A_new, dtype=float)
        out = np.zeros((self.old_n,) + A_new.shape[1:])
        out[self.kept] = A_new[:self.kept.size]
        return out

    def to_record(self):
        return {"old_n": self.old_n, "kept": self.kept.tolist(), "runoff": self.runoff,
                "threshold": self.threshold}

    @classmethod
    def from_record(cls, rec):
        return cls(rec["old_n"], np.asarray(rec["kept"], dtype=np.int64), rec["runoff"], rec["threshold"])


def default_merge_threshold(epsilon, m, N, a, r):
    return epsilon * m * N / (3 * a * r)


def merge_rare_words(corpus, threshold):
    """Rename every word with total count ``<= threshold`` to one runoff word.

    The runoff word is appended after the kept words. If nothing is merged
    the corpus is returned unchanged with an identity mapping.
    """
    if threshold < 0:
        raise DomainError(f"threshold must be >= 0, got {threshold}")
    totals = corpus.word_totals()
    small = totals <= threshold
    kept = np.flatnonzero(~small)
    if not small.any():
        return corpus, WordMapping(corpus.n, kept, None, float(threshold))
    mapping = WordMapping(corpus.n, kept, int(kept.size), float(threshold))
    tokens = mapping.old_to_new()[corpus.tokens].astype(np.int32)
    log.info("merged %d rare words into runoff word %d", int(small.sum()), mapping.runoff)
    return Corpus(mapping.new_n, tokens, corpus.offsets.copy(), corpus.hidden_W, corpus.seed), mapping
