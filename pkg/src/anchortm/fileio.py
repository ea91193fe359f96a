"""Plain-text file formats.

Corpus: header ``n m N`` then ``doc_id word_id count`` lines, ids zero-based.
A document's lines are read back in file order and expanded into tokens, so
writing each document as its first-half counts followed by its second-half
counts preserves the split exactly. ``N`` is ``-1`` when lengths vary.

Matrix: header ``rows cols`` then row-major values, one row per line, with
17 significant digits.
"""
import json

import numpy as np

from .errors import DomainError
from .synth import Corpus


def write_matrix(path, M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w") as fh:
        fh.write(f"{M.shape[0]} {M.shape[1]}\n")
        for row in M:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_matrix(path):
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DomainError(f"{path}: bad matrix header")
        rows, cols = int(header[0]), int(header[1])
        values = np.array(fh.read().split(), dtype=float)
    if values.size != rows * cols:
        raise DomainError(f"{path}: expected {rows * cols} values, found {values.size}")
    return values.reshape(rows, cols)


def write_corpus(path, corpus):
    N = corpus.N
    with open(path, "w") as fh:
        fh.write(f"{corpus.n} {corpus.m} {N if N is not None else -1}\n")
        for j in range(corpus.m):
            doc = corpus.doc(j)
            h = (doc.size + 1) // 2
            for half in (doc[:h], doc[h:]):
                words, counts = np.unique(half, return_counts=True)
                fh.writelines(f"{j} {w} {c}\n" for w, c in zip(words, counts))


def read_corpus(path):
    data = np.loadtxt(path, dtype=np.int64, skiprows=1, ndmin=2)
    with open(path) as fh:
        n, m, N = (int(x) for x in fh.readline().split())
    if data.size == 0:
        data = np.zeros((0, 3), dtype=np.int64)
    doc, word, count = data[:, 0], data[:, 1], data[:, 2]
    if (count < 0).any() or (word < 0).any() or (word >= n).any() or (doc < 0).any() or (doc >= m).any():
        raise DomainError(f"{path}: id or count out of range")
    if data.size and (np.diff(doc) < 0).any():
        # keep file order within each document
        order = np.argsort(doc, kind="stable")
        doc, word, count = doc[order], word[order], count[order]
    tokens = np.repeat(word, count).astype(np.int32)
    lengths = np.bincount(doc, weights=count, minlength=m).astype(np.int64)
    if N >= 0 and (lengths != N).any():
        raise DomainError(f"{path}: header says N={N} but document lengths differ")
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    corpus = Corpus(n, tokens, offsets)
    corpus.check()
    return corpus


def write_record(path, record):
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def read_record(path):
    with open(path) as fh:
        return json.load(fh)


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
