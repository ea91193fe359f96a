"""End-to-end orchestration: sample (or load) -> Gram -> anchors -> recover."""
import contextlib
import dataclasses
import logging
import os
import platform
import statistics
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .anchors import find_anchors
from .dirichlet import DirichletParams, gamma_lower_bound, recover_dirichlet
from .errors import AnchorTMError, DomainError
from .evaluate import match_columns, required_documents, required_documents_terms
from .fileio import read_corpus, write_corpus, write_matrix, write_record
from .gram import (GramEstimate, empirical_topic_covariance, estimate_row_noise, exact_gram,
                   frequency_filter, split_and_estimate_gram)
from .matcore import row_normalize
from .recover import recover_from_anchors
from .synth import PriorSpec, default_merge_threshold, generate_corpus, make_separable_topic_matrix, merge_rare_words

log = logging.getLogger(__name__)

EXACT_Q_EPSILON = 1e-6


@dataclass
class PipelineConfig:
    n: int = 40
    r: int = 3
    m: int = 20_000
    N: int = 100
    p: float = 0.15
    a: Optional[float] = None
    epsilon: float = 0.3
    gamma: Optional[float] = None
    prior: Optional[dict] = None
    seed: int = 0
    corpus_path: Optional[str] = None
    out_dir: Optional[str] = None
    o_constants: tuple = (1.0, 1.0, 1.0)
    auto_m: bool = False
    exact_q: bool = False
    strict: bool = False
    row_epsilon: Optional[float] = None
    merge_epsilon: Optional[float] = 0.01
    merge_threshold: Optional[float] = None
    split: str = "order"
    dirichlet_tol: float = 0.05
    write_corpus: bool = False
    threads: int = 1

    def __post_init__(self):
        self.o_constants = tuple(float(c) for c in self.o_constants)
        for name in ("n", "r", "m", "N", "threads"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 < self.epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.prior is None:
            self.prior = {"kind": "dirichlet", "alpha": [1.0] * self.r}

    @classmethod
    def from_record(cls, rec):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(rec) - names
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**rec)

    def to_record(self):
        rec = dataclasses.asdict(self)
        rec["o_constants"] = list(self.o_constants)
        return rec

    def prior_spec(self):
        spec = PriorSpec.from_record(self.prior)
        if spec.r != self.r:
            raise DomainError(f"prior has {spec.r} topics but r = {self.r}")
        return spec

    def imbalance(self):
        if self.a is not None:
            return float(self.a)
        a = self.prior_spec().imbalance
        return a if a is not None else 1.0


@dataclass
class PipelineResult:
    recovery: object
    anchors: object
    gram: GramEstimate
    A_full: np.ndarray
    match: Optional[object] = None
    alpha_hat: Optional[np.ndarray] = None
    A_true: Optional[np.ndarray] = None
    metrics: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)


@contextlib.contextmanager
def _stage(name, timings):
    t0 = time.perf_counter()
    try:
        yield
    except AnchorTMError as exc:
        if exc.stage is None:
            exc.stage = name
        raise
    finally:
        timings[name] = time.perf_counter() - t0


def _sub_seeds(seed):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(3)]


def _advisory_m(cfg, a):
    gamma = cfg.gamma
    if gamma is None:
        spec = cfg.prior_spec()
        if spec.kind != "dirichlet":
            raise DomainError("auto_m needs gamma when the prior is not Dirichlet")
        gamma = gamma_lower_bound(DirichletParams(spec.alpha))
    args = (cfg.n, cfg.r, a, cfg.p, min(gamma, 1.0), cfg.epsilon, cfg.N, cfg.o_constants)
    return required_documents(*args), list(required_documents_terms(*args))


def merge_stage(corpus, cfg, a):
    """Merge rare words; returns the reduced corpus, mapping and a summary."""
    if cfg.merge_threshold is not None:
        threshold, source = float(cfg.merge_threshold), "given"
    else:
        eps_m = cfg.merge_epsilon if cfg.merge_epsilon is not None else cfg.epsilon
        source = "merge_epsilon" if cfg.merge_epsilon is not None else "derived_from_epsilon"
        threshold = default_merge_threshold(eps_m, corpus.m, corpus.N or cfg.N, a, cfg.r)
    merged, mapping = merge_rare_words(corpus, threshold)
    info = {"merge_threshold": threshold, "merge_threshold_source": source,
            "merged_words": corpus.n - mapping.kept.size}
    return merged, mapping, info


def filter_stage(gram, cfg, a, mapping=None):
    """Frequency filter (never keeping the runoff word), then row-normalize."""
    kept = frequency_filter(gram, cfg.p, a, cfg.r)
    if mapping is not None and mapping.runoff is not None:
        kept = kept[kept != mapping.runoff]
        gram.kept_rows = kept
    if kept.size < cfg.r:
        raise DomainError(f"only {kept.size} rows pass the frequency filter, need r = {cfg.r}")
    Mn, _ = row_normalize(gram.Q[kept])
    return kept, Mn


def noise_stage(corpus, kept, cfg, seed_split):
    """Per-row noise level handed to the anchor finder, with its provenance."""
    if cfg.row_epsilon is not None:
        return float(cfg.row_epsilon), "given"
    if corpus is None:
        return EXACT_Q_EPSILON, "exact_q_default"
    noise = estimate_row_noise(corpus, kept, seed_split, cfg.split)
    return float(noise.max()), "split_half_estimate"


def run_pipeline(cfg):
    """Run every stage for one configuration and return all artifacts.

    Files are written only when ``cfg.out_dir`` is set.
    """
    timings = {}
    t_start = time.perf_counter()
    seed_A, seed_docs, seed_split = _sub_seeds(cfg.seed)
    a = cfg.imbalance()
    spec = cfg.prior_spec()
    metrics = {"seed": cfg.seed, "n": cfg.n, "r": cfg.r, "N": cfg.N, "p": cfg.p, "a": a}

    with _stage("config", timings):
        m_adv, terms = _advisory_m(cfg, a) if (cfg.auto_m or spec.kind == "dirichlet") else (None, None)
        if cfg.auto_m:
            log.info("auto-m: using m = %d documents (advisory terms %s)", m_adv, terms)
            cfg = dataclasses.replace(cfg, m=m_adv)
        metrics["required_documents_advisory"] = m_adv
        metrics["required_documents_terms"] = terms
        metrics["m"] = 0 if cfg.exact_q else cfg.m

    A_true = None
    R_true = None
    corpus = None
    mapping = None
    with _stage("synth", timings):
        if cfg.corpus_path is None:
            tm = make_separable_topic_matrix(cfg.n, cfg.r, cfg.p, a, seed_A)
            A_true = tm.A
        if cfg.exact_q:
            R_true = spec.moment_matrix()
            if A_true is None:
                raise DomainError("exact-q mode needs a synthetic topic matrix, not a corpus file")
        elif cfg.corpus_path is not None:
            corpus = read_corpus(cfg.corpus_path)
            metrics["m"] = corpus.m
        else:
            corpus = generate_corpus(tm, spec, cfg.m, cfg.N, seed_docs)

    with _stage("merge", timings):
        if corpus is not None:
            corpus, mapping, info = merge_stage(corpus, cfg, a)
            metrics.update(info)

    with _stage("gram", timings):
        if cfg.exact_q:
            gram = exact_gram(A_true, R_true)
        else:
            gram = split_and_estimate_gram(corpus, seed_split, cfg.split)

    with _stage("filter", timings):
        kept, Mn = filter_stage(gram, cfg, a, mapping)
        metrics["kept_rows"] = int(kept.size)

    with _stage("noise", timings):
        eps, eps_source = noise_stage(corpus, kept, cfg, seed_split)
        metrics["epsilon_row"] = eps
        metrics["epsilon_row_source"] = eps_source

    with _stage("anchors", timings):
        anchors = find_anchors(Mn, eps, cfg.r, cfg.gamma, strict=cfg.strict).remap(kept)
        metrics["anchors"] = [int(i) for i in anchors.word_indices]
        metrics["gamma_used"] = anchors.gamma
        metrics["gamma_source"] = anchors.gamma_source
        metrics["gamma_raw"] = anchors.gamma_raw
        metrics["precondition_met"] = anchors.precondition_met

    with _stage("recover", timings):
        rec = recover_from_anchors(gram.Q, anchors)
        A_full = mapping.expand(rec.A_hat) if mapping is not None else rec.A_hat
        metrics["negative_z"] = rec.diagnostics["negative_z"]
        metrics["clip_magnitude"] = rec.diagnostics["clip_magnitude"]

    match = None
    with _stage("eval", timings):
        if A_true is not None:
            R_ref = R_true if R_true is not None else empirical_topic_covariance(corpus.hidden_W)
            match = match_columns(A_full, A_true, rec.R_hat, R_ref)
            metrics["max_column_l1_error"] = match.max_error
            metrics["mean_column_l1_error"] = match.mean_error
            metrics["entrywise_max_error"] = match.entrywise_max
            metrics["R_error_l1"] = match.R_error_l1_as_vector
            metrics["permutation"] = match.permutation
            if spec.kind == "dirichlet" and R_true is None:
                R_prior = spec.moment_matrix()
                perm = match.permutation
                metrics["R_error_l1_vs_prior"] = float(np.abs(rec.R_hat - R_prior[np.ix_(perm, perm)]).sum())

    alpha_hat = None
    with _stage("dirichlet", timings):
        if spec.kind == "dirichlet":
            alpha_hat = recover_dirichlet(rec.R_hat, tol=cfg.dirichlet_tol).alpha
            metrics["alpha_hat"] = alpha_hat.tolist()
            if match is not None:
                metrics["alpha_error_inf"] = float(np.abs(alpha_hat - spec.alpha[match.permutation]).max())

    manifest = {
        "config": cfg.to_record(),
        "seed": cfg.seed,
        "sub_seeds": {"topic_matrix": seed_A, "documents": seed_docs, "split": seed_split},
        "versions": {"anchortm": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "timing_seconds": {**timings, "total": time.perf_counter() - t_start},
    }
    result = PipelineResult(rec, anchors, gram, A_full, match, alpha_hat, A_true, metrics, manifest)
    if cfg.out_dir:
        write_outputs(result, cfg.out_dir, corpus if cfg.write_corpus else None)
    return result


def write_outputs(result, out_dir, corpus=None):
    os.makedirs(out_dir, exist_ok=True)
    join = lambda name: os.path.join(out_dir, name)  # noqa: E731
    write_matrix(join("Q.txt"), result.gram.Q)
    write_matrix(join("A_hat.txt"), result.A_full)
    write_matrix(join("R_hat.txt"), result.recovery.R_hat)
    write_record(join("anchors.json"), result.anchors.to_record())
    write_record(join("recovery.json"), {"z": result.recovery.z, **result.recovery.diagnostics})
    if result.A_true is not None:
        write_matrix(join("A_true.txt"), result.A_true)
    if result.alpha_hat is not None:
        write_record(join("alpha.json"), {"alpha_hat": result.alpha_hat})
    if corpus is not None:
        write_corpus(join("corpus.txt"), corpus)
    write_record(join("metrics.json"), result.metrics)
    write_record(join("manifest.json"), result.manifest)


def _trial(args):
    cfg, m, seed = args
    cfg = dataclasses.replace(cfg, m=m, seed=seed, out_dir=None, auto_m=False)
    row = {"m": m, "seed": seed}
    try:
        res = run_pipeline(cfg)
        row.update(status="ok", max_error=res.metrics["max_column_l1_error"],
                   mean_error=res.metrics["mean_column_l1_error"], R_error=res.metrics["R_error_l1"],
                   epsilon_row=res.metrics["epsilon_row"], gamma_used=res.metrics["gamma_used"])
    except AnchorTMError as exc:
        row.update(status=type(exc).__name__, error=str(exc), max_error=None)
    return row


def run_sweep(cfg, ms, seeds, workers=1):
    """One pipeline run per ``(m, seed)``; returns rows and per-m medians.

    Failed trials are kept with their error class and a null error; the
    median skips them.
    """
    jobs = [(cfg, int(m), int(s)) for m in ms for s in seeds]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_trial, jobs))
    else:
        rows = [_trial(j) for j in jobs]
    summary = []
    for m in ms:
        errs = [r["max_error"] for r in rows if r["m"] == m and r["status"] == "ok"]
        summary.append({"m": int(m), "trials": sum(r["m"] == m for r in rows), "ok": len(errs),
                        "median_max_error": statistics.median(errs) if errs else None})
    return rows, summary
