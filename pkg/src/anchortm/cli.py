"""Command-line entry point, one subcommand per pipeline stage."""
import argparse
import dataclasses
import json
import logging
import os
import sys


from .anchors import AnchorSet, find_anchors
from .dirichlet import recover_dirichlet
from .errors import AnchorTMError, DomainError
from .evaluate import match_columns
from .fileio import (_default, read_corpus, read_matrix, read_record, write_corpus, write_matrix,
                     write_record)
from .gram import empirical_topic_covariance, split_and_estimate_gram
from .pipeline import (PipelineConfig, _sub_seeds, filter_stage, merge_stage, noise_stage,
                       run_pipeline, run_sweep)
from .recover import recover_from_anchors
from .synth import WordMapping, generate_corpus, make_separable_topic_matrix, merge_rare_words

log = logging.getLogger("anchortm")


def _load_config(args):
    rec = read_record(args.config) if getattr(args, "config", None) else {}
    for key in ("seed", "gamma", "threads"):
        val = getattr(args, key, None)
        if val is not None:
            rec[key] = val
    if getattr(args, "exact_q", False):
        rec["exact_q"] = True
    if getattr(args, "strict", False):
        rec["strict"] = True
    if getattr(args, "auto_m", False):
        rec["auto_m"] = True
    for key in ("n", "r", "m", "N", "p", "a", "epsilon", "row_epsilon", "merge_epsilon", "split"):
        val = getattr(args, key, None)
        if val is not None:
            rec[key] = val
    if getattr(args, "alpha", None):
        rec["prior"] = {"kind": "dirichlet", "alpha": args.alpha}
    return PipelineConfig.from_record(rec)


def _print(record):
    json.dump(record, sys.stdout, indent=2, sort_keys=True, default=_default)
    sys.stdout.write("\n")


def cmd_synth(args):
    cfg = _load_config(args)
    seed_A, seed_docs, _ = _sub_seeds(cfg.seed)
    tm = make_separable_topic_matrix(cfg.n, cfg.r, cfg.p, cfg.imbalance(), seed_A)
    corpus = generate_corpus(tm, cfg.prior_spec(), cfg.m, cfg.N, seed_docs)
    os.makedirs(args.out, exist_ok=True)
    write_corpus(os.path.join(args.out, "corpus.txt"), corpus)
    write_matrix(os.path.join(args.out, "A_true.txt"), tm.A)
    write_matrix(os.path.join(args.out, "W_true.txt"), corpus.hidden_W)
    write_record(os.path.join(args.out, "synth.json"),
                 {"config": cfg.to_record(), "anchor_map": tm.anchor_map})
    return 0


def cmd_gram(args):
    cfg = _load_config(args)
    corpus = read_corpus(args.corpus)
    corpus, mapping, info = merge_stage(corpus, cfg, cfg.imbalance())
    split_seed = _sub_seeds(cfg.seed)[2]
    gram = split_and_estimate_gram(corpus, split_seed, cfg.split)
    os.makedirs(args.out, exist_ok=True)
    write_matrix(os.path.join(args.out, "Q.txt"), gram.Q)
    write_record(os.path.join(args.out, "gram.json"),
                 {"m": gram.m, "N": gram.N, "split": cfg.split, "split_seed": split_seed,
                  "mapping": mapping.to_record(), **info})
    return 0


def _load_gram(args):
    from .gram import GramEstimate
    meta = read_record(args.gram_meta) if args.gram_meta else {}
    g = GramEstimate(read_matrix(args.gram), meta.get("m", 0), meta.get("N"))
    mapping = WordMapping.from_record(meta["mapping"]) if "mapping" in meta else None
    return g, meta, mapping


def cmd_anchors(args):
    cfg = _load_config(args)
    gram, meta, mapping = _load_gram(args)
    kept, Mn = filter_stage(gram, cfg, cfg.imbalance(), mapping)
    corpus = None
    if cfg.row_epsilon is None:
        if not args.corpus:
            raise DomainError("anchors needs --row-epsilon or --corpus to estimate row noise")
        corpus = read_corpus(args.corpus)
        if mapping is not None:
            corpus, _ = merge_rare_words(corpus, meta["merge_threshold"])
    eps, source = noise_stage(corpus, kept, dataclasses.replace(cfg, split=meta.get("split", cfg.split)),
                              meta.get("split_seed"))
    anchors = find_anchors(Mn, eps, cfg.r, cfg.gamma, strict=cfg.strict).remap(kept)
    rec = anchors.to_record()
    rec["epsilon_row_source"] = source
    write_record(args.out, rec)
    return 0


def cmd_recover(args):
    gram, _, mapping = _load_gram(args)
    anchors = AnchorSet.from_record(read_record(args.anchors))
    res = recover_from_anchors(gram, anchors)
    A_full = mapping.expand(res.A_hat) if mapping is not None else res.A_hat
    os.makedirs(args.out, exist_ok=True)
    write_matrix(os.path.join(args.out, "A_hat.txt"), A_full)
    write_matrix(os.path.join(args.out, "R_hat.txt"), res.R_hat)
    write_record(os.path.join(args.out, "recovery.json"), {"z": res.z, **res.diagnostics})
    return 0


def cmd_dirichlet(args):
    params = recover_dirichlet(read_matrix(args.R), tol=args.tol)
    rec = {"alpha_hat": params.alpha, "alpha0": params.alpha0}
    if args.out:
        write_record(args.out, rec)
    else:
        _print(rec)
    return 0


def cmd_eval(args):
    R_hat = read_matrix(args.R_hat) if args.R_hat else None
    R_true = None
    if args.R_true:
        R_true = read_matrix(args.R_true)
    elif args.W_true:
        R_true = empirical_topic_covariance(read_matrix(args.W_true))
    report = match_columns(read_matrix(args.A_hat), read_matrix(args.A_true), R_hat, R_true)
    if args.out:
        write_record(args.out, report.to_record())
    else:
        _print(report.to_record())
    return 0


def cmd_pipeline(args):
    cfg = _load_config(args)
    if args.corpus:
        cfg = dataclasses.replace(cfg, corpus_path=args.corpus)
    if args.out:
        cfg = dataclasses.replace(cfg, out_dir=args.out)
    res = run_pipeline(cfg)
    if not cfg.out_dir:
        _print(res.metrics)
    return 0


def cmd_sweep(args):
    cfg = _load_config(args)
    rows, summary = run_sweep(cfg, args.ms, range(args.seeds), workers=cfg.threads)
    rec = {"rows": rows, "summary": summary}
    if args.out:
        write_record(args.out, rec)
    else:
        _print(rec)
    return 0


def _model_flags(p):
    p.add_argument("--config", help="JSON pipeline configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--alpha", type=float, nargs="+", help="Dirichlet prior parameters")
    p.add_argument("--epsilon", type=float, help="target accuracy")
    p.add_argument("--merge-epsilon", dest="merge_epsilon", type=float)
    p.add_argument("--split", choices=("order", "shuffle"))


def build_parser():
    parser = argparse.ArgumentParser(prog="anchortm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="sample a separable model and a corpus")
    _model_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gram", help="merge rare words and estimate the Gram matrix")
    _model_flags(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("anchors", help="find anchor words in a Gram matrix")
    _model_flags(p)
    p.add_argument("--gram", required=True, help="matrix file")
    p.add_argument("--gram-meta", dest="gram_meta", help="gram.json written by the gram stage")
    p.add_argument("--corpus", help="corpus used to estimate row noise")
    p.add_argument("--row-epsilon", dest="row_epsilon", type=float, help="per-row noise level")
    p.add_argument("--gamma", type=float, help="omit to bootstrap from the data")
    p.add_argument("--strict", action="store_true", help="fail when the noise precondition is unmet")
    p.add_argument("--out", required=True, help="anchors JSON file")
    p.set_defaults(func=cmd_anchors)

    p = sub.add_parser("recover", help="recover A and R from anchors")
    p.add_argument("--gram", required=True)
    p.add_argument("--gram-meta", dest="gram_meta")
    p.add_argument("--anchors", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("dirichlet", help="recover Dirichlet parameters from R")
    p.add_argument("--R", required=True, help="matrix file")
    p.add_argument("--tol", type=float, default=0.05)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dirichlet)

    p = sub.add_parser("eval", help="match recovered topics to ground truth")
    p.add_argument("--A-hat", dest="A_hat", required=True)
    p.add_argument("--A-true", dest="A_true", required=True)
    p.add_argument("--R-hat", dest="R_hat")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--R-true", dest="R_true")
    g.add_argument("--W-true", dest="W_true", help="hidden topic weights; R is taken as W W^T / m")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    for name, func, helptext in (("pipeline", cmd_pipeline, "run every stage end to end"),
                                 ("sweep", cmd_sweep, "repeat the pipeline over m and seeds")):
        p = sub.add_parser(name, help=helptext)
        _model_flags(p)
        p.add_argument("--exact-q", dest="exact_q", action="store_true",
                       help="use Q = A R A^T exactly instead of sampling")
        p.add_argument("--auto-m", dest="auto_m", action="store_true",
                       help="choose m from the sample-complexity formula")
        p.add_argument("--threads", type=int)
        p.add_argument("--gamma", type=float)
        p.add_argument("--row-epsilon", dest="row_epsilon", type=float)
        p.add_argument("--out")
        p.set_defaults(func=func)
    sub.choices["pipeline"].add_argument("--corpus", help="load a corpus instead of sampling")
    sub.choices["sweep"].add_argument("--ms", type=int, nargs="+", default=[5000, 20000, 80000])
    sub.choices["sweep"].add_argument("--seeds", type=int, default=10)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except AnchorTMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
