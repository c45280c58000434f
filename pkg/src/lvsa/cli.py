"""Command-line entry point: ``lvsa <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from threadpoolctl import threadpool_limits

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_config
from .encoder import encode_trace, ground_variable, init_params
from .errors import DataError, LvsaError, StageOrderError, UnknownVariableError
from .evaluation import bench_dichotomy, evaluate, interpret
from .kg import compose_splits, load_kg_dir, save_kg_dir
from .oracle import MODES, sample_queries
from .query import TEMPLATE_TAGS, parse_query, read_queries, write_queries
from .synth import synth_splits
from .trainer import STAGE_TAGS, one_hop_queries, train_stage

log = logging.getLogger("lvsa")


def _dump(obj, path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _load_queries(paths, kg):
    out = []
    for path in paths:
        out.extend(read_queries(path, kg))
    return out


# -- subcommands ---------------------------------------------------------------------
def cmd_gen_kg(args) -> int:
    splits = synth_splits(args.entities, args.relations, args.degree, args.seed, args.clusters)
    save_kg_dir(splits, args.out)
    log.info("wrote %d entities, %d forward triples to %s", splits.full.num_entities, len(splits.full.triples) // 2, args.out)
    return 0


def cmd_ingest(args) -> int:
    splits = compose_splits(args.train, args.valid, args.test)
    save_kg_dir(splits, args.out)
    return 0


def cmd_gen_queries(args) -> int:
    splits = load_kg_dir(args.kg)
    if args.exhaustive:
        if args.tags != ["1p"] or args.mode != "train":
            raise DataError("--exhaustive is only defined for --tag 1p --mode train")
        queries = one_hop_queries(splits.train)
    else:
        queries = []
        for tag in args.tags:
            queries.extend(sample_queries(splits, tag, args.n, args.seed, args.mode))
    write_queries(args.out, queries, splits.full)
    return 0


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def cmd_train(args) -> int:
    cfg = _config(args)
    splits = load_kg_dir(args.kg)
    kg = splits.full
    if args.init:
        params, _ = load_checkpoint(args.init)
        if (params.num_entities, params.num_relation_ids) != (kg.num_entities, kg.num_relation_ids):
            raise DataError("checkpoint vocabulary sizes do not match the KG")
    elif args.stage == 1:
        params = init_params(
            kg.num_entities,
            kg.num_relation_ids,
            cfg.d,
            cfg.seed,
            cfg.layers,
            cfg.leaky_slope,
            cfg.init_scale,
            cfg.float_width,
        )
    else:
        raise StageOrderError(f"stage {args.stage} needs --init with a stage-{args.stage - 1} checkpoint")
    queries = _load_queries(args.queries, kg)
    valid = _load_queries(args.valid, kg) if args.valid else None
    evaluate_fn = None
    if valid:
        tags = STAGE_TAGS[args.stage]

        def evaluate_fn(p, qs):
            rep = evaluate(p, splits, qs)
            vals = [rep.per_tag[t]["mrr"] for t in tags if t in rep.per_tag]
            return sum(vals) / len(vals) if vals else 0.0

    result = train_stage(params, queries, args.stage, cfg, valid, evaluate_fn)
    save_checkpoint(result.params, args.out, result.adam)
    if args.log:
        _dump(result.log, args.log)
    return 0


def cmd_eval(args) -> int:
    params, _ = load_checkpoint(args.ckpt)
    splits = load_kg_dir(args.kg)
    report = evaluate(params, splits, _load_queries(args.queries, splits.full), answers=args.answers)
    _dump(report.to_json(), args.out)
    return 0


def cmd_interpret(args) -> int:
    params, _ = load_checkpoint(args.ckpt)
    splits = load_kg_dir(args.kg)
    report = interpret(params, splits, _load_queries(args.queries, splits.full))
    _dump(report.to_json(), args.out)
    return 0


def cmd_ground(args) -> int:
    params, _ = load_checkpoint(args.ckpt)
    kg = load_kg_dir(args.kg).full
    rows = []
    for q in _load_queries(args.queries, kg):
        try:
            top = ground_variable(params, q, args.var, args.k)
        except UnknownVariableError:
            rows.append(None)  # this query has no such variable
            continue
        rows.append([[kg.entity_label(e), s] for e, s in top])
    _dump(rows, args.out)
    return 0


def cmd_trace(args) -> int:
    params, _ = load_checkpoint(args.ckpt)
    kg = load_kg_dir(args.kg).full
    q = parse_query(args.query, kg)
    _dump(encode_trace(params, q, args.k).to_json(kg), args.out)
    return 0


def cmd_bench(args) -> int:
    params, _ = load_checkpoint(args.ckpt)
    kg = load_kg_dir(args.kg).full
    _dump(bench_dichotomy(params, kg, n=args.n, seed=args.seed), args.out)
    return 0


# -- parser -----------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lvsa", description=__doc__)
    ap.add_argument("--version", action="version", version=f"lvsa {__version__}")
    ap.add_argument("--threads", type=int, default=1, help="BLAS threads (default 1, deterministic)")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen-kg", help="write a seeded synthetic KG directory")
    p.add_argument("--entities", type=int, required=True)
    p.add_argument("--relations", type=int, required=True)
    p.add_argument("--degree", type=int, required=True, help="forward out-edges per entity")
    p.add_argument("--clusters", type=int, default=None, help="latent clusters (default entities // 10; 1 = uniform)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_kg)

    p = sub.add_parser("ingest", help="compose train/valid/test TSV files into a KG directory")
    p.add_argument("--train", required=True)
    p.add_argument("--valid")
    p.add_argument("--test")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("gen-queries", help="sample labelled template queries")
    p.add_argument("--kg", required=True)
    p.add_argument("--tag", dest="tags", action="append", required=True, choices=TEMPLATE_TAGS)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=MODES, default="full")
    p.add_argument("--exhaustive", action="store_true", help="every (head, relation) of the training graph as a 1p query")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_queries)

    p = sub.add_parser("train", help="run one curriculum stage")
    p.add_argument("--stage", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--kg", required=True)
    p.add_argument("--queries", action="append", required=True)
    p.add_argument("--valid", action="append", help="validation queries for early stopping")
    p.add_argument("--config")
    p.add_argument("--init", help="checkpoint to start from (required for stages 2 and 3)")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--log", help="write per-epoch metrics as JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="filtered ranking report")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--kg", required=True)
    p.add_argument("--queries", action="append", required=True)
    p.add_argument("--answers", choices=("hard", "all"), default="hard")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("interpret", help="variable- and path-level grounding metrics")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--kg", required=True)
    p.add_argument("--queries", action="append", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_interpret)

    p = sub.add_parser("ground", help="top-k groundings of an existential variable")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--kg", required=True)
    p.add_argument("--queries", action="append", required=True)
    p.add_argument("--var", type=int, default=0)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("trace", help="encoding trace of one query as JSON")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--kg", required=True)
    p.add_argument("--query", required=True, help="one JSON query record")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("bench", help="encoder vs oracle latency on 1p/2p/3p")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--kg", required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.threads < 1:
        print("lvsa: error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        with threadpool_limits(args.threads):
            return args.func(args)
    except LvsaError as exc:
        print(f"lvsa: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"lvsa: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
