"""Command-line front end.

Subcommands: run, gen-data, split, validate-config, bench-compress.
Exit codes: 0 success (including a flagged divergence), 1 runtime error,
2 usage error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .compression import (CompressionSpec, build_compressor, estimate_omega)
from .config import apply_overrides, load_config, validate_config
from .datasets import (balanced_kmeans_split, gen_synthetic_dict, load_matrix_csv,
                       save_matrix_csv, save_partition_csv)
from .errors import FedmmError
from .experiments import run_experiment
from .rng import data_rng, split_rng
from .surrogate import Block, BlockLayout

import yaml


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedmm",
                                     description="surrogate-space federated MM simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment from a config file")
    p_run.add_argument("--config", required=True, help="YAML config path")
    p_run.add_argument("--seed", type=int, help="override run.master_seed")
    p_run.add_argument("--out", help="override run.out output prefix")
    p_run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path config override; repeatable, last wins")

    p_val = sub.add_parser("validate-config", help="check a config without running")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")

    p_gen = sub.add_parser("gen-data", help="write a synthetic sparse-code dataset CSV")
    p_gen.add_argument("--p", type=int, required=True, help="observation dimension")
    p_gen.add_argument("--n-atoms", type=int, required=True, help="dictionary atoms")
    p_gen.add_argument("--tot", type=int, required=True, help="number of samples")
    p_gen.add_argument("--sparsity", type=float, default=0.2)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True, help="output CSV path")
    p_gen.add_argument("--dict-out", help="optional path for the ground-truth dictionary")

    p_split = sub.add_parser("split", help="balanced k-means partition of a CSV dataset")
    p_split.add_argument("--input", required=True, help="dataset CSV path")
    p_split.add_argument("--n", type=int, required=True, help="number of clients")
    p_split.add_argument("--iters", type=int, default=50)
    p_split.add_argument("--seed", type=int, default=0)
    p_split.add_argument("--has-header", action="store_true")
    p_split.add_argument("--out", required=True, help="partition CSV path")

    p_bench = sub.add_parser("bench-compress", help="Monte Carlo relative-variance estimate")
    p_bench.add_argument("--op", required=True,
                         help="identity | quant<bits> (e.g. quant8) | randk<k>")
    p_bench.add_argument("--dim", type=int, default=100)
    p_bench.add_argument("--trials", type=int, default=100_000)
    p_bench.add_argument("--seed", type=int, default=0)
    return parser


def _parse_op(text: str, dim: int):
    layout = BlockLayout([Block(dim, 1)])
    if text == "identity":
        spec = CompressionSpec("identity")
    elif text.startswith("quant"):
        spec = CompressionSpec("quantization", bits=int(text[len("quant"):]))
    elif text.startswith("randk"):
        spec = CompressionSpec("rand-k", k=int(text[len("randk"):]))
    else:
        raise FedmmError(f"unknown compression op {text!r}")
    return build_compressor(spec, layout), layout


def _cmd_run(args) -> int:
    tree = _load_tree(args.config)
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"run.master_seed={args.seed}")
    if args.out is not None:
        overrides.append(f"run.out={args.out}")
    cfg = validate_config(apply_overrides(tree, overrides))
    result = run_experiment(cfg)
    diverged = sum(1 for recs in result.records_by_repeat if any(r.diverged for r in recs))
    print(f"wrote {result.long_path} and {result.summary_path}")
    print(f"repeats: {cfg.repeats}, rounds: {cfg.t_max}, diverged repeats: {diverged}")
    return 0


def _load_tree(path):
    try:
        with open(path) as fh:
            return yaml.safe_load(fh)
    except OSError as exc:
        raise FedmmError(f"cannot read config {path}: {exc}") from exc


def _cmd_validate(args) -> int:
    cfg = validate_config(apply_overrides(_load_tree(args.config), args.override))
    print(f"config ok: algorithm={cfg.algorithm}, problem={cfg.problem['kind']}, "
          f"repeats={cfg.repeats}, t_max={cfg.t_max}")
    return 0


def _cmd_gen_data(args) -> int:
    theta_star, dataset = gen_synthetic_dict(args.p, args.n_atoms, args.tot,
                                             args.sparsity, data_rng(args.seed))
    save_matrix_csv(args.out, dataset.rows)
    print(f"wrote {args.tot} x {args.p} dataset to {args.out}")
    if args.dict_out:
        save_matrix_csv(args.dict_out, theta_star)
        print(f"wrote ground-truth dictionary to {args.dict_out}")
    return 0


def _cmd_split(args) -> int:
    dataset = load_matrix_csv(args.input, args.has_header)
    partition = balanced_kmeans_split(dataset, args.n, split_rng(args.seed), args.iters)
    save_partition_csv(args.out, partition)
    sizes = [len(ix) for ix in partition.client_indices]
    print(f"wrote partition of {len(dataset)} rows into {args.n} clients "
          f"(sizes {min(sizes)}..{max(sizes)}) to {args.out}")
    return 0


def _cmd_bench(args) -> int:
    op, layout = _parse_op(args.op, args.dim)
    rng = np.random.default_rng(args.seed)
    est = estimate_omega(op, layout, args.trials, rng)
    print(f"op={args.op} dim={args.dim} trials={args.trials}")
    print(f"declared omega bound: {op.omega:.6g}")
    print(f"empirical omega estimate: {est:.6g}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "validate-config": _cmd_validate,
    "gen-data": _cmd_gen_data,
    "split": _cmd_split,
    "bench-compress": _cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FedmmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
