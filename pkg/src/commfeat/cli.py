"""Command-line entry point.

Subcommands cover the pipeline stages (stats, kcore, factorize, train,
evaluate, run) plus the planted-graph benchmark. Paths and knobs come from a
TOML config; the flags below override config values. Exit codes: 0 success,
2 input error, 3 numerical failure.
"""

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .errors import InputError, NumericalError
from .evaluation import format_metrics_table
from .pipeline import (
    PipelineConfig, evaluate_pipeline, factorize_pipeline, kcore_pipeline,
    load_config, run_pipeline, stats_pipeline, train_pipeline,
)
from .synth import BENCHMARK_GAMMA_GRID, BENCHMARK_K_GRID, SbmSpec, run_benchmark

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

# Demo benchmark: weak-feature, strong-community planted graph where the
# latent-augmented mode should clearly beat the feature-only baseline.
_DEFAULT_BENCHMARK = {
    "block_sizes": [100, 100], "p_in": 0.1, "p_out": 0.01,
    "label_flip_rate": 0.1, "feature_informative_frac": 0.0, "feature_dim": 8,
}

_SUBCOMMANDS = (
    ("stats", "print descriptive statistics of the edge list"),
    ("kcore", "extract the k-core of the edge list"),
    ("factorize", "fit the link factorization (with hyperparameter search)"),
    ("train", "train through classifier selection and save the models"),
    ("evaluate", "evaluate previously trained models on the test rows"),
    ("benchmark", "run the planted-graph mode comparison"),
    ("run", "full pipeline: ingest, core, factorize, train, evaluate"),
)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="commfeat",
        description=(
            "Predict node labels in an attributed network by augmenting "
            "per-node features with latent community vectors from a "
            "sigmoid-link factorization of the adjacency matrix."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in _SUBCOMMANDS:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="TOML config file")
        p.add_argument(
            "--mode", choices=("F", "N", "X"), type=str.upper,
            help="design mode: features only, +neighbor averages, or +latents",
        )
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument(
            "--kcore", type=int, metavar="K", dest="kcore",
            help="k-core order applied after pruning",
        )
        p.add_argument(
            "--target", metavar="COLUMN",
            help="label column, or 'auto' for the single non-id column",
        )
        p.add_argument("--threads", type=int, help="worker cap for grid searches")
        p.add_argument("--out", metavar="DIR", help="artifact output directory")
    return parser


def _effective_config(args):
    """Config from --config (or defaults) with CLI flag overrides applied."""
    config = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.mode is not None:
        overrides["mode"] = args.mode
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.kcore is not None:
        overrides["k_core_k"] = args.kcore
    if args.target is not None:
        overrides["target"] = args.target
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.out is not None:
        overrides["output"] = args.out
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def _print_json(payload):
    print(json.dumps(payload, sort_keys=True, indent=2))


def _command_stats(config, args):
    record = stats_pipeline(config)
    sys.stdout.write(record.to_json())
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "stats.json", "w", encoding="utf-8") as fh:
            fh.write(record.to_json())
    return EXIT_OK


def _command_kcore(config, args):
    core = kcore_pipeline(config)
    _print_json({
        "k": config.k_core_k,
        "nodes": core.node_count,
        "edges": core.edge_count,
    })
    return EXIT_OK


def _command_factorize(config, args):
    k_star, gamma_star, model = factorize_pipeline(config)
    _print_json({"k": k_star, "gamma": gamma_star, "alpha": model.alpha})
    return EXIT_OK


def _command_train(config, args):
    artifacts = train_pipeline(config)
    summary = {
        "lambda": artifacts["lambda_star"],
        "validation_bcr": artifacts["validation_bcr"],
    }
    if "k_star" in artifacts:
        summary["k"] = artifacts["k_star"]
        summary["gamma"] = artifacts["gamma_star"]
    _print_json(summary)
    return EXIT_OK


def _command_evaluate(config, args):
    report = evaluate_pipeline(config)
    print(format_metrics_table({config.mode: report.metrics}))
    return EXIT_OK


def _command_run(config, args):
    report = run_pipeline(config)
    print(format_metrics_table({config.mode: report.metrics}))
    return EXIT_OK


def _command_benchmark(config, args):
    mapping = dict(config.benchmark) if config.benchmark else dict(_DEFAULT_BENCHMARK)
    k_grid = tuple(mapping.pop("k_grid", BENCHMARK_K_GRID))
    gamma_grid = tuple(mapping.pop("gamma_grid", BENCHMARK_GAMMA_GRID))
    lambda_grid = tuple(mapping.pop("lambda_grid", config.lambda_grid))
    modes = tuple(mapping.pop("modes", ("F", "N", "X")))
    if args.seed is not None:
        mapping["seed"] = args.seed
    spec = SbmSpec.from_mapping(mapping)
    result = run_benchmark(
        spec, k_grid=k_grid, gamma_grid=gamma_grid, lambda_grid=lambda_grid,
        modes=modes, threads=config.threads,
        percentile_step=config.percentile_step,
        out_dir=args.out if args.out is not None else None,
    )
    print(result["head_to_head"])
    return EXIT_OK


_HANDLERS = {
    "stats": _command_stats,
    "kcore": _command_kcore,
    "factorize": _command_factorize,
    "train": _command_train,
    "evaluate": _command_evaluate,
    "benchmark": _command_benchmark,
    "run": _command_run,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _effective_config(args)
        return _HANDLERS[args.command](config, args)
    except InputError as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    except NumericalError as exc:
        logger.error("%s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
