"""Planted-partition benchmark: block-structured graphs with optional degree
heterogeneity, community-correlated labels, and features of controllable
informativeness — ground truth for head-to-head comparisons of the design
modes on data whose community signal is known by construction."""

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import DEFAULT_LAMBDA_GRID, split_rows
from .design import NodeFeatures, write_features
from .errors import InputError
from .evaluation import format_metrics_table
from .graphs import Graph, write_edge_list
from .numerics import logit, sigmoid
from .pipeline import run_mode_on_data
from .seeding import stage_seed

logger = logging.getLogger(__name__)

# Benchmark-sized search grids. Planted graphs of a few hundred nodes need only
# a few latent dimensions, and their per-pair penalty accounting makes even
# small γ heavily damping, so the factor penalty stays off by default.
BENCHMARK_K_GRID = (2, 3, 4)
BENCHMARK_GAMMA_GRID = (0.0,)

_SPEC_FIELDS = (
    "block_sizes", "p_in", "p_out", "degree_bias_spread", "label_flip_rate",
    "feature_informative_frac", "feature_dim", "seed",
)


@dataclass(frozen=True)
class SbmSpec:
    """Parameters of one planted-partition instance.

    Attributes:
        block_sizes: nodes per block (block membership defines communities).
        p_in / p_out: within-/cross-block base edge probabilities.
        degree_bias_spread: per-node logit shift drawn uniformly from
            [-spread, +spread]; 0 disables degree heterogeneity.
        label_flip_rate: probability each parity label is flipped.
        feature_informative_frac: fraction of feature columns carrying the
            label signal; the rest are pure noise.
        feature_dim: number of feature columns.
        seed: master seed; every generation stage derives its own sub-seed.
    """

    block_sizes: tuple
    p_in: float = 0.1
    p_out: float = 0.01
    degree_bias_spread: float = 0.0
    label_flip_rate: float = 0.0
    feature_informative_frac: float = 0.0
    feature_dim: int = 8
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "block_sizes", tuple(int(s) for s in self.block_sizes)
        )
        if not self.block_sizes or any(s < 1 for s in self.block_sizes):
            raise InputError(
                f"block sizes must be ≥ 1, got {list(self.block_sizes)}"
            )
        for name in ("p_in", "p_out", "label_flip_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InputError(f"{name} must lie in [0,1], got {value}")
        if self.degree_bias_spread < 0:
            raise InputError(
                f"degree_bias_spread must be ≥ 0, got {self.degree_bias_spread}"
            )
        if not 0.0 <= self.feature_informative_frac <= 1.0:
            raise InputError(
                "feature_informative_frac must lie in [0,1], got "
                f"{self.feature_informative_frac}"
            )
        if self.feature_dim < 1:
            raise InputError(f"feature_dim must be ≥ 1, got {self.feature_dim}")

    @property
    def node_count(self):
        return sum(self.block_sizes)

    def as_dict(self):
        out = {name: getattr(self, name) for name in _SPEC_FIELDS}
        out["block_sizes"] = list(self.block_sizes)
        return out

    @classmethod
    def from_mapping(cls, mapping):
        """Build a spec from a parsed TOML/JSON table; unknown keys error."""
        unknown = set(mapping) - set(_SPEC_FIELDS)
        if unknown:
            raise InputError(f"unknown benchmark keys: {sorted(unknown)}")
        if "block_sizes" not in mapping:
            raise InputError("benchmark spec requires block_sizes")
        return cls(**dict(mapping))


def generate_sbm(spec):
    """Sample a planted-partition graph.

    Each unordered pair (u, v) becomes an edge independently with probability
    σ(logit(p) + b_u + b_v), where p is p_in when u and v share a block and
    p_out otherwise, and the b are per-node logit biases uniform on
    [-spread, +spread]. Degenerate base probabilities 0 and 1 stay exactly 0
    and 1 regardless of bias.

    Returns:
        (Graph with original ids "0".."n-1", block assignment array).
    """
    n = spec.node_count
    blocks = np.repeat(np.arange(len(spec.block_sizes)), spec.block_sizes)
    rng = np.random.default_rng(stage_seed(spec.seed, "graph"))
    bias = rng.uniform(-spec.degree_bias_spread, spec.degree_bias_spread, n)
    iu, ju = np.triu_indices(n, k=1)
    base = np.where(blocks[iu] == blocks[ju], spec.p_in, spec.p_out)
    prob = np.zeros(iu.size)
    interior = (base > 0.0) & (base < 1.0)
    prob[interior] = sigmoid(
        logit(base[interior]) + bias[iu[interior]] + bias[ju[interior]]
    )
    prob[base >= 1.0] = 1.0
    keep = rng.random(iu.size) < prob
    edges = frozenset(
        (int(u), int(v)) for u, v in zip(iu[keep], ju[keep])
    )
    graph = Graph(n, edges, tuple(str(i) for i in range(n)))
    return graph, blocks


def generate_labels(blocks, flip_rate, seed):
    """Binary labels: block parity, each then flipped with ``flip_rate``."""
    blocks = np.asarray(blocks)
    if np.unique(blocks).size < 2:
        raise InputError("label generation needs at least two blocks")
    if not 0.0 <= flip_rate <= 1.0:
        raise InputError(f"flip rate must lie in [0,1], got {flip_rate}")
    rng = np.random.default_rng(seed)
    parity = (blocks % 2).astype(np.int64)
    flips = rng.random(blocks.size) < flip_rate
    return np.where(flips, 1 - parity, parity).astype(np.int64)


def generate_features(spec, blocks, labels):
    """Feature matrix: round(frac·dim) informative columns (label plus unit
    Gaussian noise) followed by pure-noise columns.

    ``blocks`` is accepted for signature symmetry with the other generators;
    informativeness is defined against the (post-flip) labels.
    """
    del blocks
    labels = np.asarray(labels)
    informative = round(spec.feature_informative_frac * spec.feature_dim)
    rng = np.random.default_rng(stage_seed(spec.seed, "features"))
    values = rng.standard_normal((labels.size, spec.feature_dim))
    values[:, :informative] += labels[:, None]
    names = tuple(f"f{j}" for j in range(spec.feature_dim))
    mask = np.ones((labels.size, spec.feature_dim), dtype=bool)
    return NodeFeatures(values, names, mask)


def generate_instance(spec):
    """One full benchmark instance: (graph, blocks, labels, features)."""
    graph, blocks = generate_sbm(spec)
    labels = generate_labels(
        blocks, spec.label_flip_rate, stage_seed(spec.seed, "labels")
    )
    features = generate_features(spec, blocks, labels)
    return graph, blocks, labels, features


def _min_expected_degree(spec):
    n = spec.node_count
    return min(
        (s - 1) * spec.p_in + (n - s) * spec.p_out for s in spec.block_sizes
    )


def _write_instance(out, spec, graph, features, labels, report):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(graph, out / "edges.txt")
    write_features(features, graph, out / "features.csv")
    with open(out / "labels.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"])
        for oid, label in zip(graph.original_ids, labels):
            writer.writerow([oid, int(label)])
    with open(out / "benchmark_report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(out / "head_to_head.txt", "w", encoding="utf-8") as fh:
        fh.write(report["head_to_head"])


def run_benchmark(spec, *, k_grid=BENCHMARK_K_GRID,
                  gamma_grid=BENCHMARK_GAMMA_GRID,
                  lambda_grid=DEFAULT_LAMBDA_GRID, modes=("F", "N", "X"),
                  threads=1, percentile_step=5, out_dir=None):
    """Generate one instance and run every design mode on one shared split.

    Args:
        spec: SbmSpec describing the instance.
        k_grid / gamma_grid / lambda_grid: search grids (benchmark-sized
            factorization grids by default).
        modes: design modes to compare.
        threads: worker cap for the grid searches.
        percentile_step: accuracy-at-percentile granularity.
        out_dir: when given, writes the generated inputs (edge list, feature
            and label CSVs in the ingestion formats), the per-mode reports,
            and the head-to-head table there.
    Returns:
        Dict with the instance parameters, per-mode test accuracy, per-mode full report
        dicts, the head-to-head table text, and any generation warnings.
    """
    graph, blocks, labels, features = generate_instance(spec)
    warnings = []
    min_degree = _min_expected_degree(spec)
    if min_degree < 1.0:
        message = (
            f"minimum expected degree {min_degree:.3f} < 1; "
            "the generated graph may fragment"
        )
        warnings.append(message)
        logger.warning(message)
    split = split_rows(
        np.arange(graph.node_count), stage_seed(spec.seed, "row_split")
    )
    reports = {}
    for mode in modes:
        report, _ = run_mode_on_data(
            graph, features, labels, split, mode,
            k_grid=k_grid, gamma_grid=gamma_grid, lambda_grid=lambda_grid,
            seed=spec.seed, standardize_columns=True, threads=threads,
            percentile_step=percentile_step,
        )
        reports[mode] = report
    table = format_metrics_table({m: reports[m].metrics for m in reports})
    result = {
        "spec": spec.as_dict(),
        "accuracy": {m: reports[m].metrics.accuracy for m in reports},
        "reports": {m: reports[m].as_dict() for m in reports},
        "head_to_head": table,
        "warnings": warnings,
    }
    if out_dir is not None:
        _write_instance(out_dir, spec, graph, features, labels, result)
    return result
