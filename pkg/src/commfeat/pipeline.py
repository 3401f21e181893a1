"""End-to-end pipeline: ingestion → pruning → k-core → factorization →
design assembly → classification → evaluation, with TOML config and a run
manifest that pins every input of the run."""

import hashlib
import json
import sys
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version as _dist_version
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .classify import (
    DEFAULT_LAMBDA_GRID, ClassifierModel, RowSplit, load_classifier, predict,
    save_classifier, select_lambda, split_rows,
)
from .design import assemble_design, load_features, standardize
from .errors import InputError
from .evaluation import evaluate_predictions, format_metrics_table, write_curve_csv
from .factorization import (
    DescentOptions, load_link_model, sample_pairs, save_link_model,
    select_hyperparameters, write_pair_sample,
)
from .graphs import induced_subgraph, k_core, load_edge_list, network_stats, write_edge_list
from .seeding import stage_seed

DEFAULT_K_GRID = (5, 6, 7, 8, 9, 10)
DEFAULT_GAMMA_GRID = (0.0, 0.01, 0.04, 0.16, 0.64, 2.56, 10.24)
MISSING_MARKERS = {"", "NA"}

try:
    PACKAGE_VERSION = _dist_version("commfeat")
except PackageNotFoundError:  # running from a source tree without install
    PACKAGE_VERSION = "0.0.0"


@dataclass
class PipelineConfig:
    """Everything a `run` needs; loadable from TOML, overridable by CLI flags."""

    edges: str = None
    features: str = None
    labels: str = None
    output: str = "out"
    mode: str = "F"
    k_core_k: int = 0
    seed: int = 0
    target: str = "auto"
    id_column: str = "id"
    standardize: bool = True
    threshold: float = 0.5
    percentile_step: int = 5
    threads: int = 1
    k_grid: tuple = DEFAULT_K_GRID
    gamma_grid: tuple = DEFAULT_GAMMA_GRID
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    benchmark: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mode = str(self.mode).upper()
        if self.mode not in ("F", "N", "X"):
            raise InputError(f"mode must be F, N, or X, got {self.mode!r}")
        for name in ("k_grid", "gamma_grid", "lambda_grid"):
            grid = tuple(getattr(self, name))
            if not grid:
                raise InputError(f"{name} must be non-empty")
            setattr(self, name, grid)
        if self.k_core_k < 0:
            raise InputError(f"k_core_k must be ≥ 0, got {self.k_core_k}")
        if not 0.0 < self.threshold < 1.0:
            raise InputError(f"threshold must lie in (0,1), got {self.threshold}")
        if self.threads < 1:
            raise InputError(f"threads must be ≥ 1, got {self.threads}")

    def as_dict(self):
        return {
            "edges": self.edges,
            "features": self.features,
            "labels": self.labels,
            "output": self.output,
            "mode": self.mode,
            "k_core_k": self.k_core_k,
            "seed": self.seed,
            "target": self.target,
            "id_column": self.id_column,
            "standardize": self.standardize,
            "threshold": self.threshold,
            "percentile_step": self.percentile_step,
            "threads": self.threads,
            "k_grid": list(self.k_grid),
            "gamma_grid": list(self.gamma_grid),
            "lambda_grid": list(self.lambda_grid),
            "benchmark": dict(self.benchmark),
        }


def load_config(path):
    """Parse a TOML config into a PipelineConfig.

    Recognized tables: [paths] (edges/features/labels/output), [pipeline]
    (mode, k_core, seed, target, id_column, standardize, threshold,
    percentile_step, threads), [grids] (k, gamma, lambda), [benchmark]
    (planted-graph spec for the benchmark subcommand).
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"config {path} is not valid TOML: {exc}") from exc

    paths = raw.get("paths", {})
    pipe = raw.get("pipeline", {})
    grids = raw.get("grids", {})
    known_pipe = {
        "mode", "k_core", "seed", "target", "id_column", "standardize",
        "threshold", "percentile_step", "threads",
    }
    unknown = set(pipe) - known_pipe
    if unknown:
        raise InputError(f"unknown [pipeline] keys in {path}: {sorted(unknown)}")
    return PipelineConfig(
        edges=paths.get("edges"),
        features=paths.get("features"),
        labels=paths.get("labels"),
        output=paths.get("output", "out"),
        mode=pipe.get("mode", "F"),
        k_core_k=int(pipe.get("k_core", 0)),
        seed=int(pipe.get("seed", 0)),
        target=pipe.get("target", "auto"),
        id_column=pipe.get("id_column", "id"),
        standardize=bool(pipe.get("standardize", True)),
        threshold=float(pipe.get("threshold", 0.5)),
        percentile_step=int(pipe.get("percentile_step", 5)),
        threads=int(pipe.get("threads", 1)),
        k_grid=tuple(grids.get("k", DEFAULT_K_GRID)),
        gamma_grid=tuple(grids.get("gamma", DEFAULT_GAMMA_GRID)),
        lambda_grid=tuple(grids.get("lambda", DEFAULT_LAMBDA_GRID)),
        benchmark=dict(raw.get("benchmark", {})),
    )


def load_label_table(path, id_column="id"):
    """Read a labels CSV into (row ids, {column name: string values})."""
    import csv

    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read labels {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty labels file")
    header = [h.strip() for h in rows[0]]
    if id_column not in header:
        raise InputError(f"{path}: id column {id_column!r} not in header {header}")
    id_pos = header.index(id_column)
    ids = []
    columns = {name: [] for pos, name in enumerate(header) if pos != id_pos}
    names = [name for pos, name in enumerate(header) if pos != id_pos]
    for index, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise InputError(
                f"{path}: row {index} has {len(row)} cells, expected {len(header)}"
            )
        ids.append(row[id_pos].strip())
        cells = [cell.strip() for pos, cell in enumerate(row) if pos != id_pos]
        for name, cell in zip(names, cells):
            columns[name].append(cell)
    return ids, columns


def select_target(table, rule):
    """Binarize one label column, pruning rows with a missing target.

    ``table`` is the (ids, columns) pair from :func:`load_label_table`. The
    rule names a column, or "auto" picks the only non-id column. A column
    whose observed values are all "0"/"1" binarizes directly; otherwise the
    value with the most occurrences becomes the positive class (ties toward
    the lexicographically smaller value).

    Returns:
        (kept ids, binary label array, positive class name or None).
    """
    ids, columns = table
    if rule in (None, "auto", "most-frequent-positive"):
        if len(columns) != 1:
            raise InputError(
                "target 'auto' needs exactly one label column, found "
                f"{sorted(columns)}"
            )
        column_name = next(iter(columns))
    else:
        if rule not in columns:
            raise InputError(f"target column {rule!r} not found in {sorted(columns)}")
        column_name = rule
    values = columns[column_name]
    observed = [(i, v) for i, v in zip(ids, values) if v not in MISSING_MARKERS]
    if not observed:
        raise InputError(f"target column {column_name!r} has no observed values")
    kept_ids = [i for i, _ in observed]
    kept_values = [v for _, v in observed]
    if set(kept_values) <= {"0", "1"}:
        y = np.array([int(v) for v in kept_values], dtype=np.int64)
        return kept_ids, y, None
    counts = {}
    for v in kept_values:
        counts[v] = counts.get(v, 0) + 1
    top = max(counts.values())
    positive = min(v for v, c in counts.items() if c == top)
    y = np.array([1 if v == positive else 0 for v in kept_values], dtype=np.int64)
    return kept_ids, y, positive


def run_mode_on_data(graph, features, y, split, mode, *, k_grid, gamma_grid,
                     lambda_grid, seed, standardize_columns=True, threads=1,
                     threshold=0.5, percentile_step=5):
    """Shared train+evaluate core for one design mode on in-memory data.

    Args:
        graph: evaluation graph (already pruned/cored).
        features: NodeFeatures in graph order.
        y: full-length binary label vector.
        split: RowSplit over graph node ids.
        mode: "F", "N", or "X".
        (grids, seed, threads, threshold, percentile_step): pipeline knobs;
            standardize_columns fits column stats on the training rows.
    Returns:
        (EvalReport, artifacts dict) — artifacts carry the link model and pair
        samples (mode X), the classifier, the selected hyperparameters, and
        the validation BCR.
    """
    artifacts = {}
    link_model = None
    if mode == "X":
        pairs = sample_pairs(graph, stage_seed(seed, "pairs"))
        opts = DescentOptions(seed=stage_seed(seed, "factorization"))
        k_star, gamma_star, link_model, costs = select_hyperparameters(
            graph, pairs, k_grid, gamma_grid, opts=opts, threads=threads
        )
        artifacts.update(
            link_model=link_model, k_star=k_star, gamma_star=gamma_star,
            pairs=pairs, link_cost_path=costs,
        )
    design = assemble_design(mode, features, graph=graph, link_model=link_model)
    if standardize_columns:
        design, stats = standardize(design, fit_rows=split.train)
        artifacts["column_stats"] = stats
    lam_star, classifier, val_bcr = select_lambda(
        design.values, y, split, lambda_grid=lambda_grid, threads=threads
    )
    if threshold != classifier.threshold:
        classifier = ClassifierModel(
            classifier.weights, classifier.intercept, classifier.lam, threshold
        )
    confidence, predicted = predict(classifier, design.values[split.test])
    report = evaluate_predictions(
        y[split.test], predicted, confidence, graph=graph,
        node_ids=split.test, mode=mode, percentile_step=percentile_step,
    )
    artifacts.update(
        classifier=classifier, lambda_star=lam_star, validation_bcr=val_bcr,
        design=design,
    )
    return report, artifacts


def _config_hash(config):
    canonical = json.dumps(config.as_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _write_manifest(out, config, artifacts, status, error=None, data=None):
    manifest = {
        "config": config.as_dict(),
        "config_sha256": _config_hash(config),
        "seed": config.seed,
        "versions": {
            "package": PACKAGE_VERSION,
            "numpy": np.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
        "artifacts": sorted(artifacts),
        "status": status,
    }
    if error is not None:
        manifest["error"] = error
    if data:
        manifest["data"] = data
    path = out / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


class _ArtifactLog:
    """Tracks written artifact files so a failed run can label them partial."""

    def __init__(self, out):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.written = []

    def path(self, name):
        self.written.append(name)
        return self.out / name


def prepare_inputs(config):
    """Load, prune by label availability, extract the k-core, load features.

    Returns:
        (graph, features, y, extras) with y aligned to graph node order;
        extras records the target column choice and pre/post-core sizes.
    """
    for name in ("edges", "labels", "features"):
        if getattr(config, name) is None:
            raise InputError(f"config is missing the {name} path")
    graph_full = load_edge_list(config.edges, symmetrize=True)
    table = load_label_table(config.labels, id_column=config.id_column)
    kept_ids, y_kept, positive = select_target(table, config.target)
    label_of = dict(zip(kept_ids, y_kept.tolist()))

    labeled_nodes = [
        v for v in range(graph_full.node_count)
        if graph_full.original_ids[v] in label_of
    ]
    if not labeled_nodes:
        raise InputError("no graph node carries an observed target label")
    pruned, _ = induced_subgraph(graph_full, labeled_nodes)
    cored, _ = k_core(pruned, config.k_core_k)
    if cored.node_count == 0:
        raise InputError(
            f"{config.k_core_k}-core of the pruned graph is empty"
        )
    y = np.array(
        [label_of[oid] for oid in cored.original_ids], dtype=np.int64
    )
    features = load_features(config.features, cored, id_column=config.id_column)
    extras = {
        "positive_class": positive,
        "nodes_before_core": pruned.node_count,
        "nodes_after_core": cored.node_count,
    }
    return cored, features, y, extras


def _write_report_artifacts(log, report, table_text):
    with open(log.path("eval_report.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    write_curve_csv(report.pr, log.path("curve_pr.csv"))
    write_curve_csv(
        report.accuracy_percentile, log.path("curve_accuracy_at_percentile.csv")
    )
    if report.degree_accuracy is not None:
        write_curve_csv(
            report.degree_accuracy, log.path("curve_per_degree_accuracy.csv")
        )
    if report.degree_perplexity is not None:
        write_curve_csv(
            report.degree_perplexity, log.path("curve_per_degree_perplexity.csv")
        )
    with open(log.path("metrics_table.txt"), "w", encoding="utf-8") as fh:
        fh.write(table_text)


def _train_stage(log, config):
    """Shared ingest→train stage: writes stats.json, the fitted models, the
    pair samples (mode X), and split.json; returns everything downstream
    evaluation needs."""
    graph, features, y, extras = prepare_inputs(config)
    with open(log.path("stats.json"), "w", encoding="utf-8") as fh:
        fh.write(network_stats(graph).to_json())
    split = split_rows(
        np.arange(graph.node_count), stage_seed(config.seed, "row_split")
    )
    report, artifacts = run_mode_on_data(
        graph, features, y, split, config.mode,
        k_grid=config.k_grid, gamma_grid=config.gamma_grid,
        lambda_grid=config.lambda_grid, seed=config.seed,
        standardize_columns=config.standardize, threads=config.threads,
        threshold=config.threshold, percentile_step=config.percentile_step,
    )
    if config.mode == "X":
        save_link_model(
            artifacts["link_model"], log.path("link_model.json"),
            original_ids=graph.original_ids,
        )
        for sample, name in zip(artifacts["pairs"],
                                ("train", "validation", "test")):
            write_pair_sample(sample, log.path(f"pairs_{name}.csv"))
    save_classifier(
        artifacts["classifier"], artifacts["design"].provenance,
        log.path("classifier.json"),
    )
    with open(log.path("split.json"), "w", encoding="utf-8") as fh:
        json.dump(split.as_dict(), fh, sort_keys=True)
        fh.write("\n")
    return report, artifacts, extras


def run_pipeline(config):
    """Execute the full pipeline per config; returns the EvalReport.

    Artifacts written to the output directory: stats.json, link_model.json and
    pair CSVs (mode X), classifier.json, split.json, eval_report.json, curve
    CSVs, metrics_table.txt, and manifest.json. On error the manifest labels
    the partial artifact set and the error is re-raised.
    """
    log = _ArtifactLog(config.output)
    try:
        report, artifacts, extras = _train_stage(log, config)
        table = format_metrics_table({config.mode: report.metrics})
        _write_report_artifacts(log, report, table)
        _write_manifest(log.out, config, log.written, "complete", data=extras)
        return report
    except Exception as exc:
        _write_manifest(log.out, config, log.written, "partial", error=str(exc))
        raise


def train_pipeline(config):
    """Pipeline through classifier selection; writes models but no report."""
    log = _ArtifactLog(config.output)
    try:
        report, artifacts, extras = _train_stage(log, config)
        _write_manifest(log.out, config, log.written, "complete", data=extras)
        return artifacts
    except Exception as exc:
        _write_manifest(log.out, config, log.written, "partial", error=str(exc))
        raise


def evaluate_pipeline(config):
    """Evaluate previously trained artifacts (classifier.json, split.json,
    link_model.json for mode X) found in the output directory."""
    out = Path(config.output)
    log = _ArtifactLog(config.output)
    try:
        graph, features, y, extras = prepare_inputs(config)
        classifier, provenance = load_classifier(out / "classifier.json")
        try:
            with open(out / "split.json", encoding="utf-8") as fh:
                split_data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read split.json in {out}: {exc}") from exc
        split = RowSplit(
            np.array(split_data["train"]), np.array(split_data["validation"]),
            np.array(split_data["test"]),
        )
        link_model = None
        if config.mode == "X":
            link_model, _ = load_link_model(out / "link_model.json")
        design = assemble_design(
            config.mode, features, graph=graph, link_model=link_model
        )
        if config.standardize:
            design, _ = standardize(design, fit_rows=split.train)
        confidence, predicted = predict(classifier, design.values[split.test])
        report = evaluate_predictions(
            y[split.test], predicted, confidence, graph=graph,
            node_ids=split.test, mode=config.mode,
            percentile_step=config.percentile_step,
        )
        table = format_metrics_table({config.mode: report.metrics})
        _write_report_artifacts(log, report, table)
        _write_manifest(log.out, config, log.written, "complete", data=extras)
        return report
    except Exception as exc:
        _write_manifest(log.out, config, log.written, "partial", error=str(exc))
        raise


def factorize_pipeline(config):
    """Ingest, prune (when labels are given), core, then hyperparameter-search
    the factorization only."""
    log = _ArtifactLog(config.output)
    try:
        if config.labels is not None and config.features is not None:
            graph, _, _, _ = prepare_inputs(config)
        else:
            if config.edges is None:
                raise InputError("config is missing the edges path")
            raw = load_edge_list(config.edges, symmetrize=True)
            graph, _ = k_core(raw, config.k_core_k)
            if graph.node_count == 0:
                raise InputError(f"{config.k_core_k}-core of the graph is empty")
        pairs = sample_pairs(graph, stage_seed(config.seed, "pairs"))
        opts = DescentOptions(seed=stage_seed(config.seed, "factorization"))
        k_star, gamma_star, model, costs = select_hyperparameters(
            graph, pairs, config.k_grid, config.gamma_grid, opts=opts,
            threads=config.threads,
        )
        save_link_model(
            model, log.path("link_model.json"), original_ids=graph.original_ids
        )
        for sample, name in zip(pairs, ("train", "validation", "test")):
            write_pair_sample(sample, log.path(f"pairs_{name}.csv"))
        with open(log.path("link_cost_path.json"), "w", encoding="utf-8") as fh:
            json.dump({"k": k_star, "gamma": gamma_star, "cost_path": costs},
                      fh, sort_keys=True)
            fh.write("\n")
        _write_manifest(log.out, config, log.written, "complete")
        return k_star, gamma_star, model
    except Exception as exc:
        _write_manifest(log.out, config, log.written, "partial", error=str(exc))
        raise


def kcore_pipeline(config):
    """Standalone k-core extraction of the raw edge list (no label pruning)."""
    log = _ArtifactLog(config.output)
    try:
        if config.edges is None:
            raise InputError("config is missing the edges path")
        graph = load_edge_list(config.edges, symmetrize=True)
        core, id_map = k_core(graph, config.k_core_k)
        if core.node_count:
            write_edge_list(core, log.path("core_edges.txt"))
        with open(log.path("core_id_map.json"), "w", encoding="utf-8") as fh:
            json.dump(
                {str(new): graph.original_ids[old] for new, old in id_map.items()},
                fh, sort_keys=True,
            )
            fh.write("\n")
        _write_manifest(log.out, config, log.written, "complete")
        return core
    except Exception as exc:
        _write_manifest(log.out, config, log.written, "partial", error=str(exc))
        raise


def stats_pipeline(config):
    """Network statistics of the raw edge list; returns the StatsRecord."""
    if config.edges is None:
        raise InputError("config is missing the edges path")
    graph = load_edge_list(config.edges, symmetrize=True)
    return network_stats(graph)
