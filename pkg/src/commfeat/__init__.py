"""Node-label prediction on attributed networks via latent community features.

The package factorizes a graph's adjacency matrix through a sigmoid link to
recover per-node latent community vectors, concatenates them with observed
per-node features, and fits an L2-regularized logistic classifier — plus the
ingestion, evaluation, benchmark, and CLI plumbing around that core.
"""

from importlib.metadata import PackageNotFoundError, version as _dist_version

try:
    __version__ = _dist_version("commfeat")
except PackageNotFoundError:  # running from a source tree without install
    __version__ = "0.0.0"

from .classify import (
    DEFAULT_LAMBDA_GRID, ClassifierModel, LogisticClassifier, RowSplit,
    balanced_classification_rate, fit_logreg, load_classifier, predict,
    save_classifier, select_lambda, split_rows,
)
from .design import (
    ColumnStandardizer, DesignMatrix, NodeFeatures, assemble_design,
    load_features, neighbor_average, standardize, write_features,
)
from .errors import CommfeatError, InputError, NumericalError
from .evaluation import (
    CurveSeries, EvalReport, MetricsRecord, accuracy_at_percentile, confusion,
    evaluate_predictions, format_metrics_table, global_metrics,
    per_degree_series, pr_curve, write_curve_csv,
)
from .factorization import (
    CostWeights, DescentOptions, LinkFactorization, LinkModel, PairSample,
    cost, fit_link_model, full_pair_universe, gradients, link_probability,
    load_link_model, sample_pairs, save_link_model, select_hyperparameters,
)
from .graphs import (
    Graph, StatsRecord, connected_components, degree, induced_subgraph,
    k_core, load_edge_list, network_stats, write_edge_list,
)
from .pipeline import (
    PipelineConfig, evaluate_pipeline, load_config, run_mode_on_data,
    run_pipeline, train_pipeline,
)
from .seeding import STAGES, stage_seed
from .synth import (
    SbmSpec, generate_features, generate_instance, generate_labels,
    generate_sbm, run_benchmark,
)

__all__ = [
    "__version__",
    # errors
    "CommfeatError", "InputError", "NumericalError",
    # graphs
    "Graph", "StatsRecord", "connected_components", "degree",
    "induced_subgraph", "k_core", "load_edge_list", "network_stats",
    "write_edge_list",
    # factorization
    "CostWeights", "DescentOptions", "LinkFactorization", "LinkModel",
    "PairSample", "cost", "fit_link_model", "full_pair_universe", "gradients",
    "link_probability", "load_link_model", "sample_pairs", "save_link_model",
    "select_hyperparameters",
    # design
    "ColumnStandardizer", "DesignMatrix", "NodeFeatures", "assemble_design",
    "load_features", "neighbor_average", "standardize", "write_features",
    # classify
    "DEFAULT_LAMBDA_GRID", "ClassifierModel", "LogisticClassifier", "RowSplit",
    "balanced_classification_rate", "fit_logreg", "load_classifier", "predict",
    "save_classifier", "select_lambda", "split_rows",
    # evaluation
    "CurveSeries", "EvalReport", "MetricsRecord", "accuracy_at_percentile",
    "confusion", "evaluate_predictions", "format_metrics_table",
    "global_metrics", "per_degree_series", "pr_curve", "write_curve_csv",
    # seeding
    "STAGES", "stage_seed",
    # pipeline
    "PipelineConfig", "evaluate_pipeline", "load_config", "run_mode_on_data",
    "run_pipeline", "train_pipeline",
    # synthetic benchmark
    "SbmSpec", "generate_features", "generate_instance", "generate_labels",
    "generate_sbm", "run_benchmark",
]
