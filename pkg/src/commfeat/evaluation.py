"""Evaluation of label predictions: global metrics, confidence-ranked curves,
and per-degree decompositions.

Conventions: predictions are ranked by confidence |ỹ − 0.5| (ties broken by
index); degenerate precision/recall (zero denominator) is 0; the likelihood
scalar is reported as a negative log-likelihood (lower is better).
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .validation import check_binary_array, check_confidences, check_same_length

# numpy 2 renamed trapz; support both spellings across the declared range
_trapezoid = getattr(np, "trapezoid", None) or np.trapz

_HIGHER_BETTER = ("accuracy", "precision", "recall", "f1", "bcr")
_LOWER_BETTER = ("rmse", "neg_log_likelihood")
_UNMARKED = ("pct_pred_positive", "pct_actual_positive")
METRIC_ORDER = (
    "accuracy", "rmse", "precision", "recall", "f1", "bcr",
    "neg_log_likelihood", "pct_pred_positive", "pct_actual_positive",
)


@dataclass(frozen=True)
class MetricsRecord:
    """The global metrics table row set."""

    accuracy: float
    rmse: float
    precision: float
    recall: float
    f1: float
    bcr: float
    neg_log_likelihood: float
    pct_pred_positive: float
    pct_actual_positive: float

    def as_dict(self):
        return {name: getattr(self, name) for name in METRIC_ORDER}


@dataclass(frozen=True)
class CurveSeries:
    """A plottable series: strictly increasing x, values y, optional standard
    errors (present exactly for the per-degree kinds)."""

    x: tuple
    y: tuple
    kind: str
    err: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if self.err is not None:
            object.__setattr__(self, "err", tuple(float(v) for v in self.err))
        if self.kind not in (
            "pr", "accuracy_at_percentile", "per_degree_accuracy",
            "per_degree_perplexity",
        ):
            raise InputError(f"unknown curve kind {self.kind!r}")
        if len(self.x) != len(self.y):
            raise InputError("curve x and y lengths differ")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise InputError("curve x must be strictly increasing")
        per_degree = self.kind.startswith("per_degree")
        if per_degree and (self.err is None or len(self.err) != len(self.x)):
            raise InputError("per-degree curves require one error per point")
        if not per_degree and self.err is not None:
            raise InputError(f"{self.kind} curves carry no error bars")

    def as_dict(self):
        out = {"kind": self.kind, "x": list(self.x), "y": list(self.y)}
        if self.err is not None:
            out["err"] = list(self.err)
        return out


def confusion(y, y_hat):
    """Confusion counts (TP, FP, TN, FN) for binary vectors."""
    y = check_binary_array(y, "y")
    y_hat = check_binary_array(y_hat, "y_hat")
    check_same_length(("y", y), ("y_hat", y_hat))
    tp = int(np.sum((y == 1) & (y_hat == 1)))
    fp = int(np.sum((y == 0) & (y_hat == 1)))
    tn = int(np.sum((y == 0) & (y_hat == 0)))
    fn = int(np.sum((y == 1) & (y_hat == 0)))
    return tp, fp, tn, fn


def global_metrics(y, y_hat, y_conf):
    """Compute the full MetricsRecord.

    Args:
        y: true binary labels.
        y_hat: predicted binary labels.
        y_conf: confidences strictly inside (0, 1).
    Returns:
        MetricsRecord; zero-denominator precision/recall/F1 are 0, the
        likelihood is the summed negative log-likelihood.
    """
    y = check_binary_array(y, "y")
    y_hat = check_binary_array(y_hat, "y_hat")
    y_conf = check_confidences(y_conf)
    n = check_same_length(("y", y), ("y_hat", y_hat), ("y_conf", y_conf))
    tp, fp, tn, fn = confusion(y, y_hat)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    tnr = tn / (tn + fp) if tn + fp else 0.0
    yf = y.astype(float)
    return MetricsRecord(
        accuracy=(tp + tn) / n,
        rmse=float(np.sqrt(np.mean((y_conf - yf) ** 2))),
        precision=precision,
        recall=recall,
        f1=f1,
        bcr=0.5 * (recall + tnr),
        neg_log_likelihood=float(
            -np.sum(yf * np.log(y_conf) + (1.0 - yf) * np.log1p(-y_conf))
        ),
        pct_pred_positive=float(np.mean(y_hat)),
        pct_actual_positive=float(np.mean(y)),
    )


def _confidence_order(y_conf):
    """Indices sorted by |ỹ − 0.5| descending, ties by original index."""
    y_conf = np.asarray(y_conf, dtype=float)
    return np.argsort(-np.abs(y_conf - 0.5), kind="stable")


def pr_curve(y, y_conf):
    """Precision/recall over confidence-ranked prefixes, plus trapezoid area.

    For each prefix of the |ỹ − 0.5| ranking, precision counts correct
    positive predictions among the prefix's positive predictions (ỹ ≥ 0.5)
    and recall divides by the total number of positive instances. The area is
    integrated over the full prefix sequence; the returned series keeps the
    last point of each distinct recall so x stays strictly increasing, and its
    final point equals global precision/recall.

    Args:
        y: true binary labels (at least one positive).
        y_conf: confidences strictly inside (0, 1).
    Returns:
        (CurveSeries with x=recall / y=precision, area).
    """
    y = check_binary_array(y, "y")
    y_conf = check_confidences(y_conf)
    check_same_length(("y", y), ("y_conf", y_conf))
    total_pos = int(np.sum(y == 1))
    if total_pos == 0:
        raise InputError("precision/recall curve needs at least one positive instance")
    order = _confidence_order(y_conf)
    predicted = (y_conf[order] >= 0.5).astype(int)
    actual = y[order]
    tp = np.cumsum((predicted == 1) & (actual == 1))
    pp = np.cumsum(predicted == 1)
    with np.errstate(invalid="ignore"):
        precision = np.where(pp > 0, tp / np.maximum(pp, 1), 0.0)
    recall = tp / total_pos

    area = float(_trapezoid(precision, recall))
    keep = np.nonzero(np.diff(recall, append=np.inf) != 0.0)[0]
    series = CurveSeries(recall[keep], precision[keep], kind="pr")
    return series, area


def accuracy_at_percentile(y, y_conf, y_hat, step=5):
    """Accuracy over the top-p% most confident predictions, p = step..100.

    The top-p% prefix holds ceil(p·n/100) predictions of the |ỹ − 0.5|
    ranking; p = 100 reproduces global accuracy exactly.
    """
    y = check_binary_array(y, "y")
    y_hat = check_binary_array(y_hat, "y_hat")
    y_conf = check_confidences(y_conf)
    n = check_same_length(("y", y), ("y_hat", y_hat), ("y_conf", y_conf))
    if not 1 <= step <= 100:
        raise InputError(f"percentile step must lie in [1, 100], got {step}")
    order = _confidence_order(y_conf)
    correct = (y[order] == y_hat[order]).astype(float)
    cum = np.cumsum(correct)
    percentiles = list(range(step, 100, step)) + [100]
    xs, ys = [], []
    for p in percentiles:
        count = (p * n + 99) // 100  # ceil(p·n/100), never 0
        xs.append(p)
        ys.append(cum[count - 1] / count)
    return CurveSeries(xs, ys, kind="accuracy_at_percentile")


def per_degree_series(values, graph, kind, node_ids=None):
    """Group per-node values by full-graph degree: mean and standard error.

    ``values`` are already per-node summaries — correctness indicators for the
    accuracy kind, |ỹ − y| for the perplexity kind. The standard error is the
    population standard deviation over √(group size); singletons get 0.

    Args:
        values: one value per evaluated node.
        graph: source of degrees.
        kind: "per_degree_accuracy" or "per_degree_perplexity".
        node_ids: graph node behind each value row (identity when omitted, in
            which case values must cover every graph node). Degrees are always
            taken from the full graph, never from a subset induction.
    Returns:
        CurveSeries with x = sorted distinct degrees and error bars.
    """
    if kind not in ("per_degree_accuracy", "per_degree_perplexity"):
        raise InputError(f"unknown per-degree kind {kind!r}")
    values = np.asarray(values, dtype=float)
    if node_ids is None:
        if len(values) != graph.node_count:
            raise InputError(
                f"{len(values)} values for {graph.node_count} graph nodes"
            )
        node_ids = np.arange(graph.node_count)
    node_ids = np.asarray(node_ids, dtype=np.int64)
    if len(node_ids) != len(values):
        raise InputError("node_ids must parallel values")
    degrees = np.array([len(graph.adjacency[v]) for v in node_ids])
    xs, ys, errs = [], [], []
    for d in np.unique(degrees):
        group = values[degrees == d]
        xs.append(int(d))
        ys.append(float(group.mean()))
        errs.append(float(group.std() / np.sqrt(len(group))) if len(group) > 1 else 0.0)
    return CurveSeries(xs, ys, kind=kind, err=errs)


@dataclass(frozen=True)
class EvalReport:
    """Bundle of global metrics and curve series for one evaluated model."""

    metrics: MetricsRecord
    pr: CurveSeries
    pr_area: float
    accuracy_percentile: CurveSeries
    degree_accuracy: CurveSeries = None
    degree_perplexity: CurveSeries = None
    mode: str = None
    extras: dict = field(default_factory=dict)

    def as_dict(self):
        out = {
            "metrics": self.metrics.as_dict(),
            "curves": {
                "pr": self.pr.as_dict(),
                "accuracy_at_percentile": self.accuracy_percentile.as_dict(),
            },
            "pr_area": self.pr_area,
            "notes": {
                "neg_log_likelihood": "summed negative log-likelihood; lower is better"
            },
        }
        if self.degree_accuracy is not None:
            out["curves"]["per_degree_accuracy"] = self.degree_accuracy.as_dict()
        if self.degree_perplexity is not None:
            out["curves"]["per_degree_perplexity"] = self.degree_perplexity.as_dict()
        if self.mode is not None:
            out["mode"] = self.mode
        if self.extras:
            out["extras"] = self.extras
        return out

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"


def evaluate_predictions(y, y_hat, y_conf, graph=None, node_ids=None,
                         mode=None, percentile_step=5):
    """Assemble a full EvalReport for one prediction set.

    Per-degree curves are included when a graph is given; ``node_ids`` maps
    each prediction row to its graph node (identity when omitted).
    """
    metrics = global_metrics(y, y_hat, y_conf)
    pr, area = pr_curve(y, y_conf)
    acc_pct = accuracy_at_percentile(y, y_conf, y_hat, step=percentile_step)
    degree_acc = degree_perp = None
    if graph is not None:
        y = check_binary_array(y, "y")
        y_hat = check_binary_array(y_hat, "y_hat")
        y_conf = check_confidences(y_conf)
        correct = (y == y_hat).astype(float)
        perplexity = np.abs(y_conf - y.astype(float))
        degree_acc = per_degree_series(
            correct, graph, "per_degree_accuracy", node_ids=node_ids
        )
        degree_perp = per_degree_series(
            perplexity, graph, "per_degree_perplexity", node_ids=node_ids
        )
    return EvalReport(
        metrics=metrics,
        pr=pr,
        pr_area=area,
        accuracy_percentile=acc_pct,
        degree_accuracy=degree_acc,
        degree_perplexity=degree_perp,
        mode=mode,
    )


def write_curve_csv(series, path):
    """Write a curve as plot-ready CSV with columns x,y,err (err blank when
    the curve has no error bars)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "err"])
        errs = series.err if series.err is not None else [""] * len(series.x)
        for x, yv, e in zip(series.x, series.y, errs):
            writer.writerow([x, yv, e])


def format_metrics_table(records):
    """Human-readable metrics table across models, best value per row marked.

    Args:
        records: mapping model name -> MetricsRecord; column order follows the
            mapping order.
    Returns:
        Aligned text table; '*' marks the best value per row for metrics with
        a direction (higher: accuracy/precision/recall/F1/BCR; lower: RMSE and
        negative log-likelihood).
    """
    if not records:
        raise InputError("metrics table needs at least one record")
    names = list(records)
    width = max(24, *(len(n) + 2 for n in names))
    head = "metric".ljust(24) + "".join(n.rjust(width) for n in names)
    lines = [head, "-" * len(head)]
    for metric in METRIC_ORDER:
        values = [getattr(records[n], metric) for n in names]
        best = None
        if metric in _HIGHER_BETTER:
            best = max(values)
        elif metric in _LOWER_BETTER:
            best = min(values)
        cells = []
        for v in values:
            mark = "*" if best is not None and v == best else " "
            cells.append(f"{v:.4f}{mark}".rjust(width))
        lines.append(metric.ljust(24) + "".join(cells))
    return "\n".join(lines) + "\n"
