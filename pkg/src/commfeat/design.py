"""Per-node feature tables and the three design matrices.

Modes: F uses the raw features alone; N appends each node's neighbor-average
feature row ([F | avg]); X prepends the latent factor rows ([U | V | F]).
"""

import csv
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import InputError
from .validation import check_matrix

MISSING_MARKERS = {"", "NA"}


@dataclass(frozen=True)
class NodeFeatures:
    """Dense n×f feature matrix with column names and an observed-cell mask.

    Missing cells are mean-imputed at load time; the mask records which cells
    held real observations.
    """

    values: np.ndarray
    column_names: tuple
    missing_mask: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        mask = np.asarray(self.missing_mask, dtype=bool)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing_mask", mask)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if values.ndim != 2:
            raise InputError(f"feature matrix must be 2-D, got shape {values.shape}")
        if mask.shape != values.shape:
            raise InputError("missing mask shape must match the value matrix")
        if len(self.column_names) != values.shape[1]:
            raise InputError(
                f"{len(self.column_names)} column names for "
                f"{values.shape[1]} columns"
            )
        if mask.any() and not np.isfinite(values[mask]).all():
            raise InputError("observed feature cells contain non-finite values")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def f(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class DesignMatrix:
    """Assembled observation matrix with per-column provenance tags."""

    values: np.ndarray
    mode: str
    provenance: tuple

    def __post_init__(self):
        values = check_matrix(self.values, "design matrix")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "provenance", tuple(self.provenance))
        if self.mode not in ("F", "N", "X"):
            raise InputError(f"mode must be F, N, or X, got {self.mode!r}")
        if len(self.provenance) != values.shape[1]:
            raise InputError("one provenance tag per column required")

    @property
    def d(self):
        return self.values.shape[1]


def _parse_cell(text, path, row_index, column):
    text = text.strip()
    if text in MISSING_MARKERS:
        return np.nan, False
    try:
        return float(text), True
    except ValueError:
        raise InputError(
            f"{path}: non-numeric value {text!r} at row {row_index}, "
            f"column {column!r}"
        ) from None


def load_features(path, graph, id_column="id"):
    """Load a feature CSV aligned to a graph's node order.

    The CSV needs a header naming ``id_column``; every other column is a
    numeric feature. Empty cells and "NA" are missing: they are masked and
    imputed to the observed column mean (0 when a column has no observations).

    Args:
        path: CSV path.
        graph: Graph whose ``original_ids`` define the row order.
        id_column: name of the id column.
    Returns:
        NodeFeatures with rows in graph node order.
    Raises:
        InputError: missing id column, unmatched graph ids, non-numeric cells.
    """
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise InputError(f"cannot read features {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty feature file")
    header = [h.strip() for h in rows[0]]
    if id_column not in header:
        raise InputError(f"{path}: id column {id_column!r} not in header {header}")
    id_pos = header.index(id_column)
    names = tuple(h for pos, h in enumerate(header) if pos != id_pos)

    table = {}
    for row_index, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise InputError(
                f"{path}: row {row_index} has {len(row)} cells, "
                f"expected {len(header)}"
            )
        node_id = row[id_pos].strip()
        cells = [cell for pos, cell in enumerate(row) if pos != id_pos]
        parsed = [
            _parse_cell(cell, path, row_index, names[c])
            for c, cell in enumerate(cells)
        ]
        table[node_id] = parsed

    unmatched = [oid for oid in graph.original_ids if oid not in table]
    if unmatched:
        raise InputError(
            f"{path}: no feature row for graph node id(s) "
            + ", ".join(map(str, unmatched[:10]))
            + ("..." if len(unmatched) > 10 else "")
        )

    n, f = graph.node_count, len(names)
    values = np.zeros((n, f))
    mask = np.zeros((n, f), dtype=bool)
    for internal, oid in enumerate(graph.original_ids):
        for c, (value, observed) in enumerate(table[oid]):
            values[internal, c] = value if observed else 0.0
            mask[internal, c] = observed

    # Mean-impute the masked cells column by column.
    for c in range(f):
        observed = mask[:, c]
        column_mean = values[observed, c].mean() if observed.any() else 0.0
        values[~observed, c] = column_mean
    return NodeFeatures(values, names, mask)


def write_features(features, graph, path, id_column="id"):
    """Write a NodeFeatures table as CSV in graph order (round-trips through
    :func:`load_features`; imputed cells are written as values)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([id_column, *features.column_names])
        for internal, oid in enumerate(graph.original_ids):
            writer.writerow(
                [oid, *(repr(float(x)) for x in features.values[internal])]
            )


def neighbor_average(features, graph):
    """Row i = mean of feature rows over i's neighbors; isolated nodes get a
    zero row."""
    if features.n != graph.node_count:
        raise InputError(
            f"feature rows ({features.n}) must match node count "
            f"({graph.node_count})"
        )
    out = np.zeros_like(features.values)
    for v in range(graph.node_count):
        neigh = sorted(graph.adjacency[v])
        if neigh:
            out[v] = features.values[neigh].mean(axis=0)
    return out


def assemble_design(mode, features, graph=None, link_model=None):
    """Build the design matrix for one of the three modes.

    F → features alone; N → [F | neighbor-average]; X → [U | V | F].

    Args:
        mode: "F", "N", or "X".
        features: NodeFeatures in graph node order.
        graph: required for mode N.
        link_model: required for mode X, with matching node count.
    Returns:
        DesignMatrix with provenance tags
        ("feature", "neighbor-avg", "latent-U", "latent-V").
    """
    if mode == "F":
        return DesignMatrix(
            features.values.copy(), "F", ("feature",) * features.f
        )
    if mode == "N":
        if graph is None:
            raise InputError("mode N requires the graph")
        avg = neighbor_average(features, graph)
        values = np.concatenate([features.values, avg], axis=1)
        tags = ("feature",) * features.f + ("neighbor-avg",) * features.f
        return DesignMatrix(values, "N", tags)
    if mode == "X":
        if link_model is None:
            raise InputError("mode X requires a trained link model")
        if link_model.n != features.n:
            raise InputError(
                f"link model covers {link_model.n} nodes, features cover "
                f"{features.n}"
            )
        values = np.concatenate(
            [link_model.U, link_model.V, features.values], axis=1
        )
        tags = (
            ("latent-U",) * link_model.k
            + ("latent-V",) * link_model.k
            + ("feature",) * features.f
        )
        return DesignMatrix(values, "X", tags)
    raise InputError(f"unknown design mode {mode!r}")


def standardize(design, stats=None, fit_rows=None):
    """Shift/scale each column to mean 0, standard deviation 1.

    Statistics (population standard deviation) come from ``fit_rows`` when
    given, else from all rows, unless precomputed ``stats`` are supplied.
    Zero-variance columns are centered only.

    Args:
        design: DesignMatrix to transform.
        stats: optional (mean, scale) pair returned by an earlier call.
        fit_rows: optional row indices to fit the statistics on.
    Returns:
        (transformed DesignMatrix, (mean, scale)).
    """
    values = design.values
    if stats is None:
        rows = values if fit_rows is None else values[np.asarray(fit_rows)]
        mean = rows.mean(axis=0)
        scale = rows.std(axis=0)
        scale = np.where(scale == 0.0, 1.0, scale)
        stats = (mean, scale)
    mean, scale = stats
    transformed = (values - mean) / scale
    return DesignMatrix(transformed, design.mode, design.provenance), stats


class ColumnStandardizer(BaseEstimator, TransformerMixin):
    """Transformer view of :func:`standardize` for plain arrays.

    Fit on the training rows, transform any rows with the stored statistics.
    """

    def fit(self, X, y=None):
        X = check_matrix(X, "X")
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        self.scale_ = np.where(scale == 0.0, 1.0, scale)
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_matrix(X, "X")
        if X.shape[1] != self.mean_.shape[0]:
            raise InputError(
                f"X has {X.shape[1]} columns, standardizer was fitted on "
                f"{self.mean_.shape[0]}"
            )
        return (X - self.mean_) / self.scale_
