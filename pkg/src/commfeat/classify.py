"""L2-regularized logistic regression over a design matrix.

Objective: mean negative log-likelihood + λ‖Θ‖² with an unpenalized intercept,
minimized by backtracking gradient descent. λ is selected on a validation set
by balanced classification rate (BCR), ties toward the smaller λ.
"""

import json
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .errors import InputError, NumericalError
from .numerics import clip_probability, log_sigmoid, sigmoid
from .validation import check_binary_array, check_matrix

# {0} plus a doubling ladder 0.01 … 10.24 — twelve points.
DEFAULT_LAMBDA_GRID = (0.0,) + tuple(0.01 * 2**i for i in range(11))


@dataclass(frozen=True)
class RowSplit:
    """Disjoint train/validation/test row-index lists covering all labeled rows."""

    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for name in ("train", "validation", "test"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            object.__setattr__(self, name, arr)
        parts = [set(self.train), set(self.validation), set(self.test)]
        total = len(self.train) + len(self.validation) + len(self.test)
        if len(parts[0] | parts[1] | parts[2]) != total:
            raise InputError("row split parts overlap")

    def as_dict(self):
        return {
            "train": self.train.tolist(),
            "validation": self.validation.tolist(),
            "test": self.test.tolist(),
        }


@dataclass(frozen=True)
class ClassifierModel:
    """Fitted logistic model: weights Θ, intercept, λ, decision threshold t."""

    weights: np.ndarray
    intercept: float
    lam: float
    threshold: float = 0.5

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", weights)
        if not np.isfinite(weights).all() or not np.isfinite(self.intercept):
            raise NumericalError("classifier parameters are not finite")
        if not 0.0 < self.threshold < 1.0:
            raise InputError(f"threshold must lie in (0,1), got {self.threshold}")


def split_rows(ids, seed, ratios=(0.6, 0.2, 0.2)):
    """Shuffle ids by seed and cut at floor(0.6n) / floor(0.8n).

    Args:
        ids: labeled row ids (≥ 5 of them).
        seed: integer or numpy SeedSequence.
        ratios: train/validation/test proportions (must sum to 1).
    Returns:
        RowSplit.
    """
    ids = np.asarray(list(ids), dtype=np.int64)
    n = len(ids)
    if n < 5:
        raise InputError(f"need at least 5 labeled rows to split, got {n}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InputError(f"split ratios must sum to 1, got {ratios}")
    rng = np.random.default_rng(seed)
    shuffled = ids[rng.permutation(n)]
    cut1 = int(np.floor(ratios[0] * n))
    cut2 = int(np.floor((ratios[0] + ratios[1]) * n))
    return RowSplit(shuffled[:cut1], shuffled[cut1:cut2], shuffled[cut2:])


def _objective(X, y, weights, intercept, lam):
    z = intercept + X @ weights
    nll = -(y * log_sigmoid(z) + (1.0 - y) * log_sigmoid(-z))
    return float(nll.mean() + lam * weights @ weights)


def _gradient(X, y, weights, intercept, lam):
    residual = sigmoid(intercept + X @ weights) - y
    grad_w = X.T @ residual / len(y) + 2.0 * lam * weights
    grad_b = float(residual.mean())
    return grad_w, grad_b


def fit_logreg(X, y, lam, max_iter=10000, tol=1e-10, grad_tol=1e-6,
               step0=1.0, init=None):
    """Fit the L2 logistic regression by backtracking gradient descent.

    Converged when the relative objective change drops below ``tol`` or the
    gradient norm below ``grad_tol``. The objective tolerance is kept tight so
    that, for any λ > 0, fits from different initializations land on the same
    weights to well under 1e-4. The intercept is never penalized.

    Args:
        X: n×d design rows.
        y: binary labels.
        lam: λ ≥ 0.
        max_iter: iteration cap.
        tol: relative-objective convergence tolerance.
        grad_tol: gradient-norm convergence tolerance.
        step0: initial step size.
        init: optional length-(d+1) start vector (weights then intercept) or a
            seed for a small random start; zeros by default.
    Returns:
        ClassifierModel (threshold 0.5).
    Raises:
        InputError: single-class labels with λ = 0 (unbounded objective).
    """
    X = check_matrix(X, "X")
    y = check_binary_array(y, "y").astype(float)
    if len(y) != X.shape[0]:
        raise InputError(f"{len(y)} labels for {X.shape[0]} rows")
    if lam < 0:
        raise InputError(f"lambda must be non-negative, got {lam}")
    classes = np.unique(y)
    if len(classes) < 2 and lam == 0.0:
        raise InputError(
            "labels contain a single class and lambda is 0: the objective "
            "is unbounded; use lambda > 0 or provide both classes"
        )
    d = X.shape[1]
    if init is None:
        weights, intercept = np.zeros(d), 0.0
    elif isinstance(init, (int, np.integer)):
        rng = np.random.default_rng(init)
        start = rng.uniform(-0.5, 0.5, size=d + 1)
        weights, intercept = start[:d], float(start[d])
    else:
        start = np.asarray(init, dtype=float)
        if start.shape != (d + 1,):
            raise InputError(f"init must have length {d + 1}, got {start.shape}")
        weights, intercept = start[:d].copy(), float(start[d])

    current = _objective(X, y, weights, intercept, lam)
    step = step0
    for _ in range(max_iter):
        grad_w, grad_b = _gradient(X, y, weights, intercept, lam)
        grad_norm = float(np.sqrt(grad_w @ grad_w + grad_b * grad_b))
        if grad_norm < grad_tol:
            break
        accepted = False
        for _ in range(60):
            w_new = weights - step * grad_w
            b_new = intercept - step * grad_b
            new = _objective(X, y, w_new, b_new, lam)
            if np.isfinite(new) and new <= current:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # step underflow at a (numerically) stationary point
        rel = (current - new) / max(abs(current), np.finfo(float).tiny)
        weights, intercept, current = w_new, b_new, new
        step *= 1.1
        if rel < tol:
            break
    return ClassifierModel(weights, intercept, lam)


def predict(model, X):
    """Confidences ỹ = σ(intercept + XΘ) and labels ŷ = [ỹ ≥ t].

    Returns:
        (confidences strictly inside (0,1), integer labels).
    """
    X = check_matrix(X, "X")
    if X.shape[1] != model.weights.shape[0]:
        raise InputError(
            f"X has {X.shape[1]} columns, model expects {model.weights.shape[0]}"
        )
    confidence = clip_probability(sigmoid(model.intercept + X @ model.weights))
    labels = (confidence >= model.threshold).astype(int)
    return confidence, labels


def balanced_classification_rate(y, y_hat):
    """½(TPR + TNR) with empty-class rates counted as 0."""
    y = check_binary_array(y, "y")
    y_hat = check_binary_array(y_hat, "y_hat")
    tp = int(np.sum((y == 1) & (y_hat == 1)))
    tn = int(np.sum((y == 0) & (y_hat == 0)))
    pos = int(np.sum(y == 1))
    neg = int(np.sum(y == 0))
    tpr = tp / pos if pos else 0.0
    tnr = tn / neg if neg else 0.0
    return 0.5 * (tpr + tnr)


def select_lambda(design_values, y, split, lambda_grid=DEFAULT_LAMBDA_GRID,
                  threads=1):
    """Grid-search λ by BCR on the validation rows; ties → smaller λ.

    Single-class training labels silently skip the λ = 0 point (its objective
    is unbounded); an all-failed grid raises.

    Args:
        design_values: full n×d matrix (already standardized if desired).
        y: full-length binary label vector.
        split: RowSplit selecting train/validation rows.
        lambda_grid: candidate λ values.
        threads: worker-thread cap for grid fits.
    Returns:
        (lambda_star, model, validation_bcr).
    """
    if len(lambda_grid) == 0:
        raise InputError("lambda grid must be non-empty")
    X = check_matrix(design_values, "design matrix")
    y = check_binary_array(y, "y")
    grid = sorted(set(float(lam) for lam in lambda_grid))
    X_train, y_train = X[split.train], y[split.train]
    X_val, y_val = X[split.validation], y[split.validation]

    def fit_point(lam):
        try:
            model = fit_logreg(X_train, y_train, lam)
        except (InputError, NumericalError) as exc:
            return None, str(exc)
        _, labels = predict(model, X_val)
        return (balanced_classification_rate(y_val, labels), model), None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(fit_point, grid))
    else:
        outcomes = [fit_point(lam) for lam in grid]

    best = None
    failures = []
    for lam, (outcome, error) in zip(grid, outcomes):
        if outcome is None:
            failures.append(f"lambda={lam}: {error}")
            continue
        score, model = outcome
        if best is None or score > best[0]:
            best = (score, lam, model)
    if best is None:
        raise NumericalError(
            "every lambda grid point failed: " + "; ".join(failures)
        )
    score, lam, model = best
    return lam, model, score


def save_classifier(model, provenance, path):
    """Serialize a ClassifierModel to JSON, tagging columns with provenance."""
    payload = {
        "weights": model.weights.tolist(),
        "intercept": model.intercept,
        "lambda": model.lam,
        "threshold": model.threshold,
        "columns": list(provenance),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_classifier(path):
    """Inverse of :func:`save_classifier`; returns (model, provenance)."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read classifier {path}: {exc}") from exc
    model = ClassifierModel(
        np.array(payload["weights"], dtype=float),
        float(payload["intercept"]),
        float(payload["lambda"]),
        float(payload["threshold"]),
    )
    return model, tuple(payload["columns"])


class LogisticClassifier(BaseEstimator, ClassifierMixin):
    """Estimator facade over :func:`fit_logreg` / :func:`predict`.

    Attributes (after fit): model_, coef_, intercept_, classes_.
    """

    def __init__(self, l2_penalty=0.0, threshold=0.5, max_iter=10000,
                 tol=1e-10, random_state=None):
        self.l2_penalty = l2_penalty
        self.threshold = threshold
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y):
        model = fit_logreg(
            X, y, self.l2_penalty, max_iter=self.max_iter, tol=self.tol,
            init=self.random_state,
        )
        self.model_ = ClassifierModel(
            model.weights, model.intercept, model.lam, self.threshold
        )
        self.coef_ = self.model_.weights
        self.intercept_ = self.model_.intercept
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        confidence, _ = predict(self.model_, X)
        return np.column_stack([1.0 - confidence, confidence])

    def predict(self, X):
        check_is_fitted(self, "model_")
        _, labels = predict(self.model_, X)
        return labels
