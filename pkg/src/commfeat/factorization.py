"""Sigmoid-link latent factor model of the adjacency matrix.

Every node i carries an outgoing factor row U_i, an incoming factor row V_i and
a bias β_i; a global bias α sets the base rate. The probability of the ordered
entry (i, j) being a link is σ(H_ij) with H_ij = α + β_i + β_j + U_i·V_j.

Training minimizes a class-weighted cross-entropy over ordered node pairs,

    Σ_pairs  −A_ij/(2ω)·log σ(H_ij) − (1−A_ij)/(2ζ)·log σ(−H_ij)
             + γ(‖U_i‖² + ‖V_j‖² + β_i² + β_j²),

where ω counts the ordered edge entries of the full graph (2m), ζ the ordered
non-edge entries (n(n−1) − 2m), and the γ penalty accumulates once per sampled
pair. Gradients are analytic and match central finite differences of this sum.
"""

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .errors import InputError, NumericalError
from .numerics import clip_probability, log_sigmoid, logit, sigmoid
from .validation import check_node_index

# Above this many ordered pairs, non-edge sampling switches from exact
# enumeration to rejection sampling (both deterministic for a fixed seed).
_ENUMERATION_LIMIT = 4_000_000


@dataclass(frozen=True)
class CostWeights:
    """Global weights of the pair cost.

    omega and zeta are full-graph counts of ordered edge / non-edge entries —
    properties of the adjacency matrix, not of any subsample the cost is
    evaluated on.
    """

    omega: int
    zeta: int
    gamma: float = 0.0

    def __post_init__(self):
        if self.omega < 1 or self.zeta < 1:
            raise InputError(
                f"need at least one edge and one non-edge entry, "
                f"got omega={self.omega}, zeta={self.zeta}"
            )
        if self.gamma < 0:
            raise InputError(f"gamma must be non-negative, got {self.gamma}")

    @classmethod
    def from_graph(cls, g, gamma=0.0):
        omega = 2 * g.edge_count
        zeta = g.node_count * (g.node_count - 1) - omega
        return cls(omega=omega, zeta=zeta, gamma=gamma)


@dataclass(frozen=True)
class PairSample:
    """A set of labeled ordered node pairs (i, j, label), label 1 ⇔ edge."""

    i: np.ndarray
    j: np.ndarray
    label: np.ndarray
    role: str = "train"

    def __post_init__(self):
        i = np.asarray(self.i, dtype=np.int64)
        j = np.asarray(self.j, dtype=np.int64)
        y = np.asarray(self.label, dtype=np.int64)
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "label", y)
        if not (len(i) == len(j) == len(y)):
            raise InputError("pair sample arrays must share one length")
        if len(i) and (i == j).any():
            raise InputError("pair sample contains a self-pair (i == j)")
        if len(i) and not np.isin(y, (0, 1)).all():
            raise InputError("pair labels must be 0/1")

    def __len__(self):
        return len(self.i)


@dataclass(frozen=True)
class LinkModel:
    """Parameters of the sigmoid-link factorization."""

    U: np.ndarray
    V: np.ndarray
    beta: np.ndarray
    alpha: float

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        V = np.asarray(self.V, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "beta", beta)
        if U.shape != V.shape or U.ndim != 2:
            raise InputError(f"U and V must share an n×k shape, got {U.shape} vs {V.shape}")
        if beta.shape != (U.shape[0],):
            raise InputError(f"beta must have length {U.shape[0]}, got {beta.shape}")
        for name, arr in (("U", U), ("V", V), ("beta", beta), ("alpha", [self.alpha])):
            if not np.isfinite(arr).all():
                raise NumericalError(f"non-finite entries in {name}")

    @property
    def n(self):
        return self.U.shape[0]

    @property
    def k(self):
        return self.U.shape[1]

    @classmethod
    def zeros(cls, n, k):
        return cls(np.zeros((n, k)), np.zeros((n, k)), np.zeros(n), 0.0)


def pair_logits(m, i, j):
    """H_ij = α + β_i + β_j + U_i·V_j for parallel index arrays i, j."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    return m.alpha + m.beta[i] + m.beta[j] + np.einsum("pk,pk->p", m.U[i], m.V[j])


def link_probability(m, i, j):
    """σ(H_ij) for a single ordered pair, strictly inside (0, 1)."""
    i = check_node_index(i, m.n, "i")
    j = check_node_index(j, m.n, "j")
    if i == j:
        raise InputError("link probability is undefined on the diagonal (i == j)")
    h = m.alpha + m.beta[i] + m.beta[j] + float(m.U[i] @ m.V[j])
    return float(clip_probability(sigmoid(h)))


def _occurrence_counts(sample, n):
    """How many sampled pairs touch each node as first / second index."""
    cnt_i = np.bincount(sample.i, minlength=n).astype(float)
    cnt_j = np.bincount(sample.j, minlength=n).astype(float)
    return cnt_i, cnt_j


def cost(m, sample, w):
    """Class-weighted cross-entropy of the sample plus per-pair γ penalties.

    Args:
        m: LinkModel.
        sample: PairSample to evaluate on.
        w: CostWeights with the full-graph omega/zeta and gamma.
    Returns:
        Scalar cost, finite for finite parameters.
    """
    if len(sample) == 0:
        raise InputError("cannot evaluate cost on an empty pair sample")
    h = pair_logits(m, sample.i, sample.j)
    y = sample.label.astype(float)
    data = -(y / (2.0 * w.omega)) * log_sigmoid(h) - (
        (1.0 - y) / (2.0 * w.zeta)
    ) * log_sigmoid(-h)
    total = float(data.sum())
    if w.gamma:
        cnt_i, cnt_j = _occurrence_counts(sample, m.n)
        total += w.gamma * float(
            cnt_i @ (m.U * m.U).sum(axis=1)
            + cnt_j @ (m.V * m.V).sum(axis=1)
            + (cnt_i + cnt_j) @ (m.beta * m.beta)
        )
    return total


def gradients(m, sample, w):
    """Analytic partial derivatives of :func:`cost` with respect to U, V, β, α.

    Each ordered pair contributes through the common factor
    t = σ(H)/(2ζ) − A·(σ(H)/(2ζ) + (1−σ(H))/(2ω)); the γ penalty of a pair
    adds 2γU_i / 2γV_j / 2γβ to the rows it touches, once per occurrence.
    """
    if len(sample) == 0:
        raise InputError("cannot evaluate gradients on an empty pair sample")
    n, k = m.U.shape
    i, j = sample.i, sample.j
    y = sample.label.astype(float)
    s = sigmoid(pair_logits(m, i, j))
    t = s / (2.0 * w.zeta) - y * (s / (2.0 * w.zeta) + (1.0 - s) / (2.0 * w.omega))

    d_u = np.empty_like(m.U)
    d_v = np.empty_like(m.V)
    for c in range(k):
        d_u[:, c] = np.bincount(i, weights=t * m.V[j, c], minlength=n)
        d_v[:, c] = np.bincount(j, weights=t * m.U[i, c], minlength=n)
    d_beta = np.bincount(i, weights=t, minlength=n) + np.bincount(
        j, weights=t, minlength=n
    )
    d_alpha = float(t.sum())

    if w.gamma:
        cnt_i, cnt_j = _occurrence_counts(sample, n)
        d_u += 2.0 * w.gamma * cnt_i[:, None] * m.U
        d_v += 2.0 * w.gamma * cnt_j[:, None] * m.V
        d_beta += 2.0 * w.gamma * (cnt_i + cnt_j) * m.beta
    return d_u, d_v, d_beta, d_alpha


def full_pair_universe(g):
    """All ordered pairs (i, j), i ≠ j, labeled by adjacency. O(n²) — intended
    for small graphs and exact-cost checks."""
    n = g.node_count
    grid_i, grid_j = np.where(~np.eye(n, dtype=bool))
    adj = np.zeros((n, n), dtype=bool)
    for u, v in g.edges:
        adj[u, v] = adj[v, u] = True
    return PairSample(grid_i, grid_j, adj[grid_i, grid_j].astype(int), role="universe")


def _adjacency_matrix(g):
    adj = np.zeros((g.node_count, g.node_count), dtype=bool)
    for u, v in g.edges:
        adj[u, v] = adj[v, u] = True
    return adj


def _sample_nonedges(g, count, rng):
    """Draw ``count`` distinct ordered non-edge pairs uniformly without
    replacement, deterministically for a given generator state."""
    n = g.node_count
    universe = n * (n - 1)
    if universe <= _ENUMERATION_LIMIT:
        adj = _adjacency_matrix(g)
        free = ~adj & ~np.eye(n, dtype=bool)
        ii, jj = np.nonzero(free)
        pick = rng.choice(len(ii), size=count, replace=False)
        return ii[pick], jj[pick]
    # Large graphs: rejection-sample ordered pairs until enough distinct
    # non-edges accumulate.
    edge_set = g.edges
    seen = set()
    out_i = np.empty(count, dtype=np.int64)
    out_j = np.empty(count, dtype=np.int64)
    filled = 0
    while filled < count:
        draw = max(2 * (count - filled), 1024)
        cand_i = rng.integers(0, n, size=draw)
        cand_j = rng.integers(0, n, size=draw)
        for a, b in zip(cand_i, cand_j):
            if a == b or (a, b) in seen:
                continue
            key = (a, b) if a < b else (b, a)
            if key in edge_set:
                continue
            seen.add((a, b))
            out_i[filled] = a
            out_j[filled] = b
            filled += 1
            if filled == count:
                break
    return out_i, out_j


def sample_pairs(g, seed):
    """Draw the train/validation/test pair samples.

    The 2m ordered edge entries are shuffled and partitioned: m to train,
    floor(m/2) to validation, the remainder to test. Non-edges are drawn
    without replacement across all three samples: 2m to train, m to
    validation, m fresh ones to test. All three samples are disjoint as
    ordered-pair sets and deterministic for a given seed.

    Args:
        g: source graph (≥ 4 edges).
        seed: integer or numpy SeedSequence.
    Returns:
        (train, validation, test) PairSamples.
    Raises:
        InputError: when the graph is too small or too dense to supply the
            required number of distinct non-edges.
    """
    m = g.edge_count
    if m < 4:
        raise InputError(f"need at least 4 edges to sample pairs, got {m}")
    n = g.node_count
    omega = 2 * m
    zeta = n * (n - 1) - omega
    need = 2 * omega  # non-edges across train (ω) + validation (½ω) + test (½ω)
    if zeta < need:
        raise InputError(
            f"graph too dense to sample non-edges: need {need} distinct "
            f"ordered non-edge pairs, only {zeta} exist"
        )
    rng = np.random.default_rng(seed)

    edge_arr = np.array(sorted(g.edges), dtype=np.int64)
    ordered = np.concatenate([edge_arr, edge_arr[:, ::-1]])
    ordered = ordered[rng.permutation(omega)]
    n_tr_e, n_va_e = m, m // 2
    tr_e = ordered[:n_tr_e]
    va_e = ordered[n_tr_e : n_tr_e + n_va_e]
    te_e = ordered[n_tr_e + n_va_e :]

    ne_i, ne_j = _sample_nonedges(g, need, rng)
    tr_ne = slice(0, omega)
    va_ne = slice(omega, omega + m)
    te_ne = slice(omega + m, omega + 2 * m)

    def build(edges, sl, role):
        ii = np.concatenate([edges[:, 0], ne_i[sl]])
        jj = np.concatenate([edges[:, 1], ne_j[sl]])
        yy = np.concatenate(
            [np.ones(len(edges), dtype=np.int64), np.zeros(sl.stop - sl.start, dtype=np.int64)]
        )
        return PairSample(ii, jj, yy, role=role)

    return (
        build(tr_e, tr_ne, "train"),
        build(va_e, va_ne, "validation"),
        build(te_e, te_ne, "test"),
    )


@dataclass(frozen=True)
class DescentOptions:
    """Full-batch gradient descent controls.

    The step halves when a proposal raises the cost and grows 1.1× on
    acceptance. Descent stops after ``patience`` consecutive iterations whose
    relative improvement falls below ``tol`` (a single sub-tolerance iteration
    is routinely a line-search artifact, not convergence), or at ``max_iter``.
    """

    step0: float = 0.1
    grow: float = 1.1
    shrink: float = 0.5
    max_backtracks: int = 60
    max_iter: int = 2000
    tol: float = 1e-6
    patience: int = 5
    init_scale: float = 0.01
    seed: object = 0


def _init_model(n, k, train, opts):
    rng = np.random.default_rng(opts.seed)
    u = rng.uniform(-opts.init_scale, opts.init_scale, size=(n, k))
    v = rng.uniform(-opts.init_scale, opts.init_scale, size=(n, k))
    edge_fraction = float(np.clip(train.label.mean(), 1e-6, 1.0 - 1e-6))
    return LinkModel(u, v, np.zeros(n), float(logit(edge_fraction)))


def _gradient_norm(grads, model):
    d_u, d_v, d_beta, d_alpha = grads
    sq = (
        float((d_u * d_u).sum() + (d_v * d_v).sum() + (d_beta * d_beta).sum())
        + d_alpha * d_alpha
    )
    scale = 1.0 + float(
        (model.U * model.U).sum() + (model.V * model.V).sum()
        + (model.beta * model.beta).sum() + model.alpha * model.alpha
    )
    return np.sqrt(sq / scale)


def fit_link_model(g, k, gamma, train, opts=None):
    """Train a :class:`LinkModel` by full-batch gradient descent.

    Initialization: U, V entries i.i.d. uniform in ±init_scale, β = 0, α =
    logit of the train edge fraction. Accepted steps never increase the cost.

    Args:
        g: graph supplying the global pair counts (omega, zeta).
        k: latent dimension ≥ 1.
        gamma: penalty strength ≥ 0.
        train: training PairSample.
        opts: DescentOptions; defaults used when omitted.
    Returns:
        (model, cost_path) — the fitted LinkModel and the accepted-cost
        trajectory including the initial cost.
    Raises:
        NumericalError: when no backtracked step can decrease the cost away
            from a non-stationary point (carries the last stable model).
    """
    if k < 1:
        raise InputError(f"latent dimension must be ≥ 1, got {k}")
    if opts is None:
        opts = DescentOptions()
    w = CostWeights.from_graph(g, gamma=gamma)
    model = _init_model(g.node_count, k, train, opts)
    current = cost(model, train, w)
    costs = [current]
    step = opts.step0
    sub_tol_run = 0

    for _ in range(opts.max_iter):
        grads = gradients(model, train, w)
        d_u, d_v, d_beta, d_alpha = grads
        accepted = None
        for _ in range(opts.max_backtracks):
            trial = LinkModel(
                model.U - step * d_u,
                model.V - step * d_v,
                model.beta - step * d_beta,
                model.alpha - step * d_alpha,
            )
            trial_cost = cost(trial, train, w)
            if np.isfinite(trial_cost) and trial_cost <= current:
                accepted = (trial, trial_cost)
                break
            step *= opts.shrink
        if accepted is None:
            if _gradient_norm(grads, model) < 1e-9:
                break  # stationary point: nothing left to descend
            raise NumericalError(
                "gradient descent diverged: no backtracked step decreases "
                "the cost",
                model=model,
            )
        model, new_cost = accepted
        rel = (current - new_cost) / max(abs(current), np.finfo(float).tiny)
        current = new_cost
        costs.append(current)
        step *= opts.grow
        sub_tol_run = sub_tol_run + 1 if rel < opts.tol else 0
        if sub_tol_run >= opts.patience:
            break
    return model, costs


def link_prediction_accuracy(m, sample):
    """Fraction of pairs where (probability ≥ 0.5) matches the pair label."""
    if len(sample) == 0:
        raise InputError("cannot score an empty pair sample")
    probs = clip_probability(sigmoid(pair_logits(m, sample.i, sample.j)))
    predicted = (probs >= 0.5).astype(int)
    return float(np.mean(predicted == sample.label))


def select_hyperparameters(g, splits, k_grid, gamma_grid, opts=None, threads=1):
    """Grid-search (k, γ) by link-prediction accuracy on the validation pairs.

    One model is trained per grid point on the train pairs; scoring ties are
    broken toward smaller k, then smaller γ. Grid points may train in
    parallel; each point derives its own RNG stream from the base seed so the
    outcome is independent of scheduling.

    Args:
        g: source graph.
        splits: (train, validation, ...) PairSamples; only the first two are
            used.
        k_grid: candidate latent dimensions.
        gamma_grid: candidate penalty strengths.
        opts: base DescentOptions (its seed seeds every grid point).
        threads: worker-thread cap for grid training.
    Returns:
        (k_star, gamma_star, model, cost_path) for the winning grid point.
    Raises:
        NumericalError: if every grid point fails to train.
    """
    if not k_grid or not gamma_grid:
        raise InputError("hyperparameter grids must be non-empty")
    if opts is None:
        opts = DescentOptions()
    train, validation = splits[0], splits[1]
    points = [(k, gamma) for k in sorted(set(k_grid)) for gamma in sorted(set(gamma_grid))]
    base_seed = opts.seed if isinstance(opts.seed, int) else 0

    def train_point(index):
        k, gamma = points[index]
        point_opts = replace(opts, seed=np.random.SeedSequence((base_seed, index)))
        try:
            model, costs = fit_link_model(g, k, gamma, train, point_opts)
        except NumericalError as exc:
            return index, None, str(exc)
        score = link_prediction_accuracy(model, validation)
        return index, (score, model, costs), None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(train_point, range(len(points))))
    else:
        results = [train_point(i) for i in range(len(points))]

    best = None
    failures = []
    for index, outcome, error in sorted(results):
        if outcome is None:
            failures.append(f"(k={points[index][0]}, gamma={points[index][1]}): {error}")
            continue
        score, model, costs = outcome
        if best is None or score > best[0]:
            best = (score, index, model, costs)
    if best is None:
        raise NumericalError(
            "all hyperparameter grid points failed: " + "; ".join(failures)
        )
    _, index, model, costs = best
    k_star, gamma_star = points[index]
    return k_star, gamma_star, model, costs


def save_link_model(model, path, original_ids=None):
    """Serialize a LinkModel to JSON ({"k", "alpha", "beta", "U", "V", "id_map"})."""
    id_map = {
        str(i): (original_ids[i] if original_ids is not None else str(i))
        for i in range(model.n)
    }
    payload = {
        "k": model.k,
        "alpha": model.alpha,
        "beta": model.beta.tolist(),
        "U": model.U.tolist(),
        "V": model.V.tolist(),
        "id_map": id_map,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_link_model(path):
    """Inverse of :func:`save_link_model`; returns (model, id_map)."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read link model {path}: {exc}") from exc
    model = LinkModel(
        np.array(payload["U"], dtype=float),
        np.array(payload["V"], dtype=float),
        np.array(payload["beta"], dtype=float),
        float(payload["alpha"]),
    )
    id_map = {int(key): value for key, value in payload["id_map"].items()}
    return model, id_map


def write_pair_sample(sample, path):
    """Dump a PairSample as CSV ``i,j,label`` (internal ids) for audits."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "label"])
        for a, b, y in zip(sample.i, sample.j, sample.label):
            writer.writerow([int(a), int(b), int(y)])


def read_pair_sample(path, role="train"):
    """Inverse of :func:`write_pair_sample`."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read pair sample {path}: {exc}") from exc
    if not rows or rows[0] != ["i", "j", "label"]:
        raise InputError(f"{path}: expected header i,j,label")
    data = np.array([[int(x) for x in row] for row in rows[1:]], dtype=np.int64)
    if len(data) == 0:
        data = data.reshape(0, 3)
    return PairSample(data[:, 0], data[:, 1], data[:, 2], role=role)


class LinkFactorization(BaseEstimator):
    """Estimator facade over :func:`fit_link_model`.

    Parameters mirror :class:`DescentOptions`; ``fit`` takes a graph and a
    training PairSample instead of a feature matrix.

    Attributes (after fit):
        model_: the trained LinkModel.
        n_iter_: accepted descent iterations.
        cost_path_: accepted-cost trajectory (starts at the initial cost).
    """

    def __init__(self, k=5, gamma=0.0, step0=0.1, max_iter=2000, tol=1e-6,
                 patience=5, init_scale=0.01, random_state=0):
        self.k = k
        self.gamma = gamma
        self.step0 = step0
        self.max_iter = max_iter
        self.tol = tol
        self.patience = patience
        self.init_scale = init_scale
        self.random_state = random_state

    def _options(self):
        return DescentOptions(
            step0=self.step0,
            max_iter=self.max_iter,
            tol=self.tol,
            patience=self.patience,
            init_scale=self.init_scale,
            seed=self.random_state,
        )

    def fit(self, graph, pairs):
        """Train on a graph and its training PairSample; returns self."""
        self.model_, self.cost_path_ = fit_link_model(
            graph, self.k, self.gamma, pairs, self._options()
        )
        self.n_iter_ = len(self.cost_path_) - 1
        return self

    def predict_proba(self, pairs):
        """Link probabilities σ(H_ij) for a PairSample's ordered pairs."""
        check_is_fitted(self, "model_")
        return clip_probability(sigmoid(pair_logits(self.model_, pairs.i, pairs.j)))

    def predict(self, pairs):
        """Binary link predictions at the 0.5 threshold (ties predict link)."""
        return (self.predict_proba(pairs) >= 0.5).astype(int)

    def score(self, pairs):
        """Link-prediction accuracy on a PairSample."""
        check_is_fitted(self, "model_")
        return link_prediction_accuracy(self.model_, pairs)
