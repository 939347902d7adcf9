"""Distance computation, kNN and energy classifiers, and validation tuning.

Distances follow the squared-form convention throughout: d(x, x') is the
quadratic form (x - x')^T M (x - x'), not its square root. Predictions are
deterministic; every tie rule is spelled out in the docstrings.
"""
import time
from dataclasses import dataclass, field

import numpy as np

from ._linalg import pairwise_sq_dists
from .generative import fit_gaussian_models, bias_matrices
from .local_metric import MetricMatrix, interpolate_with_euclidean, solve_local_metric

__all__ = [
    "KnnConfig",
    "EnergyConfig",
    "TunedResult",
    "mahalanobis_distance",
    "knn_predict",
    "knn_predict_batch",
    "energy_predict",
    "energy_predict_batch",
    "margin_candidates",
    "evaluate_error",
    "tune_and_test",
    "DEFAULT_K_GRID",
    "DEFAULT_LAMBDA_GRID",
    "DEFAULT_BETA_GRID",
]

DEFAULT_K_GRID = (1, 3, 5, 7, 9, 11)
DEFAULT_LAMBDA_GRID = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_BETA_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True, eq=False)
class KnnConfig:
    """k nearest neighbors under a fixed metric.

    Ties in the vote are broken by the smaller sum of member distances, then
    by the lower class index.
    """

    k: int
    metric: MetricMatrix
    tie_rule: str = "distance_sum_then_index"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.tie_rule != "distance_sum_then_index":
            raise ValueError(f"unknown tie rule {self.tie_rule!r}")


@dataclass(frozen=True, eq=False)
class EnergyConfig:
    """Energy classifier: per-class sum of neighbor distances plus hinge terms."""

    k: int
    margin: float
    metric: MetricMatrix

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.margin < 0:
            raise ValueError("margin must be non-negative")


@dataclass
class TunedResult:
    """Winner of a validation grid search plus the full grid table."""

    method: str
    chosen: dict
    validation_error: float
    test_error: float
    grid: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    def to_dict(self):
        return {"method": self.method, "chosen": self.chosen,
                "validation_error": self.validation_error,
                "test_error": self.test_error, "grid": self.grid,
                "timing": self.timing}


def mahalanobis_distance(metric: MetricMatrix, x, y):
    """Squared distance (x - y)^T M (x - y)."""
    delta = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return float(delta @ metric.matrix @ delta)


def _vote(dist_row, idx, labels, class_count):
    lab = labels[idx]
    counts = np.bincount(lab, minlength=class_count)
    best = counts.max()
    cands = np.flatnonzero(counts == best)
    if len(cands) == 1:
        return int(cands[0])
    sums = np.array([dist_row[idx[lab == c]].sum() for c in cands])
    return int(cands[np.argmin(sums)])


def knn_predict_batch(train, cfg: KnnConfig, queries):
    """Majority-vote kNN labels for every row of queries."""
    if train.n == 0:
        raise ValueError("empty training set")
    if cfg.k > train.n:
        raise ValueError("k exceeds the training size")
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    d = pairwise_sq_dists(queries, train.features, cfg.metric.matrix)
    return _vote_rows(d, train.labels, train.class_count, cfg.k)


def _vote_rows(d, labels, class_count, k):
    if k < d.shape[1]:
        idx = np.argpartition(d, k, axis=1)[:, :k]
    else:
        idx = np.tile(np.arange(d.shape[1]), (d.shape[0], 1))
    return np.array([_vote(d[i], idx[i], labels, class_count) for i in range(len(d))])


def knn_predict(train, cfg: KnnConfig, x):
    """kNN label of a single point."""
    return int(knn_predict_batch(train, cfg, np.asarray(x, dtype=float)[None, :])[0])


def _class_energy(d_row, labels, class_count, k, margin):
    energies = np.empty(class_count)
    order = np.argsort(d_row, kind="stable")
    sorted_labels = labels[order]
    sorted_d = d_row[order]
    for c in range(class_count):
        own = sorted_d[sorted_labels == c][:k]
        other = sorted_d[sorted_labels != c][:k]
        hinge = np.maximum(0.0, margin + own[:, None] - other[None, :])
        energies[c] = own.sum() + hinge.sum()
    return energies


def energy_predict_batch(train, cfg: EnergyConfig, queries):
    """Labels minimizing the neighbor-distance-plus-hinge energy.

    For a class c the energy is the sum of distances to its k nearest members
    plus, for every pair of a same-class neighbor and an other-class
    neighbor, max(0, margin + d_same - d_other). Ties pick the lower class
    index.
    """
    counts = np.bincount(train.labels, minlength=train.class_count)
    if counts.min() < cfg.k:
        raise ValueError("every class needs at least k members")
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    d = pairwise_sq_dists(queries, train.features, cfg.metric.matrix)
    out = np.empty(len(queries), dtype=int)
    for i in range(len(queries)):
        energies = _class_energy(d[i], train.labels, train.class_count, cfg.k, cfg.margin)
        out[i] = int(np.argmin(energies))
    return out


def energy_predict(train, cfg: EnergyConfig, x):
    return int(energy_predict_batch(train, cfg, np.asarray(x, dtype=float)[None, :])[0])


def margin_candidates(train, metric: MetricMatrix, beta_grid=DEFAULT_BETA_GRID):
    """Candidate margins beta * gamma0, clipped at zero.

    gamma0 is the median over training points of (distance to the nearest
    other-class point) minus (distance to the nearest same-class point,
    excluding the point itself), measured under the metric.
    """
    if train.class_count < 2:
        raise ValueError("margins need at least two classes")
    d = pairwise_sq_dists(train.features, train.features, metric.matrix)
    np.fill_diagonal(d, np.inf)
    same = train.labels[:, None] == train.labels[None, :]
    diffs = np.where(~same, d, np.inf).min(axis=1) - np.where(same, d, np.inf).min(axis=1)
    if not np.isfinite(diffs).all():
        raise ValueError("every training point needs a same-class and an other-class neighbor")
    gamma0 = float(np.median(diffs))
    return [max(0.0, float(b) * gamma0) for b in beta_grid]


def evaluate_error(predictor, test):
    """Fraction of test points the predictor labels incorrectly."""
    if test.n == 0:
        raise ValueError("empty test set")
    pred = np.asarray(predictor(test.features))
    return float(np.mean(pred != test.labels))


def _local_query_metrics(queries, ms, eps_rel):
    biases, degenerate = bias_matrices(queries, ms, scale_free=True)
    metrics = []
    for bias, bad in zip(biases, degenerate):
        if bad:
            metrics.append(MetricMatrix.identity(biases.shape[1], "local:query", degenerate=True))
        else:
            metrics.append(solve_local_metric(bias, eps_rel, provenance="local:query"))
    return metrics


def _glm_int_errors(train, queries, labels, ms, k_grid, lam_grid, eps_rel):
    """Error per (k, lam) using a per-query interpolated local metric."""
    base = _local_query_metrics(queries.features, ms, eps_rel)
    errors = {}
    for lam in lam_grid:
        d = np.empty((queries.n, train.n))
        for i, m in enumerate(base):
            mi = interpolate_with_euclidean(m, lam)
            d[i] = pairwise_sq_dists(queries.features[i:i + 1], train.features, mi.matrix)[0]
        for k in k_grid:
            pred = _vote_rows(d, train.labels, train.class_count, k)
            errors[(k, lam)] = float(np.mean(pred != labels))
    return errors


def tune_and_test(method, train, validation, test, *, metric=None, lam_cov=1e-3,
                  k_grid=DEFAULT_K_GRID, lam_grid=DEFAULT_LAMBDA_GRID,
                  beta_grid=DEFAULT_BETA_GRID, eps_rel=1e-9):
    """Grid search on the validation portion, then score the winner on test.

    method is one of "knn" (requires metric; tunes k), "glm_int" (fits
    Gaussians on train and uses a per-query interpolated local metric; tunes
    k and the interpolation weight), or "energy" (requires metric; tunes k
    and the margin scale beta). Ties prefer the smaller k, then the smaller
    second parameter. Returns a TunedResult with the full grid table.
    """
    k_grid = tuple(int(k) for k in k_grid)
    if any(k > train.n for k in k_grid):
        k_grid = tuple(k for k in k_grid if k <= train.n)
    if not k_grid:
        raise ValueError("no feasible k in the grid")
    t0 = time.perf_counter()
    grid = []

    if method == "knn":
        if metric is None:
            raise ValueError("knn tuning requires a metric")
        dval = pairwise_sq_dists(validation.features, train.features, metric.matrix)
        cands = []
        for k in k_grid:
            pred = _vote_rows(dval, train.labels, train.class_count, k)
            err = float(np.mean(pred != validation.labels))
            grid.append({"k": k, "validation_error": err})
            cands.append((err, k, 0.0))
        err, k, _ = min(cands)
        chosen = {"k": k}
        t1 = time.perf_counter()
        test_err = evaluate_error(
            lambda x: knn_predict_batch(train, KnnConfig(k, metric), x), test)

    elif method == "glm_int":
        ms = fit_gaussian_models(train, lam_cov)
        errors = _glm_int_errors(train, validation, validation.labels, ms,
                                 k_grid, lam_grid, eps_rel)
        cands = []
        for (k, lam), err in errors.items():
            grid.append({"k": k, "lam_int": lam, "validation_error": err})
            cands.append((err, k, lam))
        err, k, lam = min(cands)
        chosen = {"k": k, "lam_int": lam}
        t1 = time.perf_counter()
        test_errors = _glm_int_errors(train, test, test.labels, ms, (k,), (lam,), eps_rel)
        test_err = test_errors[(k, lam)]

    elif method == "energy":
        if metric is None:
            raise ValueError("energy tuning requires a metric")
        margins = margin_candidates(train, metric, beta_grid)
        dval = pairwise_sq_dists(validation.features, train.features, metric.matrix)
        max_k = int(np.bincount(train.labels, minlength=train.class_count).min())
        cands = []
        for k in k_grid:
            if k > max_k:
                continue
            for beta, margin in zip(beta_grid, margins):
                pred = np.array([
                    int(np.argmin(_class_energy(dval[i], train.labels,
                                                train.class_count, k, margin)))
                    for i in range(validation.n)])
                err = float(np.mean(pred != validation.labels))
                grid.append({"k": k, "beta": beta, "margin": margin,
                             "validation_error": err})
                cands.append((err, k, beta, margin))
        if not cands:
            raise ValueError("no feasible (k, beta) candidate")
        err, k, beta, margin = min(cands)
        chosen = {"k": k, "beta": beta, "margin": margin}
        t1 = time.perf_counter()
        test_err = evaluate_error(
            lambda x: energy_predict_batch(train, EnergyConfig(k, margin, metric), x), test)

    else:
        raise ValueError(f"unknown method {method!r}")

    t2 = time.perf_counter()
    return TunedResult(method, chosen, err, test_err, grid,
                       {"tuning_s": t1 - t0, "testing_s": t2 - t1})
