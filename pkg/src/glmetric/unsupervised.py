"""Metric-aware k-means, iterative metric learning from pseudo-labels,
pair-counting cluster agreement, and geodesic embedding.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from ._linalg import pairwise_sq_dists, sym_sqrt
from ._lloyd import lloyd, lloyd_best_of
from .dataset import LabeledDataset
from .generative import fit_gaussian_models
from .global_metric import uniform_combination
from .local_metric import MetricMatrix, compute_all_local_metrics, interpolate_with_euclidean

__all__ = [
    "ClusteringResult",
    "Embedding",
    "kmeans",
    "assign_to_centers",
    "iterative_metric_kmeans",
    "rand_score",
    "cluster_transfer_tune",
    "isomap_embed",
]

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ClusteringResult:
    """Cluster ids, centers in the original coordinates, within-cluster sum of
    squared metric distances, and the metric that defined them."""

    assignments: np.ndarray
    centers: np.ndarray
    inertia: float
    metric: MetricMatrix

    def __post_init__(self):
        if self.inertia < 0:
            raise ValueError("inertia must be non-negative")


@dataclass(eq=False)
class Embedding:
    """Low-dimensional coordinates with the fraction of geodesic structure
    they fail to explain. kept_indices lists the rows that were embedded
    (the largest connected component of the neighbor graph)."""

    coordinates: np.ndarray
    residual_variance: float
    n_neighbors: int
    kept_indices: np.ndarray


def _transform(x, metric):
    return np.asarray(x, dtype=float) @ sym_sqrt(metric.matrix)


def kmeans(x, k, metric, seed, restarts=10, max_iter=300):
    """Lloyd k-means under a metric (run in square-root-transformed space).

    Best of `restarts` seeded k-means++ initializations; empty clusters are
    re-seeded from the farthest point. Deterministic given the seed.
    """
    x = np.asarray(x, dtype=float)
    if not (1 <= k <= len(x)):
        raise ValueError("k must lie in [1, N]")
    z = _transform(x, metric)
    rng = np.random.default_rng(seed)
    assign, _, inertia, _ = lloyd_best_of(z, k, rng, restarts=restarts, max_iter=max_iter)
    centers = np.stack([x[assign == j].mean(axis=0) for j in range(k)])
    return ClusteringResult(assign, centers, inertia, metric)


def assign_to_centers(x, centers, metric):
    """Nearest-center ids for rows of x under the metric."""
    d = pairwise_sq_dists(np.asarray(x, dtype=float), np.asarray(centers, dtype=float),
                          metric.matrix)
    return d.argmin(axis=1)


def iterative_metric_kmeans(x, k, outer_iters=10, lam_cov=1e-3, lam_int=0.0,
                            seed=0, restarts=10):
    """Alternate k-means labels with metric learning on the pseudo-labels.

    Start from Euclidean k-means; repeatedly treat the cluster ids as class
    labels, fit class Gaussians (clusters with fewer than two members are
    skipped for the round), compute interpolated local metrics, average them
    into a global metric, and re-cluster under it (warm-started from the
    previous centers). Stops when the labels no longer change or after
    outer_iters rounds. Returns (ClusteringResult, MetricMatrix).
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[1]
    identity = MetricMatrix.identity(d, degenerate=(k < 2))
    result = kmeans(x, k, identity, seed, restarts=restarts)
    if k < 2:
        return result, identity
    metric = identity
    for _ in range(outer_iters):
        counts = np.bincount(result.assignments, minlength=k)
        keep = np.flatnonzero(counts >= 2)
        if len(keep) < 2:
            logger.warning("fewer than two usable clusters; stopping metric updates")
            break
        skipped = k - len(keep)
        if skipped:
            logger.info("skipping %d collapsed cluster(s) this round", skipped)
        remap = np.full(k, -1)
        remap[keep] = np.arange(len(keep))
        mask = remap[result.assignments] >= 0
        pseudo = LabeledDataset(x[mask], remap[result.assignments][mask], len(keep))
        ms = fit_gaussian_models(pseudo, lam_cov)
        locals_ = _locals_at(x, ms, lam_int)
        metric = uniform_combination(locals_)
        new_result = _warm_kmeans(x, k, metric, result.centers)
        if np.array_equal(new_result.assignments, result.assignments):
            result = new_result
            break
        result = new_result
    return result, metric


def _locals_at(x, ms, lam_int):
    holder = LabeledDataset(x, np.zeros(len(x), dtype=int), 1)
    locals_ = compute_all_local_metrics(holder, ms)
    if lam_int > 0:
        locals_ = [interpolate_with_euclidean(m, lam_int) for m in locals_]
    return locals_


def _warm_kmeans(x, k, metric, prev_centers):
    z = _transform(x, metric)
    centers_z = np.asarray(prev_centers, dtype=float) @ sym_sqrt(metric.matrix)
    assign, _, inertia, _ = lloyd(z, k, np.random.default_rng(0), init_centers=centers_z)
    centers = np.stack([x[assign == j].mean(axis=0) if (assign == j).any() else prev_centers[j]
                        for j in range(k)])
    return ClusteringResult(assign, centers, inertia, metric)


def rand_score(a, b):
    """Fraction of point pairs on which two labelings agree.

    A pair agrees when it is co-clustered in both labelings or separated in
    both. Symmetric and invariant to label renaming.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("labelings must be equal-length vectors")
    n = len(a)
    if n < 2:
        raise ValueError("need at least two points")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1)

    def pairs(v):
        return (v * (v - 1) / 2).sum()

    total = n * (n - 1) / 2
    both_same = pairs(table)
    same_a = pairs(table.sum(axis=1))
    same_b = pairs(table.sum(axis=0))
    return float((total + 2 * both_same - same_a - same_b) / total)


def cluster_transfer_tune(train, validation, k, lam_cov_grid, lam_int_grid,
                          seed=0, outer_iters=10, restarts=10):
    """Pick (lam_cov, lam_int) by Rand score of transferred clusters.

    For each grid cell: learn clusters and a metric on the training features,
    assign the validation points to the nearest centers under that metric,
    and score against the validation labels. Ties prefer the smaller lam_int,
    then the smaller lam_cov. Returns a dict with the winning parameters, the
    fitted clustering/metric, and the full grid.
    """
    best = None
    grid = []
    for lam_cov in lam_cov_grid:
        for lam_int in lam_int_grid:
            result, metric = iterative_metric_kmeans(
                train.features, k, outer_iters=outer_iters, lam_cov=lam_cov,
                lam_int=lam_int, seed=seed, restarts=restarts)
            assigned = assign_to_centers(validation.features, result.centers, metric)
            score = rand_score(assigned, validation.labels)
            grid.append({"lam_cov": lam_cov, "lam_int": lam_int, "rand": score})
            key = (-score, lam_int, lam_cov)
            if best is None or key < best[0]:
                best = (key, lam_cov, lam_int, result, metric)
    _, lam_cov, lam_int, result, metric = best
    return {"lam_cov": lam_cov, "lam_int": lam_int, "clustering": result,
            "metric": metric, "grid": grid}


def _neighbor_graph(z, n_neighbors):
    d = np.sqrt(pairwise_sq_dists(z, z))
    np.fill_diagonal(d, np.inf)
    n = len(z)
    idx = np.argsort(d, axis=1)[:, :n_neighbors]
    rows = np.repeat(np.arange(n), n_neighbors)
    cols = idx.ravel()
    vals = d[rows, cols]
    graph = csr_matrix((vals, (rows, cols)), shape=(n, n))
    return graph.maximum(graph.T)  # undirected: keep an edge if either end chose it


def isomap_embed(x, metric, n_neighbors, d):
    """Geodesic embedding: neighbor graph, shortest paths, classical MDS.

    Edge lengths are square roots of the metric quadratic form so path
    lengths add correctly. If the graph is disconnected only the largest
    component is embedded (reported via kept_indices). Raises when d exceeds
    the number of positive eigenvalues of the centered geodesic Gram matrix.
    """
    x = np.asarray(x, dtype=float)
    z = _transform(x, metric)
    graph = _neighbor_graph(z, n_neighbors)
    n_comp, comp = connected_components(graph, directed=False)
    kept = np.arange(len(x))
    if n_comp > 1:
        sizes = np.bincount(comp)
        keep_id = int(np.argmax(sizes))
        kept = np.flatnonzero(comp == keep_id)
        logger.warning("neighbor graph disconnected: embedding %d of %d points",
                       len(kept), len(x))
        graph = graph[kept][:, kept]
    geo = shortest_path(graph, method="D", directed=False)

    n = len(geo)
    j = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * j @ (geo ** 2) @ j
    w, u = np.linalg.eigh(b)
    order = np.argsort(w)[::-1]
    w, u = w[order], u[:, order]
    positive = int((w > 1e-10 * max(w.max(), 1.0)).sum())
    if d > positive:
        raise ValueError(f"requested {d} dimensions but only {positive} positive eigenvalues")
    coords = u[:, :d] * np.sqrt(w[:d])
    coords = coords - coords.mean(axis=0)

    iu = np.triu_indices(n, 1)
    emb = np.sqrt(pairwise_sq_dists(coords, coords))
    r = np.corrcoef(geo[iu], emb[iu])[0, 1]
    return Embedding(coords, float(1.0 - r ** 2), n_neighbors, kept)
