"""Per-point metric solver, Euclidean interpolation, and regional averages.

The solver turns a symmetric bias matrix into the determinant-one PSD metric
whose inverse annihilates it in trace: split the spectrum into the strictly
positive part and the rest, scale each block by the opposite block size, and
normalize the determinant in log space. Zero (and near-zero) eigenvalues are
merged into the negative block, with their magnitudes clamped at
eps_rel * max|eigenvalue| so the metric stays positive definite; both blocks
must be populated for the trace to vanish, so (semi)definite inputs fall back
to the determinant-normalized absolute value, which minimizes the squared
trace among unit-determinant metrics in that regime.
"""
from dataclasses import dataclass

import numpy as np

from ._linalg import det_normalize_eigs, symmetrize
from ._lloyd import lloyd_best_of
from .generative import bias_matrices

__all__ = [
    "MetricMatrix",
    "SpectralSolution",
    "spectral_split",
    "solve_local_metric",
    "interpolate_with_euclidean",
    "compute_all_local_metrics",
    "regional_metrics",
]

DEFAULT_EPS_REL = 1e-9


@dataclass(frozen=True, eq=False)
class MetricMatrix:
    """Symmetric PSD matrix acting as a squared-distance metric.

    provenance records how the metric was produced (for example "euclidean",
    "local:12", "regional:3", "global:UNI"). det_normalized metrics carry
    determinant 1 within 1e-6. degenerate marks identity fallbacks at points
    where the bias matrix vanished.
    """

    matrix: np.ndarray
    provenance: str = "euclidean"
    det_normalized: bool = False
    degenerate: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        scale = max(1.0, np.abs(m).max())
        if np.abs(m - m.T).max() >= 1e-12 * scale:
            raise ValueError("metric matrix must be symmetric")
        m = symmetrize(m)
        w = np.linalg.eigvalsh(m)
        if w.min() < -1e-10 * max(w.max(), 0.0):
            raise ValueError("metric matrix must be positive semidefinite")
        if self.det_normalized:
            pos = w[w > 0]
            log_det = np.sum(np.log(pos)) if len(pos) == len(w) else -np.inf
            if abs(np.exp(log_det) - 1.0) >= 1e-6:
                raise ValueError("det_normalized metric must have unit determinant")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim, provenance="euclidean", degenerate=False):
        return cls(np.eye(dim), provenance, det_normalized=True, degenerate=degenerate)

    def to_dict(self):
        return {"matrix": self.matrix.tolist(), "provenance": self.provenance,
                "det_normalized": self.det_normalized, "degenerate": self.degenerate}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["matrix"], dtype=float), d["provenance"],
                   d["det_normalized"], d.get("degenerate", False))


@dataclass(frozen=True, eq=False)
class SpectralSolution:
    """Eigenstructure of a bias matrix: descending eigenvalues, eigenvectors,
    and the counts of strictly positive / strictly negative eigenvalues at the
    relative threshold (the remainder are treated as zeros)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    d_plus: int
    d_minus: int
    degenerate: bool

    @property
    def zero_count(self):
        return len(self.eigenvalues) - self.d_plus - self.d_minus


def spectral_split(matrix, eps_rel=DEFAULT_EPS_REL):
    """Eigendecompose a symmetric matrix and classify its spectrum."""
    matrix = np.asarray(matrix, dtype=float)
    w, u = np.linalg.eigh(matrix)
    order = np.argsort(w)[::-1]
    w, u = w[order], u[:, order]
    amax = np.abs(w).max() if len(w) else 0.0
    if amax == 0.0 or not np.isfinite(amax):
        return SpectralSolution(w, u, 0, 0, True)
    eps = eps_rel * amax
    return SpectralSolution(w, u, int((w > eps).sum()), int((w < -eps).sum()), False)


def _check_symmetric(matrix):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("bias matrix must be square")
    if np.abs(matrix - matrix.T).max() > 1e-8 * max(1.0, np.abs(matrix).max()):
        raise ValueError("bias matrix is not symmetric within tolerance")
    return symmetrize(matrix)


def solve_local_metric(matrix, eps_rel=DEFAULT_EPS_REL, provenance="local"):
    """Determinant-one PSD metric M minimizing Trace[M^-1 B]^2 for a
    symmetric input B.

    For an indefinite B the trace is exactly zero: eigenvalues above the
    relative threshold are scaled by the positive count, the rest by the
    complementary count with magnitudes clamped at the threshold. For a
    (semi)definite B there is no interior zero, and the minimizer is the
    determinant-normalized absolute value. A vanishing B yields the identity
    metric with the degenerate flag set.
    """
    matrix = _check_symmetric(matrix)
    sol = spectral_split(matrix, eps_rel)
    d = matrix.shape[0]
    if sol.degenerate:
        return MetricMatrix.identity(d, provenance, degenerate=True)
    w, u = sol.eigenvalues, sol.eigenvectors
    eps = eps_rel * np.abs(w).max()
    if sol.d_plus == 0 or sol.d_minus == 0:
        m = np.maximum(np.abs(w), eps)
    else:
        neg_block = d - sol.d_plus  # zeros merged into the negative block
        m = np.where(w > eps, sol.d_plus * w, neg_block * np.maximum(np.abs(w), eps))
    m = det_normalize_eigs(m)
    return MetricMatrix(symmetrize((u * m) @ u.T), provenance, det_normalized=True)


def interpolate_with_euclidean(metric: MetricMatrix, lam_int):
    """Convex combination (1 - lam) * M + lam * I.

    Renormalized back to unit determinant when the input was determinant
    normalized. lam_int = 0 returns the input unchanged.
    """
    if not (0.0 <= lam_int <= 1.0):
        raise ValueError("interpolation weight must lie in [0, 1]")
    if lam_int == 0.0:
        return metric
    d = metric.dim
    blended = (1.0 - lam_int) * metric.matrix + lam_int * np.eye(d)
    if metric.det_normalized:
        w, u = np.linalg.eigh(blended)
        blended = symmetrize((u * det_normalize_eigs(w)) @ u.T)
    return MetricMatrix(blended, f"{metric.provenance}|int({lam_int:g})",
                        det_normalized=metric.det_normalized, degenerate=metric.degenerate)


def compute_all_local_metrics(train, ms, eps_rel=DEFAULT_EPS_REL):
    """One determinant-normalized local metric per training point.

    Bias matrices are assembled in one vectorized pass (scale-free, which the
    solver ignores); points where every class density underflows get the
    identity metric with the degenerate flag. Output order follows the row
    order of the training features.
    """
    biases, degenerate = bias_matrices(train.features, ms, scale_free=True)
    out = []
    for i, (matrix, bad) in enumerate(zip(biases, degenerate)):
        if bad:
            out.append(MetricMatrix.identity(train.dim, f"local:{i}", degenerate=True))
        else:
            out.append(solve_local_metric(matrix, eps_rel, provenance=f"local:{i}"))
    return out


def regional_metrics(local_metrics, x, p, seed, restarts=10):
    """Average local metrics within each cell of a Euclidean k-means partition.

    Returns (list of p regional MetricMatrix, assignment vector). Regional
    averages are plain arithmetic means and are not re-normalized to unit
    determinant. p = 1 reproduces the uniform combination.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if not (1 <= p <= n):
        raise ValueError("partition count must lie in [1, N]")
    if len(local_metrics) != n:
        raise ValueError("one local metric per row of x is required")
    if p == 1:
        assign = np.zeros(n, dtype=int)
    else:
        rng = np.random.default_rng(seed)
        assign, _, _, _ = lloyd_best_of(x, p, rng, restarts=restarts)
    stack = np.stack([m.matrix for m in local_metrics])
    out = []
    for j in range(p):
        members = stack[assign == j]
        if len(members) == 0:
            raise ValueError(f"cluster {j} is empty; fewer distinct points than partitions")
        out.append(MetricMatrix(members.mean(axis=0), f"regional:{j}"))
    return out, assign
