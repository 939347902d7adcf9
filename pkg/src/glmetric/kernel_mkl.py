"""Metric RBF kernel banks, a soft-margin SVM dual solver, and simplex-weight
multiple kernel learning.

The SVM solver is pairwise coordinate ascent on the standard dual
(max sum(beta) - 0.5 beta^T (y K y) beta, 0 <= beta <= C, sum(beta y) = 0)
with most-violating-pair working-set selection and an incrementally
maintained gradient. Kernel weights are learned by projected gradient on the
simplex with backtracking on the optimal dual value, which shares its fixed
points with reduced-gradient descent on the same objective.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from ._linalg import pairwise_sq_dists
from .local_metric import MetricMatrix

__all__ = [
    "BaseKernel",
    "SvmSolution",
    "MklModel",
    "DEFAULT_TAU_GRID",
    "rbf_metric_kernel",
    "build_kernel_bank",
    "gram_matrix",
    "svm_solve",
    "project_simplex",
    "mkl_train",
    "mkl_predict",
    "train_one_vs_all",
    "predict_one_vs_all",
]

logger = logging.getLogger(__name__)

DEFAULT_TAU_GRID = tuple(2.0 ** k for k in range(-6, 9))


@dataclass(frozen=True, eq=False)
class BaseKernel:
    """RBF kernel exp(-d_M(x, x') / sigma^2) with a fixed metric M."""

    metric: MetricMatrix
    sigma_sq: float
    tau: float | None = None        # inverse-bandwidth grid point, if any
    sigma0_sq: float | None = None  # per-metric normalization it was scaled from

    def __post_init__(self):
        if self.sigma_sq <= 0:
            raise ValueError("bandwidth must be positive")

    def to_dict(self):
        return {"metric": self.metric.to_dict(), "sigma_sq": self.sigma_sq,
                "tau": self.tau, "sigma0_sq": self.sigma0_sq}

    @classmethod
    def from_dict(cls, d):
        return cls(MetricMatrix.from_dict(d["metric"]), d["sigma_sq"],
                   d.get("tau"), d.get("sigma0_sq"))


@dataclass(eq=False)
class SvmSolution:
    beta: np.ndarray
    bias: float
    objective: float
    iterations: int
    converged: bool
    kkt_violation: float


@dataclass(eq=False)
class MklModel:
    """Learned simplex weights over base kernels plus the SVM dual solution."""

    weights: np.ndarray
    beta: np.ndarray
    bias: float
    labels: np.ndarray  # the +-1 training labels the duals refer to
    C: float
    objective_curve: list = field(default_factory=list)
    converged: bool = True

    def __post_init__(self):
        a = self.weights
        if (a < -1e-12).any() or abs(a.sum() - 1.0) > 1e-8:
            raise ValueError("kernel weights must lie on the simplex")

    @property
    def support_indices(self):
        return np.flatnonzero(self.beta > 1e-8)

    def to_dict(self, bank=None):
        out = {"weights": self.weights.tolist(), "beta": self.beta.tolist(),
               "bias": self.bias, "C": self.C,
               "support_indices": self.support_indices.tolist(),
               "objective_curve": list(self.objective_curve),
               "converged": self.converged}
        if bank is not None:
            out["kernels"] = [bk.to_dict() for bk in bank]
        return out


def rbf_metric_kernel(bk: BaseKernel, x, y):
    """Kernel value in (0, 1] between two points."""
    delta = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return float(np.exp(-(delta @ bk.metric.matrix @ delta) / bk.sigma_sq))


def _median_sq_distance(x, metric, rng, max_pairs):
    n = len(x)
    total = n * (n - 1) // 2
    if total <= max_pairs:
        d = pairwise_sq_dists(x, x, metric.matrix)
        vals = d[np.triu_indices(n, 1)]
    else:
        i = rng.integers(0, n, size=max_pairs)
        j = rng.integers(0, n - 1, size=max_pairs)
        j = np.where(j >= i, j + 1, j)
        diff = x[i] - x[j]
        vals = np.einsum("nd,de,ne->n", diff, metric.matrix, diff)
    med = float(np.median(vals))
    if med <= 0:
        raise ValueError("degenerate pairwise distances")
    return med


def build_kernel_bank(metrics, x_train, tau_grid=DEFAULT_TAU_GRID, seed=0,
                      max_pairs=10 ** 6):
    """One kernel per (metric, tau): sigma^2 = sigma0^2(metric) / tau.

    sigma0^2 is the median squared pairwise training distance under the
    metric, subsampled to at most max_pairs pairs with the given seed. The
    baseline family is the special case metrics = [identity].
    """
    if not metrics or not len(tau_grid):
        raise ValueError("need at least one metric and one tau value")
    x_train = np.asarray(x_train, dtype=float)
    rng = np.random.default_rng(seed)
    bank = []
    for metric in metrics:
        sigma0_sq = _median_sq_distance(x_train, metric, rng, max_pairs)
        for tau in tau_grid:
            bank.append(BaseKernel(metric, sigma0_sq / tau, tau=float(tau),
                                   sigma0_sq=sigma0_sq))
    return bank


def gram_matrix(bk: BaseKernel, x, x2=None):
    """Kernel matrix between rows of x and rows of x2 (or x with itself)."""
    x = np.asarray(x, dtype=float)
    other = x if x2 is None else np.asarray(x2, dtype=float)
    with np.errstate(under="ignore"):
        k = np.exp(-pairwise_sq_dists(x, other, bk.metric.matrix) / bk.sigma_sq)
    if x2 is None:
        np.fill_diagonal(k, 1.0)
        k = 0.5 * (k + k.T)
    return k


def svm_solve(k, y, c, tol=1e-4, max_iter=200000):
    """Soft-margin SVM dual by most-violating-pair coordinate ascent.

    k is the (symmetric, PSD within tolerance) Gram matrix and y the +-1
    labels. Stops when the maximum KKT violation drops below tol; at the
    iteration cap the best iterate is returned with converged=False and a
    warning. The bias averages -y * gradient over unbounded support vectors.
    """
    y = np.asarray(y, dtype=float)
    if set(np.unique(y)) - {-1.0, 1.0}:
        raise ValueError("labels must be +-1")
    n = len(y)
    q = k * np.outer(y, y)
    diag = np.diag(q).copy()
    beta = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 b'Qb - e'b
    it = 0
    violation = np.inf
    for it in range(1, max_iter + 1):
        yg = -y * grad
        up = np.where(y > 0, beta < c - 1e-12, beta > 1e-12)
        low = np.where(y > 0, beta > 1e-12, beta < c - 1e-12)
        if not up.any() or not low.any():
            violation = 0.0
            break
        i_cand = np.flatnonzero(up)
        j_cand = np.flatnonzero(low)
        i = i_cand[np.argmax(yg[i_cand])]
        j = j_cand[np.argmin(yg[j_cand])]
        violation = yg[i] - yg[j]
        if violation < tol:
            break
        quad = max(diag[i] + diag[j] - 2.0 * y[i] * y[j] * q[i, j], 1e-12)
        step = violation / quad
        # box limits along the feasible pair direction
        step = min(step,
                   c - beta[i] if y[i] > 0 else beta[i],
                   beta[j] if y[j] > 0 else c - beta[j])
        beta[i] += y[i] * step
        beta[j] -= y[j] * step
        grad += step * (y[i] * q[:, i] - y[j] * q[:, j])
    converged = violation < tol
    if not converged:
        logger.warning("SVM solver hit the iteration cap (violation %.3g)", violation)
    yg = -y * grad
    unbounded = (beta > 1e-8) & (beta < c - 1e-8)
    if unbounded.any():
        bias = float(yg[unbounded].mean())
    else:
        up = np.where(y > 0, beta < c - 1e-12, beta > 1e-12)
        low = np.where(y > 0, beta > 1e-12, beta < c - 1e-12)
        hi = yg[up].max() if up.any() else 0.0
        lo = yg[low].min() if low.any() else 0.0
        bias = float(0.5 * (hi + lo))
    objective = float(beta.sum() - 0.5 * beta @ q @ beta)
    return SvmSolution(beta, bias, objective, it, converged, float(max(violation, 0.0)))


def project_simplex(v):
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.flatnonzero(u * np.arange(1, len(v) + 1) > css)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def mkl_train(grams, y, c, tol=1e-4, max_outer=50, svm_tol=1e-4):
    """Simplex-weighted kernel combination minimizing the SVM dual optimum.

    Alternates an exact SVM solve on the combined kernel with a projected
    gradient step on the weights (gradient -0.5 beta^T (y K_k y) beta per
    kernel), backtracking until the dual optimum does not increase, so the
    recorded objective curve is non-increasing. Stops when the weights move
    less than tol in l1 or the objective decrease falls below tol.
    """
    y = np.asarray(y, dtype=float)
    m = len(grams)
    if m == 0:
        raise ValueError("need at least one kernel")
    weights = np.full(m, 1.0 / m)

    def combine(a):
        out = a[0] * grams[0]
        for ak, kk in zip(a[1:], grams[1:]):
            out = out + ak * kk
        return out

    sol = svm_solve(combine(weights), y, c, tol=svm_tol)
    curve = [sol.objective]
    step = 1.0
    converged = False
    for _ in range(max_outer):
        yb = y * sol.beta
        grad = np.array([-0.5 * yb @ kk @ yb for kk in grams])
        accepted = None
        for _ in range(25):
            cand = project_simplex(weights - step * grad)
            move = np.abs(cand - weights).sum()
            if move < 1e-14:
                break
            cand_sol = svm_solve(combine(cand), y, c, tol=svm_tol)
            if cand_sol.objective <= curve[-1] + 1e-12:
                accepted = (cand, cand_sol, move)
                break
            step *= 0.5
        if accepted is None:
            converged = True  # no descent direction left at this scale
            break
        weights, sol, move = accepted
        decrease = curve[-1] - sol.objective
        curve.append(sol.objective)
        if move < tol or decrease < tol * max(1.0, abs(curve[0])):
            converged = True
            break
        step *= 1.5
    return MklModel(weights, sol.beta, sol.bias, y, float(c),
                    objective_curve=curve, converged=converged)


def _decision_values(model: MklModel, test_grams):
    combined = None
    for a, kk in zip(model.weights, test_grams):
        combined = a * kk if combined is None else combined + a * kk
    return combined @ (model.beta * model.labels) + model.bias


def mkl_predict(model: MklModel, test_grams):
    """+-1 labels from the combined decision function (0 maps to +1)."""
    values = _decision_values(model, test_grams)
    return np.where(values >= 0, 1, -1)


def train_one_vs_all(grams, labels, class_count, c, tol=1e-4, max_outer=50):
    """One binary MKL model per class against the rest."""
    return [mkl_train(grams, np.where(labels == cls, 1.0, -1.0), c,
                      tol=tol, max_outer=max_outer)
            for cls in range(class_count)]


def predict_one_vs_all(models, test_grams):
    """Class with the largest decision value; ties pick the lower index."""
    scores = np.stack([_decision_values(m, test_grams) for m in models], axis=1)
    return scores.argmax(axis=1)
