"""Small shared linear-algebra helpers for symmetric PSD matrices."""
import numpy as np


def symmetrize(a):
    return 0.5 * (a + a.T)


def sym_sqrt(m):
    """Principal square root U diag(sqrt(w)) U^T of a symmetric PSD matrix.

    Eigenvalues below zero (numerical noise) are clipped to zero.
    """
    w, u = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return symmetrize((u * np.sqrt(w)) @ u.T)


def det_normalize_eigs(w):
    """Rescale positive eigenvalues so their product is 1, in log space."""
    return w / np.exp(np.mean(np.log(w)))


def det_normalize(m):
    """Rescale a symmetric PD matrix to unit determinant via its eigenvalues."""
    w, u = np.linalg.eigh(m)
    if w.min() <= 0:
        raise ValueError("matrix must be positive definite for determinant normalization")
    return symmetrize((u * det_normalize_eigs(w)) @ u.T)


def pairwise_sq_dists(q, x, m=None):
    """Squared Mahalanobis distances between rows of q and rows of x.

    With m=None the metric is the identity. Returns a (len(q), len(x)) array;
    tiny negative values from cancellation are clipped to 0.
    """
    if m is None:
        qm = q
    else:
        qm = q @ m
    rq = np.einsum("ij,ij->i", qm, q)
    rx = np.einsum("ij,ij->i", x if m is None else x @ m, x)
    d = rq[:, None] + rx[None, :] - 2.0 * (qm @ x.T)
    return np.clip(d, 0.0, None)
