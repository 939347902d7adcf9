import time

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from glmetric.dataset import LabeledDataset, make_synthetic_mixture, three_normal_preset
from glmetric.generative import fit_gaussian_models
from glmetric.global_metric import uniform_combination
from glmetric.local_metric import (MetricMatrix, compute_all_local_metrics,
                                   interpolate_with_euclidean, regional_metrics,
                                   solve_local_metric, spectral_split)
from test_generative import model_set


def random_symmetric_indefinite(rng, dim):
    a = rng.normal(size=(dim, dim))
    bias = 0.5 * (a + a.T)
    w = np.linalg.eigvalsh(bias)
    if w.min() > -1e-3 or w.max() < 1e-3:
        bias = bias - np.mean(w) * np.eye(dim)
    return bias


def check_constraints(metric, bias):
    w = np.linalg.eigvalsh(metric.matrix)
    assert w.min() >= -1e-10 * w.max()
    log_det = np.sum(np.log(w))
    assert abs(np.exp(log_det) - 1.0) < 1e-6
    trace = np.trace(np.linalg.solve(metric.matrix, bias))
    assert abs(trace) < 1e-8 * np.linalg.norm(bias)


class TestSolver:
    def test_hand_worked_indefinite_example(self):
        metric = solve_local_metric(np.diag([2.0, -1.0]))
        np.testing.assert_allclose(np.diag(metric.matrix), [1.414214, 0.707107], atol=1e-6)
        assert metric.det_normalized
        check_constraints(metric, np.diag([2.0, -1.0]))

    def test_zero_matrix_gives_identity_with_flag(self):
        metric = solve_local_metric(np.zeros((3, 3)))
        np.testing.assert_array_equal(metric.matrix, np.eye(3))
        assert metric.degenerate

    def test_positive_definite_fallback_is_true_minimizer(self):
        bias = np.diag([8.0, 2.0])
        metric = solve_local_metric(bias)
        np.testing.assert_allclose(metric.matrix, np.diag([2.0, 0.5]), atol=1e-12)

        # oracle: minimize (8/m + 2/(1/m))^2 over det-one diagonal metrics
        def objective(t):
            return (8.0 * np.exp(-t) + 2.0 * np.exp(t)) ** 2

        res = minimize_scalar(objective, bounds=(-5, 5), method="bounded")
        np.testing.assert_allclose(np.exp(res.x), 2.0, rtol=1e-5)

    def test_negative_definite_fallback(self):
        metric = solve_local_metric(np.diag([-8.0, -2.0]))
        np.testing.assert_allclose(metric.matrix, np.diag([2.0, 0.5]), atol=1e-12)

    def test_non_symmetric_rejected(self):
        with pytest.raises(ValueError, match="not symmetric"):
            solve_local_metric(np.array([[0.0, 1.0], [0.5, 0.0]]))

    @pytest.mark.parametrize("dim", [2, 5, 10, 30])
    def test_constraints_hold_on_random_indefinite(self, dim):
        rng = np.random.default_rng(dim)
        for _ in range(50):
            bias = random_symmetric_indefinite(rng, dim)
            check_constraints(solve_local_metric(bias), bias)

    def test_scale_invariance(self):
        rng = np.random.default_rng(1)
        bias = random_symmetric_indefinite(rng, 5)
        base = solve_local_metric(bias).matrix
        for s in (1e-6, 0.5, 3.0, 1e8):
            scaled = solve_local_metric(s * bias).matrix
            assert np.abs(scaled - base).max() < 1e-10 * np.abs(base).max()

    def test_rotation_equivariance(self):
        rng = np.random.default_rng(2)
        bias = random_symmetric_indefinite(rng, 4)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        rotated = solve_local_metric(q @ bias @ q.T).matrix
        expected = q @ solve_local_metric(bias).matrix @ q.T
        assert np.abs(rotated - expected).max() < 1e-8

    def test_grouping_stability_under_perturbation(self):
        rng = np.random.default_rng(3)
        bias = np.diag([3.0, 1.0, -1.0, -2.0])  # spectral gap far from zero
        noise = rng.normal(size=(4, 4))
        noise = 0.5 * (noise + noise.T)
        noise *= 1e-12 * np.linalg.norm(bias) / np.linalg.norm(noise)
        a = solve_local_metric(bias).matrix
        b = solve_local_metric(bias + noise).matrix
        assert np.abs(a - b).max() < 1e-6

    def test_spectral_split_counts(self):
        rng = np.random.default_rng(4)
        bias = random_symmetric_indefinite(rng, 6)
        sol = spectral_split(bias)
        assert sol.d_plus + sol.d_minus + sol.zero_count == 6
        assert sol.d_plus >= 1 and sol.d_minus >= 1
        # eigenvectors orthonormal
        gram = sol.eigenvectors.T @ sol.eigenvectors
        assert np.abs(gram - np.eye(6)).max() < 1e-8


class TestInterpolation:
    def test_full_weight_gives_identity(self):
        m = solve_local_metric(np.diag([2.0, -1.0]))
        out = interpolate_with_euclidean(m, 1.0)
        np.testing.assert_allclose(out.matrix, np.eye(2), atol=1e-12)

    def test_zero_weight_is_noop(self):
        m = solve_local_metric(np.diag([2.0, -1.0]))
        assert interpolate_with_euclidean(m, 0.0) is m

    def test_hand_worked_midpoint(self):
        m = MetricMatrix(np.diag([2.0, 0.5]), "local", det_normalized=True)
        out = interpolate_with_euclidean(m, 0.5)
        np.testing.assert_allclose(np.diag(out.matrix), [1.414214, 0.707107], atol=1e-6)

    def test_out_of_range_rejected(self):
        m = MetricMatrix.identity(2)
        with pytest.raises(ValueError):
            interpolate_with_euclidean(m, 1.5)


class TestComputeAll:
    def test_symmetry_locus_gives_identity(self):
        ms = model_set([[1.0, 0.0], [-1.0, 0.0]], [np.eye(2), np.eye(2)])
        pts = np.column_stack([np.zeros(5), np.linspace(-2, 2, 5)])
        train = LabeledDataset(pts, [0, 1, 0, 1, 0], 2)
        for m in compute_all_local_metrics(train, ms):
            assert m.degenerate or np.abs(m.matrix - np.eye(2)).max() < 1e-9
            np.testing.assert_allclose(m.matrix, np.eye(2), atol=1e-9)

    def test_repeated_point_gives_identical_metrics(self):
        rng = np.random.default_rng(5)
        ms = model_set([rng.normal(size=3), rng.normal(size=3)],
                       [np.eye(3), 2 * np.eye(3)])
        x = np.tile(rng.normal(size=3), (8, 1))
        train = LabeledDataset(x, [0, 1] * 4, 2)
        metrics = compute_all_local_metrics(train, ms)
        for m in metrics[1:]:
            np.testing.assert_array_equal(m.matrix, metrics[0].matrix)

    def test_invariant_sweep_on_synthetic(self):
        ds = make_synthetic_mixture(three_normal_preset(dim=5), 600, seed=0)
        ms = fit_gaussian_models(ds, 1e-3)
        t0 = time.perf_counter()
        metrics = compute_all_local_metrics(ds, ms)
        assert time.perf_counter() - t0 < 10.0
        assert len(metrics) == 600
        from glmetric.generative import bias_matrices
        biases, degenerate = bias_matrices(ds.features, ms)
        for metric, bias, bad in zip(metrics, biases, degenerate):
            if bad or metric.degenerate:
                continue
            check_constraints(metric, bias)


class TestRegional:
    def make_locals(self, n, dim, seed=0):
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(n):
            out.append(solve_local_metric(random_symmetric_indefinite(rng, dim)))
        return out

    def test_single_partition_equals_uniform_combination(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(12, 3))
        locals_ = self.make_locals(12, 3)
        regionals, assign = regional_metrics(locals_, x, 1, seed=0)
        assert (assign == 0).all()
        np.testing.assert_allclose(regionals[0].matrix,
                                   uniform_combination(locals_).matrix, rtol=1e-12)

    def test_n_partitions_recover_locals(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(6, 2)) * 10  # distinct, well separated
        locals_ = self.make_locals(6, 2, seed=1)
        regionals, assign = regional_metrics(locals_, x, 6, seed=0)
        assert sorted(assign.tolist()) == list(range(6))
        for i, j in enumerate(assign):
            np.testing.assert_allclose(regionals[j].matrix, locals_[i].matrix, rtol=1e-12)

    def test_two_blobs_average_their_own_locals(self):
        rng = np.random.default_rng(8)
        blob_a = rng.normal(size=(10, 2)) * 0.1
        blob_b = rng.normal(size=(10, 2)) * 0.1 + 50.0
        x = np.vstack([blob_a, blob_b])
        locals_ = self.make_locals(20, 2, seed=2)
        regionals, assign = regional_metrics(locals_, x, 2, seed=0)
        assert len(set(assign[:10])) == 1 and len(set(assign[10:])) == 1
        stack = np.stack([m.matrix for m in locals_])
        for j in range(2):
            np.testing.assert_allclose(regionals[j].matrix,
                                       stack[assign == j].mean(axis=0), rtol=1e-12)

    def test_regional_metrics_not_renormalized(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(5, 2))
        regionals, _ = regional_metrics(self.make_locals(5, 2, seed=3), x, 1, seed=0)
        assert not regionals[0].det_normalized

    def test_invalid_partition_count(self):
        x = np.zeros((3, 2))
        with pytest.raises(ValueError):
            regional_metrics(self.make_locals(3, 2), x, 4, seed=0)


class TestMetricMatrix:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            MetricMatrix(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError, match="semidefinite"):
            MetricMatrix(np.diag([1.0, -1.0]))

    def test_rejects_false_det_claim(self):
        with pytest.raises(ValueError, match="unit determinant"):
            MetricMatrix(np.diag([2.0, 2.0]), det_normalized=True)

    def test_dict_round_trip(self):
        m = solve_local_metric(np.diag([3.0, -1.0, 0.5]))
        clone = MetricMatrix.from_dict(m.to_dict())
        np.testing.assert_array_equal(clone.matrix, m.matrix)
        assert clone.det_normalized == m.det_normalized
        assert clone.provenance == m.provenance
