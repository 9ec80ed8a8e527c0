import numpy as np
import pytest

from conftest import random_problem
from parsumi.majorize import (
    compute_weights,
    gradient,
    majorized_minimizer,
    majorizer_value,
    truncated_svd_rank_r,
)
from parsumi.wstep import WStepWorkspace, build_workspace


def test_weights_examples():
    w = compute_weights(np.array([[1.0, 2.0], [3.0, 1.0]]))
    np.testing.assert_allclose(w.q, [3.0, 2.0])
    np.testing.assert_allclose(w.p, (1 + 1e-6) * np.array([2.0, 3.0]))
    assert w.p[0] * w.q[1] > 4.0
    w = compute_weights(np.full((3, 4), 0.7))
    np.testing.assert_allclose(w.p, (1 + 1e-6) * 0.7)
    np.testing.assert_allclose(w.q, 0.7)
    with pytest.raises(ValueError):
        compute_weights(np.zeros((2, 2)))


def test_weights_strictly_dominate():
    rng = np.random.default_rng(0)
    for _ in range(100):
        H = rng.uniform(1e-3, 2.0, (int(rng.integers(1, 8)), int(rng.integers(1, 8))))
        w = compute_weights(H)
        assert np.all(np.outer(w.p, w.q) > H**2)


def test_truncated_svd():
    np.testing.assert_allclose(truncated_svd_rank_r(np.diag([3.0, 2.0, 1.0]), 2), np.diag([3.0, 2.0, 0.0]), atol=1e-14)
    rng = np.random.default_rng(1)
    M = np.outer(rng.standard_normal(4), rng.standard_normal(5))
    np.testing.assert_allclose(truncated_svd_rank_r(M, 3), M, atol=1e-12)
    with pytest.raises(ValueError):
        truncated_svd_rank_r(M, 5)


def test_truncated_svd_beats_random_candidates():
    rng = np.random.default_rng(2)
    for _ in range(20):
        M = rng.standard_normal((5, 6))
        best = np.linalg.norm(M - truncated_svd_rank_r(M, 2))
        for _ in range(200):
            X = truncated_svd_rank_r(M + 0.3 * rng.standard_normal(M.shape), 2)
            assert np.linalg.norm(M - X) >= best - 1e-12


def test_uniform_weight_reduction():
    rng = np.random.default_rng(3)
    c = 1.3
    Bk = rng.standard_normal((5, 6))
    ws = WStepWorkspace(np.full((5, 6), c), Bk)
    W_k = rng.standard_normal((5, 6))
    out = majorized_minimizer(W_k, ws, compute_weights(ws.Hbar, inflation=0.0), 2)
    expected = truncated_svd_rank_r(W_k - gradient(W_k, ws) / c**2, 2)
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_low_rank_fixed_point():
    rng = np.random.default_rng(4)
    W = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 7))
    H = rng.uniform(0.5, 1.5, W.shape)
    ws = WStepWorkspace(H, H * W)
    out = majorized_minimizer(W, ws, compute_weights(H), 2)
    np.testing.assert_allclose(out, W, atol=1e-10)
    np.testing.assert_array_equal(out, majorized_minimizer(W, ws, compute_weights(H), 2))


def test_majorization_chain():
    rng = np.random.default_rng(5)
    for _ in range(100):
        m, n, r = 6, 8, 2
        obs, E = random_problem(rng, m, n, eps=1e-3, corrupt=2)
        W_k = truncated_svd_rank_r(rng.standard_normal((m, n)), r)
        ws = build_workspace(obs, W_k, E, float(rng.uniform(0.01, 1.0)))
        wts = compute_weights(ws.Hbar)
        W_qm = majorized_minimizer(W_k, ws, wts, r)
        F_qm, Q_qm = ws.F(W_qm), majorizer_value(W_qm, W_k, ws, wts)
        Q_k, F_k = majorizer_value(W_k, W_k, ws, wts), ws.F(W_k)
        assert F_qm <= Q_qm + 1e-10
        assert Q_qm <= Q_k + 1e-10
        assert Q_k == pytest.approx(F_k, rel=1e-14)
