import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from parsumi.core import (
    DimensionError,
    ObservedMatrix,
    SolverConfig,
    SparseCorruption,
    Support,
    embed_observed,
    merit_f,
    orthonormalize,
    project_observed,
)


def random_support(rng, m, n, frac=0.5):
    mask = rng.random((m, n)) < frac
    return Support.from_mask(mask)


def test_project_reads_in_column_major_order():
    s = Support.from_pairs(2, 2, [1, 0], [1, 0])
    assert list(project_observed([[1, 2], [3, 4]], s)) == [1, 4]
    s = Support.from_pairs(2, 2, [0, 1, 1], [1, 0, 1])
    assert list(zip(s.rows, s.cols)) == [(1, 0), (0, 1), (1, 1)]


def test_project_of_zero_is_zero():
    s = random_support(np.random.default_rng(0), 4, 5)
    assert np.all(project_observed(np.zeros((4, 5)), s) == 0)
    assert project_observed(np.zeros((4, 5)), s).shape == (s.size,)


def test_embed_single_entry_and_empty():
    s = Support.from_pairs(2, 2, [1], [0])
    np.testing.assert_array_equal(embed_observed([5.0], s), [[0, 0], [5, 0]])
    empty = Support.from_pairs(3, 2, [], [])
    np.testing.assert_array_equal(embed_observed([], empty), np.zeros((3, 2)))


def test_dimension_errors():
    s = Support.from_pairs(2, 2, [0], [0])
    with pytest.raises(DimensionError):
        project_observed(np.zeros((3, 2)), s)
    with pytest.raises(DimensionError):
        embed_observed([1.0, 2.0], s)
    with pytest.raises(DimensionError):
        Support.from_pairs(2, 2, [2], [0])


def test_duplicate_entries_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        ObservedMatrix.from_entries(3, 3, [0, 1, 0], [2, 2, 2], [1.0, 2.0, 3.0])


def test_project_embed_roundtrip():
    rng = np.random.default_rng(1)
    for _ in range(100):
        m, n = rng.integers(1, 9, size=2)
        s = random_support(rng, m, n)
        v = rng.standard_normal(s.size)
        np.testing.assert_array_equal(project_observed(embed_observed(v, s), s), v)


def test_adjoint_identity():
    rng = np.random.default_rng(2)
    for _ in range(50):
        m, n = rng.integers(1, 12, size=2)
        s = random_support(rng, m, n)
        M = rng.standard_normal((m, n))
        v = rng.standard_normal(s.size)
        lhs = float(project_observed(M, s) @ v)
        rhs = float(np.sum(M * embed_observed(v, s)))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_weights():
    obs = ObservedMatrix.from_entries(2, 2, [0], [1], [3.0], eps=0.04)
    np.testing.assert_allclose(obs.weights(), [[0.2, 1.0], [0.2, 0.2]])
    with pytest.raises(ValueError):
        ObservedMatrix.from_entries(2, 2, [0], [1], [3.0], eps=1.0)


def test_merit_examples():
    obs = ObservedMatrix.from_entries(1, 1, [0], [0], [2.0])
    E = SparseCorruption.zeros(obs.support, 1, 10.0)
    assert merit_f(np.zeros((1, 1)), E, obs) == 2.0

    rng = np.random.default_rng(3)
    mask = rng.random((4, 6)) < 0.5
    obs = ObservedMatrix.from_dense(rng.standard_normal((4, 6)), mask)
    E = SparseCorruption.zeros(obs.support, 3, 10.0)
    assert merit_f(obs.dense(), E, obs) == 0.0


def test_merit_matches_split_form():
    rng = np.random.default_rng(4)
    for _ in range(100):
        m, n = rng.integers(1, 10, size=2)
        eps = float(rng.uniform(1e-6, 0.5))
        mask = rng.random((m, n)) < 0.6
        obs = ObservedMatrix.from_dense(rng.standard_normal((m, n)), mask, eps)
        ev = rng.standard_normal(obs.support.size)
        E = SparseCorruption.from_values(obs.support, ev, obs.support.size, 1e6)
        W = rng.standard_normal((m, n))
        observed = project_observed(W, obs.support) - obs.values + ev
        off = W[~mask]
        expected = 0.5 * observed @ observed + 0.5 * eps * off @ off
        got = merit_f(W, E, obs)
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-300)


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(float, (3, 4), elements=st.floats(-1e3, 1e3)),
       hnp.arrays(bool, (3, 4)))
def test_merit_nonnegative_and_zero_only_at_fit(W, mask):
    obs = ObservedMatrix.from_dense(np.ones((3, 4)), mask, eps=0.25)
    E = SparseCorruption.zeros(obs.support, 0, 1.0)
    val = merit_f(W, E, obs)
    assert val >= 0
    fit = np.where(mask, 1.0, 0.0)
    assert (val == 0) == bool(np.all(W == fit))


def test_sparse_corruption_invariants():
    s = Support.from_pairs(3, 3, [0, 1, 2], [0, 1, 2])
    with pytest.raises(ValueError):
        SparseCorruption.from_values(s, [1.0, 1.0, 0.0], 1, 10.0)
    with pytest.raises(ValueError):
        SparseCorruption.from_values(s, [3.0, 4.0, 0.0], 2, 4.0)
    E = SparseCorruption.from_values(s, [3.0, 4.0, 0.0], 2, 5.0)
    assert E.nnz == 2 and E.norm() == 5.0
    assert E.dense()[1, 1] == 4.0


def test_serialization_preserves_projection_order(tmp_path):
    from parsumi.formats import read_observations, write_observations

    rng = np.random.default_rng(5)
    mask = rng.random((6, 7)) < 0.5
    obs = ObservedMatrix.from_dense(rng.standard_normal((6, 7)), mask)
    path = tmp_path / "obs.txt"
    write_observations(path, obs)
    back = read_observations(path)
    M = rng.standard_normal((6, 7))
    assert project_observed(M, back.support).tobytes() == project_observed(M, obs.support).tobytes()
    assert back.values.tobytes() == obs.values.tobytes()


def test_config_defaults():
    obs = ObservedMatrix.from_dense(np.arange(1.0, 13.0).reshape(3, 4), np.ones((3, 4), bool))
    cfg = SolverConfig(rank=1).resolve(obs)
    assert cfg.beta1 == cfg.beta2 == pytest.approx(1e-3 / 2)
    assert cfg.n0 == math.ceil(0.15 * 12)
    assert cfg.k_e == pytest.approx(20 * math.sqrt(2) * 6.5)
    assert cfg.eps == 1e-10 and cfg.lm_rho == 10 and cfg.lm_lambda_init == 1e-6


def test_orthonormalize_sign_convention():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((7, 3))
    Q = orthonormalize(X)
    np.testing.assert_allclose(Q.T @ Q, np.eye(3), atol=1e-10)
    R = Q.T @ X
    assert np.all(np.diag(R) >= 0)
    np.testing.assert_array_equal(orthonormalize(X), Q)
