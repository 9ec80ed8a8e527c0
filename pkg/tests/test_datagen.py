import math

import numpy as np
import pytest

from parsumi.core import ObservedMatrix
from parsumi.datagen import (
    ParameterError,
    SyntheticSpec,
    generate,
    oracle_rmse,
    rmse,
    rmse_visible,
    support_f_measure,
)


def test_clean_case_is_exact():
    inst = generate(SyntheticSpec(6, 8, 2, seed=1))
    np.testing.assert_array_equal(inst.obs.dense(), inst.W_true)
    assert inst.obs.support.size == 48 and not np.any(inst.E_true)


def test_small_replication_protocol_counts():
    spec = SyntheticSpec(7, 12, 3, 0.2, 0.1, (-5, 5), seed=2)
    inst = generate(spec)
    assert inst.obs.support.size == round(0.8 * 84) == 67
    assert np.count_nonzero(inst.E_true) == round(0.1 * 67) == 7
    assert np.all(np.abs(inst.E_true) <= 5)
    assert np.linalg.matrix_rank(inst.W_true) == 3
    assert np.all(np.abs(inst.W_true) <= 3)


def test_seed_determinism_and_support_containment():
    spec = SyntheticSpec(10, 12, 2, 0.3, 0.2, (-1, 1), 0.05, seed=3)
    a, b = generate(spec), generate(spec)
    assert a.obs.values.tobytes() == b.obs.values.tobytes()
    assert a.W_true.tobytes() == b.W_true.tobytes()
    mask = a.obs.mask()
    assert not np.any(a.E_true[~mask])
    noise = a.obs.dense() - (a.W_true + a.E_true) * mask
    assert not np.any(noise[~mask]) and np.any(noise[mask])


def test_decay_keeps_frobenius_norm():
    base = generate(SyntheticSpec(10, 12, 3, seed=4))
    dec = generate(SyntheticSpec(10, 12, 3, decay_exponent=2.0, seed=4))
    assert np.linalg.norm(dec.W_true) == pytest.approx(np.linalg.norm(base.W_true))
    s = np.linalg.svd(dec.W_true, compute_uv=False)
    assert s[0] / s[1] == pytest.approx(2.0) and s[1] / s[2] == pytest.approx(2.0)


@pytest.mark.parametrize("kw", [dict(missing_fraction=1.0), dict(corruption_fraction=-0.1),
                                dict(r=0), dict(noise_sigma=-1.0), dict(corruption_range=(1, -1))])
def test_infeasible_specs(kw):
    args = dict(m=5, n=5, r=2) | kw
    with pytest.raises(ParameterError):
        generate(SyntheticSpec(**args))


def test_rmse():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((4, 7))
    assert rmse(A, A) == 0.0
    assert rmse(A + 1, A) == pytest.approx(1.0)
    B = rng.standard_normal((4, 7))
    naive = math.sqrt(sum((A[i, j] - B[i, j]) ** 2 for i in range(4) for j in range(7)) / 28)
    assert rmse(A, B) == pytest.approx(naive, rel=1e-14)
    with pytest.raises(ValueError):
        rmse(A, A.T)


def test_rmse_visible():
    obs = ObservedMatrix.from_entries(2, 2, [1], [0], [4.0])
    assert rmse_visible(np.full((2, 2), 1.0), obs) == 3.0
    assert rmse_visible(obs.dense(), obs) == 0.0
    rng = np.random.default_rng(6)
    for _ in range(100):
        mask = rng.random((5, 6)) < 0.5
        mask[0, 0] = True
        obs = ObservedMatrix.from_dense(rng.standard_normal((5, 6)), mask)
        W = rng.standard_normal((5, 6))
        assert rmse_visible(W, obs) <= np.max(np.abs((W - obs.dense())[mask])) + 1e-15
    with pytest.raises(ValueError):
        rmse_visible(np.zeros((2, 2)), ObservedMatrix.from_entries(2, 2, [], [], []))


def test_oracle_rmse():
    assert oracle_rmse(40, 60, 4, 720, 0, 0.0) == 0.0
    assert oracle_rmse(40, 60, 4, 720, 0, 0.01) == pytest.approx(0.007303, abs=1e-6)
    assert oracle_rmse(40, 60, 4, 720, 0, 0.02) == pytest.approx(2 * oracle_rmse(40, 60, 4, 720, 0, 0.01))
    assert oracle_rmse(40, 60, 4, 900, 0, 0.01) < oracle_rmse(40, 60, 4, 720, 0, 0.01)
    assert oracle_rmse(40, 60, 4, 720, 50, 0.01) > oracle_rmse(40, 60, 4, 720, 0, 0.01)
    with pytest.raises(ParameterError):
        oracle_rmse(4, 6, 2, 10, 10, 0.1)


def test_support_f_measure():
    A = np.diag([1.0, 2.0, 0.0, 3.0])
    assert support_f_measure(A, A) == 1.0
    assert support_f_measure(np.eye(2), np.fliplr(np.eye(2))) == 0.0
    assert support_f_measure(np.zeros((2, 2)), np.zeros((2, 2))) == 1.0
    x, y = np.array([1.0, 1.0, 0, 0]), np.array([1.0, 0, 1.0, 0])
    assert support_f_measure(x, y) == pytest.approx(0.5)
    assert support_f_measure(np.array([1e-12, 1.0]), np.array([0.0, 1.0])) == 1.0
