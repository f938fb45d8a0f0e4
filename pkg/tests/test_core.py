import numpy as np
import pytest

from dantzigsel.core import (
    BoxPolicy,
    CoefVector,
    DataError,
    Dataset,
    LossSpec,
    norms,
    sign_vector,
)


def test_sign_vector_examples():
    assert list(sign_vector([-2.0, 0.0, 3.0])) == [-1, 0, 1]
    assert list(sign_vector([0.0, 0.0])) == [0, 0]
    # strict inequality, no tolerance: subnormal-scale entries keep their sign
    assert list(sign_vector([1e-300, -1e-300])) == [1, -1]


def test_norms_examples():
    assert norms([3.0, -4.0]) == {"l1": 7.0, "l2": 5.0, "linf": 4.0, "sparsity": 2}
    assert norms([0.0, 0.0, 0.0]) == {"l1": 0.0, "l2": 0.0, "linf": 0.0, "sparsity": 0}
    assert norms([1.0, 1.0, 1.0, 1.0]) == {"l1": 4.0, "l2": 2.0, "linf": 1.0, "sparsity": 4}


def test_sign_vector_scale_invariant():
    rng = np.random.default_rng(0)
    for _ in range(50):
        theta = rng.standard_normal(8)
        theta[rng.integers(0, 8)] = 0.0
        c = float(rng.uniform(0.1, 100.0))
        assert np.array_equal(sign_vector(c * theta), sign_vector(theta))


def test_sparsity_counts_sign_nonzeros():
    rng = np.random.default_rng(1)
    for _ in range(30):
        theta = rng.standard_normal(10)
        theta[rng.random(10) < 0.4] = 0.0
        cv = CoefVector(theta)
        assert cv.sparsity() == int(np.count_nonzero(cv.sign_vector()))


def test_sample_sup_bounded_by_l1_surrogate():
    rng = np.random.default_rng(2)
    for _ in range(30):
        x = rng.uniform(-2.0, 2.0, size=(15, 4))
        ds = Dataset(x=x, y=np.zeros(15), l_bound=2.0)
        theta = rng.standard_normal(4)
        assert ds.sample_sup(theta) <= 2.0 * np.sum(np.abs(theta)) + 1e-12


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset(x=np.ones((3, 1)), y=np.zeros(3), l_bound=1.0)  # M >= 2
    with pytest.raises(DataError):
        Dataset(x=np.zeros((0, 2)), y=np.zeros(0), l_bound=1.0)  # n >= 1
    with pytest.raises(DataError):
        Dataset(x=np.full((2, 2), 3.0), y=np.zeros(2), l_bound=1.0)  # exceeds bound
    with pytest.raises(DataError):
        Dataset(x=np.ones((2, 2)), y=np.zeros(3), l_bound=1.0)  # length mismatch
    with pytest.raises(DataError):
        Dataset(x=np.array([[1.0, np.nan], [0.0, 1.0]]), y=np.zeros(2), l_bound=1.0)


def test_normalize_records_scales():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((40, 3)) * np.array([0.5, 2.0, 7.0])
    ds = Dataset(x=x, y=rng.standard_normal(40), l_bound=float(np.max(np.abs(x))))
    assert not ds.normalized
    dsn = ds.normalize()
    assert dsn.normalized
    np.testing.assert_allclose(dsn.column_norms(), 1.0, atol=1e-12)
    np.testing.assert_allclose(dsn.x * dsn.column_scales, ds.x, atol=1e-12)


def test_loss_spec():
    with pytest.raises(DataError):
        LossSpec.huber(1.0, None)
    with pytest.raises(DataError):
        LossSpec("huber", k_bound=1.0)
    h = LossSpec.huber(1.0, 0.5)
    assert h.clip == 2.5
    assert h.lipschitz() == 2.5
    assert LossSpec.logistic(1.0).lipschitz() == 1.0
    with pytest.raises(DataError):
        LossSpec.quadratic().lipschitz()
    with pytest.raises(DataError):
        LossSpec.quadratic().clip


def test_box_policy():
    assert BoxPolicy.none().kind == "none"
    assert BoxPolicy.sample_sup(2.0).k_bound == 2.0
    with pytest.raises(DataError):
        BoxPolicy("sample")  # needs k_bound
    with pytest.raises(DataError):
        BoxPolicy("weird", k_bound=1.0)


def test_coef_vector_support():
    cv = CoefVector([0.0, -1.5, 0.0, 2.0])
    assert list(cv.support()) == [1, 3]
    assert cv.sparsity() == 2
    with pytest.raises(DataError):
        CoefVector([np.inf, 1.0])
