import numpy as np
import pytest

from dantzigsel.core import DataError, Dataset, LossSpec
from dantzigsel.losses import (
    KinkError,
    empirical_hessian,
    empirical_risk,
    grad_check,
    huber_psi,
    risk_gradient,
)

HUBER = LossSpec.huber(1.0, 0.5)  # clip 2.5
QUAD = LossSpec.quadratic()


def _ds(x, y):
    x = np.asarray(x, dtype=float)
    return Dataset(x=x, y=np.asarray(y, dtype=float), l_bound=float(np.max(np.abs(x))) or 1.0)


def test_huber_psi_examples():
    assert huber_psi(1.2, 2.5) == 1.2
    assert huber_psi(3.0, 2.5) == 2.5  # clipped branch, hand-evaluated
    assert huber_psi(-4.0, 2.5) == -2.5  # odd symmetry


def test_huber_psi_properties():
    u = np.linspace(-10, 10, 2001)
    psi = huber_psi(u, 2.5)
    np.testing.assert_allclose(huber_psi(-u, 2.5), -psi, atol=0)  # odd
    assert np.all(np.diff(psi) >= 0)  # nondecreasing
    assert np.all(np.abs(np.diff(psi)) <= np.diff(u) + 1e-15)  # 1-Lipschitz
    assert np.max(np.abs(psi)) <= 2.5


def test_empirical_risk_huber_zero_residual():
    ds = _ds([[1.0, 0.0]], [1.0])
    assert empirical_risk(ds, [1.0, 0.0], HUBER) == 0.0


def test_empirical_risk_quadratic_hand_value():
    # gamma(y, u) = (y - u)^2 / 2: residuals (2, 0) give mean (2 + 0)/2 = 1
    ds = _ds([[1.0, 0.0], [1.0, 0.0]], [2.0, 0.0])
    assert empirical_risk(ds, [0.0, 0.0], QUAD) == 1.0


def test_empirical_risk_huber_linear_branch():
    # phi(10) with clip 2.5: 2.5*10 - 2.5^2/2 = 21.875
    ds = _ds([[1.0, 0.0]], [10.0])
    assert empirical_risk(ds, [0.0, 0.0], HUBER) == 21.875


def test_risk_gradient_huber_clipped_cancel():
    ds = _ds([[1.0, 1.0], [1.0, 1.0]], [3.0, -3.0])
    rep = risk_gradient(ds, [0.0, 0.0], HUBER)
    np.testing.assert_allclose(rep.grad, 0.0, atol=1e-15)


def test_risk_gradient_quadratic_stationary_at_ls():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((30, 4))
    q, _ = np.linalg.qr(a)
    x = q * np.sqrt(30)
    y = rng.standard_normal(30)
    ds = Dataset(x=x, y=y, l_bound=float(np.max(np.abs(x))))
    theta = x.T @ y / 30
    rep = risk_gradient(ds, theta, QUAD)
    assert rep.grad_inf_norm < 1e-12


def test_risk_gradient_logistic():
    ds = _ds([[1.0, 0.0]], [1.0])
    rep = risk_gradient(ds, [0.0, 0.0], LossSpec.logistic(1.0))
    np.testing.assert_allclose(rep.grad, [-0.5, 0.0], atol=1e-15)
    assert rep.value == pytest.approx(np.log(2.0))


def test_logistic_rejects_non_binary_response():
    ds = _ds([[1.0, 0.0]], [0.5])
    with pytest.raises(DataError):
        empirical_risk(ds, [0.0, 0.0], LossSpec.logistic(1.0))
    with pytest.raises(DataError):
        risk_gradient(ds, [0.0, 0.0], LossSpec.logistic(1.0))


def test_huber_gradient_sup_norm_bound():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = rng.uniform(-1.5, 1.5, size=(25, 5))
        ds = Dataset(x=x, y=100.0 * rng.standard_normal(25), l_bound=1.5)
        rep = risk_gradient(ds, rng.standard_normal(5), HUBER)
        assert rep.grad_inf_norm <= HUBER.clip * 1.5 + 1e-12


def test_huber_equals_quadratic_when_nothing_clips():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((40, 3))
    y = rng.standard_normal(40)
    ds = Dataset(x=x, y=y, l_bound=float(np.max(np.abs(x))))
    theta = 0.1 * rng.standard_normal(3)
    big = LossSpec.huber(k_bound=1000.0, alpha=1.0)
    assert np.max(np.abs(ds.y - ds.x @ theta)) < big.clip
    assert empirical_risk(ds, theta, big) == pytest.approx(empirical_risk(ds, theta, QUAD), abs=1e-14)
    np.testing.assert_allclose(
        risk_gradient(ds, theta, big).grad, risk_gradient(ds, theta, QUAD).grad, atol=1e-14
    )
    np.testing.assert_allclose(empirical_hessian(ds, theta, big), x.T @ x / 40, atol=1e-14)


def test_empirical_hessian_examples():
    ds = _ds([[1.0, 1.0], [1.0, 1.0]], [0.5, -0.5])  # both residuals inside clip
    np.testing.assert_allclose(empirical_hessian(ds, [0.0, 0.0], HUBER), np.ones((2, 2)))
    ds2 = _ds([[1.0, 1.0], [1.0, 1.0]], [10.0, -10.0])  # all outside
    np.testing.assert_allclose(empirical_hessian(ds2, [0.0, 0.0], HUBER), np.zeros((2, 2)))
    ds3 = _ds([[1.0, 1.0], [1.0, 1.0]], [0.5, 10.0])  # one of two inside
    np.testing.assert_allclose(empirical_hessian(ds3, [0.0, 0.0], HUBER), 0.5 * np.ones((2, 2)))


def test_empirical_hessian_psd_and_symmetric():
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = rng.standard_normal((30, 4))
        ds = Dataset(x=x, y=3.0 * rng.standard_normal(30), l_bound=float(np.max(np.abs(x))))
        h = empirical_hessian(ds, rng.standard_normal(4), HUBER)
        np.testing.assert_allclose(h, h.T, atol=1e-14)
        assert np.min(np.linalg.eigvalsh(h)) >= -1e-12


def test_empirical_hessian_rejects_non_huber():
    ds = _ds([[1.0, 0.0]], [1.0])
    with pytest.raises(DataError):
        empirical_hessian(ds, [0.0, 0.0], QUAD)


def test_grad_check_quadratic_and_logistic():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((20, 3))
    ds = Dataset(x=x, y=rng.standard_normal(20), l_bound=float(np.max(np.abs(x))))
    assert grad_check(ds, rng.standard_normal(3), QUAD, h=1e-6) <= 1e-6

    yb = (rng.random(20) < 0.5).astype(float)
    dsb = Dataset(x=x, y=yb, l_bound=ds.l_bound)
    assert grad_check(dsb, 0.3 * rng.standard_normal(3), LossSpec.logistic(1.0), h=1e-6) <= 1e-6


def test_grad_check_huber_away_from_kink():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((20, 3))
    y = rng.standard_normal(20)
    ds = Dataset(x=x, y=y, l_bound=float(np.max(np.abs(x))))
    assert grad_check(ds, np.zeros(3), HUBER, h=1e-6) <= 1e-6


def test_grad_check_rejects_kink():
    ds = _ds([[1.0, 0.0], [0.0, 1.0]], [2.5, 0.0])  # residual exactly at the clip
    with pytest.raises(KinkError):
        grad_check(ds, [0.0, 0.0], HUBER, h=1e-6)
