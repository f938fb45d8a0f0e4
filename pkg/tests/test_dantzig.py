import numpy as np
import pytest

from conftest import hadamard_dataset, orthonormal_dataset, rademacher_dataset
from dantzigsel.core import BoxPolicy, DataError, Dataset, LossSpec
from dantzigsel.dantzig import (
    InfeasibleBoxError,
    brute_force_dantzig,
    fit_dantzig_huber,
    fit_dantzig_quadratic,
    fit_lasso_huber,
    pattern_of,
    threshold_estimator,
)
from dantzigsel.losses import risk_gradient

HUBER = LossSpec.huber(1.0, 0.5)
QUAD = LossSpec.quadratic()


def soft(z, r):
    return np.sign(z) * np.maximum(np.abs(z) - r, 0.0)


def test_quadratic_orthonormal_soft_threshold():
    ds = orthonormal_dataset(32, 3, [1.0, -0.3, 0.05], seed=0)
    fit = fit_dantzig_quadratic(ds, 0.2)
    np.testing.assert_allclose(fit.theta.theta, [0.8, -0.1, 0.0], atol=1e-9)
    assert fit.grad_inf_norm <= 0.2 + 1e-7


def test_quadratic_zero_when_r_dominates():
    ds = orthonormal_dataset(32, 3, [0.1, -0.05, 0.02], seed=1)
    fit = fit_dantzig_quadratic(ds, 0.5)
    np.testing.assert_allclose(fit.theta.theta, 0.0, atol=1e-12)


def test_quadratic_random_orthonormal_closed_form():
    rng = np.random.default_rng(2)
    for trial in range(20):
        m = int(rng.integers(2, 7))
        z = rng.uniform(-1.5, 1.5, size=m)
        r = float(rng.uniform(0.05, 0.8))
        ds = orthonormal_dataset(4 * m + 8, m, z, seed=100 + trial)
        fit = fit_dantzig_quadratic(ds, r)
        np.testing.assert_allclose(fit.theta.theta, soft(z, r), atol=1e-7)


def test_quadratic_infeasible_box_named():
    ds = orthonormal_dataset(32, 3, [5.0, 0.0, 0.0], seed=3)
    with pytest.raises(InfeasibleBoxError) as err:
        fit_dantzig_quadratic(ds, 0.01, box=BoxPolicy.sample_sup(0.01))
    assert "sample" in str(err.value)


def test_huber_hand_instance_zero():
    # single clipped observation: gradient at 0 is -2.5 per column, inside r=3
    ds = Dataset(x=np.array([[1.0, 1.0]]), y=np.array([10.0]), l_bound=1.0)
    fit = fit_dantzig_huber(ds, 3.0, HUBER)
    np.testing.assert_allclose(fit.theta.theta, 0.0, atol=1e-12)
    assert fit.grad_inf_norm == pytest.approx(2.5)


def test_huber_equals_quadratic_when_nothing_clips():
    rng = np.random.default_rng(4)
    for trial in range(10):
        m = int(rng.integers(2, 6))
        theta_star = rng.uniform(-1, 1, size=m) * (rng.random(m) < 0.6)
        ds = rademacher_dataset(60, m, theta_star, seed=200 + trial, noise=0.3)
        big = LossSpec.huber(k_bound=500.0, alpha=1.0)
        r = float(rng.uniform(0.05, 0.3))
        fq = fit_dantzig_quadratic(ds, r)
        fh = fit_dantzig_huber(ds, r, big)
        np.testing.assert_allclose(fh.theta.theta, fq.theta.theta, atol=1e-6)


def test_huber_feasibility_invariant():
    rng = np.random.default_rng(5)
    for trial in range(10):
        theta_star = np.zeros(5)
        theta_star[:2] = [0.8, -0.6]
        ds = rademacher_dataset(80, 5, theta_star, seed=300 + trial, noise=1.0)
        r = float(rng.uniform(0.1, 0.5))
        fit = fit_dantzig_huber(ds, r, HUBER)
        if fit.status != "best_effort":
            assert fit.grad_inf_norm <= r + 1e-7
        # returned value always certified against the true gradient
        rep = risk_gradient(ds, fit.theta, HUBER)
        assert rep.grad_inf_norm == pytest.approx(fit.grad_inf_norm, abs=1e-12)


def test_pattern_of_closed_interior():
    ds = Dataset(x=np.array([[1.0, 0.0]]), y=np.array([2.5]), l_bound=1.0)
    assert pattern_of(ds, [0.0, 0.0], 2.5)[0] == 0  # boundary counts as interior
    assert pattern_of(ds, [-0.1, 0.0], 2.5)[0] == 1  # residual 2.6 clips high
    ds_low = Dataset(x=np.array([[1.0, 0.0]]), y=np.array([-2.5]), l_bound=1.0)
    assert pattern_of(ds_low, [0.1, 0.0], 2.5)[0] == -1  # residual -2.6 clips low


def test_lasso_orthonormal_closed_form():
    ds = orthonormal_dataset(32, 3, [1.0, -0.3, 0.05], seed=6)
    theta = fit_lasso_huber(ds, 0.2, QUAD)
    np.testing.assert_allclose(theta.theta, [0.8, -0.1, 0.0], atol=1e-8)


def test_lasso_zero_when_r_dominates():
    ds = orthonormal_dataset(32, 3, [0.1, -0.05, 0.02], seed=7)
    g0 = risk_gradient(ds, np.zeros(3), HUBER).grad_inf_norm
    theta = fit_lasso_huber(ds, g0 + 0.01, HUBER)
    np.testing.assert_allclose(theta.theta, 0.0, atol=1e-12)


def test_lasso_noiseless_huber_recovery():
    theta_star = np.array([1.0, -0.8, 0.0, 0.0, 0.5])
    ds = rademacher_dataset(120, 5, theta_star, seed=8, noise=0.0)
    loss = LossSpec.huber(2.5, 0.5)
    r = 0.02
    theta = fit_lasso_huber(ds, r, loss)
    assert np.max(np.abs(theta.theta - theta_star)) <= 10 * r


def test_lasso_rejects_logistic():
    ds = orthonormal_dataset(16, 2, [0.5, 0.5], seed=9)
    with pytest.raises(DataError):
        fit_lasso_huber(ds, 0.1, LossSpec.logistic(1.0))


def test_dantzig_l1_no_larger_than_feasible_lasso():
    rng = np.random.default_rng(10)
    for trial in range(8):
        theta_star = np.zeros(4)
        theta_star[:2] = rng.uniform(-1, 1, size=2)
        ds = rademacher_dataset(60, 4, theta_star, seed=400 + trial, noise=0.4)
        r = float(rng.uniform(0.1, 0.4))
        lasso = fit_lasso_huber(ds, r, HUBER)
        if risk_gradient(ds, lasso, HUBER).grad_inf_norm <= r:  # lasso is Dantzig-feasible
            fit = fit_dantzig_huber(ds, r, HUBER)
            assert fit.l1_norm <= lasso.norms()["l1"] + 1e-6


def test_brute_force_examples():
    # unit-bound orthonormal design, so the oracle's step*L slack equals the grid step
    ds = hadamard_dataset(16, [0.5, 0.1])
    pt = brute_force_dantzig(ds, 0.2, QUAD, -1.0, 1.0, 0.01)
    np.testing.assert_allclose(pt.theta, [0.3, 0.0], atol=0.0100001)

    pt2 = brute_force_dantzig(ds, 5.0, QUAD, -1.0, 1.0, 0.05)
    np.testing.assert_allclose(pt2.theta, 0.0, atol=1e-12)

    ds3 = Dataset(x=np.array([[1.0, 1.0]]), y=np.array([10.0]), l_bound=1.0)
    pt3 = brute_force_dantzig(ds3, 3.0, HUBER, -1.0, 1.0, 0.05)
    np.testing.assert_allclose(pt3.theta, 0.0, atol=1e-12)


def test_brute_force_caps():
    ds = orthonormal_dataset(16, 2, [0.5, 0.1], seed=12)
    with pytest.raises(DataError):
        brute_force_dantzig(ds, 0.2, QUAD, -10.0, 10.0, 1e-4)


def test_solver_vs_grid_oracle_small():
    rng = np.random.default_rng(13)
    step = 0.01
    for trial in range(6):
        theta_star = rng.uniform(-0.7, 0.7, size=2)
        ds = rademacher_dataset(40, 2, theta_star, seed=500 + trial, noise=0.3)
        r = float(rng.uniform(0.08, 0.3))
        loss = HUBER if trial % 2 else QUAD
        if loss.kind == "huber":
            fit = fit_dantzig_huber(ds, r, loss)
        else:
            fit = fit_dantzig_quadratic(ds, r)
        oracle = brute_force_dantzig(ds, r, loss, -2.0, 2.0, step)
        assert abs(fit.l1_norm - np.sum(np.abs(oracle.theta))) <= 2 * step * 2
        assert risk_gradient(ds, fit.theta, loss).grad_inf_norm <= r + 1e-7


def test_dominance_inequality_on_feasible_instances():
    # |Delta_offsupport|_1 <= |Delta_support|_1 whenever theta* is feasible
    rng = np.random.default_rng(14)
    checked = 0
    for trial in range(12):
        theta_star = np.zeros(6)
        theta_star[[0, 3]] = [1.0, -0.7]
        ds = rademacher_dataset(100, 6, theta_star, seed=600 + trial, noise=0.3)
        r = 0.35
        if risk_gradient(ds, theta_star, HUBER).grad_inf_norm > r:
            continue
        fit = fit_dantzig_huber(ds, r, HUBER)
        delta = fit.theta.theta - theta_star
        on = theta_star != 0
        assert np.sum(np.abs(delta[~on])) <= np.sum(np.abs(delta[on])) + 1e-6
        checked += 1
    assert checked >= 6


def test_threshold_examples():
    t = threshold_estimator([0.5, -0.01, 0.3], 0.1)
    np.testing.assert_allclose(t.theta, [0.5, 0.0, 0.3])
    t2 = threshold_estimator([0.5, -0.2, 0.3], 0.05)
    np.testing.assert_allclose(t2.theta, [0.5, -0.2, 0.3])
    t3 = threshold_estimator([0.5, -0.2, 0.3], 0.5)
    np.testing.assert_allclose(t3.theta, 0.0)


def test_threshold_idempotent():
    rng = np.random.default_rng(15)
    for _ in range(20):
        theta = rng.standard_normal(8)
        tau = float(rng.uniform(0.05, 1.0))
        once = threshold_estimator(theta, tau)
        twice = threshold_estimator(once, tau)
        np.testing.assert_array_equal(once.theta, twice.theta)


def test_l1_surrogate_box_binds():
    ds = orthonormal_dataset(32, 3, [5.0, 0.0, 0.0], seed=16)
    with pytest.raises(InfeasibleBoxError) as err:
        fit_dantzig_quadratic(ds, 0.01, box=BoxPolicy.l1_surrogate(0.01))
    assert "l1" in str(err.value)
