import math

import numpy as np
import pytest
from sklearn.base import clone

from fliphat import InvalidArgumentError, NihtConfig, NoisyIHTRegressor, PrivacyBudget, SeedPath, niht_fit, squared_loss_gradient
from fliphat.acceptance import random_neighbours
from fliphat.niht import gradient_sensitivity_bound


def loss(theta, X, y):
    r = y - X @ theta
    return r @ r / (2 * X.shape[0])


def finite_difference_gradient(theta, X, y, h=1e-6):
    g = np.empty_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        g[j] = (loss(theta + e, X, y) - loss(theta - e, X, y)) / (2 * h)
    return g


def cfg(**kw):
    base = dict(sparsity=3, iterations=60, truncation=1e6, noise_base=1.0, step=0.25, radius=3.0,
                budget=PrivacyBudget(1.0, 0.01), non_private=True)
    base.update(kw)
    return NihtConfig(**base)


def test_gradient_hand_example():
    X, y = np.ones((2, 1)), np.array([3.0, 1.0])
    assert finite_difference_gradient(np.zeros(1), X, y) == pytest.approx([-2.0], abs=1e-6)
    assert squared_loss_gradient(np.zeros(1), X, y).tolist() == [-2.0]


def test_gradient_vanishes_at_least_squares(rng):
    X = rng.standard_normal((5, 3))
    y = rng.standard_normal(5)
    theta, *_ = np.linalg.lstsq(X, y, rcond=None)
    assert np.max(np.abs(squared_loss_gradient(theta, X, y))) <= 1e-8
    assert np.array_equal(squared_loss_gradient(theta, X, X @ theta), np.zeros(3)) or \
        np.max(np.abs(squared_loss_gradient(theta, X, X @ theta))) < 1e-15


def test_gradient_matches_finite_differences(rng):
    for _ in range(50):
        n, d = int(rng.integers(1, 21)), int(rng.integers(1, 11))
        X, y, theta = rng.standard_normal((n, d)), rng.standard_normal(n), rng.standard_normal(d)
        g = squared_loss_gradient(theta, X, y)
        fd = finite_difference_gradient(theta, X, y)
        assert np.allclose(g, fd, rtol=1e-5, atol=1e-7)


def test_gradient_dimension_errors():
    with pytest.raises(InvalidArgumentError):
        squared_loss_gradient(np.zeros(2), np.ones((3, 3)), np.zeros(3))
    with pytest.raises(InvalidArgumentError):
        squared_loss_gradient(np.zeros(3), np.ones((3, 3)), np.zeros(2))


def test_zero_update_keeps_zero():
    # step must be positive, so the no-op step comes from a zero gradient
    rep = niht_fit(np.ones((4, 3)), np.zeros(4), cfg(iterations=1), stream=SeedPath(0))
    assert np.array_equal(rep.estimate, np.zeros(3))


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        cfg(iterations=0)
    with pytest.raises(InvalidArgumentError):
        cfg(radius=0.0)
    with pytest.raises(InvalidArgumentError):
        niht_fit(np.ones((4, 3)), np.ones(4), cfg(radius=1.0), init=np.array([1.0, 1.0, 0.0]))
    with pytest.raises(InvalidArgumentError):
        niht_fit(np.ones((4, 3)), np.ones(5), cfg())
    with pytest.raises(InvalidArgumentError):
        niht_fit(np.ones((4, 2)), np.ones(4), cfg())


@pytest.fixture(scope="module")
def noiseless_instance():
    rng = SeedPath(21).child("niht").generator()
    X = rng.standard_normal((500, 20))
    beta = np.zeros(20)
    beta[[2, 9, 15]] = [1.0, -1.0, 1.0]
    return X, X @ beta, beta


def test_noiseless_recovery(noiseless_instance):
    X, y, beta = noiseless_instance
    lam_max = np.linalg.eigvalsh(X.T @ X / X.shape[0])[-1]
    rep = niht_fit(X, y, cfg(step=1 / (2 * lam_max)))
    S = np.flatnonzero(beta)
    oracle = np.zeros(20)
    oracle[S] = np.linalg.lstsq(X[:, S], y, rcond=None)[0]
    assert np.linalg.norm(oracle - beta) < 1e-10
    assert np.linalg.norm(rep.estimate - beta) <= 1e-3
    assert rep.iterations_run == 60 and len(rep.per_iteration_noise) == 60
    assert all(w == 0 for w in rep.per_iteration_noise)


def test_private_is_worse_than_non_private(noiseless_instance):
    X, y, beta = noiseless_instance
    base = cfg(step=0.3, truncation=20.0, noise_base=40.0, iterations=20)
    exact = np.linalg.norm(niht_fit(X, y, base).estimate - beta)
    private = NihtConfig(**{**base.__dict__, "non_private": False})
    errs = [np.linalg.norm(niht_fit(X, y, private, stream=SeedPath(k)).estimate - beta) for k in range(20)]
    assert np.median(errs) >= exact


def test_output_feasible_under_noise(rng):
    for k in range(30):
        n, d = int(rng.integers(5, 60)), int(rng.integers(3, 30))
        X, y = rng.standard_normal((n, d)), rng.standard_normal(n) * 5
        c = NihtConfig(sparsity=int(rng.integers(1, d + 1)), iterations=int(rng.integers(1, 8)), truncation=3.0,
                       noise_base=10.0, step=0.4, radius=float(rng.uniform(0.1, 4)),
                       budget=PrivacyBudget(float(rng.uniform(0.1, 3)), 1e-3))
        est = niht_fit(X, y, c, stream=SeedPath(k)).estimate
        assert np.abs(est).sum() <= c.radius * (1 + 1e-12)
        assert np.count_nonzero(est) <= c.sparsity


def test_deterministic_report(noiseless_instance):
    X, y, _ = noiseless_instance
    c = cfg(non_private=False, iterations=5, truncation=5.0, noise_base=10.0)
    a = niht_fit(X, y, c, stream=SeedPath(3))
    b = niht_fit(X, y, c, stream=SeedPath(3))
    assert np.array_equal(a.estimate, b.estimate) and a.per_iteration_noise == b.per_iteration_noise


def test_budget_split_is_exact():
    c = cfg(non_private=False, iterations=7)
    part = c.iteration_budget()
    assert math.fsum([part.epsilon] * 7) == pytest.approx(1.0, rel=1e-12)
    assert math.fsum([part.delta] * 7) == pytest.approx(0.01, rel=1e-12)


def test_sensitivity_bound_holds():
    rng = SeedPath(77).child("sens").generator()
    for _ in range(1000):
        diff, bound = random_neighbours(rng)
        assert diff <= bound * (1 + 1e-12)
    assert gradient_sensitivity_bound(0.5, 2.0, 3.0, 1.0, 10) == pytest.approx(0.5 * 2 * 2 * 7 / 10)


def test_estimator_api(noiseless_instance):
    X, y, beta = noiseless_instance
    est = NoisyIHTRegressor(sparsity=3, n_iter=60, step_size=0.25, radius=3.0, non_private=True)
    assert clone(est).get_params() == est.get_params()
    est.fit(X, y)
    assert np.linalg.norm(est.coef_ - beta) <= 1e-3
    assert est.predict(X[:5]).shape == (5,)
    assert est.score(X, y) > 0.999
    with pytest.raises(ValueError):
        NoisyIHTRegressor(truncation=5.0).fit(X, y)
    priv = NoisyIHTRegressor(sparsity=3, n_iter=5, step_size=0.25, radius=3.0, truncation=5.0, noise_base=10.0,
                             random_state=4).fit(X, y)
    again = clone(priv).fit(X, y)
    assert np.array_equal(priv.coef_, again.coef_)
    assert len(priv.noise_per_iter_) == 5
