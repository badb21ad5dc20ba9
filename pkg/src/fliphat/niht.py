"""Noisy iterative hard thresholding (N-IHT): a DP sparse least-squares oracle.

Each of the ``M`` iterations takes a gradient step on the clipped-response
loss ``L(theta) = ||clip_R(y) - X theta||^2 / (2n)``, privately selects the top
``s`` coordinates with :func:`~fliphat.peeling.peel` at budget
``(epsilon/M, delta/M)`` and sensitivity ``eta*B/n``, and projects the result
onto the L1 ball of radius ``C``.
"""
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._math import as_design, as_vector, clip_vector, project_l1
from .exceptions import InvalidArgumentError
from .noise import as_seed_path
from .peeling import PrivacyBudget, peel


@dataclass(frozen=True)
class NihtConfig:
    """Tuning of one N-IHT fit.

    ``noise_base`` is B; the mechanism runs Peeling with
    ``lambda = step * noise_base / n``. ``non_private`` forces lambda = 0
    (exact hard thresholding, no noise, no randomness consumed).
    """

    sparsity: int
    iterations: int
    truncation: float
    noise_base: float
    step: float
    radius: float
    budget: PrivacyBudget
    non_private: bool = False

    def __post_init__(self):
        if self.sparsity < 1:
            raise InvalidArgumentError("sparsity must be at least 1")
        if self.iterations < 1:
            raise InvalidArgumentError("iterations must be at least 1")
        if self.truncation < 0 or self.noise_base < 0:
            raise InvalidArgumentError("truncation and noise_base must be nonnegative")
        if not self.step > 0:
            raise InvalidArgumentError("step must be positive")
        if not self.radius > 0:
            raise InvalidArgumentError("radius must be positive")

    @property
    def private(self):
        return not self.non_private and self.budget.is_private

    def peel_lambda(self, n):
        return self.step * self.noise_base / n if self.private else 0.0

    def iteration_budget(self):
        return self.budget.split(self.iterations)


@dataclass(frozen=True)
class NihtFitReport:
    estimate: np.ndarray
    per_iteration_noise: tuple
    iterations_run: int


def squared_loss_gradient(theta, X, y_clipped):
    """``X^T (X theta - y) / n``, the gradient of ``||y - X theta||^2 / (2n)``."""
    X = np.asarray(X, dtype=float)
    theta = np.asarray(theta, dtype=float)
    y_clipped = np.asarray(y_clipped, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidArgumentError("X must be a 2-D array with at least one row")
    if theta.shape != (X.shape[1],):
        raise InvalidArgumentError(f"theta has shape {theta.shape}, expected ({X.shape[1]},)")
    if y_clipped.shape != (X.shape[0],):
        raise InvalidArgumentError(f"y has shape {y_clipped.shape}, expected ({X.shape[0]},)")
    return X.T @ (X @ theta - y_clipped) / X.shape[0]


def gradient_sensitivity_bound(step, x_max, b_max, truncation, n):
    """Provable sup-norm change of ``step * grad L`` when one row is replaced.

    ``step * 2 * x_max * (x_max * b_max + R) / n`` for rows with
    ``||x||_inf <= x_max``, responses clipped at ``R`` and ``||theta||_1 <= b_max``.
    """
    return step * 2.0 * x_max * (x_max * b_max + truncation) / n


def niht_fit(X, y, cfg, init=None, stream=None):
    """Run ``cfg.iterations`` N-IHT iterations on ``(X, y)``.

    Iteration ``m`` draws its Peeling noise from ``stream.child("iter", m)``,
    so the fit is a pure function of its arguments.
    """
    X = as_design(X)
    y = as_vector(y, "y")
    n, d = X.shape
    if n < 1:
        raise InvalidArgumentError("N-IHT needs at least one observation")
    if y.size != n:
        raise InvalidArgumentError(f"y has {y.size} entries for {n} rows")
    if cfg.sparsity > d:
        raise InvalidArgumentError(f"sparsity {cfg.sparsity} exceeds dimension {d}")
    theta = np.zeros(d) if init is None else as_vector(init, "init").copy()
    if theta.size != d:
        raise InvalidArgumentError(f"init has {theta.size} entries, expected {d}")
    if np.abs(theta).sum() > cfg.radius:
        raise InvalidArgumentError("init lies outside the L1 ball of radius C")

    yc = clip_vector(y, cfg.truncation)
    lam = cfg.peel_lambda(n)
    budget = cfg.iteration_budget()
    stream = as_seed_path(stream) if lam > 0 else None
    # forming X^T X / n costs n*d^2 against 2*n*d per iteration
    use_gram = d < 2 * cfg.iterations
    if use_gram:
        gram = X.T @ X / n
        xty = X.T @ yc / n
    noise = []
    for m in range(cfg.iterations):
        grad = gram @ theta - xty if use_gram else squared_loss_gradient(theta, X, yc)
        half = theta - cfg.step * grad
        res = peel(half, cfg.sparsity, budget, lam, stream.child("iter", m) if lam > 0 else None)
        theta = project_l1(res.vector, cfg.radius)
        noise.append(res.noise_magnitude)
    return NihtFitReport(theta, tuple(noise), cfg.iterations)


class NoisyIHTRegressor(RegressorMixin, BaseEstimator):
    """Differentially private sparse linear regression via N-IHT.

    Parameters
    ----------
    sparsity : int
        Number of coordinates kept by each hard-thresholding step.
    n_iter : int
        Number of N-IHT iterations ``M``; the budget is split evenly over them.
    step_size : float
        Gradient step ``eta``.
    radius : float
        L1 projection radius ``C``.
    truncation : float
        Responses are clipped to ``[-truncation, truncation]``.
    noise_base : float or None
        Sensitivity base ``B``; required unless ``non_private``.
    epsilon, delta : float
        Total privacy budget of one fit.
    non_private : bool
        Run exact IHT (no noise).
    random_state : int, SeedPath or None
        Source of the Peeling noise.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    noise_per_iter_ : tuple of float
        Realized Peeling noise totals, one per iteration.
    n_iter_ : int
    """

    def __init__(self, sparsity=10, n_iter=50, step_size=0.5, radius=1.0, truncation=np.inf,
                 noise_base=None, epsilon=1.0, delta=1e-2, non_private=False, random_state=None):
        self.sparsity = sparsity
        self.n_iter = n_iter
        self.step_size = step_size
        self.radius = radius
        self.truncation = truncation
        self.noise_base = noise_base
        self.epsilon = epsilon
        self.delta = delta
        self.non_private = non_private
        self.random_state = random_state

    def _config(self):
        private = not self.non_private and not math.isinf(self.epsilon)
        if private and self.noise_base is None:
            raise ValueError("noise_base must be set for a private fit")
        if private and math.isinf(self.truncation):
            raise ValueError("a private fit needs a finite truncation level")
        return NihtConfig(
            sparsity=self.sparsity,
            iterations=self.n_iter,
            truncation=self.truncation,
            noise_base=0.0 if self.noise_base is None else self.noise_base,
            step=self.step_size,
            radius=self.radius,
            budget=PrivacyBudget(self.epsilon, self.delta),
            non_private=not private,
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        report = niht_fit(X, y, self._config(), stream=self.random_state)
        self.coef_ = report.estimate
        self.noise_per_iter_ = report.per_iteration_noise
        self.n_iter_ = report.iterations_run
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_
