"""FLIPHAT: episodic, forgetful private hard-thresholding policy.

Episode ``l`` covers time steps ``[2**l, 2**(l+1))``. Episode 0 is a single
uniformly random pull. At the start of every later episode the estimate is
refit by N-IHT on the previous episode's data only, after which that data is
discarded; within an episode actions are greedy in the fixed estimate.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, check_X_y

from ._math import as_vector
from .env import sample_slates
from .exceptions import InvalidArgumentError
from .ledger import LedgerEntry, PrivacyLedger
from .niht import NihtConfig, niht_fit
from .noise import as_seed_path
from .peeling import PrivacyBudget

_CHUNK = 512


def episode_of(t):
    """Episode index ``l`` with ``2**l <= t < 2**(l+1)``."""
    if t < 1:
        raise InvalidArgumentError(f"time steps start at 1, got {t}")
    return int(t).bit_length() - 1


@dataclass(frozen=True)
class FliphatConfig:
    """Tuning of FLIPHAT.

    ``None`` entries are filled by :meth:`resolve` from the bandit instance:
    ``kappa_bar = max(1, ln K)``, ``kappa_under = 1/K``,
    ``step = 1/(2 kappa_bar)``, ``radius = b_max`` and ``sigma_hint`` = the
    true reward noise level. ``sensitivity`` selects the Peeling lambda:
    ``"literal"`` uses ``B = R + x_max b_max``; ``"provable"`` uses
    ``B = 2 x_max (x_max b_max + R)``, which bounds the one-row change of the
    gradient step for any ``x_max``.
    """

    sparsity: int = 10
    budget: PrivacyBudget = PrivacyBudget(1.0, 1e-2)
    step: float = None
    radius: float = None
    kappa_bar: float = None
    kappa_under: float = None
    max_iterations: int = 50
    sigma_hint: float = None
    non_private: bool = False
    sensitivity: str = "literal"

    def __post_init__(self):
        if self.sparsity < 1:
            raise InvalidArgumentError("sparsity must be at least 1")
        if self.max_iterations < 1:
            raise InvalidArgumentError("max_iterations must be at least 1")
        if self.sensitivity not in ("literal", "provable"):
            raise InvalidArgumentError(f"unknown sensitivity rule {self.sensitivity!r}")
        for name in ("step", "radius", "kappa_bar", "kappa_under"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise InvalidArgumentError(f"{name} must be positive")
        if self.kappa_bar is not None and self.kappa_under is not None and self.kappa < 1:
            raise InvalidArgumentError("kappa_bar / kappa_under must be at least 1")

    @property
    def kappa(self):
        return self.kappa_bar / self.kappa_under

    @property
    def private(self):
        return not self.non_private and self.budget.is_private

    def resolve(self, K, b_max, noise_sigma):
        kappa_bar = self.kappa_bar if self.kappa_bar is not None else max(1.0, math.log(K))
        return replace(
            self,
            kappa_bar=kappa_bar,
            kappa_under=self.kappa_under if self.kappa_under is not None else 1.0 / K,
            step=self.step if self.step is not None else 1.0 / (2.0 * kappa_bar),
            radius=self.radius if self.radius is not None else b_max,
            sigma_hint=self.sigma_hint if self.sigma_hint is not None else noise_sigma,
        )


def iteration_count(kappa, b_max, n, max_iterations):
    """``min(M_max, ceil(28 kappa ln(max(e, b_max^2 n))))``; also whether the cap bound."""
    wanted = math.ceil(28.0 * kappa * math.log(max(math.e, b_max * b_max * n)))
    return min(max_iterations, wanted), wanted > max_iterations


def schedule_params(episode, cfg, x_max, b_max):
    """N-IHT tuning for the refit that opens ``episode`` (>= 1).

    The refit reads episode ``episode - 1``, of size ``N = 2**(episode-1)``:
    ``R = x_max b_max + sigma sqrt(2 ln N)``, ``B = R + x_max b_max`` and
    ``M = min(M_max, ceil(28 kappa ln(max(e, b_max^2 N))))``.
    """
    if episode < 1:
        raise InvalidArgumentError("episode 0 has no refit")
    if None in (cfg.step, cfg.radius, cfg.kappa_bar, cfg.kappa_under, cfg.sigma_hint):
        raise InvalidArgumentError("config must be resolved against an instance first")
    n_prev = 2 ** (episode - 1)
    R = x_max * b_max + cfg.sigma_hint * math.sqrt(2.0 * math.log(n_prev))
    if cfg.sensitivity == "literal":
        B = R + x_max * b_max
    else:
        B = 2.0 * x_max * (x_max * b_max + R)
    M, _ = iteration_count(cfg.kappa, b_max, n_prev, cfg.max_iterations)
    return NihtConfig(
        sparsity=cfg.sparsity,
        iterations=M,
        truncation=R,
        noise_base=B,
        step=cfg.step,
        radius=cfg.radius,
        budget=cfg.budget,
        non_private=not cfg.private,
    )


def select_action(slate, beta_hat):
    """Greedy arm ``argmax_a <x_a, beta_hat>``, lowest index on ties."""
    slate = np.asarray(slate, dtype=float)
    beta_hat = np.asarray(beta_hat, dtype=float)
    if slate.ndim != 2 or slate.shape[1] != beta_hat.size:
        raise InvalidArgumentError("slate and beta_hat dimensions disagree")
    return int(np.argmax(slate @ beta_hat))


@dataclass
class RegretTrace:
    """Outcome of one FLIPHAT run; time steps are 1-based, arrays 0-based."""

    per_step_regret: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    episode_starts: list
    estimates: dict = field(default_factory=dict)
    episode_noise: dict = field(default_factory=dict)
    iterations: dict = field(default_factory=dict)
    cap_hit: dict = field(default_factory=dict)
    ledger: PrivacyLedger = None
    slates: np.ndarray = None

    @property
    def cumulative(self):
        return np.cumsum(self.per_step_regret)

    @property
    def final_regret(self):
        return float(self.per_step_regret.sum())

    @property
    def horizon(self):
        return self.per_step_regret.size


def run_fliphat(inst, cfg, T, stream, env_stream=None, reward_overrides=None, keep_slates=False):
    """Play FLIPHAT on ``inst`` for ``T`` steps.

    Policy randomness (the first random arm and all Peeling noise) comes from
    ``stream``; contexts and reward noise come from ``env_stream`` (default:
    ``stream``), per episode, so runs that share ``env_stream`` see the same
    environment. ``reward_overrides`` maps a time step to the reward stored
    for it in place of the observed one, which is how neighbouring datasets
    are replayed.
    """
    if T < 1:
        raise InvalidArgumentError("horizon T must be at least 1")
    stream = as_seed_path(stream)
    env_stream = stream if env_stream is None else as_seed_path(env_stream)
    overrides = dict(reward_overrides or {})
    cfg = cfg.resolve(inst.K, inst.b_max, inst.noise_sigma)
    if cfg.sparsity > inst.d:
        raise InvalidArgumentError(f"sparsity {cfg.sparsity} exceeds dimension {inst.d}")

    regret = np.empty(T)
    actions = np.empty(T, dtype=np.int64)
    rewards = np.empty(T)
    slates_log = np.empty((T, inst.K, inst.d)) if keep_slates else None
    trace = RegretTrace(regret, actions, rewards, [], ledger=PrivacyLedger(), slates=slates_log)

    X_prev = y_prev = None
    n_episodes = episode_of(T) + 1
    for ell in range(n_episodes):
        start = 2**ell
        stop = min(2 ** (ell + 1), T + 1)
        trace.episode_starts.append(start)
        if ell == 0:
            beta_hat = None
        else:
            ncfg = schedule_params(ell, cfg, inst.x_max, inst.b_max)
            report = niht_fit(X_prev, y_prev, ncfg, stream=stream.child("refit", ell))
            beta_hat = report.estimate
            trace.estimates[ell] = beta_hat
            trace.episode_noise[ell] = float(sum(report.per_iteration_noise))
            trace.iterations[ell] = ncfg.iterations
            trace.cap_hit[ell] = iteration_count(cfg.kappa, inst.b_max, len(y_prev), cfg.max_iterations)[1]
            trace.ledger.record(LedgerEntry(
                f"niht[{ell}]", 2 ** (ell - 1), 2**ell,
                ncfg.budget.epsilon if ncfg.private else math.inf,
                ncfg.budget.delta if ncfg.private else 0.0,
                ncfg.iterations,
            ))
        # forgetting: the previous episode's data is released after the refit
        X_cur = np.empty((stop - start, inst.d))
        y_cur = np.empty(stop - start)
        ctx_rng = env_stream.child("contexts", ell).generator()
        noise_rng = env_stream.child("rewards", ell).generator()
        for lo in range(start, stop, _CHUNK):
            hi = min(lo + _CHUNK, stop)
            slates = sample_slates(inst, ctx_rng, hi - lo)
            if beta_hat is None:
                arms = stream.child("explore").generator().integers(inst.K, size=hi - lo)
            else:
                arms = np.argmax(slates @ beta_hat, axis=1)
            means = slates @ inst.beta_star
            chosen = slates[np.arange(hi - lo), arms]
            noise = inst.noise_sigma * noise_rng.standard_normal(hi - lo)
            obs = means[np.arange(hi - lo), arms] + noise
            sl = slice(lo - 1, hi - 1)
            regret[sl] = means.max(axis=1) - means[np.arange(hi - lo), arms]
            actions[sl] = arms
            rewards[sl] = obs
            if keep_slates:
                slates_log[sl] = slates
            X_cur[lo - start:hi - start] = chosen
            y_cur[lo - start:hi - start] = obs
        for t, r in overrides.items():
            if start <= t < stop:
                y_cur[t - start] = r
        X_prev, y_prev = X_cur, y_cur
    trace.ledger.finalize()
    return trace


class FliphatPolicy(BaseEstimator):
    """Estimator-style FLIPHAT agent.

    ``fit(X, y)`` performs the private refit on one completed episode (the
    episode index is ``log2(len(y)) + 1`` unless given) and ``predict(slates)``
    returns greedy arms for an array of shape ``(n, K, d)`` or ``(K, d)``.
    """

    def __init__(self, x_max, b_max, sparsity=10, epsilon=1.0, delta=1e-2, step_size=None,
                 radius=None, kappa_bar=None, kappa_under=None, max_iter=50, sigma_hint=0.0,
                 n_arms=2, non_private=False, sensitivity="literal", random_state=None):
        self.x_max = x_max
        self.b_max = b_max
        self.sparsity = sparsity
        self.epsilon = epsilon
        self.delta = delta
        self.step_size = step_size
        self.radius = radius
        self.kappa_bar = kappa_bar
        self.kappa_under = kappa_under
        self.max_iter = max_iter
        self.sigma_hint = sigma_hint
        self.n_arms = n_arms
        self.non_private = non_private
        self.sensitivity = sensitivity
        self.random_state = random_state

    def config(self):
        return FliphatConfig(
            sparsity=self.sparsity,
            budget=PrivacyBudget(self.epsilon, self.delta),
            step=self.step_size,
            radius=self.radius,
            kappa_bar=self.kappa_bar,
            kappa_under=self.kappa_under,
            max_iterations=self.max_iter,
            sigma_hint=self.sigma_hint,
            non_private=self.non_private,
            sensitivity=self.sensitivity,
        ).resolve(self.n_arms, self.b_max, self.sigma_hint)

    def fit(self, X, y, episode=None):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        if episode is None:
            n = len(y)
            if n & (n - 1):
                raise ValueError(f"cannot infer the episode from {n} samples; pass episode=")
            episode = n.bit_length()
        ncfg = schedule_params(episode, self.config(), self.x_max, self.b_max)
        stream = as_seed_path(self.random_state).child("refit", episode)
        report = niht_fit(X, y, ncfg, stream=stream if ncfg.private else None)
        self.coef_ = report.estimate
        self.episode_ = episode
        self.niht_config_ = ncfg
        self.noise_per_iter_ = report.per_iteration_noise
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, slates):
        check_is_fitted(self, "coef_")
        slates = np.asarray(slates, dtype=float)
        single = slates.ndim == 2
        if single:
            slates = slates[None]
        if slates.ndim != 3 or slates.shape[2] != self.n_features_in_:
            raise ValueError(f"slates must have shape (n, K, {self.n_features_in_})")
        arms = np.argmax(slates @ as_vector(self.coef_), axis=1)
        return int(arms[0]) if single else arms
