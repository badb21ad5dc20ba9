"""Sparse linear contextual bandit simulator with an AR(1) Gaussian design."""
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ._math import as_vector
from .exceptions import InvalidArgumentError
from .noise import SeedPath, sample_gaussian

DEFAULT_NOISE_SIGMA = math.sqrt(0.1)


@dataclass(frozen=True, eq=False)
class BanditInstance:
    """Ground truth of one bandit problem.

    Contexts for each arm are iid N(0, Sigma) with ``Sigma_ij = ar_phi**|i-j|``,
    clamped coordinate-wise to ``[-x_max, x_max]``. Rewards are
    ``<x, beta_star> + N(0, noise_sigma**2)``.
    """

    K: int
    beta_star: np.ndarray
    x_max: float = 10.0
    b_max: float = None
    ar_phi: float = 0.3
    noise_sigma: float = DEFAULT_NOISE_SIGMA

    def __post_init__(self):
        beta = as_vector(self.beta_star, "beta_star")
        beta.setflags(write=False)
        object.__setattr__(self, "beta_star", beta)
        if self.K < 2:
            raise InvalidArgumentError("a bandit needs at least two arms")
        if not self.x_max > 0:
            raise InvalidArgumentError("x_max must be positive")
        if not -1 < self.ar_phi < 1:
            raise InvalidArgumentError("ar_phi must lie in (-1, 1)")
        if self.noise_sigma < 0:
            raise InvalidArgumentError("noise_sigma must be nonnegative")
        l1 = float(np.abs(beta).sum())
        if self.b_max is None:
            object.__setattr__(self, "b_max", l1)
        elif l1 > self.b_max:
            raise InvalidArgumentError(f"||beta_star||_1 = {l1} exceeds b_max = {self.b_max}")

    @property
    def d(self):
        return self.beta_star.size

    @property
    def s_star(self):
        return int(np.count_nonzero(self.beta_star))


@dataclass(frozen=True)
class StepOutcome:
    chosen_arm: int
    reward: float
    instant_regret: float


def make_beta_star(d, s_star, magnitude, stream):
    """``s_star`` entries of ``+-magnitude`` on uniformly random positions."""
    if not 1 <= s_star <= d:
        raise InvalidArgumentError(f"s_star must lie in [1, {d}], got {s_star}")
    if not magnitude > 0:
        raise InvalidArgumentError("magnitude must be positive")
    rng = stream.generator() if isinstance(stream, SeedPath) else stream
    pos = rng.choice(d, size=s_star, replace=False)
    signs = rng.choice([-1.0, 1.0], size=s_star)
    beta = np.zeros(d)
    beta[pos] = signs * magnitude
    return beta


def make_instance(K, d, s_star, stream, magnitude=None, x_max=10.0, ar_phi=0.3,
                  noise_sigma=DEFAULT_NOISE_SIGMA):
    """Random instance with ``b_max = ||beta_star||_1``.

    ``magnitude`` defaults to ``1/sqrt(s_star)`` so that ``||beta_star||_2 = 1``.
    A zero ``magnitude`` gives the null instance ``beta_star = 0`` with
    ``b_max = 1``, since the policy needs a positive L1 radius.
    """
    if magnitude is None:
        magnitude = 1.0 / math.sqrt(s_star)
    if magnitude == 0:
        return BanditInstance(K=K, beta_star=np.zeros(d), x_max=x_max, ar_phi=ar_phi, noise_sigma=noise_sigma,
                              b_max=1.0)
    beta = make_beta_star(d, s_star, magnitude, stream)
    return BanditInstance(K=K, beta_star=beta, x_max=x_max, ar_phi=ar_phi, noise_sigma=noise_sigma)


def sample_slates(inst, stream, count):
    """``count`` context slates, shape ``(count, K, d)``.

    Each context follows ``z_1 = g_1``, ``z_j = phi z_{j-1} + sqrt(1-phi^2) g_j``
    and is then clamped to ``[-x_max, x_max]``.
    """
    rng = stream.generator() if isinstance(stream, SeedPath) else stream
    g = rng.standard_normal((count, inst.K, inst.d))
    phi = inst.ar_phi
    if phi != 0:
        c = math.sqrt(1.0 - phi * phi)
        g[..., 0] /= c
        g = lfilter([c], [1.0, -phi], g, axis=-1)
    np.clip(g, -inst.x_max, inst.x_max, out=g)
    return g


def sample_slate(inst, stream):
    return sample_slates(inst, stream, 1)[0]


def pull(inst, slate, arm, stream):
    """Play ``arm`` on ``slate``; regret is measured on noiseless rewards."""
    slate = np.asarray(slate, dtype=float)
    if not 0 <= arm < inst.K:
        raise InvalidArgumentError(f"arm must lie in [0, {inst.K}), got {arm}")
    means = slate @ inst.beta_star
    noise = sample_gaussian(0.0, inst.noise_sigma, stream, 1)[0]
    return StepOutcome(int(arm), float(means[arm] + noise), float(means.max() - means[arm]))
