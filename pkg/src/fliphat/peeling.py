"""Peeling: (epsilon, delta)-DP top-s selection with Laplace noise."""
import math
from dataclasses import dataclass

import numpy as np

from ._math import as_vector
from .exceptions import InvalidArgumentError, UnsupportedBudgetError
from .noise import SeedPath, peeling_noise_scale, sample_laplace


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) pair. ``epsilon = inf`` denotes the non-private sentinel."""

    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 <= self.delta < 1:
            raise InvalidArgumentError(f"delta must lie in [0, 1), got {self.delta}")

    @property
    def is_private(self):
        return not math.isinf(self.epsilon)

    def split(self, parts):
        """Even split over ``parts`` sequential mechanism calls."""
        return PrivacyBudget(self.epsilon / parts, self.delta / parts)


@dataclass(frozen=True)
class PeelResult:
    vector: np.ndarray
    support: np.ndarray
    noise_magnitude: float


def peel(v, s, budget, lam, stream):
    """Noisy top-``s`` selection of ``v`` followed by noisy release on the support.

    Each of the ``s`` rounds draws fresh Lap(xi) noise over all ``d``
    coordinates and picks ``argmax |v_j| + w_ij`` among coordinates not yet
    selected (ties to the lowest index). The released vector is ``v`` on the
    selected support plus a fresh Lap(xi) draw there, with ``xi`` from
    :func:`peeling_noise_scale`. ``lam`` must bound the sup-norm change of
    ``v`` between neighbouring datasets for the (epsilon, delta) guarantee.

    ``noise_magnitude`` records ``sum_i ||w_i||_inf**2 + ||w~_S||_2**2``.
    """
    v = as_vector(v)
    d = v.size
    if not 1 <= s <= d:
        raise InvalidArgumentError(f"s must lie in [1, {d}], got {s}")
    if lam < 0:
        raise InvalidArgumentError("lambda must be nonnegative")
    if lam > 0 and budget.delta <= 0:
        raise UnsupportedBudgetError("Peeling needs delta > 0 when lambda > 0")
    xi = peeling_noise_scale(lam, s, budget)

    score = np.abs(v)
    chosen = np.zeros(d, dtype=bool)
    support = np.empty(s, dtype=np.int64)
    if xi > 0:
        rng = stream.generator() if isinstance(stream, SeedPath) else stream
        w = sample_laplace(xi, rng, s * d).reshape(s, d)
        w_release = sample_laplace(xi, rng, d)
    for i in range(s):
        noisy = score + w[i] if xi > 0 else score.copy()
        noisy[chosen] = -np.inf
        j = int(np.argmax(noisy))
        support[i] = j
        chosen[j] = True
    support.sort()

    out = np.zeros(d)
    out[support] = v[support]
    magnitude = 0.0
    if xi > 0:
        out[support] += w_release[support]
        magnitude = float(np.sum(np.max(np.abs(w), axis=1) ** 2) + np.sum(w_release[support] ** 2))
    return PeelResult(out, support, magnitude)
