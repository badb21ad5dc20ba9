"""Hierarchically seeded random streams and the Laplace/Gaussian samplers.

A :class:`SeedPath` names a stream by a root seed plus a path of
``(label, index)`` pairs. The path is folded into a
:class:`numpy.random.SeedSequence` spawn key and drives a Philox
(counter-based) generator, so every (repetition, episode, iteration) gets its
own reproducible substream without sharing mutable state.
"""
import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError, UnsupportedBudgetError

_UINT64 = (1 << 64) - 1


def _label_key(label):
    return int.from_bytes(hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest(), "little")


def float_index(x):
    """Map a float to a uint64 index (its IEEE-754 bit pattern); injective."""
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


@dataclass(frozen=True)
class SeedPath:
    root_seed: int
    path: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.root_seed) <= _UINT64:
            raise InvalidArgumentError("root_seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "path", tuple((str(l), int(i)) for l, i in self.path))

    def child(self, label, index=0):
        if index < 0:
            raise InvalidArgumentError("stream index must be nonnegative")
        return SeedPath(self.root_seed, self.path + ((label, int(index)),))

    def generator(self):
        key = []
        for label, index in self.path:
            key.extend((_label_key(label), index))
        ss = np.random.SeedSequence(entropy=int(self.root_seed), spawn_key=tuple(key))
        return np.random.Generator(np.random.Philox(ss))

    def __str__(self):
        return "/".join([str(self.root_seed)] + [f"{l}:{i}" for l, i in self.path])


def as_seed_path(stream):
    """Accept a SeedPath, an int root seed, or None (fresh OS entropy)."""
    if isinstance(stream, SeedPath):
        return stream
    if stream is None:
        return SeedPath(np.random.SeedSequence().entropy & _UINT64)
    if isinstance(stream, (int, np.integer)):
        return SeedPath(int(stream))
    raise InvalidArgumentError(f"cannot build a random stream from {stream!r}")


def peeling_noise_scale(lam, s, budget):
    """Laplace scale ``lam * 2 * sqrt(3 s ln(1/delta)) / epsilon`` for Peeling."""
    if lam < 0:
        raise InvalidArgumentError("lambda must be nonnegative")
    if s < 1:
        raise InvalidArgumentError("s must be at least 1")
    if lam == 0:
        return 0.0
    if budget.delta <= 0:
        raise UnsupportedBudgetError("Peeling needs delta > 0 when lambda > 0")
    if math.isinf(budget.epsilon):
        return 0.0
    return lam * 2.0 * math.sqrt(3.0 * s * math.log(1.0 / budget.delta)) / budget.epsilon


def laplace_from_uniform(u, xi):
    """Inverse CDF of Lap(xi) applied to ``u`` in (-1/2, 1/2)."""
    return -xi * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def sample_laplace(xi, stream, count):
    """``count`` iid draws of Lap(xi); all zeros when ``xi == 0``.

    ``stream`` may be a :class:`SeedPath` or an already-built Generator.
    """
    if xi < 0:
        raise InvalidArgumentError("Laplace scale must be nonnegative")
    if xi == 0:
        return np.zeros(count)
    rng = stream.generator() if isinstance(stream, SeedPath) else stream
    u = rng.random(count) - 0.5
    # u == -0.5 has probability 2**-53 and would map to -inf
    u = np.maximum(u, -0.5 + 2.0**-54)
    return laplace_from_uniform(u, xi)


def sample_gaussian(mean, stddev, stream, count):
    if stddev < 0:
        raise InvalidArgumentError("stddev must be nonnegative")
    if stddev == 0:
        return np.full(count, float(mean))
    rng = stream.generator() if isinstance(stream, SeedPath) else stream
    return mean + stddev * rng.standard_normal(count)
