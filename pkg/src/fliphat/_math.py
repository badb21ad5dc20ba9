"""Dense numeric primitives: clipping, L1-ball projection, support utilities.

Vectors are 1-D float arrays and design matrices 2-D float arrays (one row per
observation). A support is a strictly increasing 1-D int array.
"""
import math

import numpy as np

from .exceptions import InvalidArgumentError


def as_vector(v, name="v"):
    """Return ``v`` as a finite 1-D float array, raising on NaN/Inf."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    return arr


def as_design(X, name="X"):
    """Return ``X`` as a finite 2-D float array with at least one column."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[1] < 1:
        raise InvalidArgumentError(f"{name} needs at least one column")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    return arr


def as_support(S, d):
    """Validate a support against ambient dimension ``d``; returns sorted int array."""
    idx = np.asarray(S, dtype=np.int64).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= d):
        raise InvalidArgumentError(f"support index out of range [0, {d})")
    if np.any(np.diff(idx) <= 0):
        idx = np.unique(idx)
    return idx


def clip_scalar(z, R):
    """``z * min(1, R/|z|)``, with clip(0) = 0.

    Evaluated as ``sign(z) * min(|z|, R)``, which is exact in floating point.
    """
    if R < 0:
        raise InvalidArgumentError("R must be nonnegative")
    z = float(z)
    return math.copysign(min(abs(z), R), z) if z != 0 else 0.0


def clip_vector(y, R):
    """Coordinate-wise :func:`clip_scalar`."""
    if R < 0:
        raise InvalidArgumentError("R must be nonnegative")
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.minimum(np.abs(y), R)


def project_l1(v, C):
    """Euclidean projection of ``v`` onto ``{w : ||w||_1 <= C}``.

    Sort-based exact method: with ``u = sort(|v|)`` descending, the threshold
    is ``(sum(u[:k]) - C) / k`` for the largest ``k`` that keeps
    ``u[k-1]`` above it, followed by soft-thresholding. Vectors already in
    the ball are returned unchanged.
    """
    if not C > 0:
        raise InvalidArgumentError("C must be positive")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= C:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    theta = (css - C) / k
    rho = np.nonzero(u - theta > 0)[0][-1]
    tau = theta[rho]
    w = np.maximum(a - tau, 0.0)
    total = w.sum()
    if total > C:
        # a - tau cancels badly when |v| >> C
        w *= C / total
    return np.sign(v) * w


def exact_top_s(v, s):
    """Indices of the ``s`` largest ``|v_j|``, ties broken by lowest index."""
    v = np.asarray(v, dtype=float)
    d = v.size
    if not 1 <= s <= d:
        raise InvalidArgumentError(f"s must lie in [1, {d}], got {s}")
    # stable sort on -|v| keeps lower indices first among equal magnitudes
    order = np.argsort(-np.abs(v), kind="stable")
    return np.sort(order[:s])


def restrict_to_support(v, S):
    """Copy of ``v`` that is zero outside ``S``."""
    v = np.asarray(v, dtype=float)
    idx = as_support(S, v.size)
    out = np.zeros_like(v)
    out[idx] = v[idx]
    return out
