"""Structural privacy accounting for episodic (forgetful) mechanisms.

Every mechanism call is recorded with the half-open interval of time steps
whose data it read. Entries must not overlap, so each datum is charged by at
most one mechanism and the per-user cost is that entry's (epsilon, delta).
"""
import bisect
import math
from dataclasses import dataclass

from .exceptions import CompositionError, InvalidArgumentError
from .peeling import PrivacyBudget

_REL_TOL = 1e-12


@dataclass(frozen=True)
class LedgerEntry:
    mechanism: str
    start: int
    stop: int
    epsilon: float
    delta: float
    splits: int = 1

    def __post_init__(self):
        if not self.start < self.stop:
            raise InvalidArgumentError(f"empty data interval [{self.start}, {self.stop})")
        PrivacyBudget(self.epsilon, self.delta)
        if self.splits < 1:
            raise InvalidArgumentError("splits must be at least 1")
        if not math.isinf(self.epsilon):
            part = self.epsilon / self.splits
            total = math.fsum([part] * self.splits)
            if abs(total - self.epsilon) > _REL_TOL * self.epsilon:
                raise InvalidArgumentError("iteration splits do not sum to epsilon")

    @property
    def split_budget(self):
        return PrivacyBudget(self.epsilon / self.splits, self.delta / self.splits)

    def to_dict(self):
        return {
            "mechanism": self.mechanism,
            "start": self.start,
            "stop": self.stop,
            "epsilon": _num(self.epsilon),
            "delta": self.delta,
            "splits": self.splits,
            "epsilon_per_split": _num(self.epsilon / self.splits),
            "delta_per_split": self.delta / self.splits,
        }


def _num(x):
    return "inf" if math.isinf(x) else x


class PrivacyLedger:
    """Append-only record of mechanism invocations, rejecting overlapping data."""

    def __init__(self):
        self._entries = []
        self._starts = []
        self.finalized = False

    def record(self, entry):
        if self.finalized:
            raise CompositionError("ledger is finalized")
        i = bisect.bisect_left(self._starts, entry.start)
        prev = self._entries[i - 1] if i > 0 else None
        nxt = self._entries[i] if i < len(self._entries) else None
        if (prev is not None and prev.stop > entry.start) or (nxt is not None and nxt.start < entry.stop):
            raise CompositionError(
                f"{entry.mechanism} reads [{entry.start}, {entry.stop}) which overlaps an earlier entry"
            )
        self._entries.insert(i, entry)
        self._starts.insert(i, entry.start)

    def finalize(self):
        self.finalized = True
        return self

    @property
    def entries(self):
        return tuple(self._entries)

    def covering(self, t):
        i = bisect.bisect_right(self._starts, t) - 1
        if i >= 0 and self._entries[i].stop > t:
            return self._entries[i]
        return None

    def per_user_budget(self, t):
        """Total ``(epsilon, delta)`` charged against the datum at time ``t``."""
        entry = self.covering(t)
        return (0.0, 0.0) if entry is None else (entry.epsilon, entry.delta)

    def max_per_user_budget(self):
        if not self._entries:
            return (0.0, 0.0)
        return (max(e.epsilon for e in self._entries), max(e.delta for e in self._entries))

    def to_dict(self):
        eps, delta = self.max_per_user_budget()
        return {
            "entries": [e.to_dict() for e in self._entries],
            "max_per_user_epsilon": _num(eps),
            "max_per_user_delta": delta,
            "disjoint": True,
        }
