"""Choice domains over binary sequences, checked at finite horizons.

Every search here is bounded by an explicit horizon.  Running out of
horizon raises :class:`HorizonExceeded` (or yields an inconclusive verdict);
it never counts as evidence about the infinite sequences.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .errors import HorizonExceeded

__all__ = [
    "BinarySeq",
    "ChoicePattern",
    "RealisingTimes",
    "ChoiceVerdict",
    "DiagonalStage",
    "IndependenceVerdict",
    "find_realising",
    "verify_choice_at_horizon",
    "extend_diagonal",
    "realize_function",
    "independence_check",
    "counter_family",
]


class BinarySeq:
    """A point of {0,1}^N, positions starting at 1, given by a memoized oracle."""

    def __init__(self, rule: Callable[[int], int], *, prefix=(), period=None, name=None):
        self._rule = rule
        self._cache = {}
        self._lock = threading.Lock()
        self.prefix = tuple(prefix)
        self.period = tuple(period) if period is not None else None
        self.name = name

    @classmethod
    def periodic(cls, word) -> "BinarySeq":
        return cls.prefix_periodic((), word)

    @classmethod
    def prefix_periodic(cls, prefix, word) -> "BinarySeq":
        prefix = tuple(_bits(prefix))
        word = tuple(_bits(word))
        if not word:
            raise ValueError("periodic part must be nonempty")

        def rule(n):
            if n <= len(prefix):
                return prefix[n - 1]
            return word[(n - len(prefix) - 1) % len(word)]

        name = "".join(map(str, word)) if not prefix else "".join(map(str, prefix)) + "(" + "".join(map(str, word)) + ")"
        return cls(rule, prefix=prefix, period=word, name=name)

    @classmethod
    def from_rule(cls, rule: Callable[[int], int], name=None) -> "BinarySeq":
        return cls(rule, name=name)

    def __call__(self, n: int) -> int:
        try:
            return self._cache[n]
        except KeyError:
            pass
        if n < 1:
            raise ValueError(f"positions start at 1, got {n}")
        bit = int(self._rule(n))
        if bit not in (0, 1):
            raise ValueError(f"sequence value {bit} at {n} is not binary")
        with self._lock:
            return self._cache.setdefault(n, bit)

    def bits(self, horizon: int) -> tuple:
        return tuple(self(n) for n in range(1, horizon + 1))

    def __repr__(self):
        return f"BinarySeq({self.name or self._rule!r})"


def _bits(word):
    if isinstance(word, str):
        if set(word) - {"0", "1"}:
            raise ValueError(f"not a binary word: {word!r}")
        return [int(c) for c in word]
    return [int(b) for b in word]


def counter_family(n: int) -> list:
    """``n`` periodic sequences whose columns run through all of {0,1}^n.

    Member ``j`` (from 1) is ``0^(2^(j-1)) 1^(2^(j-1))`` repeated, so every
    window of ``2^n`` consecutive positions shows each pattern once.
    """
    return [BinarySeq.periodic("0" * 2 ** (j - 1) + "1" * 2 ** (j - 1)) for j in range(1, n + 1)]


@dataclass(frozen=True)
class ChoicePattern:
    members: tuple
    phis: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "phis", tuple(tuple(_bits(r)) for r in self.phis))
        if len(self.phis) != len(self.members):
            raise ValueError("one choice row per member")
        if len({len(r) for r in self.phis}) > 1:
            raise ValueError("choice rows must share a length")

    @property
    def m(self) -> int:
        return len(self.phis[0]) if self.phis else 0


@dataclass(frozen=True)
class RealisingTimes:
    times: tuple

    def __post_init__(self):
        m = len(self.times)
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("realising times must increase strictly")
        if self.times and self.times[0] <= m:
            raise ValueError("the first realising time must exceed m")

    def __iter__(self):
        return iter(self.times)

    def __len__(self):
        return len(self.times)


def _next_column(members, column, after: int, horizon: int) -> int:
    for t in range(after + 1, horizon + 1):
        if all(x(t) == c for x, c in zip(members, column)):
            return t
    raise HorizonExceeded(horizon)


def find_realising(pattern: ChoicePattern, horizon: int) -> RealisingTimes:
    """Greedy column-by-column search; the result is the lexicographically
    smallest ``m``-realising tuple within ``horizon``."""
    m = pattern.m
    times = []
    last = m
    for k in range(m):
        column = [row[k] for row in pattern.phis]
        last = _next_column(pattern.members, column, last, horizon)
        times.append(last)
    return RealisingTimes(tuple(times))


@dataclass(frozen=True)
class ChoiceVerdict:
    passed: bool
    checked: int
    horizon: int
    witness: Optional[tuple] = None   # phi rows of the first matrix that ran out
    witness_m: Optional[int] = None

    @property
    def inconclusive(self) -> bool:
        return not self.passed

    def to_json(self):
        out = {"pass": self.passed, "matrices_checked": self.checked, "horizon": self.horizon}
        if self.witness is not None:
            out["status"] = "inconclusive_at_horizon"
            out["witness_phi"] = ["".join(map(str, r)) for r in self.witness]
            out["witness_m"] = self.witness_m
        return out


def verify_choice_at_horizon(members: Sequence[BinarySeq], m_max: int, horizon: int) -> ChoiceVerdict:
    """Try every choice matrix with ``m <= m_max`` rows of length ``m``."""
    members = list(members)
    checked = 0
    for m in range(1, m_max + 1):
        for flat in itertools.product((0, 1), repeat=len(members) * m):
            phis = tuple(flat[i * m:(i + 1) * m] for i in range(len(members)))
            checked += 1
            try:
                find_realising(ChoicePattern(members, phis), horizon)
            except HorizonExceeded:
                return ChoiceVerdict(False, checked, horizon, phis, m)
    return ChoiceVerdict(True, checked, horizon)


@dataclass(frozen=True)
class DiagonalStage:
    y_prefix: tuple
    tau: dict = field(default_factory=dict)        # phi -> tau_phi
    tau_prime: dict = field(default_factory=dict)  # phi -> tau'_phi

    def to_json(self):
        key = lambda phi: "".join(map(str, phi))
        return {
            "y_prefix": "".join(map(str, self.y_prefix)),
            "tau": {key(k): v for k, v in sorted(self.tau.items())},
            "tau_prime": {key(k): v for k, v in sorted(self.tau_prime.items())},
        }


def extend_diagonal(members: Sequence[BinarySeq], y_prefix, stage: int, horizon: int = 1 << 16) -> DiagonalStage:
    """One stage of the diagonal construction of a new choice-domain member.

    Uses the first ``stage + 1`` members.  For every column pattern ``phi``
    it finds a first time ``tau_phi`` beyond the current prefix and a second
    time ``tau'_phi`` beyond all first times; ``y`` becomes 1 exactly at the
    second times, so ``y`` and each member disagree in how they read the
    pair.  With no members at all the prefix just grows by a single 0.
    """
    y = tuple(_bits(y_prefix))
    used = list(members)[: stage + 1]
    if not used:
        return DiagonalStage(y + (0,))
    N = len(y)
    patterns = list(itertools.product((0, 1), repeat=len(used)))
    tau = {phi: _next_column(used, phi, N, horizon) for phi in patterns}
    top = max(tau.values())
    tau_prime = {phi: _next_column(used, phi, top, horizon) for phi in patterns}
    end = max(tau_prime.values())
    ones = set(tau_prime.values())
    y = y + tuple(1 if t in ones else 0 for t in range(N + 1, end + 1))
    return DiagonalStage(y, tau, tau_prime)


def realize_function(members: Sequence[BinarySeq], f: Sequence[int], min_time: int = 0,
                     horizon: int = 1 << 16) -> int:
    """Smallest ``t > min_time`` with ``x(t) == f(x)`` for every member."""
    members = list(members)
    if not members:
        return min_time + 1
    return _next_column(members, list(f), min_time, horizon)


@dataclass(frozen=True)
class IndependenceVerdict:
    passed: bool
    missing: Optional[tuple] = None

    def to_json(self):
        out = {"pass": self.passed}
        if self.missing is not None:
            out["unrealized_pattern"] = list(self.missing)
        return out


def independence_check(members: Sequence[BinarySeq], positions: Sequence[int]) -> IndependenceVerdict:
    """Is every pattern on ``positions`` read off by some member?"""
    positions = list(positions)
    seen = {tuple(x(i) for i in positions) for x in members}
    for phi in itertools.product((0, 1), repeat=len(positions)):
        if phi not in seen:
            return IndependenceVerdict(False, phi)
    return IndependenceVerdict(True)
