"""Mixed-radix odometer arithmetic.

Positions are 1-indexed and words are little-endian: ``digits[0]`` is the
digit at position 1.  A point of the odometer is an infinite digit sequence
given by a memoized oracle; a translation time is a finite
:class:`DigitWord`.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import DepthInsufficient, PendingCarryBeyondDepth

__all__ = [
    "RadixSpec",
    "DigitWord",
    "OdometerPoint",
    "CarryProfile",
    "AddResult",
    "radix_at",
    "add",
    "successor",
    "word_sum",
    "word_value",
    "word_from_value",
]


@dataclass(frozen=True)
class RadixSpec:
    preperiod: tuple = ()
    period: tuple = (2,)

    def __post_init__(self):
        object.__setattr__(self, "preperiod", tuple(int(p) for p in self.preperiod))
        object.__setattr__(self, "period", tuple(int(p) for p in self.period))
        if not self.period:
            raise ValueError("period must be nonempty")
        if any(p < 2 for p in self.preperiod + self.period):
            raise ValueError("every radix must be at least 2")

    @classmethod
    def constant(cls, p: int) -> "RadixSpec":
        return cls((), (p,))

    def __call__(self, n: int) -> int:
        return radix_at(self, n)

    def radices(self, depth: int) -> list:
        pre, per = self.preperiod, self.period
        if depth <= len(pre):
            return list(pre[:max(depth, 0)])
        rest = depth - len(pre)
        return list(pre) + list(per * -(-rest // len(per)))[:rest]


def radix_at(spec: RadixSpec, n: int) -> int:
    if n < 1:
        raise ValueError(f"positions start at 1, got {n}")
    pre = spec.preperiod
    if n <= len(pre):
        return pre[n - 1]
    return spec.period[(n - len(pre) - 1) % len(spec.period)]


@dataclass(frozen=True)
class DigitWord:
    """A finite time ``sum d_i * p_1 * ... * p_(i-1)``; trailing zeros implied."""

    digits: tuple
    radices: RadixSpec

    def __post_init__(self):
        digits = [int(d) for d in self.digits]
        while digits and digits[-1] == 0:
            digits.pop()
        for i, (d, p) in enumerate(zip(digits, self.radices.radices(len(digits))), start=1):
            if not 0 <= d < p:
                raise ValueError(f"digit {d} at position {i} outside [0, {p})")
        object.__setattr__(self, "digits", tuple(digits))

    @classmethod
    def zero(cls, radices: RadixSpec) -> "DigitWord":
        return cls((), radices)

    @classmethod
    def single(cls, radices: RadixSpec, position: int, digit: int) -> "DigitWord":
        return cls((0,) * (position - 1) + (digit,), radices)

    def __len__(self):
        return len(self.digits)

    def digit(self, n: int) -> int:
        return self.digits[n - 1] if n <= len(self.digits) else 0

    def support(self) -> list:
        return [i for i, d in enumerate(self.digits, start=1) if d]


class OdometerPoint:
    """An infinite odometer point ``alpha_1 alpha_2 ...`` given by a digit oracle.

    Digits are computed at most once; the cache is guarded by a lock so a
    point may be shared between threads.
    """

    def __init__(
        self,
        radices: RadixSpec,
        rule: Callable[[int], int],
        *,
        prefix: Sequence[int] = (),
        period: Optional[Sequence[int]] = None,
    ):
        self.radices = radices
        self._rule = rule
        self._cache = {}
        self._lock = threading.Lock()
        # eventual-periodicity metadata, set only by the structured constructors
        self.prefix = tuple(prefix)
        self.period = tuple(period) if period is not None else None

    @classmethod
    def zero_tail(cls, radices: RadixSpec, prefix: Sequence[int]) -> "OdometerPoint":
        return cls.periodic_tail(radices, prefix, (0,))

    @classmethod
    def periodic_tail(cls, radices: RadixSpec, prefix: Sequence[int], period: Sequence[int]) -> "OdometerPoint":
        prefix = tuple(int(d) for d in prefix)
        period = tuple(int(d) for d in period)
        if not period:
            raise ValueError("periodic tail must be nonempty")

        def rule(n):
            if n <= len(prefix):
                return prefix[n - 1]
            return period[(n - len(prefix) - 1) % len(period)]

        return cls(radices, rule, prefix=prefix, period=period)

    @classmethod
    def from_rule(cls, radices: RadixSpec, rule: Callable[[int], int]) -> "OdometerPoint":
        return cls(radices, rule)

    @property
    def is_eventually_periodic(self) -> bool:
        return self.period is not None

    def digit(self, n: int) -> int:
        try:
            return self._cache[n]
        except KeyError:
            pass
        if n < 1:
            raise ValueError(f"positions start at 1, got {n}")
        value = int(self._rule(n))
        p = radix_at(self.radices, n)
        if not 0 <= value < p:
            raise ValueError(f"oracle digit {value} at position {n} outside [0, {p})")
        with self._lock:
            return self._cache.setdefault(n, value)

    def digits(self, depth: int) -> tuple:
        cache = self._cache
        out = [cache.get(n) for n in range(1, depth + 1)]
        if None not in out:
            return tuple(out)
        rs = self.radices.radices(depth)
        for i, d in enumerate(out):
            if d is None:
                value = int(self._rule(i + 1))
                if not 0 <= value < rs[i]:
                    raise ValueError(f"oracle digit {value} at position {i + 1} outside [0, {rs[i]})")
                out[i] = value
        with self._lock:
            return tuple(cache.setdefault(n, d) for n, d in enumerate(out, start=1))

    def __repr__(self):
        if self.period is not None:
            return f"OdometerPoint(prefix={self.prefix}, period={self.period})"
        return f"OdometerPoint(rule={self._rule!r})"


@dataclass(frozen=True)
class CarryProfile:
    """``carries[i]`` is the carry out of position ``i + 1`` into ``i + 2``.

    :meth:`into` gives ``c_(i-1)``, the carry arriving at
    position ``i`` (zero at position 1).
    """

    carries: tuple

    def into(self, position: int) -> int:
        if position <= 1:
            return 0
        return self.carries[position - 2]

    def out_of(self, position: int) -> int:
        return self.carries[position - 1]


@dataclass(frozen=True)
class AddResult:
    digits: tuple
    carry: CarryProfile

    def __iter__(self):
        return iter((self.digits, self.carry))


def _add_digits(alpha_digits, word: DigitWord, radices: RadixSpec):
    out = []
    carries = []
    c = 0
    w = word.digits
    for i, (a, p) in enumerate(zip(alpha_digits, radices.radices(len(alpha_digits)))):
        s = a + (w[i] if i < len(w) else 0) + c
        c = 1 if s >= p else 0
        out.append(s - p * c)
        carries.append(c)
    return out, carries


def add(point: OdometerPoint, word: DigitWord, depth: int) -> AddResult:
    """Digits 1..depth of ``point + word`` together with the carry profile.

    Raises :class:`PendingCarryBeyondDepth` when a carry leaves position
    ``depth``: the result then differs from ``point`` somewhere deeper and
    the caller must look further.
    """
    if depth < len(word):
        raise DepthInsufficient(f"depth {depth} does not cover word of length {len(word)}")
    digits, carries = _add_digits(point.digits(depth), word, point.radices)
    if carries and carries[-1]:
        raise PendingCarryBeyondDepth(depth)
    return AddResult(tuple(digits), CarryProfile(tuple(carries)))


def successor(point: OdometerPoint, depth: int) -> tuple:
    return add(point, DigitWord((1,), point.radices), depth).digits


def word_value(word: DigitWord) -> int:
    value = 0
    weight = 1
    for i, d in enumerate(word.digits, start=1):
        value += d * weight
        weight *= radix_at(word.radices, i)
    return value


def word_from_value(value: int, radices: RadixSpec) -> DigitWord:
    if value < 0:
        raise ValueError("times are nonnegative")
    digits = []
    n = 1
    while value:
        p = radix_at(radices, n)
        value, d = divmod(value, p)
        digits.append(d)
        n += 1
    return DigitWord(tuple(digits), radices)


def word_sum(w1: DigitWord, w2: DigitWord, radices: Optional[RadixSpec] = None) -> DigitWord:
    """Digitwise sum with carries; the result is again a finite word."""
    radices = radices or w1.radices
    out = []
    c = 0
    n = 1
    length = max(len(w1), len(w2))
    while n <= length or c:
        p = radix_at(radices, n)
        s = w1.digit(n) + w2.digit(n) + c
        c = 1 if s >= p else 0
        out.append(s - p * c)
        n += 1
    return DigitWord(tuple(out), radices)
