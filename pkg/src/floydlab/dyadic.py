"""Exact dyadic rationals, closed dyadic intervals and the affine maps
``x -> 2**-h * x + b`` generated by the three fibre maps.

Nothing here touches floating point.  A :class:`Dyadic` is stored as an
integer numerator over a power of two and kept in canonical form, so
equality is structural and hashing is consistent.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterable

from .errors import SpecParseError, YOutsideImage

__all__ = [
    "Dyadic",
    "DyadicInterval",
    "AffineMap",
    "Kind",
    "lambda_map",
    "compose",
    "compose_all",
    "image",
    "invert",
    "UNIT",
]


@total_ordering
class Dyadic:
    """The number ``numerator / 2**exponent``.

    Canonical form: the numerator is odd, or the exponent is zero.
    """

    __slots__ = ("numerator", "exponent")

    def __init__(self, numerator: int, exponent: int = 0):
        if exponent < 0:
            numerator <<= -exponent
            exponent = 0
        if numerator == 0:
            exponent = 0
        elif exponent:
            # strip common factors of two
            tz = (numerator & -numerator).bit_length() - 1
            shift = min(tz, exponent)
            if shift:
                numerator >>= shift
                exponent -= shift
        object.__setattr__(self, "numerator", numerator)
        object.__setattr__(self, "exponent", exponent)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    @classmethod
    def coerce(cls, value) -> "Dyadic":
        if isinstance(value, Dyadic):
            return value
        if isinstance(value, int):
            return cls(value)
        if isinstance(value, Fraction):
            den = value.denominator
            if den & (den - 1):
                raise ValueError(f"{value} is not dyadic")
            return cls(value.numerator, den.bit_length() - 1)
        if isinstance(value, str):
            return cls.parse(value)
        raise TypeError(f"cannot convert {type(value).__name__} to Dyadic")

    _PARSE = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(?:2\s*\^\s*(\d+)|(\d+)))?\s*$")

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Parse ``"m/2^k"``, ``"m/d"`` (``d`` a power of two) or ``"m"``."""
        match = cls._PARSE.match(text)
        if not match:
            raise SpecParseError(f"not a dyadic rational: {text!r}")
        num = int(match.group(1))
        if match.group(2) is not None:
            return cls(num, int(match.group(2)))
        if match.group(3) is not None:
            den = int(match.group(3))
            if den <= 0 or den & (den - 1):
                raise SpecParseError(f"denominator of {text!r} is not a power of two")
            return cls(num, den.bit_length() - 1)
        return cls(num)

    # arithmetic -----------------------------------------------------------

    def _align(self, other: "Dyadic"):
        k = max(self.exponent, other.exponent)
        return (
            self.numerator << (k - self.exponent),
            other.numerator << (k - other.exponent),
            k,
        )

    def __add__(self, other):
        try:
            other = Dyadic.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, k = self._align(other)
        return Dyadic(a + b, k)

    __radd__ = __add__

    def __neg__(self):
        return Dyadic(-self.numerator, self.exponent)

    def __sub__(self, other):
        try:
            other = Dyadic.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return Dyadic.coerce(other) - self

    def __mul__(self, other):
        try:
            other = Dyadic.coerce(other)
        except TypeError:
            return NotImplemented
        return Dyadic(self.numerator * other.numerator, self.exponent + other.exponent)

    __rmul__ = __mul__

    def halve(self, times: int = 1) -> "Dyadic":
        return Dyadic(self.numerator, self.exponent + times)

    def __abs__(self):
        return Dyadic(abs(self.numerator), self.exponent)

    # comparison -----------------------------------------------------------

    def __eq__(self, other):
        try:
            other = Dyadic.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.numerator == other.numerator and self.exponent == other.exponent

    def __lt__(self, other):
        try:
            other = Dyadic.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        a, b, _ = self._align(other)
        return a < b

    def __hash__(self):
        return hash((self.numerator, self.exponent))

    def __bool__(self):
        return self.numerator != 0

    # conversion -----------------------------------------------------------

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    def __str__(self):
        return f"{self.numerator}/2^{self.exponent}"

    def __repr__(self):
        return f"Dyadic({self.numerator}, {self.exponent})"


ZERO = Dyadic(0)
ONE = Dyadic(1)
HALF = Dyadic(1, 1)


@dataclass(frozen=True)
class DyadicInterval:
    lo: Dyadic
    hi: Dyadic

    def __post_init__(self):
        object.__setattr__(self, "lo", Dyadic.coerce(self.lo))
        object.__setattr__(self, "hi", Dyadic.coerce(self.hi))
        if self.hi < self.lo:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> Dyadic:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        x = Dyadic.coerce(x)
        return self.lo <= x <= self.hi

    def issubset(self, other: "DyadicInterval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def to_json(self):
        return [str(self.lo), str(self.hi)]

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


UNIT = DyadicInterval(ZERO, ONE)


class Kind(enum.Enum):
    """The three fibre maps, tagged by the digit used for them in ``.fas`` files."""

    HALF_LOW = "0"
    FULL = "1"
    HALF_HIGH = "2"

    @property
    def halves(self) -> bool:
        return self is not Kind.FULL

    @classmethod
    def from_char(cls, ch: str) -> "Kind":
        try:
            return cls(ch)
        except ValueError:
            raise SpecParseError(f"map character must be 0, 1 or 2, got {ch!r}") from None


@dataclass(frozen=True)
class AffineMap:
    """``x -> 2**-halvings * x + offset``."""

    halvings: int
    offset: Dyadic

    def __post_init__(self):
        if self.halvings < 0:
            raise ValueError("halvings must be nonnegative")
        offset = Dyadic.coerce(self.offset)
        if offset < ZERO or offset + Dyadic(1, self.halvings) > ONE:
            raise ValueError("map must send [0, 1] into itself")
        object.__setattr__(self, "offset", offset)

    @property
    def scale(self) -> Dyadic:
        return Dyadic(1, self.halvings)

    def __call__(self, x) -> Dyadic:
        return Dyadic.coerce(x).halve(self.halvings) + self.offset

    @property
    def is_identity(self) -> bool:
        return self.halvings == 0 and not self.offset

    def to_json(self):
        return {"scale": str(self.scale), "offset": str(self.offset)}

    def __str__(self):
        return f"x -> {self.scale}*x + {self.offset}"


IDENTITY = AffineMap(0, ZERO)

_LAMBDA = {
    Kind.HALF_LOW: AffineMap(1, ZERO),
    Kind.FULL: IDENTITY,
    Kind.HALF_HIGH: AffineMap(1, HALF),
}


def lambda_map(kind: Kind) -> AffineMap:
    return _LAMBDA[Kind(kind)]


def compose(outer: AffineMap, inner: AffineMap) -> AffineMap:
    """``outer o inner``."""
    return AffineMap(
        outer.halvings + inner.halvings,
        inner.offset.halve(outer.halvings) + outer.offset,
    )


def compose_all(maps: Iterable[AffineMap]) -> AffineMap:
    """Left-to-right composition ``f1 o f2 o ... o fn``.

    Accumulates from the left: with ``g = f1 o ... o f(i-1)`` already known,
    ``g o fi`` only needs ``fi``'s offset shifted by ``g``'s halvings.
    """
    halvings = 0
    offset = ZERO
    for f in maps:
        offset = offset + f.offset.halve(halvings)
        halvings += f.halvings
    return AffineMap(halvings, offset)


def image(f: AffineMap, iv: DyadicInterval = UNIT) -> DyadicInterval:
    return DyadicInterval(f(iv.lo), f(iv.hi))


def invert(f: AffineMap, y) -> Dyadic:
    """The unique ``z`` in [0, 1] with ``f(z) == y``."""
    y = Dyadic.coerce(y)
    z = Dyadic((y - f.offset).numerator, (y - f.offset).exponent - f.halvings)
    if not (ZERO <= z <= ONE):
        raise YOutsideImage(f"{y} is not in the image {image(f)} of [0, 1]")
    return z
