"""Fibres and the skew-product map in z-coordinates.

A point of X is stored as ``(alpha, z)`` standing for ``(alpha, y)`` with
``y = lim lambda_alpha^n(z)``.  In these coordinates ``T`` only moves
``alpha`` (odometer successor) and leaves ``z`` alone, so no limits are ever
taken.  ``y`` is recovered to any depth by :func:`project_y`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import gcd
from typing import Optional

from .dyadic import ONE, ZERO, AffineMap, Dyadic, DyadicInterval, compose_all, image, lambda_map
from .odometer import DigitWord, OdometerPoint, add
from .system import SystemSpec, level_at

__all__ = [
    "PointState",
    "FibreApprox",
    "FibreClass",
    "FibreVerdict",
    "MaximalityVerdict",
    "compose_along",
    "fibre",
    "fibre_class",
    "is_maximal",
    "step",
    "translate",
    "project_y",
]


@dataclass(frozen=True)
class PointState:
    alpha: OdometerPoint
    z: Dyadic

    def __post_init__(self):
        z = Dyadic.coerce(self.z)
        if not ZERO <= z <= ONE:
            raise ValueError(f"z={z} outside [0, 1]")
        object.__setattr__(self, "z", z)


def compose_along(spec: SystemSpec, digits) -> AffineMap:
    """``lambda^1_(d_1) o ... o lambda^N_(d_N)`` for a digit prefix."""
    maps = []
    for n, d in enumerate(digits, start=1):
        level = level_at(spec, n)
        if not 0 <= d < level.p:
            raise ValueError(f"digit {d} at level {n} outside [0, {level.p})")
        maps.append(lambda_map(level.kinds[d]))
    return compose_all(maps)


@dataclass(frozen=True)
class FibreApprox:
    depth: int
    interval: DyadicInterval
    halving_count: int

    @property
    def exact_length(self) -> Dyadic:
        return Dyadic(1, self.halving_count)

    def to_json(self):
        return {
            "depth": self.depth,
            "interval": self.interval.to_json(),
            "halving_count": self.halving_count,
            "length": str(self.exact_length),
        }


def fibre(spec: SystemSpec, alpha: OdometerPoint, depth: int) -> FibreApprox:
    f = compose_along(spec, alpha.digits(depth))
    return FibreApprox(depth, image(f), f.halvings)


class FibreClass(enum.Enum):
    SINGLETON_CERTIFIED = "SINGLETON_CERTIFIED"
    INTERVAL_CERTIFIED = "INTERVAL_CERTIFIED"
    UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class FibreVerdict:
    kind: FibreClass
    length: Dyadic
    depth: Optional[int] = None

    def to_json(self):
        out = {"class": self.kind.value, "length": str(self.length)}
        if self.depth is not None:
            out["depth"] = self.depth
        return out


def _joint_window(spec: SystemSpec, alpha: OdometerPoint):
    """``(start, period)`` after which ``(level, digit)`` pairs repeat."""
    start = max(len(spec.preperiod), len(alpha.prefix))
    a, b = len(spec.period), len(alpha.period)
    return start, a * b // gcd(a, b)


def _is_halving(spec, alpha, n) -> bool:
    return level_at(spec, n).kinds[alpha.digit(n)].halves


def fibre_class(spec: SystemSpec, alpha: OdometerPoint, depth: int = 64) -> FibreVerdict:
    """Singleton vs interval fibre; certified whenever ``alpha`` is eventually periodic."""
    if alpha.is_eventually_periodic:
        start, period = _joint_window(spec, alpha)
        if any(_is_halving(spec, alpha, n) for n in range(start + 1, start + period + 1)):
            return FibreVerdict(FibreClass.SINGLETON_CERTIFIED, ZERO)
        h = sum(_is_halving(spec, alpha, n) for n in range(1, start + 1))
        return FibreVerdict(FibreClass.INTERVAL_CERTIFIED, Dyadic(1, h))
    approx = fibre(spec, alpha, depth)
    return FibreVerdict(FibreClass.UNDECIDED, approx.exact_length, depth)


@dataclass(frozen=True)
class MaximalityVerdict:
    maximal: bool
    certified: bool
    length: Dyadic
    sup_length: Dyadic

    def to_json(self):
        return {
            "maximal": self.maximal,
            "certified": self.certified,
            "length": str(self.length),
            "sup_length": str(self.sup_length),
        }


def is_maximal(spec: SystemSpec, alpha: OdometerPoint, depth: int = 64) -> MaximalityVerdict:
    """Compare the fibre of ``alpha`` against the longest fibre of the system.

    The longest fibre follows an identity digit wherever a level has one, so
    its halvings are exactly the levels with ``Q(n)`` empty.
    """
    if alpha.is_eventually_periodic:
        verdict = fibre_class(spec, alpha)
        if any(not l.Q for l in spec.period):
            sup = ZERO
        else:
            sup = Dyadic(1, sum(1 for l in spec.preperiod if not l.Q))
        return MaximalityVerdict(verdict.length == sup, True, verdict.length, sup)
    forced = sum(1 for n in range(1, depth + 1) if not level_at(spec, n).Q)
    approx = fibre(spec, alpha, depth)
    sup = Dyadic(1, forced)
    if approx.halving_count > forced:
        return MaximalityVerdict(False, True, approx.exact_length, sup)
    return MaximalityVerdict(True, False, approx.exact_length, sup)


def translate(spec: SystemSpec, state: PointState, word: DigitWord, depth: int) -> PointState:
    """``T^t`` for the time ``t`` encoded by ``word``: ``alpha += t``, ``z`` fixed."""
    result = add(state.alpha, word, depth)
    alpha = state.alpha
    prefix = result.digits
    if alpha.is_eventually_periodic and len(alpha.prefix) <= depth:
        # tail beyond depth is alpha's own tail; keep the periodic metadata
        skip = depth - len(alpha.prefix)
        period = alpha.period[skip % len(alpha.period):] + alpha.period[: skip % len(alpha.period)]
        new = OdometerPoint.periodic_tail(alpha.radices, prefix, period)
    else:
        new = OdometerPoint.from_rule(
            alpha.radices, lambda n, _p=prefix, _a=alpha: _p[n - 1] if n <= len(_p) else _a.digit(n)
        )
    return PointState(new, state.z)


def step(spec: SystemSpec, state: PointState, depth: int) -> PointState:
    return translate(spec, state, DigitWord((1,), state.alpha.radices), depth)


def project_y(spec: SystemSpec, state: PointState, depth: int):
    """``(lambda_alpha^depth(z), 2**-H)``; the true ``y`` is within the bound."""
    f = compose_along(spec, state.alpha.digits(depth))
    return f(state.z), f.scale
