"""Finite-stage versions of the many-idempotents constructions.

A :class:`ConvenientFamily` turns binary sequences ``x`` into odometer
points ``alpha^x`` whose digits agree everywhere except at the case levels
``n_l``, where ``alpha^x`` reads ``a0`` or ``a1`` according to ``x_l``.  A
:class:`TranslationWord` is one time ``t`` of the approximating net; adding
it to every family member moves prescribed digits into halving classes and
leaves the rest in ``Q``.  ``verify_membership`` checks the per-position
class table including the carry-conditional rows, and ``verify_collapse``
computes the exact image of each member's fibre under ``T^t`` and checks
the separation across a threshold.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .choice import BinarySeq, ChoicePattern, counter_family, find_realising
from .classify import H0_CLASS, H2_CLASS, ConvenientSchedule, Flavour, build_schedule
from .dyadic import ONE, ZERO, Dyadic, DyadicInterval, Kind, compose_all, image, lambda_map
from .errors import DepthInsufficient, NoAdmissibleTemplate, ScheduleUnavailable
from .odometer import DigitWord, OdometerPoint, add, word_sum
from .system import SystemSpec, level_at

__all__ = [
    "ConvenientFamily",
    "Orientation",
    "SeparationTarget",
    "Expect",
    "TranslationWord",
    "MembershipTable",
    "CollapseReport",
    "PushReport",
    "build_family",
    "build_translation",
    "build_push_word",
    "verify_membership",
    "verify_collapse",
    "verify_push",
    "digit_class",
]

Q_CLASS = "Q"
ANY = frozenset({Q_CLASS, H0_CLASS, H2_CLASS})
ONLY_Q = frozenset({Q_CLASS})
_OTHER = {H0_CLASS: H2_CLASS, H2_CLASS: H0_CLASS}


def digit_class(spec: SystemSpec, n: int, digit: int) -> str:
    kind = level_at(spec, n).kinds[digit]
    return {Kind.FULL: Q_CLASS, Kind.HALF_LOW: H0_CLASS, Kind.HALF_HIGH: H2_CLASS}[kind]


def _members_of(level, cls):
    return {Q_CLASS: level.Q, H0_CLASS: level.H0, H2_CLASS: level.H2}[cls]


class ConvenientFamily:
    """The points ``alpha^x`` for one schedule.

    Off the scheduled levels every member uses the smallest identity digit.
    At ``q_l`` it uses ``xi1``, at ``k_l`` / ``k'_l`` the recorded ``zeta``,
    at ``n_l + 1`` (cases A and B) the digit whose successor lands in the
    flavour's carry class, and at ``n_l`` the witness digit ``a_(x_l)``.
    """

    def __init__(self, spec: SystemSpec, schedule: ConvenientSchedule):
        self.spec = spec
        self.schedule = schedule
        self.flavour: Flavour = schedule.flavour
        self._roles = {}
        self._covered = 0
        self._lock = threading.Lock()
        self._points = {}

    @property
    def case(self) -> str:
        return self.flavour.case

    @property
    def variant(self) -> str:
        return self.flavour.variant

    def _role(self, i: int):
        if i > self._covered:
            with self._lock:
                self.schedule.blocks_through(i)
                blocks = self.schedule.blocks
                for ell, b in enumerate(blocks, start=1):
                    self._roles[b.n] = ("n", ell)
                    if self.case in ("A", "B"):
                        self._roles[b.n + 1] = ("carry", ell)
                    self._roles[b.k] = ("k", ell)
                    self._roles[b.kp] = ("kp", ell)
                    self._roles[b.q] = ("q", ell)
                self._covered = max(self._covered, blocks[-1].q)
        return self._roles.get(i)

    def shared_digit(self, i: int) -> int:
        """The digit every member has at ``i``; ``i`` must not be a case level."""
        role = self._role(i)
        if role is None:
            return min(level_at(self.spec, i).Q)
        kind, ell = role
        b = self.schedule.block(ell)
        if kind == "carry":
            return b.carry_digit
        if kind == "q":
            return b.xi[0]
        if kind == "k":
            return b.zeta_k
        if kind == "kp":
            return b.zeta_kp
        raise ValueError(f"position {i} is case level n_{ell}; its digit depends on the member")

    def digit(self, x: BinarySeq, i: int) -> int:
        role = self._role(i)
        if role is not None and role[0] == "n":
            w = self.schedule.block(role[1]).witness
            return w.a1 if x(role[1]) else w.a0
        return self.shared_digit(i)

    def member(self, x: BinarySeq) -> OdometerPoint:
        key = id(x)
        point = self._points.get(key)
        if point is None or point[0] is not x:
            point = (x, OdometerPoint.from_rule(self.spec.radices, lambda i: self.digit(x, i)))
            self._points[key] = point
        return point[1]

    def to_json(self):
        return {
            "case": self.case,
            "flavour": self.flavour.key,
            "variant": self.variant,
            "subcase": self.flavour.subcase or None,
            "schedule": self.schedule.to_json(),
        }


def build_family(spec: SystemSpec, schedule: Optional[ConvenientSchedule] = None,
                 case: Optional[str] = None, L: int = 2) -> ConvenientFamily:
    try:
        if schedule is None:
            schedule = build_schedule(spec, L, case=case)
        else:
            schedule.ensure(L)
    except ScheduleUnavailable as exc:
        raise NoAdmissibleTemplate(str(exc)) from exc
    if case is not None and schedule.flavour.case != case:
        raise NoAdmissibleTemplate(f"schedule is for case {schedule.flavour.case}, not {case}")
    return ConvenientFamily(spec, schedule)


# --- words --------------------------------------------------------------------


@dataclass(frozen=True)
class Expect:
    """Allowed classes at one position, depending on the incoming carry."""

    no_carry: frozenset
    with_carry: frozenset

    @classmethod
    def fixed(cls, classes) -> "Expect":
        classes = frozenset(classes)
        return cls(classes, classes)

    def allowed(self, carry_in: int) -> frozenset:
        return self.with_carry if carry_in else self.no_carry

    def describe(self, carry_in: int) -> str:
        return "|".join(sorted(self.allowed(carry_in)))


@dataclass(frozen=True)
class TranslationWord:
    word: DigitWord
    kind: str                    # "A", "B", "C", "UP", "DOWN"
    m: int
    times: tuple = ()
    blocks: tuple = ()           # (tau, position, delta) per realising time
    steers: tuple = ()           # (block index, start, {position: digit}) per steered block
    phis: tuple = ()
    labels: tuple = ()
    members: tuple = ()
    expectations: tuple = ()     # one {position: Expect} per member
    required_depth: int = 0

    def to_json(self):
        return {
            "kind": self.kind,
            "m": self.m,
            "digits": list(self.word.digits),
            "support": self.word.support(),
            "realising_times": list(self.times),
            "blocks": [{"tau": t, "position": p, "delta": d} for t, p, d in self.blocks],
            "steers": [
                {"block": ell, "start": s, "digits": {str(k): v for k, v in sorted(u.items())}}
                for ell, s, u in self.steers
            ],
            "phi": ["".join(map(str, r)) for r in self.phis],
            "required_depth": self.required_depth,
        }


def _steer(family: ConvenientFamily, start: int, end: int, target: str) -> dict:
    """Digits ``u`` on ``[start, end]`` moving the shared digit at ``start`` into
    ``target`` and every later position of the range back into ``Q``."""
    spec = family.spec
    level = level_at(spec, start)
    d = family.shared_digit(start)
    options = sorted(_members_of(level, target))
    if not options:
        raise ScheduleUnavailable(f"level {start} has no {target} digit")
    no_wrap = [h for h in options if h >= d]
    h = no_wrap[0] if no_wrap else options[0]
    u = {start: (h - d) % level.p}
    carry = 1 if h < d else 0
    pos = start + 1
    while carry:
        if pos > end:
            raise AssertionError("carry escaped the steering range")
        level = level_at(spec, pos)
        d = family.shared_digit(pos)
        landing = [q for q in sorted(level.Q) if q >= d + 1]
        if landing:
            u[pos] = landing[0] - d - 1
            carry = 0
        else:
            u[pos] = level.p - 1
        pos += 1
    return u


def _word_from(radices, digits: dict) -> DigitWord:
    if not digits:
        return DigitWord.zero(radices)
    top = max(digits)
    return DigitWord(tuple(digits.get(i, 0) for i in range(1, top + 1)), radices)


def _rows(case: str, label: int, m: int) -> tuple:
    if m == 0:
        return ()
    if case == "A":
        return (0,) * m if label == 0 else (1,) + (0,) * (m - 1)
    if case == "B":
        return (0,) + (1,) * (m - 1) if label == 0 else (1,) * m
    if case == "C":
        return (1,) * m if label == 0 else (0,) * m
    raise ValueError(f"unknown case {case!r}")


def _case_level_class(flavour: Flavour, bit: int) -> frozenset:
    """Class of ``a_bit + delta`` at a case level."""
    if flavour.case == "A":
        return frozenset({H2_CLASS if bit else H0_CLASS})
    if flavour.case == "B":
        if flavour.subcase == 1:
            return frozenset({_OTHER[flavour.variant]})
        return frozenset({flavour.variant})
    return frozenset({flavour.variant}) if bit else ONLY_Q


def build_translation(family: ConvenientFamily, members: Sequence[BinarySeq], labels: Sequence[int],
                      m: int, horizon: int = 4096) -> TranslationWord:
    """The word ``t`` for members labelled 0 (outside B) or 1 (in B).

    The choice rows depend on the case; the realising times ``tau_s`` pick
    the blocks whose case level receives the shift ``delta``.  In case B,
    subcase 2, a steering word is added in each chosen block as well.
    """
    members = tuple(members)
    labels = tuple(int(l) for l in labels)
    if len(members) != len(labels):
        raise ValueError("one label per member")
    if any(l not in (0, 1) for l in labels):
        raise ValueError("labels must be 0 or 1")
    seen = {}
    for x in members:
        bits = x.bits(horizon)
        if bits in seen:
            raise ValueError("members must be distinct within the horizon")
        seen[bits] = x
    flavour = family.flavour
    phis = tuple(_rows(flavour.case, l, m) for l in labels)
    times = find_realising(ChoicePattern(members, phis), horizon).times if members else tuple(range(m + 1, 2 * m + 1))

    radices = family.spec.radices
    blocks = []
    steers = []
    word = DigitWord.zero(radices)
    depth = 0
    for tau in times:
        b = family.schedule.block(tau)
        blocks.append((tau, b.n, b.witness.delta))
        word = word_sum(word, DigitWord.single(radices, b.n, b.witness.delta))
        depth = max(depth, b.m)
        if flavour.case == "B" and flavour.subcase == 2:
            target = _OTHER[flavour.variant]
            start = b.k if target == H2_CLASS else b.kp
            u = _steer(family, start, b.q, target)
            steers.append((tau, start, u))
            word = word_sum(word, _word_from(radices, u))
            depth = max(depth, b.q)

    expectations = []
    for row in phis:
        table = {}
        for s, (tau, n, _) in enumerate(blocks):
            b = family.schedule.block(tau)
            table[n] = Expect.fixed(_case_level_class(flavour, row[s]))
            for i in range(n + 1, b.m + 1):
                table[i] = Expect(ONLY_Q, ANY)
            if flavour.case in ("A", "B"):
                table[n + 1] = Expect(ONLY_Q, frozenset({flavour.variant}))
        for tau, start, u in steers:
            b = family.schedule.block(tau)
            table[start] = Expect.fixed({_OTHER[flavour.variant]})
            for i in range(start + 1, b.q + 1):
                table[i] = Expect.fixed(ONLY_Q)
        expectations.append(table)
    return TranslationWord(
        word, flavour.case, m, tuple(times), tuple(blocks), tuple(steers), phis, labels, members,
        tuple(expectations), max(depth, len(word)),
    )


def _push_exponent(a: Dyadic, direction: str) -> int:
    if not ZERO < a < ONE:
        raise ValueError("threshold must lie strictly inside (0, 1)")
    j = 1
    if direction == "UP":
        while not ONE - Dyadic(1, j) > a:
            j += 1
    else:
        while not Dyadic(1, j) < a:
            j += 1
    return j


def build_push_word(family: ConvenientFamily, a, direction: str = "UP", j_override: Optional[int] = None,
                    start_block: int = 1, members: Optional[Sequence[BinarySeq]] = None) -> TranslationWord:
    """A word pushing every family fibre into ``(a, 1]`` (UP) or ``[0, a)`` (DOWN).

    The ``j`` steered levels are ``k_l`` (into ``H2``) or ``k'_l`` (into
    ``H0``) for ``j`` consecutive blocks; carries are absorbed by ``q_l``.
    """
    direction = direction.upper()
    if direction not in ("UP", "DOWN"):
        raise ValueError("direction is UP or DOWN")
    a = Dyadic.coerce(a)
    j = j_override if j_override is not None else _push_exponent(a, direction)
    target = H2_CLASS if direction == "UP" else H0_CLASS
    radices = family.spec.radices
    word = DigitWord.zero(radices)
    steers = []
    table = {}
    depth = 0
    for ell in range(start_block, start_block + j):
        b = family.schedule.block(ell)
        start = b.k if direction == "UP" else b.kp
        u = _steer(family, start, b.q, target)
        steers.append((ell, start, u))
        word = word_sum(word, _word_from(radices, u))
        table[start] = Expect.fixed({target})
        for i in range(start + 1, b.q + 1):
            table[i] = Expect.fixed(ONLY_Q)
        depth = max(depth, b.q)
    members = tuple(members) if members is not None else tuple(counter_family(2))
    return TranslationWord(
        word, direction, j, steers=tuple(steers), members=members,
        labels=(None,) * len(members), expectations=tuple(table for _ in members),
        required_depth=max(depth, len(word)),
    )


# --- verification -------------------------------------------------------------


@dataclass(frozen=True)
class Row:
    position: int
    digit: int
    carry_in: int
    observed: str
    expected: str
    ok: bool

    def to_json(self):
        return [self.position, self.digit, self.carry_in, self.observed, self.expected, self.ok]


@dataclass(frozen=True)
class MembershipTable:
    depth: int
    rows: tuple          # one tuple of Row per member
    digits: tuple        # digits of alpha^x + t per member

    @property
    def passed(self) -> bool:
        return all(r.ok for rows in self.rows for r in rows)

    def failures(self) -> list:
        return [(j, r) for j, rows in enumerate(self.rows) for r in rows if not r.ok]

    def to_json(self, full: bool = False):
        out = {"pass": self.passed, "depth": self.depth, "members": []}
        for rows in self.rows:
            shown = [r.to_json() for r in rows if full or r.expected != Q_CLASS or r.observed != Q_CLASS]
            out["members"].append({
                "rows": shown,
                "columns": ["position", "digit", "carry_in", "observed", "expected", "ok"],
                "failures": sum(not r.ok for r in rows),
            })
        return out


def _resolve_depth(word: TranslationWord, depth: Optional[int]) -> int:
    if depth is None:
        return word.required_depth
    if depth < word.required_depth:
        raise DepthInsufficient(f"depth {depth} is below the word's required depth {word.required_depth}")
    return depth


def verify_membership(family: ConvenientFamily, word: TranslationWord,
                      members: Optional[Sequence[BinarySeq]] = None, depth: Optional[int] = None) -> MembershipTable:
    members = tuple(members) if members is not None else word.members
    if len(members) != len(word.expectations):
        raise ValueError("members do not match the word's expectation tables")
    depth = _resolve_depth(word, depth)
    spec = family.spec
    all_rows = []
    all_digits = []
    for x, table in zip(members, word.expectations):
        digits, carry = add(family.member(x), word.word, depth)
        rows = []
        for i, d in enumerate(digits, start=1):
            c = carry.into(i)
            expect = table.get(i, Expect.fixed(ONLY_Q))
            observed = digit_class(spec, i, d)
            rows.append(Row(i, d, c, observed, expect.describe(c), observed in expect.allowed(c)))
        all_rows.append(tuple(rows))
        all_digits.append(digits)
    return MembershipTable(depth, tuple(all_rows), tuple(all_digits))


class Orientation(enum.Enum):
    LOW_BASE = "LOW_BASE"     # outside-B fibres land in [0, a]
    HIGH_BASE = "HIGH_BASE"   # outside-B fibres land in [a, 1]

    @property
    def clause(self) -> int:
        return 1 if self is Orientation.LOW_BASE else 2


@dataclass(frozen=True)
class SeparationTarget:
    threshold: Dyadic
    orientation: Orientation

    def __post_init__(self):
        t = Dyadic.coerce(self.threshold)
        if not ZERO < t < ONE:
            raise ValueError("threshold must lie strictly inside (0, 1)")
        object.__setattr__(self, "threshold", t)

    def to_json(self):
        return {"threshold": str(self.threshold), "orientation": self.orientation.value,
                "clause": self.orientation.clause}


_DEFAULT_TARGETS = {
    "A-H0": (Dyadic(1, 2), Orientation.LOW_BASE),
    "B1-H0": (Dyadic(3, 2), Orientation.LOW_BASE),
    "B1-H2": (Dyadic(1, 2), Orientation.HIGH_BASE),
    "B2-H0": (Dyadic(1, 2), Orientation.LOW_BASE),
    "B2-H2": (Dyadic(3, 2), Orientation.HIGH_BASE),
    "C-H0": (Dyadic(1, 1), Orientation.LOW_BASE),
    "C-H2": (Dyadic(1, 1), Orientation.HIGH_BASE),
}


def _roles(case: str, labels) -> tuple:
    b_role = "B2" if case == "C" else "B1"
    return tuple("A\\B" if l == 0 else b_role for l in labels)


def _block_map(family: ConvenientFamily, block, bit: int):
    """The map contributed by positions ``n..m`` of one shifted block."""
    spec = family.spec
    w = block.witness
    level = level_at(spec, block.n)
    d = (w.a1 if bit else w.a0) + w.delta
    maps = [lambda_map(level.kinds[d % level.p])]
    carry = d >= level.p
    for i in range(block.n + 1, block.m + 1):
        level = level_at(spec, i)
        d = family.shared_digit(i) + carry
        maps.append(lambda_map(level.kinds[d % level.p]))
        carry = d >= level.p
    return compose_all(maps)


def _simplest_between(lo: Fraction, hi: Fraction) -> Dyadic:
    k = 1
    while True:
        j = math.floor(lo * 2 ** k) + 1
        if Fraction(j, 2 ** k) < hi:
            return Dyadic(j, k)
        k += 1


def _detect_target(family: ConvenientFamily, word: TranslationWord):
    """Threshold and orientation read off the first block's exact maps.

    Repeating the outside-B block converges to ``b``, the fixed point of
    its map; one in-B block then sends ``b`` to ``c``.  The threshold is the
    simplest dyadic strictly between them and the orientation says which
    side ``b`` is on.
    """
    block = family.schedule.block(word.times[0] if word.times else 1)
    g0, g1 = _block_map(family, block, 0), _block_map(family, block, 1)
    if g0.halvings == 0:
        return Dyadic(1, 1), Orientation.LOW_BASE
    s = Fraction(1, 2 ** g0.halvings)
    b = g0.offset.to_fraction() / (1 - s)
    c = Fraction(1, 2 ** g1.halvings) * b + g1.offset.to_fraction()
    if b == c:
        return Dyadic(1, 1), Orientation.LOW_BASE
    orientation = Orientation.LOW_BASE if b < c else Orientation.HIGH_BASE
    return _simplest_between(min(b, c), max(b, c)), orientation


def default_target(family: ConvenientFamily, word: TranslationWord, threshold=None) -> SeparationTarget:
    if family.flavour.key == "A-H2":
        a, orientation = _detect_target(family, word)
    else:
        a, orientation = _DEFAULT_TARGETS[family.flavour.key]
    return SeparationTarget(Dyadic.coerce(threshold) if threshold is not None else a, orientation)


@dataclass(frozen=True)
class MemberCollapse:
    label: int
    role: str
    interval: DyadicInterval
    halvings: int
    identity: bool
    separated: bool
    length_ok: bool
    limit: Optional[Fraction] = None   # point the interval must keep containing

    @property
    def limit_ok(self) -> bool:
        return self.limit is None or self.interval.lo.to_fraction() <= self.limit <= self.interval.hi.to_fraction()

    def to_json(self):
        out = {
            "label": self.label, "role": self.role, "interval": self.interval.to_json(),
            "length": str(self.interval.length), "halvings": self.halvings,
            "identity": self.identity, "separated": self.separated, "length_ok": self.length_ok,
        }
        if self.limit is not None:
            out["limit_point"] = str(self.limit)
            out["contains_limit"] = self.limit_ok
        return out


@dataclass(frozen=True)
class CollapseReport:
    target: SeparationTarget
    m: int
    depth: int
    members: tuple
    membership_passed: bool

    @property
    def separated(self) -> bool:
        return all(r.separated for r in self.members)

    @property
    def lengths_ok(self) -> bool:
        return all(r.length_ok for r in self.members)

    @property
    def passed(self) -> bool:
        return self.separated and self.lengths_ok and self.limits_ok and self.membership_passed

    @property
    def limits_ok(self) -> bool:
        return all(r.limit_ok for r in self.members)

    def to_json(self):
        return {
            "pass": self.passed, "separated": self.separated, "lengths_ok": self.lengths_ok,
            "limits_ok": self.limits_ok,
            "membership_pass": self.membership_passed, "m": self.m, "depth": self.depth,
            "target": self.target.to_json(), "members": [r.to_json() for r in self.members],
        }


def verify_collapse(family: ConvenientFamily, word: TranslationWord,
                    members: Optional[Sequence[BinarySeq]] = None,
                    target: Optional[SeparationTarget] = None, depth: Optional[int] = None) -> CollapseReport:
    """Exact fibre images under ``T^t`` and the separation verdict.

    Every family fibre is the full interval before translation, so the image
    of a member's fibre is ``lambda_(alpha^x + t)^depth([0, 1])``.
    """
    table = verify_membership(family, word, members, depth)
    target = target or default_target(family, word)
    a = target.threshold
    bound = Dyadic(1, word.m)
    spec = family.spec
    limit = None
    if family.flavour.case == "B" and family.flavour.subcase == 2:
        # in-B fibres alternate lambda_0 / lambda_2 per block
        limit = Fraction(1, 3) if family.variant == H0_CLASS else Fraction(2, 3)
    results = []
    for label, role, rows in zip(word.labels, _roles(word.kind, word.labels), table.rows):
        f = compose_all(lambda_map(level_at(spec, r.position).kinds[r.digit]) for r in rows if r.observed != Q_CLASS)
        iv = image(f)
        if role == "B2":
            separated = f.is_identity
            length_ok = True
        else:
            length_ok = iv.length <= bound
            if target.orientation is Orientation.LOW_BASE:
                separated = iv.hi <= a if role == "A\\B" else iv.lo > a
            else:
                separated = iv.lo >= a if role == "A\\B" else iv.hi < a
        results.append(MemberCollapse(label, role, iv, f.halvings, f.is_identity, separated, length_ok,
                                      limit if role == "B1" and word.m else None))
    return CollapseReport(target, word.m, table.depth, tuple(results), table.passed)


@dataclass(frozen=True)
class PushReport:
    direction: str
    threshold: Dyadic
    j: int
    intervals: tuple
    membership_passed: bool

    @property
    def passed(self) -> bool:
        if not self.membership_passed:
            return False
        if self.direction == "UP":
            return all(iv.lo > self.threshold for iv in self.intervals)
        return all(iv.hi < self.threshold for iv in self.intervals)

    def to_json(self):
        return {
            "pass": self.passed, "direction": self.direction, "threshold": str(self.threshold),
            "j": self.j, "membership_pass": self.membership_passed,
            "intervals": [iv.to_json() for iv in self.intervals],
        }


def verify_push(family: ConvenientFamily, word: TranslationWord, a,
                members: Optional[Sequence[BinarySeq]] = None, depth: Optional[int] = None) -> PushReport:
    table = verify_membership(family, word, members, depth)
    spec = family.spec
    intervals = []
    for rows in table.rows:
        f = compose_all(lambda_map(level_at(spec, r.position).kinds[r.digit]) for r in rows)
        intervals.append(image(f))
    return PushReport(word.kind, Dyadic.coerce(a), word.m, tuple(intervals), table.passed)
