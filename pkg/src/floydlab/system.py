"""Floyd-Auslander system specifications.

A system is given by eventually periodic level data: for each level ``n`` a
radix ``p_n`` and, for each digit ``j < p_n``, which of the three fibre maps
is used.  This module parses and writes the line-oriented ``.fas`` format,
checks the defining conditions, and rewrites a system into a conjugate one
satisfying ``1 <= |Q(n)| < p_n`` at every level.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field

from .dyadic import Kind
from .errors import DepthInsufficient, NotNormalizable, SpecParseError
from .odometer import OdometerPoint, RadixSpec

__all__ = [
    "LevelAssignment",
    "SystemSpec",
    "ValidationReport",
    "PrefixCollapse",
    "BlockMerge",
    "parse_fas",
    "format_fas",
    "load_fas",
    "level_at",
    "validate",
    "normalize",
    "apply_conjugacy",
]


@dataclass(frozen=True)
class LevelAssignment:
    p: int
    kinds: tuple
    Q: frozenset = field(init=False, compare=False, repr=False)
    H0: frozenset = field(init=False, compare=False, repr=False)
    H2: frozenset = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        kinds = tuple(Kind(k) if not isinstance(k, Kind) else k for k in self.kinds)
        if self.p < 2:
            raise ValueError("radix must be at least 2")
        if len(kinds) != self.p:
            raise ValueError(f"level with p={self.p} needs {self.p} kinds, got {len(kinds)}")
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "Q", frozenset(j for j, k in enumerate(kinds) if k is Kind.FULL))
        object.__setattr__(self, "H0", frozenset(j for j, k in enumerate(kinds) if k is Kind.HALF_LOW))
        object.__setattr__(self, "H2", frozenset(j for j, k in enumerate(kinds) if k is Kind.HALF_HIGH))

    @classmethod
    def from_map(cls, map_string: str) -> "LevelAssignment":
        return cls(len(map_string), tuple(Kind.from_char(c) for c in map_string))

    @property
    def map_string(self) -> str:
        return "".join(k.value for k in self.kinds)

    @property
    def H(self) -> frozenset:
        return self.H0 | self.H2

    def kind(self, j: int) -> Kind:
        return self.kinds[j]

    def classes(self, kind: Kind) -> frozenset:
        return {Kind.FULL: self.Q, Kind.HALF_LOW: self.H0, Kind.HALF_HIGH: self.H2}[kind]

    def __str__(self):
        return f"level p={self.p} map={self.map_string}"


@dataclass(frozen=True)
class SystemSpec:
    preperiod: tuple
    period: tuple

    def __post_init__(self):
        object.__setattr__(self, "preperiod", tuple(self.preperiod))
        object.__setattr__(self, "period", tuple(self.period))
        if not self.period:
            raise ValueError("period must contain at least one level")

    @classmethod
    def from_maps(cls, period, preperiod=()) -> "SystemSpec":
        return cls(
            tuple(LevelAssignment.from_map(m) for m in preperiod),
            tuple(LevelAssignment.from_map(m) for m in period),
        )

    @property
    def radices(self) -> RadixSpec:
        return RadixSpec(
            tuple(l.p for l in self.preperiod), tuple(l.p for l in self.period)
        )

    def level(self, n: int) -> LevelAssignment:
        return level_at(self, n)

    def period_positions(self) -> range:
        """Absolute positions of the first full period."""
        start = len(self.preperiod) + 1
        return range(start, start + len(self.period))

    def zero_point(self) -> OdometerPoint:
        return OdometerPoint.zero_tail(self.radices, ())


def level_at(spec: SystemSpec, n: int) -> LevelAssignment:
    if n < 1:
        raise ValueError(f"levels start at 1, got {n}")
    if n <= len(spec.preperiod):
        return spec.preperiod[n - 1]
    return spec.period[(n - len(spec.preperiod) - 1) % len(spec.period)]


# --- .fas format --------------------------------------------------------------

_LEVEL_RE = re.compile(r"^level\s+p=(\d+)\s+map=([012]+)$")


def parse_fas(text: str) -> SystemSpec:
    sections = {"preperiod": [], "period": []}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in ("preperiod:", "period:"):
            current = line[:-1]
            continue
        match = _LEVEL_RE.match(line)
        if not match:
            raise SpecParseError(f"line {lineno}: cannot parse {raw!r}")
        if current is None:
            raise SpecParseError(f"line {lineno}: level before any section header")
        p, kinds = int(match.group(1)), match.group(2)
        if len(kinds) != p:
            raise SpecParseError(f"line {lineno}: map has length {len(kinds)}, expected p={p}")
        if p < 2:
            raise SpecParseError(f"line {lineno}: radix must be at least 2")
        sections[current].append(LevelAssignment.from_map(kinds))
    if not sections["period"]:
        raise SpecParseError("spec has no period levels")
    return SystemSpec(tuple(sections["preperiod"]), tuple(sections["period"]))


def format_fas(spec: SystemSpec) -> str:
    lines = []
    if spec.preperiod:
        lines.append("preperiod:")
        lines.extend(str(l) for l in spec.preperiod)
    lines.append("period:")
    lines.extend(str(l) for l in spec.period)
    return "\n".join(lines) + "\n"


def load_fas(path) -> SystemSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_fas(fh.read())


# --- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Bullet:
    passed: bool
    witnesses: tuple

    def to_json(self):
        return {"pass": self.passed, "witness_levels": list(self.witnesses)}


@dataclass(frozen=True)
class ValidationReport:
    halving_at_zero: Bullet
    halving_at_top: Bullet
    q_empty_finite: Bullet
    standing_assumption: bool
    standing_failures: tuple

    @property
    def ok(self) -> bool:
        return self.halving_at_zero.passed and self.halving_at_top.passed and self.q_empty_finite.passed

    def to_json(self):
        return {
            "valid": self.ok,
            "halving_at_digit_zero_infinitely_often": self.halving_at_zero.to_json(),
            "halving_at_top_digit_infinitely_often": self.halving_at_top.to_json(),
            "identity_digits_missing_finitely_often": self.q_empty_finite.to_json(),
            "standing_assumption": self.standing_assumption,
            "standing_assumption_failures": list(self.standing_failures),
        }


def validate(spec: SystemSpec) -> ValidationReport:
    """Check the two defining bullets of a Floyd-Auslander system.

    "Infinitely often" is decided on the period.  For the halving bullets the
    witnesses are period positions; for the ``Q(n) = {}`` bullet they are the
    offending period positions (empty when it passes).
    """
    period = list(zip(spec.period_positions(), spec.period))
    low = tuple(n for n, l in period if l.kinds[0].halves)
    top = tuple(n for n, l in period if l.kinds[-1].halves)
    q_bad = tuple(n for n, l in period if not l.Q)
    every = list(enumerate(spec.preperiod, start=1)) + period
    standing = tuple(n for n, l in every if not (1 <= len(l.Q) < l.p))
    return ValidationReport(
        Bullet(bool(low), low),
        Bullet(bool(top), top),
        Bullet(not q_bad, q_bad),
        not standing,
        standing,
    )


# --- normalization ------------------------------------------------------------


@dataclass(frozen=True)
class PrefixCollapse:
    """Levels ``1..n`` replaced by all-identity levels; acts trivially on states."""

    n: int

    def to_json(self):
        return {"kind": "PrefixCollapse", "levels": self.n}


@dataclass(frozen=True)
class BlockMerge:
    """Consecutive groups of source levels merged into single target levels.

    ``prefix_groups`` are group sizes covering source positions
    ``1..sum(prefix_groups)``; ``period_groups`` then repeat forever, each
    repetition covering ``sum(period_groups)`` source levels.
    """

    source: RadixSpec
    target: RadixSpec
    prefix_groups: tuple
    period_groups: tuple

    def __post_init__(self):
        starts = []
        pos = 1
        for g in self.prefix_groups:
            starts.append(pos)
            pos += g
        object.__setattr__(self, "_prefix_starts", tuple(starts))
        object.__setattr__(self, "_prefix_span", pos - 1)
        starts = []
        off = 0
        for g in self.period_groups:
            starts.append(off)
            off += g
        object.__setattr__(self, "_period_offsets", tuple(starts))
        object.__setattr__(self, "_period_span", off)

    def group(self, r: int) -> range:
        """Source positions merged into target position ``r``."""
        if r <= len(self.prefix_groups):
            start = self._prefix_starts[r - 1]
            return range(start, start + self.prefix_groups[r - 1])
        cycle, idx = divmod(r - len(self.prefix_groups) - 1, len(self.period_groups))
        start = self._prefix_span + 1 + cycle * self._period_span + self._period_offsets[idx]
        return range(start, start + self.period_groups[idx])

    def locate(self, n: int):
        """``(r, k)``: source position ``n`` is the ``k``-th level of group ``r``."""
        if n <= self._prefix_span:
            for r, start in enumerate(self._prefix_starts, start=1):
                if start <= n < start + self.prefix_groups[r - 1]:
                    return r, n - start
        cycle, off = divmod(n - self._prefix_span - 1, self._period_span)
        for idx, start in enumerate(self._period_offsets):
            if start <= off < start + self.period_groups[idx]:
                r = len(self.prefix_groups) + cycle * len(self.period_groups) + idx + 1
                return r, off - start
        raise AssertionError("unreachable")

    def to_json(self):
        return {
            "kind": "BlockMerge",
            "prefix_groups": list(self.prefix_groups),
            "period_groups": list(self.period_groups),
        }


def _merge_group(levels) -> LevelAssignment:
    # j = j_1 + j_2*p_1 + ...; the merged map is the last level's map at j_last
    p_total = 1
    for l in levels:
        p_total *= l.p
    lower = p_total // levels[-1].p
    kinds = tuple(levels[-1].kinds[j // lower] for j in range(p_total))
    return LevelAssignment(p_total, kinds)


def _groups(levels):
    """Split a level list into runs of all-identity levels closed by a proper level."""
    groups = []
    current = []
    for l in levels:
        current.append(l)
        if len(l.Q) < l.p:
            groups.append(current)
            current = []
    if current:
        raise AssertionError("level window must end at a level with |Q| < p")
    return groups


def normalize(spec: SystemSpec):
    """A conjugate spec with ``1 <= |Q(n)| < p_n`` everywhere, and the steps taken.

    Returns ``(new_spec, descriptors)``; the descriptors apply in order and
    the list is empty when ``spec`` already satisfies the assumption.
    """
    if any(not l.Q for l in spec.period):
        raise NotNormalizable("a period level has no identity digit")
    descriptors = []
    pre = list(spec.preperiod)
    last_empty = max((n for n, l in enumerate(pre, start=1) if not l.Q), default=0)
    if last_empty:
        for n in range(last_empty):
            pre[n] = LevelAssignment(pre[n].p, (Kind.FULL,) * pre[n].p)
        descriptors.append(PrefixCollapse(last_empty))
    collapsed = SystemSpec(tuple(pre), spec.period)

    everything = list(collapsed.preperiod) + list(collapsed.period)
    if all(len(l.Q) < l.p for l in everything):
        return collapsed, descriptors

    T = len(collapsed.period)
    proper = [n for n in collapsed.period_positions() if len(level_at(collapsed, n).Q) < level_at(collapsed, n).p]
    if not proper:
        # every period level is all-identity; no finite merge exists
        raise NotNormalizable("every period level is all-identity")
    s = proper[0]
    head = [level_at(collapsed, n) for n in range(1, s + 1)]
    tail = [level_at(collapsed, n) for n in range(s + 1, s + T + 1)]
    head_groups = _groups(head)
    tail_groups = _groups(tail)
    merged = SystemSpec(
        tuple(_merge_group(g) for g in head_groups),
        tuple(_merge_group(g) for g in tail_groups),
    )
    descriptors.append(
        BlockMerge(
            collapsed.radices,
            merged.radices,
            tuple(len(g) for g in head_groups),
            tuple(len(g) for g in tail_groups),
        )
    )
    return merged, descriptors


def _merged_point(desc: BlockMerge, alpha: OdometerPoint) -> OdometerPoint:
    src = desc.source

    def rule(r):
        value = 0
        weight = 1
        for n in desc.group(r):
            value += alpha.digit(n) * weight
            weight *= src(n)
        return value

    return OdometerPoint.from_rule(desc.target, rule)


def _split_point(desc: BlockMerge, alpha: OdometerPoint) -> OdometerPoint:
    src = desc.source

    def rule(n):
        r, k = desc.locate(n)
        group = desc.group(r)
        weight = 1
        for m in group[:k]:
            weight *= src(m)
        return (alpha.digit(r) // weight) % src(n)

    return OdometerPoint.from_rule(src, rule)


def apply_conjugacy(desc, state, depth: int, inverse: bool = False):
    """Carry a point state across one normalization step.

    The forward direction goes from the source system to the normalized one.
    The z-parameter is unchanged.  The returned point is lazy; its first
    ``depth`` digits are evaluated eagerly so malformed input fails here.
    """
    if depth < 0:
        raise DepthInsufficient("depth must be nonnegative")
    if isinstance(desc, PrefixCollapse):
        return state
    if not isinstance(desc, BlockMerge):
        raise TypeError(f"unknown conjugacy descriptor {desc!r}")
    alpha = _split_point(desc, state.alpha) if inverse else _merged_point(desc, state.alpha)
    alpha.digits(depth)
    return dataclasses.replace(state, alpha=alpha)
