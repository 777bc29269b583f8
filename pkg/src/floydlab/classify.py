"""Structural classification and the convenient-set schedule.

``classify_structure`` decides minimality, tameness and the interval-fibre
count from the period.  ``detect_cases`` finds, level by level, the digit
witnesses for the three constructions of non-tameness (cases A, B, C), and
``build_schedule`` interleaves the level roles those constructions need.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import ScheduleUnavailable
from .system import LevelAssignment, SystemSpec, level_at, normalize, validate

__all__ = [
    "StructureReport",
    "CaseWitness",
    "Flavour",
    "Block",
    "ConvenientSchedule",
    "classify_structure",
    "detect_cases",
    "flavours_at",
    "recurring_flavours",
    "build_schedule",
    "carry_variants",
]

H0_CLASS = "H0"
H2_CLASS = "H2"


@dataclass(frozen=True)
class StructureReport:
    minimal: bool
    h0_levels: tuple
    h2_levels: tuple
    lambda_infinite: bool
    lambda_levels: tuple
    tame: Optional[bool]
    interval_fibre_class: str
    recurring_cases: tuple

    def to_json(self):
        return {
            "minimal": self.minimal,
            "minimality_witnesses": {"H0_nonempty": list(self.h0_levels), "H2_nonempty": list(self.h2_levels)},
            "lambda_infinite": self.lambda_infinite,
            "lambda_period_levels": list(self.lambda_levels),
            "tame": self.tame,
            "interval_fibre_class": self.interval_fibre_class,
            "recurring_cases": list(self.recurring_cases),
        }


def classify_structure(spec: SystemSpec) -> StructureReport:
    """Minimality, Lambda, tameness and fibre count, each from its own route.

    * ``lambda_infinite``: some period level has two identity digits.
    * ``interval_fibre_class``: counts identity-digit paths through a period;
      uncountably many interval fibres iff that count exceeds one.
    * ``tame``: from the normalized system, non-tame iff some period level
      carries a case A/B/C witness.  ``None`` for non-minimal systems.
    """
    positions = list(zip(spec.period_positions(), spec.period))
    h0 = tuple(n for n, l in positions if l.H0)
    h2 = tuple(n for n, l in positions if l.H2)
    minimal = bool(h0) and bool(h2)

    lam = tuple(n for n, l in positions if len(l.Q) >= 2)

    paths = 1
    for l in spec.period:
        paths *= len(l.Q)
    fibre_class = "UNCOUNTABLE" if paths > 1 else "COUNTABLE"

    recurring = ()
    tame = None
    if minimal and validate(spec).ok:
        normal, _ = normalize(spec)
        found = set()
        for level in normal.period:
            found.update(c for c, ws in detect_cases(level).items() if ws)
        recurring = tuple(sorted(found))
        tame = not recurring
    return StructureReport(minimal, h0, h2, bool(lam), lam, tame, fibre_class, recurring)


@dataclass(frozen=True)
class CaseWitness:
    """Digits ``a0 != a1`` in ``Q`` and a shift ``delta`` for one of the cases.

    ``target`` names the class the shifted ``a1`` lands in for case C
    (``"H0"`` or ``"H2"``); for case B ``delta`` is ``None`` until a family
    fixes it, and ``target`` then names the class both shifts land in.
    """

    case: str
    a0: int
    a1: int
    delta: Optional[int] = None
    target: Optional[str] = None
    level: Optional[int] = None

    def to_json(self):
        out = {"case": self.case, "a0": self.a0, "a1": self.a1}
        if self.delta is not None:
            out["delta"] = self.delta
        if self.target is not None:
            out["target"] = self.target
        if self.level is not None:
            out["level"] = self.level
        return out


def _shift(s, d, p):
    return frozenset((x - d) % p for x in s)


def detect_cases(level: LevelAssignment, position: Optional[int] = None) -> dict:
    """All case witnesses at one level, keyed by ``"A"``, ``"B"``, ``"C"``.

    Empty unless ``|Q| >= 2``.  Witness tuples are in lexicographic order of
    ``(a0, a1, delta)``.
    """
    out = {"A": [], "B": [], "C": []}
    p, Q, H0, H2 = level.p, sorted(level.Q), level.H0, level.H2
    if len(Q) < 2:
        return {k: tuple(v) for k, v in out.items()}
    H = H0 | H2
    for a0 in Q:
        low_shifts = _shift(H0, a0, p)      # delta with a0 + delta in H0
        stay = {q - a0 for q in Q if q >= a0}  # delta with a0 + delta in Q, no wrap
        for a1 in Q:
            if a1 == a0:
                continue
            high_shifts = _shift(H2, a1, p)
            for d in sorted(low_shifts & high_shifts):
                out["A"].append(CaseWitness("A", a0, a1, d, level=position))
            if _shift(H0, a0, p) == _shift(H0, a1, p) and _shift(H2, a0, p) == _shift(H2, a1, p):
                out["B"].append(CaseWitness("B", a0, a1, level=position))
            for d in sorted(stay & _shift(H, a1, p)):
                target = H0_CLASS if (a1 + d) % p in H0 else H2_CLASS
                out["C"].append(CaseWitness("C", a0, a1, d, target, level=position))
    return {k: tuple(v) for k, v in out.items()}


# --- flavours -----------------------------------------------------------------
#
# A flavour pins down every per-block choice that must be uniform across the
# family: which case, which class the carried-into level lands in, and (case
# B) which subcase.  It depends on level n and on level n + 1.


@dataclass(frozen=True)
class Flavour:
    case: str
    variant: str          # class of a(n+1)+1 (cases A, B) or of a1+delta (case C)
    subcase: int = 0      # case B only: 1 or 2

    @property
    def key(self) -> str:
        return f"{self.case}{self.subcase or ''}-{self.variant}"


_CLASS_SETS = {H0_CLASS: lambda l: l.H0, H2_CLASS: lambda l: l.H2}
_OTHER = {H0_CLASS: H2_CLASS, H2_CLASS: H0_CLASS}


def carry_variants(level: LevelAssignment) -> dict:
    """For each class ``c``, the smallest ``a`` in ``Q`` with ``a + 1 (mod p)`` in ``c``.

    Candidates with ``a + 1 < p`` are preferred so the carry stops here.
    """
    out = {}
    for cls in (H0_CLASS, H2_CLASS):
        target = _CLASS_SETS[cls](level)
        options = [a for a in sorted(level.Q) if (a + 1) % level.p in target]
        if options:
            no_wrap = [a for a in options if a + 1 < level.p]
            out[cls] = (no_wrap or options)[0]
    return out


def case_b_witness(level: LevelAssignment, cls: str, position=None) -> Optional[CaseWitness]:
    """Smallest pattern-equal pair with ``a0 + delta`` wrapping into ``cls`` and
    ``a1 + delta`` landing in ``cls`` without wrapping."""
    target = _CLASS_SETS[cls](level)
    p = level.p
    for w in detect_cases(level, position)["B"]:
        for d in range(p):
            if w.a0 + d >= p and w.a0 + d - p in target and w.a1 + d < p and w.a1 + d in target:
                return CaseWitness("B", w.a0, w.a1, d, cls, level=position)
    return None


def flavours_at(spec: SystemSpec, n: int) -> dict:
    """Flavour -> witness available with ``n`` in the role of a case level."""
    level = level_at(spec, n)
    after = level_at(spec, n + 1)
    cases = detect_cases(level, n)
    variants = carry_variants(after)
    out = {}
    if cases["A"]:
        for v in variants:
            out[Flavour("A", v)] = cases["A"][0]
    if cases["B"]:
        for i in variants:
            other = _OTHER[i]
            if _CLASS_SETS[other](level):
                w = case_b_witness(level, other, n)
                if w is not None:
                    out[Flavour("B", i, 1)] = w
            else:
                w = case_b_witness(level, i, n)
                if w is not None:
                    out[Flavour("B", i, 2)] = w
    for w in cases["C"]:
        out.setdefault(Flavour("C", w.target), w)
    return out


_PREFERENCE = [
    Flavour("A", H0_CLASS),
    Flavour("A", H2_CLASS),
    Flavour("B", H0_CLASS, 1),
    Flavour("B", H2_CLASS, 1),
    Flavour("B", H0_CLASS, 2),
    Flavour("B", H2_CLASS, 2),
    Flavour("C", H0_CLASS),
    Flavour("C", H2_CLASS),
]


def recurring_flavours(spec: SystemSpec) -> list:
    """Flavours available at some period level, in preference order."""
    seen = set()
    for n in spec.period_positions():
        seen.update(flavours_at(spec, n))
    return [f for f in _PREFERENCE if f in seen]


# --- schedules ----------------------------------------------------------------


@dataclass(frozen=True)
class Block:
    """One round ``n < m < k < k' < q`` of the interleaved level roles."""

    n: int
    m: int
    k: int
    kp: int
    q: int
    witness: CaseWitness
    carry_digit: Optional[int]   # a(n+1) for cases A and B
    xi: tuple                    # (xi1, xi2) at q
    zeta_k: int
    zeta_kp: int

    def to_json(self):
        return {
            "n": self.n, "m": self.m, "k": self.k, "k_prime": self.kp, "q": self.q,
            "witness": self.witness.to_json(),
            "carry_digit": self.carry_digit,
            "xi": list(self.xi), "zeta_k": self.zeta_k, "zeta_k_prime": self.zeta_kp,
        }


class ConvenientSchedule:
    """A lazily extended sequence of :class:`Block` rounds for one flavour.

    ``blocks`` holds what has been computed so far; :meth:`block` extends on
    demand.  Extension is deterministic, so concurrent callers at worst
    repeat work.
    """

    def __init__(self, spec: SystemSpec, flavour: Flavour, start_depth: int = 1):
        self.spec = spec
        self.flavour = flavour
        self.start_depth = start_depth
        self._blocks = []
        # role lookups never need to look further than this past a position
        self._window = len(spec.preperiod) + 2 * len(spec.period) + 2

    @property
    def blocks(self) -> tuple:
        return tuple(self._blocks)

    def __len__(self):
        return len(self._blocks)

    def block(self, ell: int) -> Block:
        while len(self._blocks) < ell:
            self._extend()
        return self._blocks[ell - 1]

    def ensure(self, L: int) -> "ConvenientSchedule":
        if L:
            self.block(L)
        return self

    def blocks_through(self, position: int) -> list:
        """Every block with ``n <= position``, plus at least one beyond."""
        while not self._blocks or self._blocks[-1].n <= position:
            self._extend()
        return [b for b in self._blocks if b.n <= position]

    def _find(self, after: int, test, role: str) -> int:
        for n in range(after + 1, after + 1 + self._window):
            if test(n):
                return n
        raise ScheduleUnavailable(f"no level for role {role} within one period after {after}")

    def _extend(self):
        spec = self.spec
        lv = lambda n: level_at(spec, n)
        prev = self._blocks[-1].q if self._blocks else self.start_depth - 1
        n = self._find(prev, lambda i: self.flavour in flavours_at(spec, i), f"n ({self.flavour.key})")
        witness = flavours_at(spec, n)[self.flavour]
        m = self._find(n, lambda i: lv(i).kinds[-1].halves, "m")
        k = self._find(m, lambda i: bool(lv(i).H2), "k")
        kp = self._find(k, lambda i: bool(lv(i).H0), "k'")
        q = self._find(kp, lambda i: len(lv(i).Q) >= 2, "q")
        carry_digit = None
        if self.flavour.case in ("A", "B"):
            carry_digit = carry_variants(lv(n + 1))[self.flavour.variant]
        qs = sorted(lv(q).Q)
        self._blocks.append(
            Block(n, m, k, kp, q, witness, carry_digit, (qs[0], qs[1]), min(lv(k).Q), min(lv(kp).Q))
        )

    def to_json(self):
        return {"flavour": self.flavour.key, "blocks": [b.to_json() for b in self._blocks]}


def build_schedule(spec: SystemSpec, L: int, start_depth: int = 1, case: Optional[str] = None,
                   flavour: Optional[Flavour] = None) -> ConvenientSchedule:
    """Greedy smallest-index schedule with ``L`` blocks.

    ``case`` restricts the flavour to one case; by default the first
    recurring flavour in preference order (A before B before C) is used.
    """
    report = classify_structure(spec)
    if not report.minimal or report.tame is not False:
        raise ScheduleUnavailable("schedules exist only for minimal non-tame systems")
    if not validate(spec).standing_assumption:
        raise ScheduleUnavailable("normalize the system first (standing assumption fails)")
    if flavour is None:
        options = [f for f in recurring_flavours(spec) if case is None or f.case == case]
        if not options:
            raise ScheduleUnavailable(f"case {case} does not recur in the period")
        flavour = options[0]
    return ConvenientSchedule(spec, flavour, start_depth).ensure(L)
