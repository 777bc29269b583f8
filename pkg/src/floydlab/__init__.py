"""Exact finite-stage computations on Floyd-Auslander systems.

The odometer, dyadic and system modules build the skew product itself;
``dynamics`` moves points and measures fibres; ``classify`` decides
minimality, tameness and the proof cases; ``choice`` and ``idempotent``
carry out the finite combinatorics behind the idempotent constructions.
"""

__version__ = "0.1.0"

from .dyadic import Dyadic, DyadicInterval, AffineMap, Kind, lambda_map, compose, image, invert
from .odometer import RadixSpec, DigitWord, OdometerPoint, CarryProfile, add, successor, word_sum, radix_at
from .system import LevelAssignment, SystemSpec, parse_fas, format_fas, load_fas, validate, normalize, apply_conjugacy
from .dynamics import PointState, compose_along, fibre, fibre_class, is_maximal, step, translate, project_y
from .classify import classify_structure, detect_cases, build_schedule, ConvenientSchedule
from .choice import (
    BinarySeq, ChoicePattern, find_realising, verify_choice_at_horizon, extend_diagonal,
    realize_function, independence_check, counter_family,
)
from .idempotent import (
    ConvenientFamily, SeparationTarget, Orientation, build_family, build_translation,
    build_push_word, verify_membership, verify_collapse, verify_push,
)
from .errors import *  # noqa: F401,F403
