import random

import pytest

from floydlab.dyadic import HALF, ONE, ZERO, Dyadic, DyadicInterval, invert
from floydlab.dynamics import (
    FibreClass,
    PointState,
    compose_along,
    fibre,
    fibre_class,
    is_maximal,
    project_y,
    step,
    translate,
)
from floydlab.errors import PendingCarryBeyondDepth
from floydlab.odometer import DigitWord, OdometerPoint, add, word_sum
from floydlab.system import SystemSpec

from oracles import fraction_apply, fraction_interval, kind_maps, periodic_levels

CLASSICAL = SystemSpec.from_maps(["012"])
R = CLASSICAL.radices


def pt(prefix, period=(0,)):
    return OdometerPoint.periodic_tail(R, prefix, period)


def test_compose_along_examples():
    assert compose_along(CLASSICAL, (1, 1, 1)).is_identity
    f = compose_along(CLASSICAL, (0, 2))
    assert (f.scale, f.offset) == (Dyadic(1, 2), Dyadic(1, 2))
    assert compose_along(CLASSICAL, ()).is_identity
    with pytest.raises(ValueError):
        compose_along(CLASSICAL, (3,))


@pytest.mark.parametrize("alpha,depth,interval,h", [
    (pt((), (1,)), 5, (ZERO, ONE), 0),
    (pt((0,), (1,)), 5, (ZERO, HALF), 1),
    (pt(()), 4, (ZERO, Dyadic(1, 4)), 4),
])
def test_fibre_examples(alpha, depth, interval, h):
    approx = fibre(CLASSICAL, alpha, depth)
    assert approx.interval == DyadicInterval(*interval)
    assert approx.halving_count == h and approx.exact_length == approx.interval.length


def test_fibre_class_examples():
    assert fibre_class(CLASSICAL, pt(())).kind is FibreClass.SINGLETON_CERTIFIED
    v = fibre_class(CLASSICAL, pt((), (1,)))
    assert v.kind is FibreClass.INTERVAL_CERTIFIED and v.length == ONE
    v = fibre_class(CLASSICAL, pt((0,), (1,)))
    assert v.kind is FibreClass.INTERVAL_CERTIFIED and v.length == HALF
    rule = OdometerPoint.from_rule(R, lambda n: 1)
    assert fibre_class(CLASSICAL, rule, 10).kind is FibreClass.UNDECIDED


def test_fibre_class_uses_joint_period():
    # alpha alternates 1,0 while the system alternates two maps; only the joint window tells
    spec = SystemSpec.from_maps(["012", "112"])
    assert fibre_class(spec, OdometerPoint.periodic_tail(spec.radices, (), (1, 0))).kind \
        is FibreClass.INTERVAL_CERTIFIED
    assert fibre_class(spec, OdometerPoint.periodic_tail(spec.radices, (), (0, 1))).kind \
        is FibreClass.SINGLETON_CERTIFIED


def test_is_maximal_examples():
    assert is_maximal(CLASSICAL, pt((), (1,))).maximal
    assert not is_maximal(CLASSICAL, pt((0,), (1,))).maximal
    rule = OdometerPoint.from_rule(R, lambda n: 1)
    assert is_maximal(CLASSICAL, rule, 0).maximal


def test_step_and_project():
    s = step(CLASSICAL, PointState(pt(()), 0), 6)
    assert s.alpha.digits(3) == (1, 0, 0) and s.z == ZERO
    assert project_y(CLASSICAL, s, 3)[0] == ZERO
    assert translate(CLASSICAL, s, DigitWord((0,), R), 6).alpha.digits(6) == s.alpha.digits(6)
    with pytest.raises(PendingCarryBeyondDepth):
        step(CLASSICAL, PointState(pt((), (2,)), 0), 10)


@pytest.mark.parametrize("alpha,z,depth,y,bound", [
    (pt((), (1,)), "3/4", 7, Dyadic(3, 2), ONE),
    (pt((0,), (1,)), 1, 3, HALF, HALF),
    (pt(()), 1, 4, Dyadic(1, 4), Dyadic(1, 4)),
])
def test_project_y_examples(alpha, z, depth, y, bound):
    assert project_y(CLASSICAL, PointState(alpha, z), depth) == (y, bound)


def test_translate_keeps_periodic_metadata():
    fa4 = SystemSpec.from_maps(["0112"])
    a = OdometerPoint.periodic_tail(fa4.radices, (3,), (1, 2))
    s = translate(fa4, PointState(a, 0), DigitWord((1,), fa4.radices), 5)
    assert s.alpha.is_eventually_periodic
    assert s.alpha.digits(12) == add(a, DigitWord((1,), fa4.radices), 12).digits


def _random_spec(rng):
    maps = lambda: "".join(rng.choice("012") for _ in range(rng.randint(2, 5)))
    return [maps() for _ in range(rng.randint(0, 2))], [maps() for _ in range(rng.randint(1, 3))]


def test_z_invariance_against_y_tracking_model():
    """Track y through the skew product directly: y' = lambda_(alpha+t)(lambda_alpha^-1(y))."""
    rng = random.Random(11)
    done = 0
    while done < 1000:
        pre, period = _random_spec(rng)
        spec = SystemSpec.from_maps(period, preperiod=pre)
        depth = rng.randint(1, 24)
        rs = spec.radices.radices(depth + 1)
        alpha = OdometerPoint.zero_tail(spec.radices, [rng.randrange(p) for p in rs[:depth]])
        word = DigitWord(tuple(rng.randrange(p) for p in rs[: rng.randint(0, depth)]), spec.radices)
        z = Dyadic(rng.randint(0, 16), 4)
        state = PointState(alpha, z)
        try:
            moved = translate(spec, state, word, depth + 1)
        except PendingCarryBeyondDepth:
            continue
        assert moved.z == z
        y0 = project_y(spec, state, depth + 1)[0]
        # model: recover z from y by inverting, then push forward with the new digits
        levels = periodic_levels(pre, period)
        maps = lambda n: kind_maps(levels(n))
        z_back = invert(compose_along(spec, alpha.digits(depth + 1)), y0)
        assert z_back == z
        y1 = fraction_apply(maps, moved.alpha.digits(depth + 1), z_back.to_fraction())
        assert project_y(spec, moved, depth + 1)[0].to_fraction() == y1
        lo, hi = fraction_interval(maps, moved.alpha.digits(depth + 1))
        assert fibre(spec, moved.alpha, depth + 1).interval.lo.to_fraction() == lo
        assert fibre(spec, moved.alpha, depth + 1).interval.hi.to_fraction() == hi
        done += 1


def test_orbit_consistency():
    rng = random.Random(5)
    spec = SystemSpec.from_maps(["0112", "011", "112"])
    for _ in range(300):
        depth = 30
        rs = spec.radices.radices(depth)
        alpha = OdometerPoint.zero_tail(spec.radices, [rng.randrange(p) for p in rs[:20]])
        t1 = DigitWord(tuple(rng.randrange(p) for p in rs[:8]), spec.radices)
        t2 = DigitWord(tuple(rng.randrange(p) for p in rs[:8]), spec.radices)
        s = PointState(alpha, "1/8")
        a = translate(spec, translate(spec, s, t1, depth), t2, depth)
        b = translate(spec, s, word_sum(t1, t2), depth)
        assert a.alpha.digits(depth) == b.alpha.digits(depth) and a.z == b.z
