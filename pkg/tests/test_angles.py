from fractions import Fraction as F
from itertools import permutations

import pytest

from extray.angles import (
    common_period_report,
    format_angle,
    is_cyclic_order_preserving,
    m_d,
    orbit,
    parse_angle,
    periodic_angles,
    preimages,
)
from extray.errors import DuplicateSourceAngle, NotInvariant, PeriodTooLarge


def test_m_d_examples():
    assert m_d(F(1, 3), 2) == F(2, 3)
    assert m_d(F(0), 2) == F(0)
    assert m_d(F(1, 2), 3) == F(1, 2)


def test_preimages_examples():
    assert preimages(F(0), 2) == [F(0), F(1, 2)]
    assert preimages(F(2, 3), 2) == [F(1, 3), F(5, 6)]
    assert preimages(F(0), 3) == [F(0), F(1, 3), F(2, 3)]


@pytest.mark.parametrize("d", [2, 3, 4, 5])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_preimage_image_roundtrip(d, n):
    for t in periodic_angles(d, n)[:50]:
        for p in preimages(t, d):
            assert m_d(p, d) == t


def test_periodic_angle_examples():
    assert periodic_angles(2, 1) == [F(0)]
    assert periodic_angles(2, 2) == [F(0), F(1, 3), F(2, 3)]
    assert periodic_angles(3, 1) == [F(0), F(1, 2)]


@pytest.mark.parametrize("d", [2, 3, 4])
def test_periodic_angle_counts_exact(d):
    n = 1
    while d**n - 1 <= 2**20:
        assert len(periodic_angles(d, n)) == d**n - 1
        n += 1


def test_periodic_angle_cap():
    with pytest.raises(PeriodTooLarge):
        periodic_angles(2, 21)


@pytest.mark.parametrize("d,n,k", [(2, 1, 3), (2, 2, 2), (3, 1, 2), (2, 3, 2)])
def test_divisor_periods_embed(d, n, k):
    assert set(periodic_angles(d, n)) <= set(periodic_angles(d, n * k))


def test_orbit_examples():
    o = orbit(F(1, 3), 2)
    assert (o.preperiod, o.period, o.angles) == (0, 2, (F(1, 3), F(2, 3)))
    o = orbit(F(1, 6), 2)
    assert (o.preperiod, o.period) == (1, 2)
    assert o.angles == (F(1, 6), F(1, 3), F(2, 3))
    o = orbit(F(0), 2)
    assert (o.preperiod, o.period) == (0, 1)


def test_orbit_denominator_structure():
    # denominator coprime to d: purely periodic
    for t in (F(1, 7), F(3, 5), F(2, 9)):
        assert orbit(t, 2).preperiod == 0
    # denominator a power of d: falls onto the fixed angle 0
    for t in (F(1, 8), F(3, 16)):
        o = orbit(t, 2)
        assert o.angles[-1] == F(0)


def _brute_force_cyclic(pairs):
    """Oracle: check orientation of every ordered triple directly."""

    def orient(a, b, c):
        if a == b or b == c or a == c:
            return 0
        return 1 if (b - a) % 1 < (c - a) % 1 else -1

    for trip in permutations(pairs, 3):
        s = orient(trip[0][0], trip[1][0], trip[2][0])
        t = orient(trip[0][1], trip[1][1], trip[2][1])
        if s != 0 and s != t:
            return False
    return True


def test_cyclic_order_examples():
    assert not is_cyclic_order_preserving([(F(0), F(0)), (F(1, 3), F(2, 3)),
                                           (F(2, 3), F(1, 3))])
    assert is_cyclic_order_preserving([(F(0), F(0)), (F(1, 4), F(1, 2)),
                                       (F(3, 8), F(3, 4))])
    assert is_cyclic_order_preserving([(F(0), F(1, 2))])
    assert is_cyclic_order_preserving([(F(0), F(1, 2)), (F(1, 2), F(0))])


def test_cyclic_order_duplicate_target_is_not_preserving():
    # translated version of the degenerate example: 1 = 0 on the circle
    assert not is_cyclic_order_preserving([(F(0), F(0)), (F(1, 4), F(1, 2)),
                                           (F(1, 2), F(0))])


def test_cyclic_order_duplicate_source_raises():
    with pytest.raises(DuplicateSourceAngle):
        is_cyclic_order_preserving([(F(0), F(0)), (F(0), F(1, 2)), (F(1, 3), F(1, 4))])


def test_cyclic_order_matches_brute_force():
    cases = [
        [(F(0), F(0)), (F(1, 7), F(2, 7)), (F(2, 7), F(4, 7)), (F(4, 7), F(1, 7))],
        [(F(1, 15), F(2, 15)), (F(2, 15), F(4, 15)), (F(13, 15), F(11, 15))],
        [(F(0), F(1, 2)), (F(1, 4), F(1, 4)), (F(1, 2), F(0)), (F(3, 4), F(3, 4))],
        [(F(k, 11), F((3 * k) % 11, 11)) for k in range(11)],
    ]
    for pairs in cases:
        assert is_cyclic_order_preserving(pairs) == _brute_force_cyclic(pairs)


def test_cyclic_order_rotation_invariance():
    pairs = [(F(0), F(0)), (F(1, 4), F(1, 2)), (F(3, 8), F(3, 4))]
    for rs, rt in [(F(1, 5), F(2, 7)), (F(3, 4), F(1, 3))]:
        rotated = [((s + rs) % 1, (t + rt) % 1) for s, t in pairs]
        assert is_cyclic_order_preserving(rotated) == is_cyclic_order_preserving(pairs)


def test_common_period_report():
    rep = common_period_report({F(0)}, 2)
    assert rep.consistent and rep.periods == (1,)
    rep = common_period_report({F(1, 3), F(2, 3), F(1, 7), F(2, 7), F(4, 7)}, 2)
    assert not rep.consistent
    assert sorted(rep.periods) == [2, 3]
    rep = common_period_report({F(1, 7), F(2, 7), F(4, 7), F(3, 7), F(6, 7), F(5, 7)}, 2)
    assert rep.consistent and rep.periods == (3, 3)


def test_common_period_not_invariant():
    with pytest.raises(NotInvariant):
        common_period_report({F(1, 3)}, 3)  # 3*(1/3) = 0 not in the set


def test_angle_formatting():
    assert format_angle(F(0)) == "0"
    assert format_angle(F(1, 3)) == "1/3"
    assert parse_angle("5/3") == F(2, 3)
    assert parse_angle("0") == F(0)
