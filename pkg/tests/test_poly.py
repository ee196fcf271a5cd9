import cmath
import math

import numpy as np
import pytest

from extray.errors import PeriodTooLarge
from extray.poly import (
    CycleClass,
    ESCAPED,
    Polynomial,
    classify,
    critical_points,
    derivative,
    evaluate,
    is_escaped,
    iterate,
    newton_periodic_search,
    periodic_points,
)

GOLDEN = (math.sqrt(5) - 1) / 2


def test_monic_required():
    with pytest.raises(ValueError):
        Polynomial((0j, 0j, 2 + 0j))


def test_evaluate_examples(squaring, basilica, cubic_chebyshev):
    assert evaluate(squaring, 2) == 4
    assert evaluate(basilica, 0) == -1
    assert evaluate(cubic_chebyshev, 1) == -2
    assert derivative(squaring, 3) == 6


def test_escape_radius_contract(basilica, cubic_chebyshev, misiurewicz_i):
    for poly in (basilica, cubic_chebyshev, misiurewicz_i):
        R = poly.escape_radius
        for k in range(64):
            z = R * cmath.exp(2j * math.pi * k / 64)
            assert abs(evaluate(poly, z)) >= 2 * abs(z)


def test_iterate_examples(squaring, basilica):
    assert iterate(squaring, 2, 3) == 256
    assert iterate(basilica, 0, 2) == 0
    assert iterate(basilica, -1, 1) == 0


def test_iterate_escape_marker(squaring):
    z = iterate(squaring, 1e5, 8)
    assert is_escaped(z) and is_escaped(ESCAPED)


def test_iterate_composition(basilica):
    for z in (0.3 + 0.1j, -0.5j, 1.1):
        for m, n in [(2, 3), (1, 4), (0, 2)]:
            full = iterate(basilica, z, m + n)
            if not is_escaped(full):
                assert abs(full - iterate(basilica, iterate(basilica, z, m), n)) < 1e-9


def test_critical_points_examples(basilica, cubic_chebyshev):
    assert critical_points(basilica) == [(0j, 1)]
    pts = critical_points(cubic_chebyshev)
    assert [(round(p.real), m) for p, m in pts] == [(-1, 1), (1, 1)]
    cubed = Polynomial.from_coefficients([0, 0, 0, 1])
    (pt, mult), = critical_points(cubed)
    assert abs(pt) < 1e-8 and mult == 2


def test_fixed_points_squaring(squaring):
    recs = periodic_points(squaring, 1)
    pts = sorted((r.points[0] for r in recs), key=lambda z: z.real)
    assert abs(pts[0]) < 1e-10 and abs(pts[1] - 1) < 1e-10
    by_pt = {round(r.points[0].real): r for r in recs}
    assert by_pt[0].cycle_class is CycleClass.ATTRACTING
    assert by_pt[1].cycle_class is CycleClass.REPELLING
    assert abs(by_pt[1].multiplier - 2) < 1e-10


def test_period_two_basilica_matches_quartic_roots(basilica):
    # P^2(z) - z = z(z+1)(z^2 - z - 1): radicals oracle for the quartic
    expected = {0.0, -1.0, (1 - math.sqrt(5)) / 2, (1 + math.sqrt(5)) / 2}
    recs = periodic_points(basilica, 2)
    got = {p for r in recs for p in r.points}
    assert len(got) == 4
    for e in expected:
        assert min(abs(g - e) for g in got) < 1e-10
    two_cycle = [r for r in recs if r.period == 2]
    assert len(two_cycle) == 1
    assert abs(two_cycle[0].multiplier) < 1e-10
    assert two_cycle[0].cycle_class is CycleClass.ATTRACTING


def test_parabolic_double_fixed_point(cauliflower):
    recs = periodic_points(cauliflower, 1)
    assert len(recs) == 1
    rec = recs[0]
    assert abs(rec.points[0] - 0.5) < 1e-7
    assert rec.multiplicity == 2
    assert rec.cycle_class is CycleClass.PARABOLIC_CANDIDATE
    assert abs(rec.multiplier - 1) < 1e-7


@pytest.mark.parametrize("coeffs,n", [
    ([0, 0, 1], 4), ([-1, 0, 1], 4), ([1j, 0, 1], 4), ([0, -3, 0, 1], 3),
])
def test_point_count_is_degree_power(coeffs, n):
    poly = Polynomial.from_coefficients(coeffs)
    for k in range(1, n + 1):
        recs = periodic_points(poly, k)
        total = sum(len(r.points) * r.multiplicity for r in recs)
        assert total == poly.degree**k


def test_cycle_records_recompute(basilica, misiurewicz_i):
    for poly in (basilica, misiurewicz_i):
        for rec in periodic_points(poly, 3):
            for i, p in enumerate(rec.points):
                nxt = rec.points[(i + 1) % rec.period]
                assert abs(evaluate(poly, p) - nxt) < 1e-6
            re_mult = rec.recomputed_multiplier(poly)
            assert abs(re_mult - rec.multiplier) <= 1e-8 * max(1.0, abs(rec.multiplier))


def test_period_cap():
    with pytest.raises(PeriodTooLarge):
        periodic_points(Polynomial.quadratic(0), 15)


def test_classify_examples():
    assert classify(2) is CycleClass.REPELLING
    assert classify(cmath.exp(2j * math.pi / 3)) is CycleClass.PARABOLIC_CANDIDATE
    lam = cmath.exp(2j * math.pi * GOLDEN)
    # oracle: powers stay bounded away from 1 for q <= 64
    assert min(abs(lam**q - 1) for q in range(1, 65)) > 1e-6
    assert classify(lam) is CycleClass.IRRATIONALLY_INDIFFERENT


def test_classify_conjugation_invariant():
    for lam in (2, 0.3 + 0.4j, cmath.exp(2j * math.pi / 5),
                cmath.exp(2j * math.pi * GOLDEN)):
        assert classify(complex(lam)) == classify(complex(lam).conjugate())


def test_exact_period_filter(squaring):
    from extray.poly import exact_period_cycles

    twos = exact_period_cycles(squaring, 2)
    assert len(twos) == 1 and twos[0].period == 2
    assert len(exact_period_cycles(squaring, 3)) == 2


def test_newton_grid_is_subset_of_census(basilica):
    pts = newton_periodic_search(basilica, 2, grid=32)
    census_pts = np.array([p for r in periodic_points(basilica, 2) for p in r.points])
    for z in pts:
        assert np.min(np.abs(census_pts - z)) < 1e-8
