import cmath
import math
from collections import Counter
from fractions import Fraction as F

import pytest

from extray.census import (
    census,
    census_cross_check,
    cycles_in_cell,
    cycles_in_disc,
    cycles_of_rays_in_cell,
)
from extray.errors import PeriodTooLarge
from extray.poly import CycleClass, Polynomial
from extray.separation import build_fixed_collection, build_partition, locate


def near_parabolic_quadratic(eps: float) -> tuple[Polynomial, complex]:
    """z^2 + c with fixed-point multiplier e^{2 pi i/3} (1 + eps)."""
    lam = cmath.exp(2j * cmath.pi / 3) * (1 + eps)
    zhat = lam / 2
    return Polynomial.quadratic(zhat - zhat * zhat), zhat


def test_census_squaring_counts(squaring):
    rep = census(squaring, 3)
    by_period = Counter(r.period for r in rep.cycles)
    assert by_period == {1: 2, 2: 1, 3: 2}
    two = [r for r in rep.cycles if r.period == 2][0]
    # the 2-cycle is the primitive cube roots of unity: roots of z^2 + z + 1
    for p in two.points:
        assert abs(p * p + p + 1) < 1e-9


def test_census_basilica(basilica):
    rep = census(basilica, 2)
    periods = Counter(r.period for r in rep.cycles)
    assert periods == {1: 2, 2: 1}
    sup = [r for r in rep.cycles if r.period == 2][0]
    assert abs(sup.multiplier) < 1e-9


def test_census_parabolic(cauliflower):
    rep = census(cauliflower, 1)
    assert len(rep.cycles) == 1
    assert rep.cycles[0].multiplicity == 2
    assert rep.cycles[0].cycle_class is CycleClass.PARABOLIC_CANDIDATE


def test_census_cap(squaring):
    with pytest.raises(PeriodTooLarge):
        census(squaring, 20)


def test_small_cycle_emergence():
    poly, zhat = near_parabolic_quadratic(1e-3)
    rep = cycles_in_disc(poly, zhat, 0.2, 6)
    assert rep.small_cycle_count >= 1
    assert any(r.period == 3 for r in rep.cycles)
    poly2, zhat2 = near_parabolic_quadratic(0.3)
    rep2 = cycles_in_disc(poly2, zhat2, 0.02, 6)
    assert rep2.small_cycle_count == 0


def test_disc_census_squaring(squaring):
    rep = cycles_in_disc(squaring, 0, 0.5, 6)
    assert len(rep.cycles) == 1 and rep.cycles[0].period == 1
    assert rep.small_cycle_count == 0  # everything else is on the unit circle


def test_disc_monotone_in_radius(basilica):
    small = cycles_in_disc(basilica, 0, 1.05, 4)
    large = cycles_in_disc(basilica, 0, 2.5, 4)

    def key(rec):
        return (rec.period, round(min(p.real for p in rec.points), 6))

    assert {key(r) for r in small.cycles} <= {key(r) for r in large.cycles}


def test_cell_census_basilica(basilica):
    part = build_partition(build_fixed_collection(basilica, 2))
    cell0 = locate(part, 0)
    rep = cycles_in_cell(basilica, part, cell0, 2)
    # the superattracting 2-cycle has one point on each side: mixed
    assert rep.undecided_count == 1
    assert len(rep.cycles) == 0
    # alpha and beta sit on landing points: excluded, not undecided
    assert rep.excluded_count == 2


def test_cell_census_single_cell(squaring):
    part = build_partition(build_fixed_collection(squaring, 1))
    rep = cycles_in_cell(squaring, part, 0, 3)
    base = census(squaring, 3)
    # all cycles off the ray land in the single cell; the repelling fixed
    # point 1 sits on the ray itself and is excluded
    assert len(rep.cycles) == len(base.cycles) - 1
    assert rep.excluded_count == 1


def test_rays_in_cell_basilica(basilica):
    part = build_partition(build_fixed_collection(basilica, 2))
    cell0 = locate(part, 0)
    rep = cycles_of_rays_in_cell(basilica, part, cell0, 4)
    assert not rep.not_applicable
    assert set(rep.boundary_angles) == {F(0), F(1, 3), F(2, 3)}
    assert not set(rep.boundary_angles) & set(rep.in_cell_angles)
    assert rep.cyclic_order_preserving
    assert rep.common_period_consistent
    # every in-cell angle lives in the cell's angular gaps at infinity
    for t in rep.in_cell_angles:
        assert F(0) < t < F(1, 3) or F(2, 3) < t < F(1)


def test_rays_in_cell_not_applicable(squaring):
    part = build_partition(build_fixed_collection(squaring, 1))
    rep = cycles_of_rays_in_cell(squaring, part, 0, 3)
    assert rep.not_applicable  # whole plane: not of the separating form


def test_cross_check(basilica, misiurewicz_i):
    for poly in (basilica, misiurewicz_i):
        out = census_cross_check(poly, 4)
        assert out["passed"], out["unmatched"]
        assert out["grid_points_checked"] > 0
