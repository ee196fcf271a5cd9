import math
from fractions import Fraction as F

import pytest

from extray.errors import CensusEmpty, PeriodTooLarge
from extray.poly import CycleClass, Polynomial, critical_points, periodic_points
from extray.separation import (
    ON_BOUNDARY,
    build_fixed_collection,
    build_partition,
    critical_correspondence,
    locate,
    markers_from_cycles,
    preimage_collection,
    stabilization_period,
    verify_cell_map_functoriality,
    verify_marker_separation,
)

ALPHA = (1 - math.sqrt(5)) / 2


def test_stabilization_period(squaring, basilica):
    assert stabilization_period(periodic_points(squaring, 1)) == 1
    assert stabilization_period(periodic_points(basilica, 2)) == 2
    # no non-repelling cycles at all: falls back to 1
    p6 = Polynomial.quadratic(-6)
    assert stabilization_period(periodic_points(p6, 2)) == 1
    with pytest.raises(CensusEmpty):
        stabilization_period(None)


def test_fixed_collection_basilica(basilica):
    col = build_fixed_collection(basilica, 2)
    assert col.angles == [F(0), F(1, 3), F(2, 3)]
    assert col.is_forward_invariant()
    for ray in col.rays.values():
        assert ray.status == "LANDED"
        assert ray.landing_class in (CycleClass.REPELLING, CycleClass.PARABOLIC_CANDIDATE)


def test_fixed_collection_examples(squaring, chebyshev):
    c = build_fixed_collection(squaring, 1)
    assert c.angles == [F(0)]
    assert abs(c.rays[F(0)].landing_point - 1) < 1e-9
    c2 = build_fixed_collection(chebyshev, 1)
    assert abs(c2.rays[F(0)].landing_point - 2) < 1e-6


def test_fixed_collection_cap(squaring):
    with pytest.raises(PeriodTooLarge):
        build_fixed_collection(squaring, 13)


def test_preimage_collection(squaring, basilica):
    base = build_fixed_collection(squaring, 1)
    lvl1 = preimage_collection(squaring, base, 1)
    assert lvl1.angles == [F(0), F(1, 2)]
    assert abs(lvl1.rays[F(1, 2)].landing_point + 1) < 1e-9
    assert preimage_collection(squaring, base, 0) is base
    b0 = build_fixed_collection(basilica, 2)
    b1 = preimage_collection(basilica, b0, 1)
    assert b1.angles == [F(0), F(1, 6), F(1, 3), F(1, 2), F(2, 3), F(5, 6)]
    assert set(b0.rays) <= set(b1.rays)
    assert b1.is_forward_invariant()
    assert b1.level == 1


def test_partition_euler_relation(squaring, basilica, chebyshev):
    for poly, m, cells in ((squaring, 1, 1), (chebyshev, 1, 1), (basilica, 2, 2)):
        part = build_partition(build_fixed_collection(poly, m))
        assert len(part.cells) == cells
        assert part.euler_cell_count() == len(part.cells)
    b1 = preimage_collection(basilica, build_fixed_collection(basilica, 2), 1)
    p1 = build_partition(b1)
    assert len(p1.cells) == p1.euler_cell_count() == 3


def test_partition_reference_points_locate_home(basilica):
    part = build_partition(build_fixed_collection(basilica, 2))
    for cell in part.cells:
        for ref in cell.reference_points:
            assert locate(part, ref) == cell.index


def test_colanding_clusters(basilica):
    part = build_partition(build_fixed_collection(basilica, 2))
    groups = part.co_landing_groups()
    assert [F(1, 3), F(2, 3)] in groups
    pair = part.collection.rays
    assert abs(pair[F(1, 3)].landing_point - pair[F(2, 3)].landing_point) < 1e-5


def test_locate_examples(squaring, basilica):
    p0 = build_partition(build_fixed_collection(squaring, 1))
    assert locate(p0, 0) == 0
    assert locate(p0, 2) == ON_BOUNDARY  # on the ray itself
    part = build_partition(build_fixed_collection(basilica, 2))
    c0, c1 = locate(part, 0), locate(part, -1)
    assert isinstance(c0, int) and isinstance(c1, int)
    assert c0 != c1
    assert locate(part, ALPHA) == ON_BOUNDARY


def test_locate_stability(basilica):
    part = build_partition(build_fixed_collection(basilica, 2))
    for z in (0, -1, 0.5 + 0.5j, -1.3 - 0.2j):
        base = locate(part, z)
        for dz in (1e-9, -1e-9, 1e-9j, -1e-9j):
            assert locate(part, z + dz) == base


def test_marker_separation_basilica(basilica):
    markers = markers_from_cycles(periodic_points(basilica, 2))
    assert len(markers) == 2
    part2 = build_partition(build_fixed_collection(basilica, 2))
    rep = verify_marker_separation(part2, markers)
    assert rep.passed and rep.verdict == "PASS"
    cells = {cell for _, cell in rep.assignments}
    assert len(cells) == 2
    # negative control: the single fixed ray cannot separate the two markers
    part1 = build_partition(build_fixed_collection(basilica, 1))
    rep1 = verify_marker_separation(part1, markers)
    assert not rep1.passed
    assert rep1.violations == [(0, 2)]


def test_marker_separation_squaring_trivial(squaring):
    markers = markers_from_cycles(periodic_points(squaring, 1))
    part = build_partition(build_fixed_collection(squaring, 1))
    assert verify_marker_separation(part, markers).passed


def test_cell_map_functoriality_small(squaring, basilica):
    for poly, m in ((squaring, 1), (basilica, 2)):
        cols = [build_fixed_collection(poly, m)]
        for _ in range(2):
            cols.append(preimage_collection(poly, cols[-1], 1))
        parts = [build_partition(c) for c in cols]
        rep = verify_cell_map_functoriality(poly, parts, n_samples=250)
        assert rep.passed
        assert rep.excluded_rate < 0.05


def test_degenerate_embedding_rejected(squaring):
    from dataclasses import replace

    from extray.errors import DegenerateEmbedding
    from extray.separation import RayCollection

    col = build_fixed_collection(squaring, 1)
    ghost = replace(col.rays[F(0)], angle=F(1, 2))  # same polyline, new key
    bad = RayCollection(level=0, rays={F(0): col.rays[F(0)], F(1, 2): ghost},
                        provenance="FIXED_RAYS(1)", degree=2)
    with pytest.raises(DegenerateEmbedding):
        build_partition(bad)


def test_critical_correspondence(squaring, basilica, cubic_chebyshev):
    for poly, m, max_p in ((squaring, 1, 2), (basilica, 2, 2)):
        part = build_partition(build_fixed_collection(poly, m))
        cycles = []
        for n in range(1, max_p + 1):
            cycles.extend(r for r in periodic_points(poly, n) if r.period == n)
        rep = critical_correspondence(part, cycles, critical_points(poly))
        assert rep.passed and rep.count_ok
    # chebyshev cubic: no non-repelling cycles; inequality 0 <= 2 is vacuous
    part = build_partition(build_fixed_collection(cubic_chebyshev, 1))
    cycles = [r for n in (1, 2) for r in periodic_points(cubic_chebyshev, n)
              if r.period == n]
    rep = critical_correspondence(part, cycles, critical_points(cubic_chebyshev))
    assert rep.passed
    assert rep.n_non_repelling == 0 and rep.n_critical == 2
