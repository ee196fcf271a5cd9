"""Cycle censuses: brute-force enumeration, region filters, ray-cycle checks.

The exhaustive finder (all d^n roots of the iterate equation) is the primary
oracle; the Newton grid search is the independent cross-check.  Region
filters classify each cycle against a disc or a partition cell, keeping the
honest undecided bucket for mixed or unlocatable cycles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angles import (
    Angle,
    format_angle,
    is_cyclic_order_preserving,
    m_d,
    orbit,
    periodic_angles,
)
from .errors import PeriodTooLarge
from .poly import (
    CycleRecord,
    ITERATE_DEGREE_CAP,
    Polynomial,
    newton_periodic_search,
    periodic_points_cached,
)
from .rays import trace_ray
from .separation import ON_BOUNDARY, Partition, locate

RAY_ANGLE_CAP = 2**12


@dataclass
class CensusReport:
    """Cycles surviving a region filter, plus the undecided bucket."""

    polynomial: str
    max_period: int
    region: str
    cycles: list[CycleRecord]
    undecided_count: int = 0
    excluded_count: int = 0
    center: complex | None = None

    @property
    def small_cycle_count(self) -> int:
        """Cycles beyond a fixed point sitting at the region's center."""
        count = 0
        for rec in self.cycles:
            at_center = (self.center is not None and rec.period == 1
                         and abs(rec.points[0] - self.center) < 1e-6)
            if not at_center:
                count += 1
        return count

    def rows(self) -> list[dict]:
        out = []
        for rec in self.cycles:
            out.append({
                "period": rec.period,
                "points": [[p.real, p.imag] for p in rec.points],
                "multiplier": [rec.multiplier.real, rec.multiplier.imag],
                "class": rec.cycle_class.value,
                "multiplicity": rec.multiplicity,
            })
        return out


def census(poly: Polynomial, max_period: int) -> CensusReport:
    """All cycles of exact period <= max_period (region ALL)."""
    if poly.degree**max_period > ITERATE_DEGREE_CAP:
        raise PeriodTooLarge(f"d^{max_period} exceeds {ITERATE_DEGREE_CAP}")
    cycles: list[CycleRecord] = []
    for n in range(1, max_period + 1):
        cycles.extend(r for r in periodic_points_cached(poly, n) if r.period == n)
    return CensusReport(str(poly), max_period, "ALL", cycles)


def cycles_in_disc(poly: Polynomial, center: complex, radius: float,
                   max_period: int) -> CensusReport:
    """Cycles all of whose points lie in the closed disc.

    The small-cycles verdict counts the retained cycles other than a fixed
    point sitting at the center itself; it quantifies approximation by small
    cycles at this radius and period window only.
    """
    base = census(poly, max_period)
    kept: list[CycleRecord] = []
    excluded = 0
    for rec in base.cycles:
        if all(abs(p - center) <= radius for p in rec.points):
            kept.append(rec)
        else:
            excluded += 1
    return CensusReport(str(poly), max_period,
                        f"DISC({center}, {radius})", kept,
                        excluded_count=excluded, center=complex(center))


def cycles_in_cell(poly: Polynomial, partition: Partition, cell: int,
                   max_period: int) -> CensusReport:
    """Cycles fully located in one partition cell.

    Cycles straddling several cells or containing an unlocatable point are
    counted as undecided; cycles with a point on the ray system itself are
    excluded (landing points are not interior to any cell).
    """
    base = census(poly, max_period)
    kept: list[CycleRecord] = []
    undecided = 0
    excluded = 0
    for rec in base.cycles:
        locs = [locate(partition, p) for p in rec.points]
        if all(loc == cell for loc in locs):
            kept.append(rec)
        elif any(loc == ON_BOUNDARY for loc in locs):
            excluded += 1
        elif all(isinstance(loc, int) for loc in locs):
            if any(loc == cell for loc in locs):
                undecided += 1  # mixed-cell cycle
            else:
                excluded += 1
        else:
            undecided += 1
    return CensusReport(str(poly), max_period, f"CELL({cell})", kept,
                        undecided_count=undecided, excluded_count=excluded)


@dataclass
class RayCycleReport:
    """The angle-side finiteness evidence for one partition cell."""

    cell: int
    max_period: int
    potential_threshold: float
    in_cell_angles: list[Angle]
    boundary_angles: list[Angle]
    pairs_checked: int
    cyclic_order_preserving: bool
    invariant_core: list[Angle]
    cycle_periods: list[int]
    common_period_consistent: bool
    not_applicable: bool
    trace_failures: int

    def to_json(self) -> dict:
        return {
            "cell": self.cell,
            "max_period": self.max_period,
            "potential_threshold": self.potential_threshold,
            "in_cell_angles": [format_angle(a) for a in self.in_cell_angles],
            "boundary_angles": [format_angle(a) for a in self.boundary_angles],
            "pairs_checked": self.pairs_checked,
            "cyclic_order_preserving": self.cyclic_order_preserving,
            "invariant_core": [format_angle(a) for a in self.invariant_core],
            "cycle_periods": self.cycle_periods,
            "common_period_consistent": self.common_period_consistent,
            "not_applicable": self.not_applicable,
            "trace_failures": self.trace_failures,
        }


def cycles_of_rays_in_cell(poly: Polynomial, partition: Partition, cell: int,
                           max_period: int,
                           potential_threshold: float | None = None) -> RayCycleReport:
    """Which periodic rays live in the cell, and the order/period checks.

    Every periodic angle up to max_period is traced; an angle joins the
    in-cell set when all its samples below the potential threshold locate to
    the cell.  The retained (angle, image) pairs must be cyclic-order
    preserving and the forward-invariant core must show a single common
    cycle period: the finite shadow of the no-small-cycles argument.
    """
    d = poly.degree
    if d**max_period - 1 > RAY_ANGLE_CAP:
        raise PeriodTooLarge(f"d^{max_period} - 1 exceeds {RAY_ANGLE_CAP}")
    if potential_threshold is None:
        potential_threshold = 10.0 * partition.collection.lowest_potential()
    not_applicable = len(partition.cells) == 1

    angle_pool: set[Angle] = set()
    for n in range(1, max_period + 1):
        angle_pool.update(periodic_angles(d, n))

    boundary = set(partition.collection.rays)
    membership: dict[Angle, bool] = {}
    failures = 0
    done: set[Angle] = set()
    for t in sorted(angle_pool):
        if t in done:
            continue
        rays = trace_ray(poly, t)
        for a, ray in rays.items():
            done.add(a)
            if a in boundary:
                membership[a] = False
                continue
            if ray.status == "TRACE_FAILED":
                failures += 1
                membership[a] = False
                continue
            sel = ray.potentials < potential_threshold
            pts = ray.points[sel]
            membership[a] = len(pts) > 0 and all(
                locate(partition, complex(p)) == cell for p in pts
            )
    in_cell = sorted(a for a in angle_pool if membership.get(a, False))

    pairs = [(t, m_d(t, d)) for t in in_cell if membership.get(m_d(t, d), False)]
    order_ok = is_cyclic_order_preserving(pairs) if pairs else True

    core = [t for t in in_cell
            if all(membership.get(a, False) for a in orbit(t, d).angles)]
    periods = sorted({orbit(t, d).period for t in core})
    return RayCycleReport(
        cell=cell,
        max_period=max_period,
        potential_threshold=float(potential_threshold),
        in_cell_angles=in_cell,
        boundary_angles=sorted(boundary & angle_pool),
        pairs_checked=len(pairs),
        cyclic_order_preserving=order_ok,
        invariant_core=core,
        cycle_periods=periods,
        common_period_consistent=len(periods) <= 1,
        not_applicable=not_applicable,
        trace_failures=failures,
    )


def census_cross_check(poly: Polynomial, max_period: int, grid: int = 64,
                       match_tol: float = 1e-8) -> dict:
    """Newton-grid search must find no point absent from the census."""
    unmatched = []
    total = 0
    for n in range(1, max_period + 1):
        grid_pts = newton_periodic_search(poly, n, grid=grid)
        cycle_pts = []
        for rec in periodic_points_cached(poly, n):
            cycle_pts.extend(rec.points)
        arr = np.array(cycle_pts)
        for z in grid_pts:
            total += 1
            if np.min(np.abs(arr - z)) > match_tol:
                unmatched.append((n, complex(z)))
    return {
        "grid_points_checked": total,
        "unmatched": [[n, [z.real, z.imag]] for n, z in unmatched],
        "passed": not unmatched,
    }
