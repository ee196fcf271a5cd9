"""Accessibility evidence: which rays approach a target, and landing tables.

The probe reports finite-scale surrogates only: minimum distances of traced
ray samples to the target and to the distinguished fixed point, below a
stated potential threshold.  It never claims non-accessibility; the
strongest negative statement it can emit is that no sampled ray approached
the target within the stated tolerance down to the stated potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .angles import Angle, format_angle, periodic_angles
from .errors import PeriodTooLarge
from .poly import CycleClass, Polynomial
from .rays import land_orbit

ACC_EPSILON_DEFAULT = 1e-2
TABLE_ANGLE_CAP = 2**12


@dataclass
class AccumulationRecord:
    """Distance evidence for one traced ray."""

    angle: Angle
    min_distance_to_target: float
    min_distance_to_fixed: float
    lowest_potential_reached: float
    status: str
    approaches_target: bool
    approaches_fixed: bool

    def to_json(self) -> dict:
        return {
            "angle": format_angle(self.angle),
            "min_distance_to_target": self.min_distance_to_target,
            "min_distance_to_fixed": self.min_distance_to_fixed,
            "lowest_potential_reached": self.lowest_potential_reached,
            "status": self.status,
            "approaches_target": self.approaches_target,
            "approaches_fixed": self.approaches_fixed,
        }


@dataclass
class ProbeReport:
    records: list[AccumulationRecord]
    epsilon: float
    pot_lo: float
    potential_threshold: float
    implication_holds: bool
    failures: int

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "pot_lo": self.pot_lo,
            "potential_threshold": self.potential_threshold,
            "implication_holds": self.implication_holds,
            "trace_failures": self.failures,
            "records": [r.to_json() for r in
                        sorted(self.records, key=lambda r: r.min_distance_to_target)],
        }


def probe_accumulation(poly: Polynomial, target: complex, fixed: complex,
                       angles: set[Angle], pot_lo: float = 1e-7,
                       epsilon: float = ACC_EPSILON_DEFAULT,
                       potential_threshold: float = 1.0) -> ProbeReport:
    """Trace each ray to pot_lo and record min distances to target and fixed.

    The headline checks the sampled implication: every ray approaching the
    target within epsilon also approaches the fixed point within epsilon.
    Distances are minima over samples below the potential threshold and are
    recomputable from the stored rays.
    """
    records: list[AccumulationRecord] = []
    failures = 0
    done: set[Angle] = set()
    for t in sorted(angles):
        if t in done:
            continue
        rays = land_orbit(poly, t, pot_lo=pot_lo)
        for a, ray in rays.items():
            if a in done:
                continue
            done.add(a)
            if a not in angles:
                continue
            sel = ray.potentials < potential_threshold
            pts = ray.points[sel]
            if ray.landing_point is not None:
                pts = np.append(pts, ray.landing_point)
            if len(pts) == 0:
                failures += 1
                records.append(AccumulationRecord(
                    angle=a, min_distance_to_target=math.inf,
                    min_distance_to_fixed=math.inf,
                    lowest_potential_reached=float(ray.potentials[-1]) if len(ray.potentials) else math.inf,
                    status=ray.status, approaches_target=False,
                    approaches_fixed=False))
                continue
            if ray.status == "TRACE_FAILED":
                failures += 1
            dt = float(np.min(np.abs(pts - target)))
            df = float(np.min(np.abs(pts - fixed)))
            records.append(AccumulationRecord(
                angle=a,
                min_distance_to_target=dt,
                min_distance_to_fixed=df,
                lowest_potential_reached=float(ray.potentials[-1]),
                status=ray.status,
                approaches_target=dt < epsilon,
                approaches_fixed=df < epsilon,
            ))
    implication = all(r.approaches_fixed for r in records if r.approaches_target)
    return ProbeReport(records=records, epsilon=epsilon, pot_lo=pot_lo,
                       potential_threshold=potential_threshold,
                       implication_holds=implication, failures=failures)


@dataclass
class LandingTableEntry:
    angle: Angle
    landing_point: complex | None
    landing_period: int | None
    landing_class: str | None
    matched_cycle: int | None
    status: str

    def to_json(self) -> dict:
        return {
            "angle": format_angle(self.angle),
            "landing": ([self.landing_point.real, self.landing_point.imag]
                        if self.landing_point is not None else None),
            "period": self.landing_period,
            "class": self.landing_class,
            "matched_cycle": self.matched_cycle,
            "status": self.status,
        }


@dataclass
class LandingTable:
    entries: list[LandingTableEntry]
    unmatched_repelling_cycles: list[int]
    unmatched_other_cycles: list[int]
    ray_failures: int

    def to_json(self) -> dict:
        return {
            "entries": [e.to_json() for e in self.entries],
            "unmatched_repelling_cycles": self.unmatched_repelling_cycles,
            "unmatched_other_cycles": self.unmatched_other_cycles,
            "ray_failures": self.ray_failures,
        }


def landing_accessibility_table(poly: Polynomial, max_period: int,
                                match_tol: float = 1e-6) -> LandingTable:
    """Land all periodic rays up to max_period and match them to the census.

    Each landed ray is matched to the census cycle owning its landing point;
    repelling cycles left unmatched are a numerical gap and reported as
    such, while non-repelling unmatched cycles are expected (attracting or
    indifferent cycles are not landing points of rays).
    """
    from .census import census as run_census

    d = poly.degree
    if d**max_period - 1 > TABLE_ANGLE_CAP:
        raise PeriodTooLarge(f"d^max_period - 1 exceeds {TABLE_ANGLE_CAP}")
    cens = run_census(poly, max_period)
    cycle_points: list[np.ndarray] = [np.array(rec.points) for rec in cens.cycles]

    angle_pool: set[Angle] = set()
    for n in range(1, max_period + 1):
        angle_pool.update(periodic_angles(d, n))

    entries: list[LandingTableEntry] = []
    matched: set[int] = set()
    failures = 0
    done: set[Angle] = set()
    for t in sorted(angle_pool):
        if t in done:
            continue
        rays = land_orbit(poly, t)
        for a, ray in rays.items():
            if a in done or a not in angle_pool:
                done.add(a)
                continue
            done.add(a)
            match: int | None = None
            if ray.status == "LANDED" and ray.landing_point is not None:
                for ci, pts in enumerate(cycle_points):
                    if np.min(np.abs(pts - ray.landing_point)) < match_tol:
                        match = ci
                        matched.add(ci)
                        break
            else:
                failures += 1
            entries.append(LandingTableEntry(
                angle=a,
                landing_point=ray.landing_point,
                landing_period=ray.landing_period,
                landing_class=ray.landing_class.value if ray.landing_class else None,
                matched_cycle=match,
                status=ray.status,
            ))
    unmatched_rep = [i for i, rec in enumerate(cens.cycles)
                     if i not in matched and rec.cycle_class is CycleClass.REPELLING]
    unmatched_oth = [i for i, rec in enumerate(cens.cycles)
                     if i not in matched and rec.cycle_class is not CycleClass.REPELLING]
    return LandingTable(entries=entries,
                        unmatched_repelling_cycles=unmatched_rep,
                        unmatched_other_cycles=unmatched_oth,
                        ray_failures=failures)
