"""Ray collections, plane partitions and the separation checks.

A collection of landed rays plus their landing points cuts the plane; the
partition is built as an embedded planar graph on the sphere (one vertex per
landing cluster plus a vertex at infinity, one edge per ray) whose faces are
the cells.  Point location runs crossing counts of straight probe segments
against the ray polylines, with perturbed two-leg retries near the
numerically fuzzy spots; UNDECIDED is an honest outcome close to the Julia
set.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .angles import Angle, format_angle, m_d, periodic_angles, preimages
from .errors import DegenerateEmbedding, LandingUndecided, PeriodTooLarge
from .poly import CycleClass, CycleRecord, Polynomial
from .rays import DEFAULT_POT_LO, ExternalRay, land_orbit

CO_LAND_TOL = 1e-5
BOUNDARY_GUARD = 1e-7
FAR_RADIUS = 1e8
REF_RADIUS = 1e6
FIXED_RAY_CAP = 2**12
PREIMAGE_ANGLE_CAP = 2**14

ON_BOUNDARY = "ON_BOUNDARY"
UNDECIDED = "UNDECIDED"


@dataclass
class RayCollection:
    """Finite forward-invariant union of closed (landed) rays."""

    level: int
    rays: dict[Angle, ExternalRay]
    provenance: str
    degree: int

    @property
    def angles(self) -> list[Angle]:
        return sorted(self.rays)

    def is_forward_invariant(self) -> bool:
        keys = set(self.rays)
        return all(m_d(a, self.degree) in keys for a in keys)

    def lowest_potential(self) -> float:
        return min(float(r.potentials[-1]) for r in self.rays.values())


def _land_angle_set(poly: Polynomial, targets: set[Angle],
                    pot_lo: float) -> dict[Angle, ExternalRay]:
    """Trace and land every target angle, reusing shared forward orbits."""
    rays: dict[Angle, ExternalRay] = {}
    for t in sorted(targets):
        if t in rays:
            continue
        for a, ray in land_orbit(poly, t, pot_lo=pot_lo).items():
            rays.setdefault(a, ray)
    missing = [a for a in targets if rays[a].status != "LANDED"]
    if missing:
        raise LandingUndecided(
            "rays did not land: " + ", ".join(format_angle(a) for a in missing)
        )
    return {a: rays[a] for a in set(rays) | targets}


def build_fixed_collection(poly: Polynomial, m: int,
                           pot_lo: float = DEFAULT_POT_LO) -> RayCollection:
    """All rays fixed by the m-th iterate: angles k/(d^m - 1), landed."""
    d = poly.degree
    if d**m - 1 > FIXED_RAY_CAP:
        raise PeriodTooLarge(f"d^m - 1 = {d**m - 1} exceeds {FIXED_RAY_CAP}")
    targets = set(periodic_angles(d, m))
    rays = _land_angle_set(poly, targets, pot_lo)
    return RayCollection(level=0, rays=rays, provenance=f"FIXED_RAYS({m})", degree=d)


def preimage_collection(poly: Polynomial, base: RayCollection, k: int,
                        pot_lo: float = DEFAULT_POT_LO) -> RayCollection:
    """The k-fold angle-map preimage of a collection, traced and landed.

    Contains the base (its angle set is forward invariant), so collections
    nest upward with k.
    """
    if k == 0:
        return base
    d = poly.degree
    angles = set(base.rays)
    for _ in range(k):
        angles = {p for a in angles for p in preimages(a, d)} | angles
    if len(angles) > PREIMAGE_ANGLE_CAP:
        raise PeriodTooLarge(f"{len(angles)} angles exceed {PREIMAGE_ANGLE_CAP}")
    rays = _land_angle_set(poly, angles, pot_lo)
    return RayCollection(level=base.level + k, rays=rays,
                         provenance=f"PREIMAGE_OF({base.level})", degree=d)


@dataclass
class Cell:
    index: int
    gaps: tuple[tuple[float, float], ...]  # ccw angular intervals at infinity
    boundary_angles: tuple[Angle, ...]
    reference_points: tuple[complex, ...]  # one far probe anchor per gap

    @property
    def reference_point(self) -> complex:
        return self.reference_points[0]


@dataclass
class Partition:
    """Cells of the plane cut by a collection, with location machinery."""

    collection: RayCollection
    clusters: list[complex]
    ray_cluster: dict[Angle, int]
    cells: list[Cell]
    seg_a: np.ndarray = field(repr=False)
    seg_b: np.ndarray = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.clusters) + 1  # landing clusters plus infinity

    @property
    def n_edges(self) -> int:
        return len(self.collection.rays)

    def euler_cell_count(self) -> int:
        return self.n_edges - self.n_vertices + 2

    def co_landing_groups(self) -> list[list[Angle]]:
        groups: dict[int, list[Angle]] = {}
        for a, c in self.ray_cluster.items():
            groups.setdefault(c, []).append(a)
        return [sorted(v) for _, v in sorted(groups.items())]


def _cluster_landing_points(points: list[complex], tol: float) -> list[int]:
    """Greedy union of landing points within tol; returns cluster index per point."""
    reps: list[complex] = []
    out: list[int] = []
    for p in points:
        for i, r in enumerate(reps):
            if abs(p - r) <= tol:
                out.append(i)
                break
        else:
            reps.append(p)
            out.append(len(reps) - 1)
    return out


def _check_embedding(collection: RayCollection) -> None:
    """Reject collections where two distinct rays overlap along a stretch."""
    items = sorted(collection.rays.items())
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            ra, rb = items[i][1], items[j][1]
            n = min(len(ra.points), len(rb.points))
            if n < 5:
                continue
            idx = np.linspace(0, n - 1, 5).astype(int)
            if np.max(np.abs(ra.points[idx] - rb.points[idx])) < 1e-9:
                raise DegenerateEmbedding(
                    f"rays {items[i][0]} and {items[j][0]} overlap"
                )


def build_partition(collection: RayCollection) -> Partition:
    """Cells of the plane minus the collection, via sphere face tracing.

    The rotation at each landing cluster sorts rays by approach direction;
    at infinity the counterclockwise rotation (as seen from the vertex at
    infinity) is by decreasing angle.  Faces are the orbits of the standard
    next-half-edge rule and are in bijection with the cells; each face also
    learns its angular gaps at infinity, and its reference point is placed
    far out in its first gap, where the arrangement is exactly radial.
    """
    rays_sorted = sorted(collection.rays.items())
    if not rays_sorted:
        raise ValueError("empty collection")
    for a, r in rays_sorted:
        if r.status != "LANDED" or r.landing_point is None:
            raise LandingUndecided(f"ray {format_angle(a)} is not landed")
    _check_embedding(collection)

    angles = [a for a, _ in rays_sorted]
    lands = [complex(r.landing_point) for _, r in rays_sorted]
    cluster_of = _cluster_landing_points(lands, CO_LAND_TOL)
    n_clusters = len(set(cluster_of))
    cluster_pts = [complex(0)] * n_clusters
    counts = [0] * n_clusters
    for p, c in zip(lands, cluster_of):
        cluster_pts[c] = (cluster_pts[c] * counts[c] + p) / (counts[c] + 1)
        counts[c] += 1

    E = len(angles)
    # half-edge ids: 2*e = ray e heading to infinity, 2*e+1 = coming back
    rot_inf = sorted(range(E), key=lambda e: -angles[e])
    rot_fin: dict[int, list[int]] = {}
    approach: list[float] = []
    for e, (a, r) in enumerate(rays_sorted):
        v = cluster_of[e]
        low = complex(r.points[-1])
        direction = low - cluster_pts[v]
        approach.append(math.atan2(direction.imag, direction.real))
    for v in range(n_clusters):
        rot_fin[v] = sorted((e for e in range(E) if cluster_of[e] == v),
                            key=lambda e: approach[e])

    def next_half_edge(h: int) -> int:
        e, up = h // 2, h % 2 == 0
        if up:
            order = rot_inf
            idx = order.index(e)
            prev = order[idx - 1]
            return 2 * prev + 1  # leave infinity along prev, downward
        order = rot_fin[cluster_of[e]]
        idx = order.index(e)
        prev = order[idx - 1]
        return 2 * prev  # leave the cluster along prev, upward

    unvisited = set(range(2 * E))
    faces: list[list[int]] = []
    while unvisited:
        h0 = min(unvisited)
        cycle = []
        h = h0
        while True:
            cycle.append(h)
            unvisited.discard(h)
            h = next_half_edge(h)
            if h == h0:
                break
        faces.append(cycle)

    cells: list[Cell] = []
    for cyc in faces:
        gaps: list[tuple[float, float]] = []
        bound: set[Angle] = set()
        for pos, h in enumerate(cyc):
            e, up = h // 2, h % 2 == 0
            bound.add(angles[e])
            if up:
                nxt = cyc[(pos + 1) % len(cyc)]
                t_in = float(angles[e])
                t_out = float(angles[nxt // 2])
                gaps.append((t_in, t_out))
        gaps.sort()
        refs = []
        for t0, t1 in gaps:
            width = (t1 - t0) % 1.0
            if width == 0.0:
                width = 1.0
            mid = (t0 + width / 2.0) % 1.0
            refs.append(REF_RADIUS * cmath.exp(2j * math.pi * mid))
        cells.append(Cell(index=0, gaps=tuple(gaps),
                          boundary_angles=tuple(sorted(bound)),
                          reference_points=tuple(refs)))
    cells.sort(key=lambda c: c.gaps[0])
    for i, c in enumerate(cells):
        c.index = i

    seg_a: list[complex] = []
    seg_b: list[complex] = []
    for _, r in rays_sorted:
        poly_pts = r.closed_polyline(FAR_RADIUS)
        seg_a.extend(poly_pts[:-1])
        seg_b.extend(poly_pts[1:])
    part = Partition(
        collection=collection,
        clusters=cluster_pts,
        ray_cluster={a: cluster_of[e] for e, a in enumerate(angles)},
        cells=cells,
        seg_a=np.array(seg_a),
        seg_b=np.array(seg_b),
    )
    assert len(cells) == part.euler_cell_count(), "face count violates Euler relation"
    return part


def _segment_crossings(pa: complex, pb: complex, qa: np.ndarray,
                       qb: np.ndarray) -> tuple[int, bool]:
    """(#proper crossings of [pa,pb] against segments [qa,qb], clean flag)."""
    p = pb - pa
    q = qb - qa
    w1 = qa - pa
    w2 = qb - pa
    c1 = p.real * w1.imag - p.imag * w1.real
    c2 = p.real * w2.imag - p.imag * w2.real
    w3 = pa - qa
    w4 = pb - qa
    c3 = q.real * w3.imag - q.imag * w3.real
    c4 = q.real * w4.imag - q.imag * w4.real
    scale_p = abs(p)
    eps1 = 1e-12 * scale_p * (np.abs(w1) + np.abs(w2) + 1e-30)
    eps2 = 1e-12 * np.abs(q) * (np.abs(w3) + np.abs(w4) + 1e-30)
    deg = ((np.abs(c1) < eps1) | (np.abs(c2) < eps1) |
           (np.abs(c3) < eps2) | (np.abs(c4) < eps2))
    straddle1 = (c1 > 0) != (c2 > 0)
    straddle2 = (c3 > 0) != (c4 > 0)
    crossing = straddle1 & straddle2
    # degeneracy only matters where the bounding boxes actually meet
    lo_x = np.minimum(qa.real, qb.real)
    hi_x = np.maximum(qa.real, qb.real)
    lo_y = np.minimum(qa.imag, qb.imag)
    hi_y = np.maximum(qa.imag, qb.imag)
    margin = 1e-9 * (1.0 + scale_p)
    overlap = ((np.minimum(pa.real, pb.real) <= hi_x + margin) &
               (np.maximum(pa.real, pb.real) >= lo_x - margin) &
               (np.minimum(pa.imag, pb.imag) <= hi_y + margin) &
               (np.maximum(pa.imag, pb.imag) >= lo_y - margin))
    touchy = deg & overlap & (straddle1 | straddle2 | crossing)
    return int(np.sum(crossing & ~deg)), not bool(np.any(touchy))


def _min_distance_to_segments(z: complex, qa: np.ndarray, qb: np.ndarray) -> float:
    q = qb - qa
    L2 = np.abs(q) ** 2
    t = np.zeros_like(L2)
    nz = L2 > 0
    t[nz] = ((z - qa[nz]) * np.conj(q[nz])).real / L2[nz]
    t = np.clip(t, 0.0, 1.0)
    proj = qa + t * q
    return float(np.min(np.abs(z - proj)))


_DETOUR_DIRECTIONS = tuple(cmath.exp(2j * math.pi * (k + 0.37) / 8) for k in range(8))


def locate(partition: Partition, z: complex) -> int | str:
    """Cell index containing z, or ON_BOUNDARY / UNDECIDED.

    A cell is claimed only when a probe path from z to one of its far
    reference anchors is crossing-free and stays clear of every vertex of
    the arrangement; stubborn points are retried along two-leg detours that
    step around nearby landing points before giving up.  Soundness: a
    crossing-free path means z and the anchor share a component of the
    complement.
    """
    z = complex(z)
    if _min_distance_to_segments(z, partition.seg_a, partition.seg_b) < BOUNDARY_GUARD:
        return ON_BOUNDARY

    def probe(path: list[complex]) -> tuple[int, bool]:
        total = 0
        for a, b in zip(path[:-1], path[1:]):
            n, clean = _segment_crossings(a, b, partition.seg_a, partition.seg_b)
            if not clean:
                return -1, False
            total += n
        return total, True

    for cell in partition.cells:
        for ref in cell.reference_points:
            n, clean = probe([z, ref])
            if clean and n == 0:
                return cell.index
    # step around nearby landing clusters with a short first leg
    local = max(1.0, min(abs(z - c) for c in partition.clusters)) if partition.clusters else 1.0
    for radius in (0.5 * local, 1.5 * local, 4.0 * local):
        for direction in _DETOUR_DIRECTIONS:
            mid = z + radius * direction
            for cell in partition.cells:
                for ref in cell.reference_points:
                    n, clean = probe([z, mid, ref])
                    if clean and n == 0:
                        return cell.index
    return UNDECIDED


@dataclass(frozen=True)
class Marker:
    """One periodic Fatou component or Cremer-type point, marked by a cycle point."""

    point: complex
    cycle_index: int
    cycle_class: CycleClass


def markers_from_cycles(cycles: list[CycleRecord]) -> list[Marker]:
    """Non-repelling cycle points stand in for their Fatou components."""
    out: list[Marker] = []
    for i, rec in enumerate(cycles):
        if rec.cycle_class is CycleClass.REPELLING:
            continue
        for p in rec.points:
            out.append(Marker(point=p, cycle_index=i, cycle_class=rec.cycle_class))
    return out


@dataclass
class MarkerSeparationReport:
    passed: bool
    assignments: list[tuple[Marker, int | str]]
    violations: list[tuple[int, int]]  # (cell, marker count)
    undecided: int

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def verify_marker_separation(partition: Partition, markers: list[Marker]) -> MarkerSeparationReport:
    """Each cell may contain at most one marked object."""
    assignments: list[tuple[Marker, int | str]] = []
    per_cell: dict[int, int] = {}
    undecided = 0
    for mk in markers:
        loc = locate(partition, mk.point)
        assignments.append((mk, loc))
        if isinstance(loc, int):
            per_cell[loc] = per_cell.get(loc, 0) + 1
        else:
            undecided += 1
    violations = [(c, n) for c, n in sorted(per_cell.items()) if n > 1]
    return MarkerSeparationReport(
        passed=not violations,
        assignments=assignments,
        violations=violations,
        undecided=undecided,
    )


@dataclass
class InvarianceReport:
    passed: bool
    checked: int
    violations: list[dict]
    samples: int
    excluded: int

    @property
    def excluded_rate(self) -> float:
        return self.excluded / self.samples if self.samples else 0.0

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def verify_cell_map_functoriality(poly: Polynomial, partitions: list[Partition],
                                  n_samples: int = 1000, seed: int = 7,
                                  box: float | None = None) -> InvarianceReport:
    """Cell maps induced by iteration are well-defined functions on samples.

    For levels k and steps n >= 0 with k + n <= k_max, the level-k cell of
    P^n(z) must depend only on the level-(k+n) cell of z.  The n = 0 rows
    are the nesting refinement (each deeper cell maps into a unique coarser
    cell); samples with any undecided location are excluded and counted.
    """
    k_max = len(partitions) - 1
    if box is None:
        box = 1.05 * poly.escape_radius
    rng = np.random.default_rng(seed)
    zs = rng.uniform(-box, box, n_samples) + 1j * rng.uniform(-box, box, n_samples)
    maps: dict[tuple[int, int], dict[int, tuple[int, complex]]] = {}
    violations: list[dict] = []
    excluded = 0
    checked = 0
    from .poly import evaluate as _eval

    for z0 in zs:
        orbit_pts = [complex(z0)]
        for _ in range(k_max):
            orbit_pts.append(complex(_eval(poly, orbit_pts[-1])))
        locs: dict[tuple[int, int], int | str] = {}
        ok = True
        for level in range(k_max + 1):
            for j in range(k_max + 1 - level):
                loc = locate(partitions[level], orbit_pts[j])
                locs[(level, j)] = loc
                if not isinstance(loc, int):
                    ok = False
        if not ok:
            excluded += 1
            continue
        checked += 1
        # checks keyed (source_level, steps): cell of z at source_level must
        # determine the cell of P^steps(z) at source_level - steps
        for k in range(k_max + 1):
            for n in range(k_max + 1 - k):
                if n == 0 and k == 0:
                    continue
                if n == 0:
                    src_level, src, dst = k, locs[(k, 0)], locs[(k - 1, 0)]
                else:
                    src_level, src, dst = k + n, locs[(k + n, 0)], locs[(k, n)]
                table = maps.setdefault((src_level, n), {})
                if src in table and table[src][0] != dst:
                    violations.append({
                        "source_level": src_level, "steps": n, "source_cell": src,
                        "cell_a": table[src][0], "cell_b": dst,
                        "witness_a": [table[src][1].real, table[src][1].imag],
                        "witness_b": [z0.real, z0.imag],
                    })
                else:
                    table.setdefault(src, (dst, complex(z0)))
    return InvarianceReport(
        passed=not violations,
        checked=checked,
        violations=violations,
        samples=n_samples,
        excluded=excluded,
    )


@dataclass
class CorrespondenceReport:
    passed: bool
    count_ok: bool
    n_non_repelling: int
    n_critical: int
    cycle_entries: list[dict]

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def critical_correspondence(partition: Partition, cycles: list[CycleRecord],
                            crit_points: list[tuple[complex, int]]) -> CorrespondenceReport:
    """Each non-repelling cycle's cell union must own a critical point,
    and non-repelling cycles may not outnumber distinct critical points."""
    crit_cells: list[int | str] = [locate(partition, c) for c, _ in crit_points]
    entries: list[dict] = []
    all_ok = True
    n_non_rep = 0
    for i, rec in enumerate(cycles):
        if rec.cycle_class is CycleClass.REPELLING:
            continue
        n_non_rep += 1
        cell_union = set()
        undecided = 0
        for p in rec.points:
            loc = locate(partition, p)
            if isinstance(loc, int):
                cell_union.add(loc)
            else:
                undecided += 1
        has_crit = any(isinstance(cc, int) and cc in cell_union for cc in crit_cells)
        entries.append({
            "cycle_index": i,
            "period": rec.period,
            "cells": sorted(cell_union),
            "undecided_points": undecided,
            "has_critical_point": has_crit,
        })
        all_ok = all_ok and has_crit
    count_ok = n_non_rep <= len(crit_points)
    return CorrespondenceReport(
        passed=all_ok and count_ok,
        count_ok=count_ok,
        n_non_repelling=n_non_rep,
        n_critical=len(crit_points),
        cycle_entries=entries,
    )


def stabilization_period(cycles: list[CycleRecord] | None) -> int:
    """Least common multiple of the periods of all non-repelling cycles."""
    from .errors import CensusEmpty

    if cycles is None:
        raise CensusEmpty("a cycle census is required")
    m = 1
    for rec in cycles:
        if rec.cycle_class is not CycleClass.REPELLING:
            m = math.lcm(m, rec.period)
    return m
