"""Polynomial-like map extraction from Green sublevel components.

The outer domain is a regular sublevel component, the inner one its pullback
level r0/d (r0/d^n for an iterate); the covering degree comes from the
argument principle evaluated by trapezoid quadrature over the traced
boundary, and connectivity evidence follows the critical orbits inside the
inner mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContainmentFailed,
    DegreeOne,
    NoAdmissibleValue,
    NotPeriodic,
    QuadratureUnstable,
    WTooCloseToImageBoundary,
)
from .poly import Polynomial, critical_points, derivative, evaluate, iterate_value_and_derivative
from .potential import RegionMask, green, is_regular_value, sublevel_component

SELECT_MAX_HALVINGS = 60
QUADRATURE_MIN_POINTS = 2**10


@dataclass
class PolynomialLikeMap:
    """Restriction of P (or its n-th iterate) between nested sublevel discs."""

    poly: Polynomial
    iterate: int
    r0: float
    inner: RegionMask
    outer: RegionMask
    degree: int
    critical_inside: list[complex]
    seed: complex

    @property
    def effective_degree(self) -> int:
        return self.poly.degree**self.iterate

    def apply(self, z: complex) -> complex:
        w = complex(z)
        for _ in range(self.iterate):
            w = evaluate(self.poly, w)
        return w

    def to_json(self, inner_ref: str = "inner_mask.json",
                outer_ref: str = "outer_mask.json") -> dict:
        return {
            "polynomial": str(self.poly),
            "iterate": self.iterate,
            "r0": self.r0,
            "degree": self.degree,
            "inner_mask": inner_ref,
            "outer_mask": outer_ref,
            "critical_points_inside": [[c.real, c.imag] for c in self.critical_inside],
            "seed": [self.seed.real, self.seed.imag],
        }


def _nudge_regular(poly: Polynomial, r: float, level_tol: float = 1e-6) -> float:
    """Move r to the nearest comfortably regular value (geometric nudges)."""
    if is_regular_value(poly, r, level_tol):
        return r
    for k in range(1, 40):
        for cand in (r * (1 + 0.03 * k), r * (1 - 0.03 * k)):
            if cand > 0 and is_regular_value(poly, cand, level_tol):
                return cand
    raise NoAdmissibleValue(f"no regular value near {r}")


def select_regular_value(poly: Polynomial, seed: complex,
                         orbit_budget: int = 10_000,
                         resolution: float = 0.02,
                         n_iter: int = 1) -> float:
    """First regular level whose seed component is a renormalization window.

    Descends a geometric sequence of candidate levels; a candidate is
    accepted when the seed's sublevel component contains at least one
    critical point (of the iterate being restricted) and every critical
    point inside has potential zero and an orbit staying inside for the
    whole budget: the computable surrogate for belonging to the invariant
    component.  Candidates colliding with critical potentials are nudged
    aside automatically.
    """
    if green(poly, seed) > 0:
        raise NotPeriodic("seed must have a bounded orbit")
    crit = _iterate_critical_points(poly, n_iter)
    escaping = [green(poly, c) for c, _ in crit]
    r = max([1.0] + [1.6 * g for g in escaping if g > 0])

    def step(z: complex) -> complex:
        for _ in range(n_iter):
            z = evaluate(poly, z)
        return z

    for _ in range(SELECT_MAX_HALVINGS):
        try:
            cand = _nudge_regular(poly, r)
            mask = sublevel_component(poly, cand, seed, resolution)
        except Exception:
            r *= 0.5
            continue
        inside = [c for c, _ in crit if mask.contains(c)]
        if inside:
            ok = True
            for c in inside:
                if green(poly, c) > 0:
                    ok = False
                    break
                w = complex(c)
                for _ in range(orbit_budget):
                    w = step(w)
                    if not mask.contains(w):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return cand
        r *= 0.5
    raise NoAdmissibleValue("no admissible regular value after 60 halvings")


def _resample_polyline(pts: np.ndarray, n: int) -> np.ndarray:
    """n points spread evenly in arc length along a closed polyline."""
    closed = np.append(pts, pts[:1])
    seg = np.abs(np.diff(closed))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    targets = np.linspace(0.0, total, n, endpoint=False)
    out = np.empty(n, dtype=complex)
    j = 0
    for i, s in enumerate(targets):
        while cum[j + 1] < s:
            j += 1
        t = (s - cum[j]) / (cum[j + 1] - cum[j]) if cum[j + 1] > cum[j] else 0.0
        out[i] = closed[j] + t * (closed[j + 1] - closed[j])
    return out


def degree_by_argument_principle(plm_poly: Polynomial, n_iter: int,
                                 boundary: np.ndarray, w: complex,
                                 quadrature_points: int = QUADRATURE_MIN_POINTS,
                                 image_boundary: np.ndarray | None = None,
                                 resolution: float = 0.0) -> int:
    """Zeros of P^n - w inside the boundary loop, by contour quadrature.

    Trapezoid integration of (P^n)'/(P^n - w) over the resampled polyline;
    the count must sit within 0.2 of an integer, else the point budget is
    doubled (up to three times) before giving up.
    """
    if quadrature_points < QUADRATURE_MIN_POINTS:
        quadrature_points = QUADRATURE_MIN_POINTS
    if image_boundary is not None and resolution > 0:
        dmin = np.min(np.abs(image_boundary - w))
        if dmin <= 2 * resolution:
            raise WTooCloseToImageBoundary(f"test value within {dmin:.3g} of P(boundary)")
    n_pts = quadrature_points
    for _ in range(4):
        ring = _resample_polyline(boundary, n_pts)
        vals, dvals = iterate_value_and_derivative(plm_poly, ring, n_iter)
        f = vals - w
        if np.any(np.abs(f) < 1e-12):
            raise QuadratureUnstable("test value lies on the image of the contour")
        integrand = dvals / f
        dz = np.roll(ring, -1) - ring
        mid = 0.5 * (integrand + np.roll(integrand, -1))
        total = np.sum(mid * dz) / (2j * math.pi)
        count = float(total.real)
        nearest = round(count)
        if abs(count - nearest) <= 0.2 and abs(total.imag) < 0.2:
            return int(nearest)
        n_pts *= 2
    raise QuadratureUnstable(f"winding estimate {count:.3f} not near an integer")


def extract(poly: Polynomial, seed: complex, r0: float, resolution: float,
            n_iter: int = 1) -> PolynomialLikeMap:
    """Build the nested masks at r0 and r0/d^n and certify the covering.

    Raises CONTAINMENT_FAILED when the inner mask reaches the outer rim at
    this resolution and DEGREE_ONE when the restriction is a conformal
    isomorphism (the excluded repelling-fixed-point case).
    """
    d_eff = poly.degree**n_iter
    r_in = r0 / d_eff
    if not is_regular_value(poly, r_in):
        r0 = _nudge_regular(poly, r0)
        r_in = r0 / d_eff
        if not is_regular_value(poly, r_in):
            raise NoAdmissibleValue("inner level cannot be made regular")
    box = 1.1 * max(poly.escape_radius, 2.0 * math.exp(r0))
    outer = sublevel_component(poly, r0, seed, resolution, box_half_width=box)
    inner = sublevel_component(poly, r_in, seed, resolution, box_half_width=box)
    grown = _dilate(inner.inside)
    if np.any(grown & ~outer.inside):
        raise ContainmentFailed("inner mask reaches the outer rim (margin < 1 cell)")
    img_boundary = None
    w = complex(seed)
    vals, _ = iterate_value_and_derivative(poly, inner.boundary, n_iter)
    img_boundary = vals
    deg = degree_by_argument_principle(poly, n_iter, inner.boundary, w,
                                       image_boundary=img_boundary,
                                       resolution=resolution)
    if deg < 2:
        raise DegreeOne(f"covering degree {deg}; not polynomial-like of degree >= 2")
    crit_inside = [c for c, _ in _iterate_critical_points(poly, n_iter)
                   if inner.contains(c)]
    return PolynomialLikeMap(
        poly=poly, iterate=n_iter, r0=r0, inner=inner, outer=outer,
        degree=deg, critical_inside=crit_inside, seed=complex(seed),
    )


def _dilate(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


def _iterate_critical_points(poly: Polynomial, n_iter: int) -> list[tuple[complex, int]]:
    """Critical points of P^n: the n-step backward orbit of P's critical set."""
    pts = list(critical_points(poly))
    if n_iter == 1:
        return pts
    # z is critical for P^n iff P^k(z) is critical for P, some 0 <= k < n
    found: list[tuple[complex, int]] = []
    for c, m in pts:
        found.append((c, m))
    layer = [c for c, _ in pts]
    for _ in range(n_iter - 1):
        new_layer: list[complex] = []
        for target in layer:
            new_layer.extend(_poly_preimages(poly, target))
        for z in new_layer:
            if all(abs(z - f) > 1e-8 for f, _ in found):
                found.append((z, 1))
        layer = new_layer
    return found


def _poly_preimages(poly: Polynomial, w: complex) -> list[complex]:
    """All solutions of P(z) = w (small degree, direct companion solve)."""
    coeffs = list(poly.coefficients)
    coeffs[0] -= w
    # companion-matrix eigenvalues for the monic shifted polynomial
    d = len(coeffs) - 1
    comp = np.zeros((d, d), dtype=complex)
    comp[1:, :-1] = np.eye(d - 1)
    comp[:, -1] = [-c for c in coeffs[:-1]]
    eig = np.linalg.eigvals(comp)
    out = []
    for z in eig:
        zz = complex(z)
        for _ in range(30):
            f = evaluate(poly, zz) - w
            df = derivative(poly, zz)
            if df == 0 or abs(f) < 1e-13 * max(1.0, abs(w)):
                break
            zz -= f / df
        out.append(zz)
    return out


@dataclass
class ConnectivityReport:
    verdict: str  # CONNECTED_EVIDENCE | DISCONNECTED_EVIDENCE | UNDECIDED
    orbit_budget: int
    per_critical: list[dict] = field(default_factory=list)


def connectivity_evidence(plm: PolynomialLikeMap,
                          orbit_budget: int = 10_000) -> ConnectivityReport:
    """Critical orbits must stay inside the inner domain for the budget."""
    verdict = "CONNECTED_EVIDENCE"
    entries = []
    h = plm.inner.step
    for c in plm.critical_inside:
        w = complex(c)
        escaped_at = None
        undecided = False
        for step in range(1, orbit_budget + 1):
            w = plm.apply(w)
            if not plm.inner.contains(w):
                bd = np.min(np.abs(plm.inner.boundary - w)) if len(plm.inner.boundary) else math.inf
                if bd <= h:
                    undecided = True
                else:
                    escaped_at = step
                break
        entries.append({
            "critical_point": [c.real, c.imag],
            "escaped_at": escaped_at,
            "undecided": undecided,
        })
        if escaped_at is not None:
            verdict = "DISCONNECTED_EVIDENCE"
        elif undecided and verdict == "CONNECTED_EVIDENCE":
            verdict = "UNDECIDED"
    return ConnectivityReport(verdict=verdict, orbit_budget=orbit_budget,
                              per_critical=entries)


def renormalize_iterate(poly: Polynomial, n: int, periodic_seed: complex,
                        resolution: float = 0.02,
                        orbit_budget: int = 10_000) -> tuple[PolynomialLikeMap, ConnectivityReport]:
    """Full pipeline on the n-th iterate around a verified period-n point.

    Potentials scale by d^n across the iterate, so the inner level is
    r0/d^n; the effective degree d^n is capped to keep masks tractable.
    """
    d_eff = poly.degree**n
    if d_eff > 2**8:
        raise NotPeriodic(f"effective degree {d_eff} exceeds 2^8")
    w, _ = iterate_value_and_derivative(poly, np.array([periodic_seed]), n)
    if abs(w[0] - periodic_seed) > 1e-6 * (1 + abs(periodic_seed)):
        raise NotPeriodic(f"seed is not a period-{n} point")
    r0 = select_regular_value(poly, periodic_seed, orbit_budget=min(orbit_budget, 2000),
                              resolution=resolution, n_iter=n)
    plm = extract(poly, periodic_seed, r0, resolution, n_iter=n)
    report = connectivity_evidence(plm, orbit_budget)
    return plm, report


def scan_cubic_with_escaping_critical(b_values: list[complex] | None = None
                                      ) -> tuple[Polynomial, complex]:
    """Scan z^3 - 3z + b for one escaping and one bounded critical orbit.

    Returns the first hit together with a fixed point lying in the bounded
    critical point's component (checked by potential and orbit containment
    at selection time downstream).
    """
    if b_values is None:
        b_values = [complex(x, 0) for x in
                    (3.0, -3.0, 2.9, -2.9, 3.1, -3.1, 2.8, -2.8, 3.2, -3.2)]
    for b in b_values:
        poly = Polynomial.from_coefficients([b, -3.0, 0.0, 1.0])
        gs = {c: green(poly, c) for c, _ in critical_points(poly)}
        escaping = [c for c, g in gs.items() if g > 0]
        bounded = [c for c, g in gs.items() if g == 0]
        if len(escaping) != 1 or len(bounded) != 1:
            continue
        # fixed points: roots of P(z) - z
        coeffs = list(poly.coefficients)
        coeffs[1] -= 1.0
        shifted = Polynomial.from_coefficients(coeffs)
        fixed = _poly_preimages(shifted, 0)
        target = bounded[0]
        fixed.sort(key=lambda z: abs(z - target))
        for zf in fixed:
            if green(poly, zf) == 0 and abs(zf - target) < 1.5:
                return poly, complex(zf)
    raise NoAdmissibleValue("scan found no cubic with the requested critical split")
