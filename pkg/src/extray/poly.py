"""Monic polynomial maps: evaluation, iteration, cycles and multipliers.

The periodic-point finder runs an Aberth-Ehrlich simultaneous iteration on
the degree-d^n equation P^n(z) = z.  Values and derivatives are evaluated by
composing P (Horner at each step, derivative by the chain rule) rather than
through expanded coefficients: the expansion of high iterates carries
coefficients up to ~1e150 whose cancellation destroys every digit near the
Julia set, while composition is well conditioned there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import PeriodTooLarge, RootFindingFailed

ESCAPED = complex(math.inf, math.inf)

ITERATE_DEGREE_CAP = 2**14
CENSUS_TOL = 1e-6
DEDUP_TOL = 1e-8
PARABOLIC_CLUSTER_TOL = 1e-5


class CycleClass(str, Enum):
    ATTRACTING = "ATTRACTING"
    REPELLING = "REPELLING"
    PARABOLIC_CANDIDATE = "PARABOLIC_CANDIDATE"
    IRRATIONALLY_INDIFFERENT = "IRRATIONALLY_INDIFFERENT"


@dataclass(frozen=True)
class Polynomial:
    """Monic polynomial, coefficients constant-term first, leading term 1."""

    coefficients: tuple[complex, ...]

    def __post_init__(self) -> None:
        if len(self.coefficients) < 3:
            raise ValueError("degree must be >= 2")
        if self.coefficients[-1] != 1:
            raise ValueError("polynomial must be monic (leading coefficient 1)")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def escape_radius(self) -> float:
        """R with |z| >= R implying |P(z)| >= 2|z| (monic tail bound)."""
        return max(1.0, 2.0 + sum(abs(a) for a in self.coefficients[:-1]))

    @property
    def derivative_coefficients(self) -> tuple[complex, ...]:
        return tuple(k * a for k, a in enumerate(self.coefficients))[1:]

    @classmethod
    def from_coefficients(cls, coeffs: Sequence[complex]) -> "Polynomial":
        return cls(tuple(complex(a) for a in coeffs))

    @classmethod
    def quadratic(cls, c: complex) -> "Polynomial":
        """z^2 + c."""
        return cls((complex(c), 0j, 1 + 0j))

    def __str__(self) -> str:
        terms = []
        for k, a in enumerate(self.coefficients):
            if a == 0:
                continue
            terms.append(f"({a})*z^{k}" if k else f"({a})")
        return " + ".join(reversed(terms))


def evaluate(poly: Polynomial, z):
    """P(z) by Horner; accepts scalars or numpy arrays."""
    acc = z * 0 + poly.coefficients[-1]
    for a in reversed(poly.coefficients[:-1]):
        acc = acc * z + a
    return acc


def derivative(poly: Polynomial, z):
    """P'(z) by Horner; accepts scalars or numpy arrays."""
    dc = poly.derivative_coefficients
    acc = z * 0 + dc[-1]
    for a in reversed(dc[:-1]):
        acc = acc * z + a
    return acc


def iterate(poly: Polynomial, z: complex, n: int) -> complex:
    """P applied n times; short-circuits to ESCAPED far outside the escape radius."""
    if n < 0:
        raise ValueError("n must be >= 0")
    bailout = poly.escape_radius * 2.0**10
    w = complex(z)
    for _ in range(n):
        if not (abs(w) <= bailout):
            return ESCAPED
        w = evaluate(poly, w)
    if not (abs(w) <= bailout):
        return ESCAPED
    return w


def is_escaped(z: complex) -> bool:
    return not (math.isfinite(z.real) and math.isfinite(z.imag))


def iterate_value_and_derivative(poly: Polynomial, z, n: int):
    """(P^n(z), (P^n)'(z)) via composition; overflow propagates as inf/nan."""
    w = z * 1.0 if not np.isscalar(z) else complex(z)
    dw = (z * 0 + 1.0) if not np.isscalar(z) else 1.0 + 0j
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            dw = dw * derivative(poly, w)
            w = evaluate(poly, w)
    return w, dw


def classify(multiplier: complex, tol: float = 1e-9, parabolic_max_q: int = 64) -> CycleClass:
    """Classify a cycle multiplier.

    Attracting / repelling by |multiplier| against 1 +- tol; on the critical
    circle, a root-of-unity test up to exponent parabolic_max_q separates
    parabolic candidates from the rest.  Beyond q = 64 double precision
    cannot tell roots of unity from irrational rotation, and no numerical
    test separates Cremer from Siegel; the class name records that honestly.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    r = abs(multiplier)
    if r < 1 - tol:
        return CycleClass.ATTRACTING
    if r > 1 + tol:
        return CycleClass.REPELLING
    lam = complex(multiplier)
    power = lam
    for _ in range(parabolic_max_q):
        if abs(power - 1) < tol:
            return CycleClass.PARABOLIC_CANDIDATE
        power *= lam
    return CycleClass.IRRATIONALLY_INDIFFERENT


@dataclass(frozen=True)
class CycleRecord:
    """One cycle: points in orbit order, multiplier, class, root multiplicity."""

    period: int
    points: tuple[complex, ...]
    multiplier: complex
    cycle_class: CycleClass
    multiplicity: int = 1

    def recomputed_multiplier(self, poly: Polynomial) -> complex:
        m = 1 + 0j
        for p in self.points:
            m *= derivative(poly, p)
        return m


def _aberth_roots(value_derivative, n_roots: int, init_radius: float,
                  shrink: float, max_sweeps: int = 400) -> np.ndarray:
    """Aberth-Ehrlich sweep for all roots of a monic degree-n_roots function.

    value_derivative(z: ndarray) -> (f(z), f'(z)).  Non-finite evaluations
    (points thrown far outside by high iterates) fall back to a geometric
    pull toward the origin by ``shrink``.
    """
    k = np.arange(n_roots)
    z = init_radius * np.exp(2j * np.pi * (k + 0.5) / n_roots + 0.3942j)
    tiny = 1e-300
    for _ in range(max_sweeps):
        f, df = value_derivative(z)
        finite = np.isfinite(f) & np.isfinite(df)
        ratio = np.zeros_like(z)
        safe = finite & (np.abs(df) > tiny)
        ratio[safe] = f[safe] / df[safe]
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        small = np.abs(diff) < tiny
        if small.any():
            diff[small] = tiny
        s = np.sum(1.0 / diff, axis=1)
        denom = 1.0 - ratio * s
        bad_den = np.abs(denom) < 1e-12
        denom[bad_den] = 1.0
        w = ratio / denom
        w[~finite] = z[~finite] * (1.0 - shrink)
        w[finite & ~safe] = 0.0
        cap = 0.5 * (np.abs(z) + 1.0)
        big = np.abs(w) > cap
        if big.any():
            w[big] *= cap[big] / np.abs(w[big])
        z = z - w
        if finite.all() and np.max(np.abs(w)) < 1e-14 * (1.0 + np.max(np.abs(z))):
            break
    return z


def _newton_polish(value_derivative, z: np.ndarray, steps: int = 8) -> np.ndarray:
    tiny = 1e-300
    for _ in range(steps):
        f, df = value_derivative(z)
        ok = np.isfinite(f) & np.isfinite(df) & (np.abs(df) > tiny)
        step = np.zeros_like(z)
        step[ok] = f[ok] / df[ok]
        z = z - step
    return z


def _dedup_with_multiplicity(roots: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    """Cluster a root list by distance tol; sorted-scan, O(k log k)."""
    order = np.argsort(roots.real, kind="stable")
    pts = roots[order]
    reps: list[complex] = []
    counts: list[int] = []
    for z in pts:
        placed = False
        for i in range(len(reps) - 1, -1, -1):
            if z.real - reps[i].real > tol:
                break
            if abs(z - reps[i]) <= tol:
                counts[i] += 1
                placed = True
                break
        if not placed:
            reps.append(complex(z))
            counts.append(1)
    return list(zip(reps, counts))


def critical_points(poly: Polynomial) -> list[tuple[complex, int]]:
    """Roots of P' with multiplicities (summing to degree - 1)."""
    d = poly.degree
    dc = poly.derivative_coefficients
    lead = dc[-1]
    monic = tuple(a / lead for a in dc)

    def vd(z: np.ndarray):
        acc = z * 0 + monic[-1]
        dacc = z * 0
        for a in reversed(monic[:-1]):
            dacc = dacc * z + acc
            acc = acc * z + a
        return acc, dacc

    if d == 2:
        roots = np.array([-monic[0]])
    else:
        radius = 1.0 + max(abs(a) for a in monic[:-1])
        roots = _aberth_roots(vd, d - 1, radius, shrink=1.0 / d)
        roots = _newton_polish(vd, roots)
    clustered = _dedup_with_multiplicity(roots, 1e-6)
    out: list[tuple[complex, int]] = []
    for rep, count in clustered:
        res = abs(derivative(poly, rep))
        bound = 1e-10 * max(1.0, abs(rep)) ** (d - 1)
        if count == 1 and res >= bound:
            raise RootFindingFailed(f"residual {res:.2e} at critical point {rep}")
        out.append((rep, count))
    if sum(m for _, m in out) != d - 1:
        raise RootFindingFailed("critical point multiplicities do not sum to degree - 1")
    return sorted(out, key=lambda rm: (rm[0].real, rm[0].imag))


def _periodic_equation_roots(poly: Polynomial, n: int) -> np.ndarray:
    """All d^n roots of P^n(z) - z, Aberth + composition-Newton polish."""
    d = poly.degree
    count = d**n
    if count > ITERATE_DEGREE_CAP:
        raise PeriodTooLarge(f"d^n = {count} exceeds {ITERATE_DEGREE_CAP}")

    def vd(z: np.ndarray):
        w, dw = iterate_value_and_derivative(poly, z, n)
        return w - z, dw - 1.0

    radius = poly.escape_radius * 1.05
    roots = _aberth_roots(vd, count, radius, shrink=1.0 / d, max_sweeps=600)
    roots = _newton_polish(vd, roots, steps=12)
    g, _ = vd(roots)
    scale = 1.0 + np.abs(roots) ** 1
    bad = ~np.isfinite(g) | (np.abs(g) > 1e-6 * scale)
    if bad.any():
        raise RootFindingFailed(
            f"{int(bad.sum())} of {count} periodic-point residuals did not converge"
        )
    return roots


def _group_into_cycles(poly: Polynomial, reps: list[tuple[complex, int]],
                       n: int) -> list[CycleRecord]:
    """Group period-dividing-n points into cycles by following P."""
    points = [p for p, _ in reps]
    mults = {i: m for i, (_, m) in enumerate(reps)}
    arr = np.array(points) if points else np.zeros(0, dtype=complex)
    assigned = [False] * len(points)
    records: list[CycleRecord] = []
    for i in range(len(points)):
        if assigned[i]:
            continue
        cycle_idx = [i]
        assigned[i] = True
        cur = points[i]
        for _ in range(n):
            nxt = evaluate(poly, cur)
            j = int(np.argmin(np.abs(arr - nxt))) if len(points) else -1
            if j < 0 or abs(arr[j] - nxt) > CENSUS_TOL:
                raise RootFindingFailed(f"orbit of {points[i]} left the root set")
            if j == cycle_idx[0]:
                break
            if assigned[j]:
                raise RootFindingFailed("cycle grouping collided; roots too close")
            cycle_idx.append(j)
            assigned[j] = True
            cur = points[j]
        pts = tuple(points[j] for j in cycle_idx)
        multiplier = 1 + 0j
        for p in pts:
            multiplier *= derivative(poly, p)
        multiplicity = max(mults[j] for j in cycle_idx)
        # A multiple root of P^n(z) - z has (P^n)' = 1 there, so the cycle
        # multiplier is a root of unity: parabolic regardless of the tiny
        # numeric offset of the merged point.
        cls = CycleClass.PARABOLIC_CANDIDATE if multiplicity > 1 else classify(multiplier)
        records.append(CycleRecord(
            period=len(pts),
            points=pts,
            multiplier=multiplier,
            cycle_class=cls,
            multiplicity=multiplicity,
        ))
    records.sort(key=lambda r: (r.period, r.points[0].real, r.points[0].imag))
    return records


def periodic_points(poly: Polynomial, n: int) -> list[CycleRecord]:
    """All cycles whose period divides n, from the d^n roots of P^n(z) = z.

    Points are deduplicated at 1e-8; parabolic root collisions (clusters of
    near-equal roots with near-zero equation derivative) are merged and
    reported through the record's multiplicity instead of being split.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    roots = _periodic_equation_roots(poly, n)
    reps = _dedup_with_multiplicity(roots, DEDUP_TOL)

    def gprime(z: complex) -> float:
        _, dw = iterate_value_and_derivative(poly, np.array([z]), n)
        return abs(dw[0] - 1.0)

    merged: list[tuple[complex, int]] = []
    for rep, count in sorted(reps, key=lambda rm: (rm[0].real, rm[0].imag)):
        if merged:
            prev, pcount = merged[-1]
            if abs(rep - prev) < PARABOLIC_CLUSTER_TOL and gprime(rep) < 1e-3 and gprime(prev) < 1e-3:
                merged[-1] = ((prev * pcount + rep * count) / (pcount + count), pcount + count)
                continue
        merged.append((rep, count))

    def vd_scalar(z: np.ndarray):
        w, dw = iterate_value_and_derivative(poly, z, n)
        return w - z, dw - 1.0

    polished: list[tuple[complex, int]] = []
    for rep, count in merged:
        if count > 1:
            # multiplicity-aware Newton tightens the collision centroid
            z = np.array([rep])
            for _ in range(30):
                g, dg = vd_scalar(z)
                if abs(dg[0]) < 1e-300:
                    break
                z = z - count * g / dg
            rep = complex(z[0])
        polished.append((rep, count))
    return _group_into_cycles(poly, polished, n)


def exact_period_cycles(poly: Polynomial, n: int) -> list[CycleRecord]:
    """The cycles of exact period n (period-dividing-n census filtered)."""
    return [r for r in periodic_points(poly, n) if r.period == n]


@lru_cache(maxsize=64)
def _cached_periodic(poly_key: tuple[complex, ...], n: int) -> tuple[CycleRecord, ...]:
    return tuple(periodic_points(Polynomial(poly_key), n))


def periodic_points_cached(poly: Polynomial, n: int) -> list[CycleRecord]:
    return list(_cached_periodic(poly.coefficients, n))


def newton_periodic_search(poly: Polynomial, n: int, grid: int = 64,
                           box: float | None = None) -> np.ndarray:
    """Independent cross-check: Newton on P^n(z) - z from a grid of starts.

    Returns the converged, deduplicated points.  This can miss basins; the
    census is the exhaustive side of the pair.
    """
    b = box if box is not None else poly.escape_radius
    xs = np.linspace(-b, b, grid)
    zs = (xs[None, :] + 1j * xs[:, None]).ravel().astype(complex)
    tiny = 1e-300
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(60):
            w, dw = iterate_value_and_derivative(poly, zs, n)
            g = w - zs
            dg = dw - 1.0
            ok = np.isfinite(g) & np.isfinite(dg) & (np.abs(dg) > tiny)
            step = np.zeros_like(zs)
            step[ok] = g[ok] / dg[ok]
            lim = np.abs(step) > 1.0
            step[lim] /= np.abs(step[lim])
            zs = zs - step
    w, _ = iterate_value_and_derivative(poly, zs, n)
    g = np.abs(w - zs)
    good = zs[np.isfinite(g) & (g < 1e-9)]
    reps = _dedup_with_multiplicity(good, DEDUP_TOL)
    return np.array([p for p, _ in reps])
