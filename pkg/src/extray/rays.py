"""External ray tracing by Newton continuation down the potential.

All rays in the forward orbit of a rational angle advance together on a
shared geometric potential grid with M sub-steps per division of the
potential by d.  A sample of the ray at potential r is pulled back through
P from the image ray's sample at potential d*r; the top M levels, where no
image sample exists yet, start from the near-identity Boettcher chart.
Rational angles make the orbit finite, so the functional equation becomes a
finite recurrence.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .angles import Angle, AngleOrbit, format_angle, m_d, orbit
from .errors import AngleOrbitTooLarge, LevelMismatch
from .poly import (
    CycleClass,
    Polynomial,
    classify,
    derivative,
    evaluate,
    iterate_value_and_derivative,
)
from .potential import bottcher_inverse

ORBIT_CAP = 2**16
TAIL_POTENTIAL = 1e-7
TAIL_LEN = 20
TAIL_DIAMETER_TOL = 1e-6
LANDING_PROXIMITY = 0.1
DEFAULT_STEPS_PER_HALVING = 24
DEFAULT_POT_LO = 1e-9


def default_pot_hi(poly: Polynomial) -> float:
    """log(2 R): comfortably inside the Boettcher zone."""
    return math.log(2.0 * poly.escape_radius)


@dataclass
class ExternalRay:
    """A traced ray: strictly decreasing potentials with one point each."""

    angle: Angle
    potentials: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    status: str = "NOT_DECIDED"  # LANDED | NOT_DECIDED | TRACE_FAILED
    landing_point: complex | None = None
    landing_period: int | None = None
    landing_multiplier: complex | None = None
    landing_class: CycleClass | None = None
    fail_level: float | None = None
    far_points: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex),
                                   repr=False)

    def tail(self, below: float = TAIL_POTENTIAL, count: int = TAIL_LEN) -> np.ndarray:
        sel = self.potentials < below
        return self.points[sel][-count:]

    def point_at(self, potential: float) -> complex:
        """Sample at (or interpolated near) the requested potential."""
        idx = int(np.argmin(np.abs(self.potentials - potential)))
        return complex(self.points[idx])

    def closed_polyline(self, far_radius: float = 1e8) -> np.ndarray:
        """Landing point (if any), samples low-to-high, then the sparse
        chart samples continuing the ray outward, ending on a radial anchor."""
        pts = list(self.points[::-1])
        if self.landing_point is not None:
            pts = [self.landing_point] + pts
        pts.extend(self.far_points)
        pts.append(far_radius * cmath.exp(2j * math.pi * float(self.angle)))
        return np.array(pts)

    def to_records(self) -> list[dict]:
        recs = [
            {
                "angle": format_angle(self.angle),
                "potential": float(r),
                "re": float(z.real),
                "im": float(z.imag),
            }
            for r, z in zip(self.potentials, self.points)
        ]
        status: dict = {"angle": format_angle(self.angle), "status": self.status}
        if self.landing_point is not None:
            status["landing_re"] = float(self.landing_point.real)
            status["landing_im"] = float(self.landing_point.imag)
        if self.landing_class is not None:
            status["landing_class"] = self.landing_class.value
        if self.fail_level is not None:
            status["fail_level"] = float(self.fail_level)
        recs.append(status)
        return recs


class _TraceFailure(Exception):
    pass


def _bottcher_start(poly: Polynomial, potential: float, t: Angle) -> complex:
    """Point of the ray at a potential inside the Boettcher zone."""
    w = cmath.exp(potential + 2j * math.pi * float(t))
    z = w
    for _ in range(40):
        val = bottcher_inverse(poly, z)
        if abs(val - w) <= 1e-13 * abs(w):
            return z
        z *= w / val
    return z


def _newton_pullback(poly: Polynomial, target: complex, seed: complex) -> complex:
    z = complex(seed)
    scale = max(1.0, abs(target))
    for _ in range(48):
        f = evaluate(poly, z) - target
        if abs(f) <= 1e-13 * scale:
            return z
        df = derivative(poly, z)
        if df == 0:
            raise _TraceFailure("zero derivative")
        step = f / df
        if not (abs(step) < 1.0 + abs(z)):
            raise _TraceFailure("newton step exploded")
        z -= step
    if abs(evaluate(poly, z) - target) <= 1e-10 * scale:
        return z
    raise _TraceFailure("newton did not converge")


def trace_ray(poly: Polynomial, t: Angle, pot_hi: float | None = None,
              pot_lo: float = DEFAULT_POT_LO,
              steps_per_halving: int = DEFAULT_STEPS_PER_HALVING,
              ) -> dict[Angle, ExternalRay]:
    """Trace all rays in the times-d orbit of t down to pot_lo.

    Returns one ray per orbit angle.  Newton divergence at a level is
    retried with up to 8 recursive halvings of the potential step (targets on
    the image ray interpolated between its grid samples); a ray that still
    fails keeps its samples and is marked TRACE_FAILED at that level.
    """
    d = poly.degree
    if pot_hi is None:
        pot_hi = default_pot_hi(poly)
    if not (pot_hi > pot_lo > 0):
        raise ValueError("need pot_hi > pot_lo > 0")
    if pot_hi < math.log(poly.escape_radius):
        raise ValueError("pot_hi below log(escape_radius)")
    orb: AngleOrbit = orbit(t, d)
    angles = list(orb.angles)
    L = len(angles)
    if L > ORBIT_CAP:
        raise AngleOrbitTooLarge(f"orbit has {L} angles")
    sigma = [i + 1 if i + 1 < L else orb.preperiod for i in range(L)]

    M = max(1, round(steps_per_halving * math.log2(d)))
    n_levels = int(math.ceil(M * math.log(pot_hi / pot_lo, d))) + 1
    levels = pot_hi * np.power(float(d), -np.arange(n_levels) / M)

    pts: list[list[complex]] = [[] for _ in range(L)]
    failed_at: list[int | None] = [None] * L

    def image_point_at(i: int, rho: float) -> complex:
        """Point of ray i at arbitrary potential rho (grid, interpolated, or chart)."""
        if rho >= levels[0] - 1e-15:
            return _bottcher_start(poly, rho, angles[i])
        hi = int(np.searchsorted(-levels, -rho))  # first level <= rho
        lo_idx = hi
        hi_idx = hi - 1
        if lo_idx >= len(pts[i]):
            raise _TraceFailure("image ray not traced deep enough")
        za, ra = pts[i][hi_idx], levels[hi_idx]
        zb, rb = pts[i][lo_idx], levels[lo_idx]
        s = (math.log(ra) - math.log(rho)) / (math.log(ra) - math.log(rb))
        return za + s * (zb - za)

    def descend(i: int, r_from: float, z_from: complex, r_to: float,
                depth: int) -> complex:
        target = image_point_at(sigma[i], d * r_to)
        try:
            return _newton_pullback(poly, target, z_from)
        except _TraceFailure:
            if depth >= 8:
                raise
            r_mid = math.sqrt(r_from * r_to)
            z_mid = descend(i, r_from, z_from, r_mid, depth + 1)
            return descend(i, r_mid, z_mid, r_to, depth + 1)

    for j in range(n_levels):
        for i in range(L):
            if failed_at[i] is not None:
                continue
            try:
                if j < M:
                    z = _bottcher_start(poly, float(levels[j]), angles[i])
                else:
                    if failed_at[sigma[i]] is not None and j - M >= len(pts[sigma[i]]):
                        raise _TraceFailure("image ray failed earlier")
                    z = descend(i, float(levels[j - 1]), pts[i][j - 1],
                                float(levels[j]), 0)
            except _TraceFailure:
                failed_at[i] = j
                continue
            pts[i].append(z)

    # sparse chart samples continuing each ray outward; without them the
    # far extension would cut a wide wrong-side sliver near the asymptote
    far_pots: list[float] = []
    p = 2.0 * pot_hi
    while p < math.log(1e7):
        far_pots.append(p)
        p *= 2.0
    far_pots.append(math.log(1e7))

    rays: dict[Angle, ExternalRay] = {}
    for i, a in enumerate(angles):
        k = len(pts[i])
        ray = ExternalRay(
            angle=a,
            potentials=levels[:k].copy(),
            points=np.array(pts[i], dtype=complex),
            far_points=np.array([_bottcher_start(poly, fp, a) for fp in far_pots]),
        )
        if failed_at[i] is not None:
            ray.status = "TRACE_FAILED"
            ray.fail_level = float(levels[failed_at[i]])
        rays[a] = ray
    return rays


def ray_functional_check(poly: Polynomial, rays: dict[Angle, ExternalRay],
                         t: Angle) -> float:
    """max over shared levels of |P(R_t at r) - R_{dt} at d*r|."""
    d = poly.degree
    t = t % 1
    s = m_d(t, d)
    if t not in rays or s not in rays:
        raise LevelMismatch("rays for t and d*t are both required")
    rt, rs = rays[t], rays[s]
    if len(rt.potentials) == 0 or len(rs.potentials) == 0:
        raise LevelMismatch("empty trace")
    # shared levels: level j of R_t maps to level j - M of R_{dt}
    ratio = rt.potentials[0] / rt.potentials[1] if len(rt.potentials) > 1 else None
    if ratio is None:
        raise LevelMismatch("trace too short")
    M = round(math.log(d) / math.log(ratio))
    if abs(rt.potentials[0] - rs.potentials[0]) > 1e-12 * rt.potentials[0]:
        raise LevelMismatch("potential grids do not align")
    worst = 0.0
    for j in range(M, len(rt.potentials)):
        if j - M >= len(rs.potentials):
            break
        img = evaluate(poly, complex(rt.points[j]))
        worst = max(worst, abs(img - complex(rs.points[j - M])))
    return worst


def _polish_periodic(poly: Polynomial, seed: complex, q: int) -> complex | None:
    z = np.array([complex(seed)])
    for _ in range(90):
        w, dw = iterate_value_and_derivative(poly, z, q)
        g = w - z
        dg = dw - 1.0
        if not np.isfinite(g[0]) or abs(dg[0]) < 1e-300:
            return None
        step = g[0] / dg[0]
        if abs(step) > 1.0:
            step /= abs(step)
        z = z - step
        if abs(step) < 1e-14:
            break
    w, _ = iterate_value_and_derivative(poly, z, q)
    if abs(w[0] - z[0]) < 1e-8 * (1 + abs(z[0])):
        return complex(z[0])
    return None


def _polish_preimage(poly: Polynomial, seed: complex, image_pt: complex) -> complex | None:
    z = complex(seed)
    for _ in range(90):
        f = evaluate(poly, z) - image_pt
        df = derivative(poly, z)
        if df == 0:
            break
        step = f / df
        if abs(step) > 1.0:
            step /= abs(step)
        z -= step
        if abs(step) < 1e-14:
            break
    if abs(evaluate(poly, z) - image_pt) < 1e-7 * (1 + abs(image_pt)):
        return z
    return None


def _accept_landing(ray: ExternalRay, p: complex) -> bool:
    """Tail must approach p: last distance minimal-ish and within proximity."""
    tail = ray.tail()
    if len(tail) < TAIL_LEN:
        return False
    dists = np.abs(tail - p)
    if dists[-1] > LANDING_PROXIMITY:
        return False
    if dists[-1] > dists[0] + 1e-12:
        return False
    increases = int(np.sum(np.diff(dists) > 1e-12))
    return increases <= 2


def landing_classify(multiplier: complex) -> CycleClass:
    """Classify a landing-point multiplier.

    A parabolic landing point is a multiple root of the period equation, so
    plain Newton leaves it with O(1e-8) error and the multiplier inherits
    that; the root-of-unity test therefore runs at the root-noise tolerance
    instead of classify()'s 1e-9.
    """
    lam = complex(multiplier)
    power = lam
    for _ in range(64):
        if abs(power - 1) < 1e-6:
            return CycleClass.PARABOLIC_CANDIDATE
        power *= lam
    return classify(lam)


def _p_period_of(poly: Polynomial, p: complex, q: int) -> tuple[int, complex]:
    """Exact P-period (dividing q) of the landed point, plus its multiplier."""
    pts = [p]
    cur = p
    period = q
    for k in range(1, q + 1):
        cur = evaluate(poly, cur)
        if abs(cur - p) < 1e-6 * (1 + abs(p)):
            period = k
            break
        pts.append(cur)
    mult = 1 + 0j
    for z in pts[:period]:
        mult *= derivative(poly, z)
    return period, mult


def land_orbit(poly: Polynomial, t: Angle, pot_lo: float = DEFAULT_POT_LO,
               pot_hi: float | None = None,
               steps_per_halving: int = DEFAULT_STEPS_PER_HALVING,
               ) -> dict[Angle, ExternalRay]:
    """Trace the orbit of t and decide landing for every ray in it.

    Cycle rays are polished against the periodic-point equation of the
    matching iterate (periodic rays land on repelling or parabolic cycles,
    and the polish supplies the accuracy the slow parabolic tail cannot);
    strictly preperiodic rays are polished against P(z) = landing point of
    the image ray.  A ray is LANDED only if its low-potential tail is seen
    approaching the polished point; generic tails of tiny diameter are also
    accepted as landed at their centroid.
    """
    d = poly.degree
    rays = trace_ray(poly, t, pot_hi=pot_hi, pot_lo=pot_lo,
                     steps_per_halving=steps_per_halving)
    orb = orbit(t % 1, d)
    angles = list(orb.angles)
    q = orb.period
    landing: dict[Angle, complex] = {}

    def generic_accept(ray: ExternalRay) -> None:
        tail = ray.tail()
        if len(tail) >= TAIL_LEN:
            diam = np.max(np.abs(tail[:, None] - tail[None, :]))
            if diam < TAIL_DIAMETER_TOL:
                ray.status = "LANDED"
                ray.landing_point = complex(tail.mean())

    # periodic part first
    for a in angles[orb.preperiod:]:
        ray = rays[a]
        tail = ray.tail()
        if len(tail) < TAIL_LEN:
            continue
        p = _polish_periodic(poly, complex(tail.mean()), q)
        if p is not None and _accept_landing(ray, p):
            period, mult = _p_period_of(poly, p, q)
            ray.status = "LANDED"
            ray.landing_point = p
            ray.landing_period = period
            ray.landing_multiplier = mult
            ray.landing_class = landing_classify(mult)
            landing[a] = p
        else:
            generic_accept(ray)
            if ray.landing_point is not None:
                landing[a] = ray.landing_point
    # then walk the preperiodic tail backwards
    for i in range(orb.preperiod - 1, -1, -1):
        a = angles[i]
        img = angles[i + 1]
        ray = rays[a]
        if img not in landing:
            generic_accept(ray)
            continue
        tail = ray.tail()
        if len(tail) < TAIL_LEN:
            continue
        p = _polish_preimage(poly, complex(tail.mean()), landing[img])
        if p is not None and _accept_landing(ray, p):
            ray.status = "LANDED"
            ray.landing_point = p
            landing[a] = p
        else:
            generic_accept(ray)
            if ray.landing_point is not None:
                landing[a] = ray.landing_point
    return rays


def land(poly: Polynomial, t: Angle, pot_lo: float = DEFAULT_POT_LO) -> ExternalRay:
    """Landing decision for the single ray at angle t."""
    return land_orbit(poly, t, pot_lo=pot_lo)[t % 1]
