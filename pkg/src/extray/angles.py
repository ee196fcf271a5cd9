"""Exact angle arithmetic on the circle R/Z and the angle-multiplication map.

Angles are ``fractions.Fraction`` values reduced into [0, 1); all dynamics of
the degree-d angle map t -> d*t (mod 1) stay exact, which is what keeps the
ray bookkeeping drift-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DuplicateSourceAngle, NotInvariant, PeriodTooLarge

Angle = Fraction

PERIODIC_ENUM_CAP = 2**20


def angle(numerator: int, denominator: int = 1) -> Angle:
    """Reduced angle p/q in [0, 1)."""
    return Fraction(numerator, denominator) % 1


def parse_angle(text: str) -> Angle:
    """Parse "p/q" (or "0", "3" etc.) into an angle in [0, 1)."""
    return Fraction(text.strip()) % 1


def format_angle(t: Angle) -> str:
    """Render as "p/q", or "0" for the zero angle."""
    return str(t)


def m_d(t: Angle, d: int) -> Angle:
    """Multiply-by-d circle map: d*t mod 1."""
    if d < 2:
        raise ValueError("degree must be >= 2")
    return (d * t) % 1


def preimages(t: Angle, d: int) -> list[Angle]:
    """The d preimages (t + k)/d, k = 0..d-1, in increasing order."""
    if d < 2:
        raise ValueError("degree must be >= 2")
    return [Fraction(t + k, d) for k in range(d)]


def periodic_angles(d: int, n: int) -> list[Angle]:
    """All angles fixed by the n-th iterate of the times-d map.

    These are k/(d^n - 1) for k = 0..d^n - 2, returned reduced and sorted;
    the count is exactly d^n - 1.
    """
    if d < 2 or n < 1:
        raise ValueError("need d >= 2 and n >= 1")
    q = d**n - 1
    if q > PERIODIC_ENUM_CAP:
        raise PeriodTooLarge(f"d^n - 1 = {q} exceeds {PERIODIC_ENUM_CAP}")
    return [Fraction(k, q) for k in range(q)]


@dataclass(frozen=True)
class AngleOrbit:
    """Forward orbit of an angle under the times-d map.

    ``angles[preperiod:]`` is the periodic cycle; every rational angle has a
    finite orbit, so this always terminates.
    """

    angles: tuple[Angle, ...]
    preperiod: int
    period: int

    @property
    def cycle(self) -> tuple[Angle, ...]:
        return self.angles[self.preperiod:]


def orbit(t: Angle, d: int) -> AngleOrbit:
    """Forward orbit with preperiod/period detected by exact equality."""
    seen: dict[Angle, int] = {}
    seq: list[Angle] = []
    cur = t % 1
    while cur not in seen:
        seen[cur] = len(seq)
        seq.append(cur)
        cur = m_d(cur, d)
    first = seen[cur]
    return AngleOrbit(tuple(seq), preperiod=first, period=len(seq) - first)


def is_cyclic_order_preserving(pairs: Sequence[tuple[Angle, Angle]]) -> bool:
    """True iff source -> target preserves the cyclic order of all triples.

    Sources must be pairwise distinct.  With sources sorted around the
    circle, the map preserves cyclic order exactly when the target sequence
    wraps around the circle once (at most one strict descent, targets all
    distinct); this is equivalent to checking every ordered triple.
    """
    srcs = [p[0] for p in pairs]
    if len(set(srcs)) != len(srcs):
        raise DuplicateSourceAngle("source angles must be pairwise distinct")
    if len(pairs) < 3:
        return True
    ordered = sorted(pairs, key=lambda p: p[0])
    targets = [p[1] for p in ordered]
    if len(set(targets)) != len(targets):
        return False
    n = len(targets)
    descents = sum(1 for i in range(n) if targets[(i + 1) % n] < targets[i])
    return descents <= 1


@dataclass(frozen=True)
class CommonPeriodReport:
    """Cycles of the times-d map inside a forward-invariant angle set."""

    cycles: tuple[tuple[Angle, ...], ...]
    periods: tuple[int, ...]
    consistent: bool

    @property
    def verdict(self) -> str:
        return "CONSISTENT_WITH_ORDER_PRESERVING" if self.consistent else "INCONSISTENT"


def common_period_report(angles: Iterable[Angle], d: int) -> CommonPeriodReport:
    """List all cycles of the times-d map inside the set and their periods.

    The set must be forward-invariant; the verdict is consistent exactly when
    all cycle periods coincide (the order-preserving circle-map signature).
    """
    aset = {a % 1 for a in angles}
    for a in aset:
        if m_d(a, d) not in aset:
            raise NotInvariant(f"image of {a} leaves the set")
    remaining = set(aset)
    cycles: list[tuple[Angle, ...]] = []
    while remaining:
        start = min(remaining)
        orb = orbit(start, d)
        cyc = orb.cycle
        if all(c in aset for c in cyc):
            key = min(cyc)
            rotated = cyc[cyc.index(key):] + cyc[:cyc.index(key)]
            if rotated not in cycles:
                cycles.append(rotated)
        remaining -= set(orb.angles) & remaining
    cycles.sort(key=lambda c: c[0])
    periods = tuple(len(c) for c in cycles)
    return CommonPeriodReport(tuple(cycles), periods, len(set(periods)) <= 1)
