"""Green's function of the filled Julia set and the Boettcher chart at infinity.

The potential is computed from the escape limit log|P^n(z)| / d^n with one
analytic correction term; the inverse Boettcher coordinate comes from the
telescoping product over the orbit, with all near-unity factors taken on the
principal branch (the same continuous-branch selection as root tracking, but
free of overflow).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    NotRegularValue,
    ResolutionTooCoarse,
    SeedOutside,
    TooCloseToJulia,
)
from .poly import Polynomial, critical_points, evaluate

GREEN_BUDGET = 512
_GROW_TARGET = 1e12
_LOG_SAFE = 600.0  # natural-log magnitude cap before one more step could overflow


def _tail_ratio(poly: Polynomial, w: complex) -> complex:
    """(P(w) - w^d) / w^d evaluated through 1/w powers; safe for huge |w|."""
    u = 1.0 / w
    acc = 0j
    for a in poly.coefficients[:-1]:
        acc = acc * u + a
    return acc * u


def green(poly: Polynomial, z: complex, iter_budget: int = GREEN_BUDGET) -> float:
    """Potential G(z) >= 0; zero means the orbit did not escape in budget."""
    if iter_budget < 1:
        raise ValueError("iter_budget must be >= 1")
    d = poly.degree
    R = poly.escape_radius
    w = complex(z)
    n = 0
    while n < iter_budget:
        aw = abs(w)
        if not math.isfinite(aw) or aw > R:
            break
        w = evaluate(poly, w)
        n += 1
    else:
        return 0.0
    if not math.isfinite(abs(w)):
        # overflowed inside the loop; back off is impossible, but overflow
        # after escape means G is large and dominated by the last finite step
        return math.inf
    # grow well past the escape radius so the tail correction is negligible
    while abs(w) < _GROW_TARGET and d * math.log(abs(w)) < _LOG_SAFE:
        w = evaluate(poly, w)
        n += 1
    g = math.log(abs(w)) / d**n
    e = _tail_ratio(poly, w)
    g += math.log(abs(1 + e)) / d ** (n + 1)
    return g


def green_grid(poly: Polynomial, zs: np.ndarray, iter_budget: int = GREEN_BUDGET) -> np.ndarray:
    """Vectorized green() over an array of points."""
    d = poly.degree
    R = poly.escape_radius
    w = zs.astype(complex).copy()
    n = np.zeros(w.shape, dtype=np.int64)
    active = np.ones(w.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(iter_budget):
            mag = np.abs(w)
            active &= np.isfinite(mag) & (mag <= R)
            if not active.any():
                break
            w[active] = evaluate(poly, w[active])
            n[active] += 1
        escaped = np.isfinite(np.abs(w)) & (np.abs(w) > R)
        grow = escaped.copy()
        for _ in range(64):
            mag = np.abs(w)
            grow &= (mag < _GROW_TARGET) & (d * np.log(np.maximum(mag, 1.0)) < _LOG_SAFE)
            if not grow.any():
                break
            w[grow] = evaluate(poly, w[grow])
            n[grow] += 1
    out = np.zeros(w.shape, dtype=float)
    if escaped.any():
        we = w[escaped]
        ne = n[escaped].astype(float)
        g = np.log(np.abs(we)) / float(d) ** ne
        u = 1.0 / we
        acc = np.zeros_like(we)
        for a in poly.coefficients[:-1]:
            acc = acc * u + a
        e = acc * u
        g = g + np.log(np.abs(1 + e)) / float(d) ** (ne + 1)
        out[escaped] = g
    overflowed = ~np.isfinite(np.abs(w))
    out[overflowed] = np.inf
    return out


def bottcher_inverse(poly: Polynomial, z: complex) -> complex:
    """w with phi(w) = z, via the principal-branch telescoping product.

    Requires the point to be comfortably outside the Julia set
    (G(z) > log(escape_radius)/8); fails loudly otherwise.
    """
    R = poly.escape_radius
    g = green(poly, z)
    if not g > math.log(R) / 8.0:
        raise TooCloseToJulia(f"G(z) = {g:.3e} too small for branch-stable inversion")
    d = poly.degree
    acc = cmath.log(z)
    w = complex(z)
    scale = d
    for _ in range(80):
        e = _tail_ratio(poly, w)
        if abs(e) > 0.75:
            raise TooCloseToJulia("orbit factor left the principal branch disc")
        acc += cmath.log(1 + e) / scale
        if abs(e) / scale < 1e-18:
            break
        if d * math.log(abs(w)) > _LOG_SAFE:
            break
        w = evaluate(poly, w)
        scale *= d
    return cmath.exp(acc)


def bottcher_forward(poly: Polynomial, w: complex, tol: float = 1e-12) -> complex:
    """phi(w): invert bottcher_inverse by multiplicative Newton from z = w."""
    z = complex(w)
    for _ in range(60):
        val = bottcher_inverse(poly, z)
        if abs(val - w) <= tol * abs(w):
            return z
        z *= w / val
    return z


def external_angle_of(poly: Polynomial, z: complex) -> float:
    """arg(phi^{-1}(z)) / 2pi in [0, 1); floating, not an exact angle."""
    w = bottcher_inverse(poly, z)
    return (cmath.phase(w) / (2 * math.pi)) % 1.0


def critical_potentials(poly: Polynomial, depth: int = 24) -> list[float]:
    """Potential levels G(c)/d^k of escaping critical points, k <= depth.

    These are exactly the critical values of G outside the filled Julia set;
    a level is regular when it keeps clear distance from this set.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    vals: set[float] = set()
    for c, _ in critical_points(poly):
        g = green(poly, c)
        if g > 0:
            for k in range(depth + 1):
                vals.add(g / poly.degree**k)
    return sorted(vals)


def is_regular_value(poly: Polynomial, r: float, level_tol: float = 1e-6,
                     depth: int = 24) -> bool:
    """Distance from r to the critical-potential set exceeds 10x level_tol."""
    crit = critical_potentials(poly, depth)
    return all(abs(r - c) > 10 * level_tol for c in crit)


@dataclass(frozen=True)
class RegionMask:
    """Sublevel-set component on a grid, with its traced boundary loop."""

    x0: float
    y0: float
    step: float
    inside: np.ndarray = field(repr=False)  # bool, shape (ny, nx)
    boundary: np.ndarray = field(repr=False)  # complex polyline, closed
    level: float = 0.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.inside.shape

    def contains(self, z: complex) -> bool:
        j = int(round((z.real - self.x0) / self.step))
        i = int(round((z.imag - self.y0) / self.step))
        ny, nx = self.inside.shape
        if 0 <= i < ny and 0 <= j < nx:
            return bool(self.inside[i, j])
        return False

    def area(self) -> float:
        return float(self.inside.sum()) * self.step * self.step

    def to_json(self) -> dict:
        rows = []
        for i in range(self.inside.shape[0]):
            row = self.inside[i]
            # run-length encoding: (start, length) pairs of inside runs
            runs = []
            j = 0
            nx = row.shape[0]
            while j < nx:
                if row[j]:
                    k = j
                    while k < nx and row[k]:
                        k += 1
                    runs.append([j, k - j])
                    j = k
                else:
                    j += 1
            rows.append(runs)
        return {
            "x0": self.x0,
            "y0": self.y0,
            "step": self.step,
            "shape": [int(self.inside.shape[0]), int(self.inside.shape[1])],
            "level": self.level,
            "rows": rows,
            "boundary": [[float(p.real), float(p.imag)] for p in self.boundary],
        }

    @classmethod
    def from_json(cls, data: dict) -> "RegionMask":
        ny, nx = data["shape"]
        inside = np.zeros((ny, nx), dtype=bool)
        for i, runs in enumerate(data["rows"]):
            for start, length in runs:
                inside[i, start:start + length] = True
        boundary = np.array([complex(x, y) for x, y in data["boundary"]])
        return cls(data["x0"], data["y0"], data["step"], inside, boundary, data["level"])


_MS_SEGMENTS = {
    1: [((0, 3), (2, 3))], 2: [((1, 2), (2, 3))], 3: [((0, 3), (1, 2))],
    4: [((0, 1), (1, 2))], 6: [((0, 1), (2, 3))], 7: [((0, 1), (0, 3))],
    8: [((0, 1), (0, 3))], 9: [((0, 1), (2, 3))], 11: [((0, 1), (1, 2))],
    12: [((0, 3), (1, 2))], 13: [((1, 2), (2, 3))], 14: [((0, 3), (2, 3))],
    5: [((0, 1), (1, 2)), ((0, 3), (2, 3))],
    10: [((0, 1), (0, 3)), ((1, 2), (2, 3))],
}


def _marching_segments(field_vals: np.ndarray, cells: np.ndarray,
                       x0: float, y0: float, h: float) -> list[tuple[complex, complex]]:
    """Zero-level segments of field_vals restricted to flagged grid cells."""
    segs: list[tuple[complex, complex]] = []
    ny, nx = field_vals.shape
    idx_i, idx_j = np.nonzero(cells)
    for i, j in zip(idx_i, idx_j):
        corners = [(i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)]
        vals = [field_vals[a, b] for a, b in corners]
        code = 0
        for v in vals:
            code = (code << 1) | (1 if v <= 0 else 0)
        if code in (0, 15):
            continue
        pts = [complex(x0 + b * h, y0 + a * h) for a, b in corners]

        def cross(e):
            a, b = e
            va, vb = vals[a], vals[b]
            t = va / (va - vb) if va != vb else 0.5
            t = min(max(t, 0.0), 1.0)
            return pts[a] + t * (pts[b] - pts[a])

        for e1, e2 in _MS_SEGMENTS[code]:
            segs.append((cross(e1), cross(e2)))
    return segs


def _chain_loop(segs: list[tuple[complex, complex]], h: float) -> np.ndarray:
    """Chain marching-squares segments into loops; return the longest."""
    if not segs:
        return np.zeros(0, dtype=complex)
    snap = 0.25 * h

    def key(p: complex) -> tuple[int, int]:
        return (int(round(p.real / snap)), int(round(p.imag / snap)))

    adj: dict[tuple[int, int], list[int]] = {}
    for idx, (a, b) in enumerate(segs):
        adj.setdefault(key(a), []).append(idx)
        adj.setdefault(key(b), []).append(idx)
    used = [False] * len(segs)

    def walk(loop: list[complex]) -> None:
        cur = loop[-1]
        while True:
            nxt = None
            for idx in adj.get(key(cur), []):
                if used[idx]:
                    continue
                pa, pb = segs[idx]
                if abs(pa - cur) < snap:
                    nxt = pb
                elif abs(pb - cur) < snap:
                    nxt = pa
                else:
                    continue
                used[idx] = True
                break
            if nxt is None:
                return
            loop.append(nxt)
            cur = nxt
            if abs(cur - loop[0]) < snap and len(loop) > 3:
                return

    loops: list[list[complex]] = []
    for start in range(len(segs)):
        if used[start]:
            continue
        used[start] = True
        a, b = segs[start]
        loop = [a, b]
        walk(loop)
        if abs(loop[-1] - loop[0]) >= snap:
            # open chain: extend from the other endpoint too
            loop.reverse()
            walk(loop)
        loops.append(loop)
    best = max(loops, key=len)
    return np.array(best)


def sublevel_component(poly: Polynomial, r: float, seed: complex,
                       resolution: float, box_half_width: float | None = None,
                       level_tol: float = 1e-6,
                       require_regular: bool = True) -> RegionMask:
    """Connected component of {G <= r} containing the seed, on a grid.

    Flood fill picks the seed's 4-connected component; the boundary is the
    marching-squares level curve of G - r restricted to the component's rim,
    with each crossing refined along its grid edge so every vertex sits on
    the level within level_tol.
    """
    if require_regular and not is_regular_value(poly, r, level_tol):
        raise NotRegularValue(f"r = {r} collides with a critical potential")
    g_seed = green(poly, seed)
    if g_seed >= r:
        raise SeedOutside(f"G(seed) = {g_seed} >= r = {r}")
    if box_half_width is None:
        box_half_width = 1.1 * max(poly.escape_radius, 2.0 * math.exp(r))
    h = resolution
    n_side = int(math.ceil(2 * box_half_width / h)) + 1
    xs = seed.real - box_half_width + h * np.arange(n_side)
    ys = seed.imag - box_half_width + h * np.arange(n_side)
    zz = xs[None, :] + 1j * ys[:, None]
    gvals = green_grid(poly, zz)
    sub = gvals <= r
    labels, _ = ndimage.label(sub)  # 4-connectivity by default
    si = int(round((seed.imag - ys[0]) / h))
    sj = int(round((seed.real - xs[0]) / h))
    lab = labels[si, sj]
    if lab == 0:
        raise SeedOutside("seed grid point is not in the sublevel set")
    inside = labels == lab
    if inside[0, :].any() or inside[-1, :].any() or inside[:, 0].any() or inside[:, -1].any():
        raise ResolutionTooCoarse("component touches the bounding box")
    # cells adjacent to the component carry the boundary
    comp_cells = inside[:-1, :-1] | inside[:-1, 1:] | inside[1:, :-1] | inside[1:, 1:]
    fvals = gvals - r
    # sign field consistent with membership: clamp other components out
    fvals = np.where(sub & ~inside, np.abs(fvals) + level_tol, fvals)
    segs = _marching_segments(fvals, comp_cells, xs[0], ys[0], h)
    loop = _chain_loop(segs, h)
    if len(loop) > 2:
        area2 = np.sum((loop.real * np.roll(loop.imag, -1)
                        - np.roll(loop.real, -1) * loop.imag))
        if area2 < 0:
            loop = loop[::-1]
    loop = _refine_boundary(poly, loop, r, level_tol)
    return RegionMask(float(xs[0]), float(ys[0]), float(h), inside, loop, level=r)


def _refine_boundary(poly: Polynomial, loop: np.ndarray, r: float,
                     level_tol: float) -> np.ndarray:
    """Secant-correct each vertex along the local gradient to |G - r| < tol."""
    out = loop.copy()
    for idx in range(len(out)):
        z = out[idx]
        g = green(poly, z) - r
        if abs(g) < level_tol:
            continue
        # gradient of G approximated by central differences
        eps = 1e-6
        gx = (green(poly, z + eps) - green(poly, z - eps)) / (2 * eps)
        gy = (green(poly, z + 1j * eps) - green(poly, z - 1j * eps)) / (2 * eps)
        grad = complex(gx, gy)
        norm2 = abs(grad) ** 2
        for _ in range(12):
            if norm2 == 0:
                break
            z = z - g * grad / norm2
            g = green(poly, z) - r
            if abs(g) < level_tol:
                break
        out[idx] = z
    return out
