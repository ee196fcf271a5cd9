"""Deterministic PPM rendering of filled Julia sets with overlays.

Binary P6 output with the exact header "P6\\n{w} {h}\\n255\\n" and RGB rows
top to bottom; shading combines escape time with a distance estimate so the
Julia set shows as a dark halo.  No image library: byte-exact golden files
stay trivially checkable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .angles import Angle
from .poly import Polynomial, derivative, evaluate
from .potential import green_grid
from .rays import trace_ray

INTERIOR_RGB = (0, 0, 0)
RAY_RGB = (255, 60, 40)
EQUIPOTENTIAL_RGB = (70, 120, 255)
MARKER_RGB = (60, 220, 90)


@dataclass
class RenderSpec:
    width: int = 256
    height: int = 256
    center: complex = 0j
    half_width: float = 2.0
    iter_budget: int = 256
    ray_angles: list[Angle] = field(default_factory=list)
    equipotentials: list[float] = field(default_factory=list)
    markers: list[complex] = field(default_factory=list)


def _pixel_grid(spec: RenderSpec) -> tuple[np.ndarray, float]:
    aspect = spec.height / spec.width
    half_h = spec.half_width * aspect
    xs = np.linspace(spec.center.real - spec.half_width,
                     spec.center.real + spec.half_width, spec.width)
    ys = np.linspace(spec.center.imag + half_h,
                     spec.center.imag - half_h, spec.height)  # top row first
    zz = xs[None, :] + 1j * ys[:, None]
    scale = 2.0 * spec.half_width / spec.width
    return zz, scale


def _shade(poly: Polynomial, zz: np.ndarray, budget: int,
           pixel: float) -> np.ndarray:
    """Grayscale exterior by distance estimate, interior black."""
    z = zz.astype(complex).copy()
    dz = np.ones_like(z)
    alive = np.ones(z.shape, dtype=bool)
    bail = max(poly.escape_radius, 100.0)
    dist = np.zeros(z.shape, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(budget):
            if not alive.any():
                break
            zd = z[alive]
            dz[alive] = dz[alive] * derivative(poly, zd)
            z[alive] = evaluate(poly, zd)
            mag = np.abs(z)
            newly = alive & (mag > bail)
            if newly.any():
                zn = z[newly]
                dn = dz[newly]
                with np.errstate(divide="ignore", invalid="ignore"):
                    est = np.abs(zn) * np.log(np.abs(zn)) / np.abs(dn)
                dist[newly] = est
                alive[newly] = False
            alive &= np.isfinite(mag)
    img = np.zeros(zz.shape, dtype=np.uint8)
    escaped = dist > 0
    t = np.clip(dist[escaped] / (4.0 * pixel), 0.0, 1.0)
    img[escaped] = (40 + 215 * np.sqrt(t)).astype(np.uint8)
    return img


def _draw_polyline(rgb: np.ndarray, pts: np.ndarray, spec: RenderSpec,
                   color: tuple[int, int, int]) -> None:
    zz_scale = 2.0 * spec.half_width / spec.width
    aspect = spec.height / spec.width
    half_h = spec.half_width * aspect
    for a, b in zip(pts[:-1], pts[1:]):
        seg = abs(b - a)
        if not math.isfinite(seg):
            continue
        n = max(2, int(seg / (0.5 * zz_scale)) + 1)
        if n > 100000:
            n = 100000
        for k in range(n + 1):
            p = a + (b - a) * k / n
            col = (p.real - (spec.center.real - spec.half_width)) / zz_scale
            row = ((spec.center.imag + half_h) - p.imag) / zz_scale
            i, j = int(round(row)), int(round(col))
            if 0 <= i < spec.height and 0 <= j < spec.width:
                rgb[i, j] = color


def render(poly: Polynomial, spec: RenderSpec) -> bytes:
    """Render to binary PPM bytes."""
    zz, pixel = _pixel_grid(spec)
    gray = _shade(poly, zz, spec.iter_budget, pixel)
    rgb = np.stack([gray, gray, gray], axis=-1)

    if spec.equipotentials:
        g = green_grid(poly, zz)
        for r in spec.equipotentials:
            s = g - r
            crossing = np.zeros(g.shape, dtype=bool)
            crossing[:, :-1] |= (s[:, :-1] * s[:, 1:]) < 0
            crossing[:-1, :] |= (s[:-1, :] * s[1:, :]) < 0
            rgb[crossing] = EQUIPOTENTIAL_RGB

    for t in spec.ray_angles:
        rays = trace_ray(poly, t)
        for ray in rays.values():
            pts = ray.closed_polyline(far_radius=10.0 * spec.half_width + 10.0)
            _draw_polyline(rgb, pts, spec, RAY_RGB)

    for mk in spec.markers:
        col = (mk.real - (spec.center.real - spec.half_width)) / (2 * spec.half_width / spec.width)
        half_h = spec.half_width * spec.height / spec.width
        row = ((spec.center.imag + half_h) - mk.imag) / (2 * spec.half_width / spec.width)
        i, j = int(round(row)), int(round(col))
        for di in range(-2, 3):
            for dj in range(-2, 3):
                if abs(di) + abs(dj) <= 2 and 0 <= i + di < spec.height and 0 <= j + dj < spec.width:
                    rgb[i + di, j + dj] = MARKER_RGB

    header = f"P6\n{spec.width} {spec.height}\n255\n".encode("ascii")
    return header + rgb.astype(np.uint8).tobytes()
