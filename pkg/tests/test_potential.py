import math

import numpy as np
import pytest

from extray.errors import NotRegularValue, ResolutionTooCoarse, SeedOutside, TooCloseToJulia
from extray.poly import Polynomial, evaluate
from extray.potential import (
    RegionMask,
    bottcher_forward,
    bottcher_inverse,
    critical_potentials,
    external_angle_of,
    green,
    green_grid,
    is_regular_value,
    sublevel_component,
)

CHEB_G3 = math.log((3 + math.sqrt(5)) / 2)  # oracle: w + 1/w = 3, |w| > 1


def test_green_squaring(squaring):
    assert abs(green(squaring, 2) - math.log(2)) < 1e-12
    assert green(squaring, 0.5) == 0.0


def test_green_chebyshev_oracle(chebyshev):
    assert abs(green(chebyshev, 3) - CHEB_G3) < 1e-9


def test_green_functional_equation(squaring, basilica, misiurewicz_i, cubic_chebyshev):
    rng = np.random.default_rng(1)
    for poly in (squaring, basilica, misiurewicz_i, cubic_chebyshev):
        R = poly.escape_radius
        zs = rng.uniform(R, 4 * R, 500) * np.exp(2j * np.pi * rng.uniform(0, 1, 500))
        g = green_grid(poly, zs)
        gp = green_grid(poly, evaluate(poly, zs))
        assert np.max(np.abs(gp - poly.degree * g) / np.maximum(1.0, g)) < 1e-8


def test_bottcher_inverse_examples(squaring, chebyshev):
    for z in (2, -3 + 1j, 5j):
        assert abs(bottcher_inverse(squaring, z) - z) < 1e-12 * abs(z)
    w0 = 3.0
    assert abs(bottcher_inverse(chebyshev, w0 + 1 / w0) - w0) < 1e-10
    assert abs(bottcher_inverse(chebyshev, 5) - (5 + math.sqrt(21)) / 2) < 1e-10


def test_bottcher_inverse_functional_equation(basilica):
    rng = np.random.default_rng(2)
    for _ in range(50):
        z = rng.uniform(4, 10) * np.exp(2j * np.pi * rng.uniform())
        w = bottcher_inverse(basilica, z)
        w2 = bottcher_inverse(basilica, evaluate(basilica, z))
        assert abs(w2 - w**2) < 1e-8 * abs(w) ** 2


def test_bottcher_rejects_inside(basilica):
    with pytest.raises(TooCloseToJulia):
        bottcher_inverse(basilica, 0.1)


def test_bottcher_forward_roundtrip(basilica):
    rng = np.random.default_rng(3)
    for _ in range(25):
        w = rng.uniform(4, 16) * np.exp(2j * np.pi * rng.uniform())
        z = bottcher_forward(basilica, w)
        assert abs(bottcher_inverse(basilica, z) - w) < 1e-10 * abs(w)


def test_external_angle_examples(squaring, chebyshev):
    assert abs(external_angle_of(squaring, 2) - 0.0) < 1e-12
    assert abs(external_angle_of(squaring, -2) - 0.5) < 1e-12
    assert abs(external_angle_of(chebyshev, 3) - 0.0) < 1e-12


def test_critical_potentials(squaring, basilica):
    assert critical_potentials(squaring, 8) == []
    assert critical_potentials(basilica, 8) == []
    p6 = Polynomial.quadratic(-6)
    g0 = green(p6, 0)
    assert g0 > 0
    assert abs(green(p6, evaluate(p6, 0)) - 2 * g0) < 1e-9
    vals = critical_potentials(p6, 4)
    expected = sorted(g0 / 2**k for k in range(5))
    assert np.allclose(vals, expected)
    assert not is_regular_value(p6, g0 / 2)
    assert is_regular_value(p6, 0.55 * g0)


def test_sublevel_disc_area(squaring):
    mask = sublevel_component(squaring, math.log(2), 0, 0.01)
    assert abs(mask.area() - 4 * math.pi) < 0.02 * 4 * math.pi
    mask4 = sublevel_component(squaring, math.log(4), 0, 0.02)
    assert abs(mask4.area() - 16 * math.pi) < 0.02 * 16 * math.pi


def test_sublevel_boundary_on_level(squaring):
    mask = sublevel_component(squaring, math.log(2), 0, 0.01)
    gap = abs(mask.boundary[0] - mask.boundary[-1])
    assert gap < 2 * mask.step
    for z in mask.boundary[::25]:
        assert abs(green(squaring, complex(z)) - math.log(2)) < 1e-6


def test_sublevel_nesting(squaring):
    lo = sublevel_component(squaring, math.log(2), 0, 0.02, box_half_width=5.0)
    hi = sublevel_component(squaring, math.log(4), 0, 0.02, box_half_width=5.0)
    assert np.all(~lo.inside | hi.inside)


def test_sublevel_excludes_escaping_critical_point():
    p6 = Polynomial.quadratic(-6)
    r = 0.55 * green(p6, 0)
    mask = sublevel_component(p6, r, 3, 0.01)
    assert mask.contains(3)
    assert not mask.contains(0)


def test_sublevel_errors(squaring):
    p6 = Polynomial.quadratic(-6)
    with pytest.raises(NotRegularValue):
        sublevel_component(p6, green(p6, 0) / 2, 3, 0.05)
    with pytest.raises(SeedOutside):
        sublevel_component(squaring, math.log(2), 5.0, 0.05)
    with pytest.raises(ResolutionTooCoarse):
        sublevel_component(squaring, math.log(4), 0, 0.05, box_half_width=3.0)


def test_region_mask_json_roundtrip(squaring):
    mask = sublevel_component(squaring, math.log(2), 0, 0.05)
    back = RegionMask.from_json(mask.to_json())
    assert np.array_equal(back.inside, mask.inside)
    assert back.step == mask.step
    assert len(back.boundary) == len(mask.boundary)
