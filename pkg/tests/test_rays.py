import math
from fractions import Fraction as F

import numpy as np
import pytest

from extray.errors import LevelMismatch
from extray.poly import CycleClass, evaluate
from extray.potential import green
from extray.rays import land, land_orbit, ray_functional_check, trace_ray

ALPHA = (1 - math.sqrt(5)) / 2
BETA = (1 + math.sqrt(5)) / 2


def test_ray_zero_of_squaring_is_real_segment(squaring):
    ray = land(squaring, F(0))
    assert ray.status == "LANDED"
    assert abs(ray.landing_point - 1) < 1e-9
    assert ray.landing_class is CycleClass.REPELLING
    assert abs(ray.landing_multiplier - 2) < 1e-9
    assert np.max(np.abs(ray.points.imag)) == 0.0
    assert ray.points.real.min() > 1.0
    assert ray.points.real.max() <= 4.0 + 1e-12


def test_potentials_strictly_decrease_geometric(squaring):
    ray = land(squaring, F(0))
    pots = ray.potentials
    assert np.all(np.diff(pots) < 0)
    ratios = pots[1:] / pots[:-1]
    assert np.max(np.abs(ratios - ratios[0])) < 1e-12


def test_green_consistency_on_samples(basilica):
    rays = trace_ray(basilica, F(1, 3))
    for ray in rays.values():
        for r, z in list(zip(ray.potentials, ray.points))[::45]:
            assert abs(green(basilica, complex(z)) - r) <= 1e-6 * max(r, 1e-6)


def test_chebyshev_landing_oracle(chebyshev):
    # phi(w) = w + 1/w maps (1, inf) onto (2, inf): ray 0 lands at 2
    ray = land(chebyshev, F(0))
    assert ray.status == "LANDED"
    assert abs(ray.landing_point - 2) < 1e-6
    half = land(chebyshev, F(1, 2))
    assert abs(half.landing_point + 2) < 1e-6
    quarter = land_orbit(chebyshev, F(1, 4))
    assert abs(quarter[F(1, 4)].landing_point) < 1e-6  # critical preimage of -2


def test_basilica_colanding(basilica):
    rays = land_orbit(basilica, F(1, 3))
    a, b = rays[F(1, 3)], rays[F(2, 3)]
    assert a.status == b.status == "LANDED"
    assert abs(a.landing_point - ALPHA) < 1e-6
    assert abs(a.landing_point - b.landing_point) < 1e-5
    zero = land(basilica, F(0))
    assert abs(zero.landing_point - BETA) < 1e-6
    assert zero.landing_class is CycleClass.REPELLING


def test_parabolic_landing(cauliflower):
    ray = land(cauliflower, F(0))
    assert ray.status == "LANDED"
    assert abs(ray.landing_point - 0.5) < 1e-6
    assert ray.landing_class is CycleClass.PARABOLIC_CANDIDATE


def test_functional_check(squaring, basilica, chebyshev):
    assert ray_functional_check(squaring, land_orbit(squaring, F(0)), F(0)) < 1e-9
    assert ray_functional_check(basilica, land_orbit(basilica, F(1, 3)), F(1, 3)) < 1e-6
    assert ray_functional_check(chebyshev, land_orbit(chebyshev, F(1, 2)), F(1, 2)) < 1e-6


def test_functional_check_level_mismatch(basilica):
    rays_a = trace_ray(basilica, F(1, 3), pot_hi=2.0)
    rays_b = trace_ray(basilica, F(1, 3), pot_hi=2.5)
    mixed = {F(1, 3): rays_a[F(1, 3)], F(2, 3): rays_b[F(2, 3)]}
    with pytest.raises(LevelMismatch):
        ray_functional_check(basilica, mixed, F(1, 3))


def test_landing_points_form_cycle(basilica, misiurewicz_i):
    # rays of an angle cycle land on a cycle, permuted exactly as the angles
    for poly, t in ((basilica, F(1, 3)), (misiurewicz_i, F(1, 7))):
        rays = land_orbit(poly, t)
        d = poly.degree
        for a, ray in rays.items():
            img = rays[(d * a) % 1]
            assert ray.status == img.status == "LANDED"
            assert abs(evaluate(poly, ray.landing_point) - img.landing_point) < 1e-6


def test_retrace_with_doubled_steps(basilica):
    r24 = trace_ray(basilica, F(1, 3))[F(1, 3)]
    r48 = trace_ray(basilica, F(1, 3), steps_per_halving=48)[F(1, 3)]
    m = min(len(r24.points), (len(r48.points) + 1) // 2)
    assert np.max(np.abs(r48.points[: 2 * m - 1 : 2] - r24.points[:m])) < 1e-7


def test_pot_hi_precondition(squaring):
    with pytest.raises(ValueError):
        trace_ray(squaring, F(0), pot_hi=0.1)  # below log(escape_radius)


def test_jsonl_records(squaring):
    ray = land(squaring, F(0))
    recs = ray.to_records()
    assert recs[-1]["status"] == "LANDED"
    assert recs[0]["angle"] == "0"
    assert {"angle", "potential", "re", "im"} <= set(recs[0])
