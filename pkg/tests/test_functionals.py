import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpnls.checks import random_line_field
from dpnls.fields import Field, FieldError, LineGrid, RadialGrid, mass
from dpnls.functionals import (BOOST_SIGN, boost, e_ab, energy, momentum, optimal_boost, pohozaev_residual,
                               report, rescale_ab, scale_lambda, scaling_derivative_check, virial)
from dpnls.model import ModelParams, derive_constants

from conftest import gaussian


def test_e_ab_identity(params, line_grid):
    c = derive_constants(params)
    rng = np.random.default_rng(1)
    for _ in range(20):
        f = random_line_field(line_grid, rng)
        phi = virial(f, params)
        assert abs(e_ab(f, c.a0, c.b0, params) - phi) <= 1e-12 * (abs(phi) + report(f, params).kinetic)
    assert e_ab(gaussian(line_grid), 1, 1, params) == pytest.approx(energy(gaussian(line_grid), params), rel=1e-14)
    assert e_ab(Field.zeros(line_grid), c.a0, c.b0, params) == 0


def test_scaling_laws(line_grid, p165):
    f = gaussian(line_grid, width=2.0)
    g = scale_lambda(f, 2.0)
    assert mass(g) == pytest.approx(mass(f), rel=1e-12)
    assert report(g, p165).kinetic == pytest.approx(4 * report(f, p165).kinetic, rel=1e-10)
    assert np.array_equal(scale_lambda(f, 1.0).values, f.values)
    with pytest.raises(FieldError):
        scale_lambda(gaussian(line_grid, width=20.0), 0.2)


def test_scaling_derivative(line_grid, p165):
    f = gaussian(line_grid, amp=0.8, width=1.5)
    assert scaling_derivative_check(f, 1.0, p165) < 1e-6 * (1 + abs(virial(f, p165)))
    assert scaling_derivative_check(Field.zeros(line_grid), 1.0, p165) == 0.0
    # kinetic term dominates under strong spreading
    lams = [0.01, 0.02]
    assert all(virial(scale_lambda(gaussian(LineGrid(8192, 4000.0), amp=1.5), lam), p165) > 0 for lam in lams)


def test_radial_rescale(p342):
    g = RadialGrid(3, 2000, 40.0)
    f = Field.from_function(g, lambda r: np.exp(-r * r / 2))
    h = scale_lambda(f, 1.5)
    assert mass(h) == pytest.approx(mass(f), rel=1e-6)


def test_boost_energy_law(line_grid, p165):
    f = gaussian(line_grid, k=0.4)
    M, P, E = mass(f), momentum(f), energy(f, p165)
    for xi in (-0.7, 0.3, 1.0):
        assert energy(boost(f, xi), p165) - E == pytest.approx(xi * xi * M + 2 * BOOST_SIGN * xi * P, rel=1e-10)
    real = gaussian(line_grid)
    assert report(boost(real, 1.0), p165).kinetic - report(real, p165).kinetic == pytest.approx(mass(real), rel=1e-10)
    with pytest.raises(FieldError):
        boost(Field(RadialGrid(3, 16, 1.0), np.ones(16)), 1.0)


def test_optimal_boost(line_grid, p165):
    f = gaussian(line_grid, k=2 * math.pi * 25 / line_grid.L)
    xi, g = optimal_boost(f, p165)
    assert abs(xi) == pytest.approx(2 * math.pi * 25 / line_grid.L, rel=1e-10)
    assert abs(momentum(g)) < 1e-10 * mass(f)
    drop = energy(f, p165) - energy(g, p165)
    assert drop == pytest.approx(momentum(f) ** 2 / mass(f), rel=1e-10)
    assert optimal_boost(g, p165)[0] == pytest.approx(0, abs=1e-10)
    assert optimal_boost(gaussian(line_grid), p165)[0] == 0.0
    with pytest.raises(FieldError):
        optimal_boost(Field.zeros(line_grid), p165)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-1.5, 1.5))
def test_boost_covariance_property(seed, xi):
    p = ModelParams(1, 6.0, 5.0)
    f = random_line_field(LineGrid(512, 60.0), np.random.default_rng(seed))
    h = boost(f, xi)
    expect = xi * xi * mass(f) + 2 * BOOST_SIGN * xi * momentum(f)
    scale = abs(expect) + report(f, p).kinetic
    assert abs(virial(h, p) - virial(f, p) - expect) < 1e-10 * scale
    assert abs(energy(h, p) - energy(f, p) - expect) < 1e-10 * scale


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0, 2 * math.pi), st.integers(-50, 50))
def test_phase_and_translation_invariance(seed, alpha, shift):
    p = ModelParams(1, 6.0, 5.0)
    f = random_line_field(LineGrid(512, 60.0), np.random.default_rng(seed))
    r0 = report(f, p)
    r1 = report(f.with_values(f.values * np.exp(1j * alpha)), p)
    r2 = report(f.with_values(np.roll(f.values, shift)), p)
    for r in (r1, r2):
        for name in ("M", "E", "Phi"):
            assert getattr(r, name) == pytest.approx(getattr(r0, name), rel=1e-12, abs=1e-14)


def test_pohozaev_residual(line_grid, p342):
    assert pohozaev_residual(Field.zeros(line_grid), 1, -1, p342) == 0
    assert abs(pohozaev_residual(gaussian(line_grid), 1, -1, p342)) > 1e-3


def test_gn_quotient_undefined_on_zero(line_grid, p342):
    assert report(Field.zeros(line_grid), p342).gn_quotient is None


def test_rescale_validation(line_grid):
    with pytest.raises(ValueError):
        rescale_ab(gaussian(line_grid), -1.0, 1.0)
