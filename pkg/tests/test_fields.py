import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpnls.fields import (Field, FieldError, LineGrid, RadialGrid, gradient_sq_norm, integrate, lp_norm_pow,
                          mass, radial_sine_kinetic, read_snapshot, tail_mass_fraction, write_snapshot)

from conftest import gaussian


def test_line_gaussian_moments(line_grid):
    f = gaussian(line_grid, width=1.0)
    assert mass(f) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert gradient_sq_norm(f) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-12)
    assert lp_norm_pow(f, 4) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-13)


def test_radial_gaussian_moments():
    g = RadialGrid(3, 4000, 20.0)
    f = Field.from_function(g, lambda r: np.exp(-r * r / 2))
    assert mass(f) == pytest.approx(math.pi ** 1.5, rel=1e-5)
    assert gradient_sq_norm(f) == pytest.approx(1.5 * math.pi ** 1.5, rel=1e-5)
    assert radial_sine_kinetic(f) == pytest.approx(1.5 * math.pi ** 1.5, rel=1e-9)


def test_grid_validation():
    with pytest.raises(FieldError):
        LineGrid(1000, 10.0)
    with pytest.raises(FieldError):
        RadialGrid(3, 1, 1.0)
    with pytest.raises(FieldError):
        Field(LineGrid(16, 1.0), np.zeros(8))


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.1, 3), st.floats(0.5, 3))
def test_phase_invariance_and_linearity(alpha, a, w):
    g = LineGrid(256, 40.0)
    f = gaussian(g, amp=a, width=w, k=0.3)
    rot = f.with_values(f.values * np.exp(1j * alpha))
    assert gradient_sq_norm(rot) == pytest.approx(gradient_sq_norm(f), rel=1e-12)
    h = f.with_values(2.0 * f.values)
    assert integrate(h, lambda v: v.real) == pytest.approx(2 * integrate(f, lambda v: v.real), rel=1e-12, abs=1e-12)


def test_snapshot_round_trip(tmp_path, line_grid):
    f = gaussian(line_grid, k=0.7)
    p = tmp_path / "a.fld"
    write_snapshot(p, f)
    g = read_snapshot(p)
    assert g.grid == f.grid and np.array_equal(g.values, f.values)
    r = Field(RadialGrid(3, 64, 8.0), np.linspace(1, 0, 64))
    write_snapshot(p, r)
    assert np.array_equal(read_snapshot(p).values, r.values)
    p.write_bytes(b"garbage!" + bytes(40))
    with pytest.raises(FieldError):
        read_snapshot(p)


def test_tail_mass(line_grid):
    assert tail_mass_fraction(gaussian(line_grid)) < 1e-100
    assert tail_mass_fraction(Field.zeros(line_grid)) == 0.0
