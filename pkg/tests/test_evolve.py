import math

import numpy as np
import pytest

from dpnls.evolve import (COLUMNS, EvolveConfig, TimeSeries, free_gaussian, plane_wave, propagate,
                          step_strang, translate, virial_check)
from dpnls.fields import Field, FieldError, LineGrid, RadialGrid
from dpnls.functionals import boost
from dpnls.groundstate import solve_ground_state
from dpnls.model import ModelParams

from conftest import gaussian

P165 = ModelParams(1, 6.0, 5.0)
P342 = ModelParams(3, 4.0, 2.0)


def test_free_gaussian():
    g = LineGrid(2048, 160.0)
    f = Field(g, free_gaussian(g, 0.0, amp=1e-8))
    for _ in range(100):
        f = step_strang(f, 1e-2, P165)
    assert np.max(np.abs(f.values - free_gaussian(g, 1.0, amp=1e-8))) < 1e-8 * 1e-4


def test_plane_wave():
    g = LineGrid(256, 8 * math.pi)
    f = Field(g, plane_wave(g, 0.0, 0.8, 2, P165))
    for _ in range(200):
        f = step_strang(f, 5e-3, P165)
    assert np.max(np.abs(f.values - plane_wave(g, 1.0, 0.8, 2, P165))) < 1e-8


def test_conservation_and_energy_order():
    g = LineGrid(1024, 80.0)
    f0 = gaussian(g, amp=1.0, width=1.5, k=0.2)
    drifts = []
    for dt in (2e-2, 1e-2, 5e-3):
        s = propagate(f0, EvolveConfig(dt=dt, T=10.0, observe_every=int(round(1 / dt))), P165)
        M, E = s.column("M"), s.column("E")
        assert np.max(np.abs(M - M[0])) < 1e-10 * M[0]
        drifts.append(np.max(np.abs(E - E[0])))
    assert drifts[0] / drifts[1] >= 3.5 and drifts[1] / drifts[2] >= 3.5


def test_time_reversal():
    g = LineGrid(1024, 80.0)
    f0 = gaussian(g, amp=1.1, width=1.0, k=-0.3)
    f = f0
    for _ in range(300):
        f = step_strang(f, 1e-2, P165)
    for _ in range(300):
        f = step_strang(f, -1e-2, P165)
    assert np.max(np.abs(f.values - f0.values)) < 1e-6


def test_virial_linear_and_dispersive():
    g = LineGrid(2048, 160.0)
    lin = propagate(Field(g, free_gaussian(g, 0.0, amp=1e-6)), EvolveConfig(dt=1e-2, T=2.0, observe_every=5), P165)
    assert virial_check(lin) < 1e-4
    nl = propagate(gaussian(g, amp=1.0, width=1.5), EvolveConfig(dt=1e-2, T=2.0, observe_every=5), P165)
    assert virial_check(nl) < 1e-4


def test_soliton_stationary():
    w = 0.1
    grid = RadialGrid(3, 800, 80.0)
    gs = solve_ground_state(P342, w, grid=grid)
    s = propagate(gs.profile, EvolveConfig(dt=1e-2, T=20.0, observe_every=20), P342)
    assert s.aborted is None
    assert s.column("drift").max() < 1e-3
    assert virial_check(s) < 1e-4


def test_galilean_covariance():
    g = LineGrid(1024, 80.0)
    f0 = gaussian(g, amp=1.0, width=1.5)
    xi, T = 2 * math.pi * 4 / g.L, 1.0
    a = propagate(boost(f0, xi), EvolveConfig(dt=1e-2, T=T, observe_every=100), P165).final
    b = propagate(f0, EvolveConfig(dt=1e-2, T=T, observe_every=100), P165).final
    expect = boost(translate(b, 2 * xi * T), xi).values * np.exp(-1j * xi * xi * T)
    assert np.max(np.abs(a.values - expect)) < 1e-6 * np.max(np.abs(a.values))


def test_tail_abort_and_csv(tmp_path):
    g = LineGrid(256, 20.0)
    wide = Field(g, np.ones(g.N))
    s = propagate(wide, EvolveConfig(dt=1e-2, T=1.0), P165)
    assert s.aborted and len(s.rows) == 1
    s = propagate(gaussian(LineGrid(512, 40.0)), EvolveConfig(dt=1e-2, T=0.5, observe_every=5), P165)
    p = tmp_path / "s.csv"
    s.to_csv(p)
    back = TimeSeries.from_csv(p)
    assert [list(map(float, r.__dict__.values())) for r in back.rows] == \
           [list(map(float, r.__dict__.values())) for r in s.rows]
    assert open(p).readline().strip().split(",") == list(COLUMNS)


def test_radial_needs_d3():
    with pytest.raises(FieldError):
        step_strang(Field(RadialGrid(2, 16, 1.0), np.ones(16)), 1e-2, P342)


def test_config_validation():
    with pytest.raises(ValueError):
        EvolveConfig(dt=-1.0)
