import math

import numpy as np
import pytest

from dpnls.functionals import report
from dpnls.groundstate import solve_ground_state
from dpnls.model import ModelParams, derive_constants
from dpnls.varflow import (ATTAINED, INFEASIBLE, VANISHING, FlowConfig, I_curve, e_of_m, flow_grid, lambda_root,
                           minimize_energy_fixed_mass, phi_positivity_sample, region_energy_bound, tilde_I_curve)

from conftest import critical

P165 = ModelParams(1, 6.0, 5.0)


def test_I_below_and_above_threshold():
    _, cm = critical((1, 6.0, 5.0))
    m_c = cm["m_c"]
    low = minimize_energy_fixed_mass(P165, 0.5 * m_c)
    assert low.status == VANISHING and low.value == 0.0
    high = minimize_energy_fixed_mass(P165, 2 * m_c)
    assert high.status == ATTAINED and high.value < 0
    # the minimiser is the ground state whose frequency is minus the multiplier
    u = high.minimizer
    r = report(u, P165)
    assert abs(r.Phi) < 1e-4 * r.kinetic  # discrete Pohozaev holds to O(dr^2)
    assert abs(r.M - 2 * m_c) < 1e-9 * m_c
    q = solve_ground_state(P165, -high.multiplier, grid=u.grid).profile.values.real
    v = np.abs(u.values)
    assert np.max(np.abs(v - q)) < 1e-3 * q.max()


def test_I_curve_crossing_matches_zero_energy_state():
    _, cm = critical((1, 6.0, 5.0))
    m_c = cm["m_c"]
    samples, est = I_curve(P165, np.linspace(0.5, 2.0, 4) * m_c)
    assert [s.status for s in samples][:1] == [VANISHING]
    vals = [s.value for s in samples]
    assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))
    assert est == pytest.approx(m_c, rel=5e-3)


def test_tilde_I_identity():
    ms = [3.0, 6.0, 9.0]
    direct, via, tm_c = tilde_I_curve(P165, ms)
    for a, b in zip(direct, via):
        assert a.value == pytest.approx(b.value, rel=1e-3, abs=1e-6)
    _, cm = critical((1, 6.0, 5.0))
    assert tm_c == pytest.approx(derive_constants(P165).tilde_ratio * cm["m_c"], rel=5e-3)


def test_e_of_m_trichotomy():
    _, cm = critical((1, 6.0, 5.0))
    m_c = cm["m_c"]
    tm_c = derive_constants(P165).tilde_ratio * m_c
    assert e_of_m(P165, 0.5 * tm_c).status == INFEASIBLE
    mid = e_of_m(P165, 0.5 * (tm_c + m_c))
    assert mid.status == ATTAINED and 0 < mid.value < math.inf


def test_lambda_root():
    p = ModelParams(3, 4.0, 2.0)
    K, A0, A1 = 1.0, 1.0, 10.0
    lam = lambda_root(K, A0, A1, p)
    phi = lambda l: l * l * K - p.c1 * l ** 3 * A1 + p.c0 * l ** 6 * A0
    assert phi(lam) == pytest.approx(0, abs=1e-10)
    # larger of the two roots: Phi turns positive again just above it
    assert phi(1.01 * lam) > 0 and phi(0.99 * lam) < 0
    assert lambda_root(1.0, 1.0, 1e-3, p) is None


def test_coercivity_samples():
    p = ModelParams(3, 4.0, 2.0)
    _, cm = critical((3, 4.0, 2.0))
    tm_c = cm["tilde_m_c"]
    lo, ok = phi_positivity_sample(p, 0.9 * tm_c, n_trials=200, seed=3)
    assert ok and lo > 0
    b = region_energy_bound(p, 0.9 * cm["m_c"], cm["m_c"], n_trials=200, seed=4)
    assert b["all_positive"] and b["delta"] >= b["floor"]


def test_flow_grid_defaults():
    assert flow_grid(P165).R == pytest.approx(240.0)
    assert flow_grid(ModelParams(3, 4.0, 2.0)).N == 1600


def test_rejects_bad_mass():
    with pytest.raises(ValueError):
        minimize_energy_fixed_mass(P165, -1.0)
