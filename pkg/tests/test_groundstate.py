import math
import os
import subprocess
import sys

import numpy as np
import pytest

from dpnls.fields import mass
from dpnls.functionals import pohozaev_residual
from dpnls.groundstate import (CONVERGED, NoSolution, mass_curve, sech_soliton, shoot, solve_ground_state,
                               solve_ground_state_continuum, solve_single_power, zero_frequency_scan)
from dpnls.model import ModelParams, omega_star

from conftest import critical


@pytest.mark.parametrize("p,omega", [(4, 1.0), (2, 0.5), (6, 0.3)])
def test_single_power_sech(p, omega):
    f = solve_single_power(1, p, omega)
    assert np.max(np.abs(f.values - sech_soliton(f.grid.nodes, p, omega))) < 1e-6


@pytest.mark.parametrize("frac", [0.1, 0.3, 0.6, 0.9])
def test_ground_state_invariants(params, frac):
    w = frac * omega_star(params)
    gs = solve_ground_state(params, w)
    q = gs.profile.values.real
    K = gs.report.kinetic
    assert gs.residual < 1e-8
    assert abs(gs.report.Phi) < 1e-6 * K
    assert abs(pohozaev_residual(gs.profile, 1, -1, params)) < 1e-6 * K
    assert np.all(q > 0) and np.all(np.diff(q) <= 0)
    assert gs.tail_rate == pytest.approx(math.sqrt(w), rel=1e-2)
    # continuum (ODE) and grid mass agree
    assert gs.mass == pytest.approx(gs.report.M, rel=1e-5)


@pytest.mark.parametrize("omega", [0.02, 0.1, 0.9 * 0.1875])
def test_refinement(p342, omega):
    gs = solve_ground_state(p342, omega)
    fine = solve_ground_state(p342, omega, grid=gs.profile.grid.refined(2))
    assert abs(mass(gs.profile) - mass(fine.profile)) < 1e-6 * mass(fine.profile)


@pytest.mark.parametrize("factor", [1.0, 1.01, 1.5])
def test_no_solution_above_omega_star(params, factor):
    w = factor * omega_star(params)
    with pytest.raises(NoSolution):
        solve_ground_state(params, w)
    labels = {shoot(params, w, float(s)).label for s in np.geomspace(1e-3, 10, 64)}
    assert CONVERGED not in labels


def test_near_omega_star(p342):
    # amplitude within 1e-16 of the plateau; needs the offset variable
    gs = solve_ground_state_continuum(p342, 0.96 * 0.1875)
    assert abs(gs["Phi"]) < 1e-6 * gs["K"]


@pytest.mark.parametrize("triple", [(3, 4.0, 2.0), (1, 6.0, 5.0)])
def test_zero_frequency_scan(triple):
    res = zero_frequency_scan(ModelParams(*triple), 1.0, -1.0, np.geomspace(1e-3, 1e3, 64))
    assert res["converged_amplitudes"] == [] and res["n"] == 64


def test_zero_frequency_linear():
    res = zero_frequency_scan(ModelParams(3, 4.0, 2.0), 0.0, 0.0, np.geomspace(1e-3, 1e3, 16))
    assert res["converged_amplitudes"] == []


def test_mass_curve_records_failures(p342):
    rows = mass_curve(p342, [0.05, 0.2])
    assert rows[0]["status"] == "ok" and rows[0]["mass"] > 0
    assert rows[1]["status"].startswith("no-solution") and math.isnan(rows[1]["mass"])


def test_minimal_and_critical_mass():
    mm, cm = critical((3, 4.0, 2.0))
    assert mm["unimodal_scan"]
    assert mm["m_c"] == pytest.approx(189.459, rel=1e-4)
    assert cm["m_c"] == pytest.approx(240.447, rel=1e-4)
    assert cm["energy"] == pytest.approx(0, abs=1e-8 * cm["kinetic"])
    # the lightest ground state has positive energy
    assert solve_ground_state_continuum(ModelParams(3, 4.0, 2.0), mm["omega_c"])["E"] > 0


def test_backends_agree():
    code = ("from dpnls import core; from dpnls.groundstate import solve_ground_state_continuum as s;"
            "from dpnls.model import ModelParams as P;"
            "print(core.BACKEND, repr(s(P(3,4.,2.),0.05)['M']), repr(s(P(1,6.,5.),0.01)['M']))")
    outs = []
    for pure in ("0", "1"):
        env = dict(os.environ, DPNLS_PURE=pure)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                                   check=True).stdout.split())
    assert outs[1][0] == "python"
    for a, b in zip(outs[0][1:], outs[1][1:]):
        assert float(a) == pytest.approx(float(b), rel=1e-10)
