import math

import numpy as np
import pytest

from dpnls.classify import (FOCUSING, SCATTERING, SOLITON, UNDECIDED, RegionSpec, Thresholds, classify_run,
                            in_region, virial_gap)
from dpnls.evolve import ObservableRow, TimeSeries
from dpnls.fields import Field, LineGrid
from dpnls.functionals import boost, optimal_boost, report
from dpnls.groundstate import solve_ground_state
from dpnls.model import ModelParams, derive_constants

from conftest import critical, gaussian

P165 = ModelParams(1, 6.0, 5.0)


def _series(phi, peak, a1, drift, d=1, blowup=False):
    t = np.linspace(0, 10, len(phi))
    rows = [ObservableRow(ti, 1.0, 0.0, 0.0, f, 0.0, 0.0, pk, 0.0, 1.0, 0.0, a, dr)
            for ti, f, pk, a, dr in zip(t, phi, peak, a1, drift)]
    return TimeSeries(rows=rows, d=d, blowup=blowup)


def test_labels_from_synthetic_evidence():
    n = 11
    t = np.linspace(0, 10, n)
    s = _series(np.ones(n), 1 / np.sqrt(1 + t), 100 / (1 + t) ** 2, np.linspace(0, 0.5, n))
    assert classify_run(s, P165).label == SCATTERING
    s = _series(np.zeros(n), np.ones(n), np.ones(n), np.full(n, 1e-4))
    assert classify_run(s, P165).label == SOLITON
    s = _series(-np.ones(n), np.ones(n), np.ones(n), np.full(n, 0.3))
    assert classify_run(s, P165).label == FOCUSING
    s = _series(np.r_[-np.ones(8), np.ones(3)], np.ones(n), np.ones(n), np.full(n, 0.3))
    assert classify_run(s, P165).label == UNDECIDED
    v = classify_run(s, P165)
    assert v.as_dict()["label"] == UNDECIDED and len(v.as_dict()["evidence"]) == 6


def test_verdict_is_deterministic():
    n = 11
    s = _series(np.ones(n), np.ones(n), np.ones(n), np.zeros(n))
    assert classify_run(s, P165).as_dict() == classify_run(s, P165).as_dict()


def test_region_membership():
    _, cm = critical((1, 6.0, 5.0))
    m_c = cm["m_c"]
    tm_c = derive_constants(P165).tilde_ratio * m_c
    spec = RegionSpec.build(P165, m_c, [tm_c * 1.001, m_c * 0.999], [0.01, 0.0001])
    assert spec.e(0.5 * tm_c) == math.inf
    assert spec.e(1.5 * m_c) is None
    g = LineGrid(2048, 200.0)
    f = gaussian(g, width=3.0)
    f = f.with_values(f.values * math.sqrt(0.5 * tm_c / report(f, P165).M))
    assert in_region(f, spec, P165).member
    assert not in_region(Field.zeros(g), spec, P165).member
    big = f.with_values(f.values * math.sqrt(2 * m_c / report(f, P165).M))
    assert not in_region(big, spec, P165).member
    with pytest.raises(ValueError):
        RegionSpec.build(P165, m_c, [], [], eta=-1)


def test_virial_gap():
    g = LineGrid(1024, 80.0)
    f = gaussian(g, amp=0.5, width=2.0)
    assert virial_gap(f, P165) == pytest.approx(report(f, P165).Phi, rel=1e-14)
    h = boost(f, 0.7)
    _, back = optimal_boost(h, P165)
    assert virial_gap(h, P165) == pytest.approx(report(back, P165).Phi, rel=1e-10)
    with pytest.raises(ValueError):
        virial_gap(Field.zeros(g), P165)


def test_ground_state_gap_vanishes():
    mm, _ = critical((3, 4.0, 2.0))
    gs = solve_ground_state(ModelParams(3, 4.0, 2.0), mm["omega_c"])
    assert abs(virial_gap(gs.profile, ModelParams(3, 4.0, 2.0))) < 1e-6 * gs.report.kinetic
