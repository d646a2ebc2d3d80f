import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpnls.model import (CRITICAL, SUBCRITICAL, SUPERCRITICAL, InadmissibleParams, ModelParams,
                         derive_constants, f1, f2, nonlinear_potential_frequency, omega_star,
                         potential_roots)


def test_342_constants():
    c = derive_constants(ModelParams(3, 4.0, 2.0))
    assert abs(c.tilde_ratio - 4 / (3 * math.sqrt(3))) < 1e-12
    assert abs(c.omega_star - 3 / 16) < 1e-12
    assert c.s0 == 1.0
    assert c.theta == pytest.approx(0.25)
    assert c.regime == CRITICAL


def test_regimes():
    assert derive_constants(ModelParams(1, 6, 5)).regime == SUBCRITICAL
    assert derive_constants(ModelParams(3, 3, 2)).regime == SUBCRITICAL
    assert derive_constants(ModelParams(3, 5, 2)).regime == SUPERCRITICAL


def test_rejects_bad_params():
    with pytest.raises(ValueError):
        ModelParams(3, 2.0, 4.0)
    with pytest.raises(ValueError):
        ModelParams(0, 4.0, 2.0)
    with pytest.raises(InadmissibleParams):
        derive_constants(ModelParams(3, 4.0, 1.0))


def test_inadmissible_warns():
    with pytest.warns(UserWarning):
        assert not ModelParams(2, 4.0, 1.5).warn_if_inadmissible()


admissible = st.integers(1, 5).flatmap(
    lambda d: st.tuples(st.just(d), st.floats(4.0 / d + 1e-3, 4.0 / d + 8)).flatmap(
        lambda t: st.tuples(st.just(t[0]), st.floats(t[1] + 1e-3, t[1] + 8), st.just(t[1]))))


@settings(max_examples=200, deadline=None)
@given(admissible)
def test_closed_forms_agree(t):
    c = derive_constants(ModelParams(*t))
    assert abs(c.tilde_ratio - c.tilde_ratio_closed) <= 1e-12 * c.tilde_ratio
    assert c.tilde_ratio < 1.0


@settings(max_examples=100, deadline=None)
@given(admissible)
def test_omega_star_is_potential_maximum(t):
    p = ModelParams(*t)
    w = omega_star(p)
    s = np.geomspace(1e-3, 1e3, 20001)
    assert w >= nonlinear_potential_frequency(s, p).max() * (1 - 1e-9)
    # refinement invariance
    assert abs(omega_star(p, rtol=1e-11) - w) <= 1e-9 * w


def test_monotone_helpers():
    x = np.linspace(0.1, 10, 100)
    assert np.all(np.diff(f1(x)) < 0)
    y = np.linspace(1.01, 10, 100)
    assert np.all(np.diff(f2(y)) > 0)


def test_potential_roots():
    p = ModelParams(3, 4.0, 2.0)
    zeta, beta = potential_roots(p, 0.1)
    assert beta ** 4 - beta ** 2 + 0.1 == pytest.approx(0, abs=1e-14)
    assert nonlinear_potential_frequency(zeta, p) == pytest.approx(0.1, rel=1e-12)
    assert potential_roots(p, 0.2)[0] is None
