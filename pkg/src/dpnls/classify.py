"""Membership in the sub-threshold region and long-time run verdicts.

The region is ``{0 < M < m_c - eta, E < e(M) - eta}``. ``e`` is interpolated
linearly between its finite samples and is ``+inf`` below ``m_tilde_c``,
placed exactly at ``tilde_ratio * m_c`` from the closed form rather than at a
sampled crossing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .evolve import TimeSeries
from .fields import Field
from .functionals import report
from .model import ModelParams, derive_constants

SCATTERING = "scattering-like"
SOLITON = "soliton-like"
FOCUSING = "focusing-like"
UNDECIDED = "undecided"


@dataclass
class RegionSpec:
    """Threshold data: ``m_c`` and the finite samples ``(m, e(m))`` on ``[m_tilde_c, m_c)``."""

    m_c: float
    e_masses: np.ndarray
    e_values: np.ndarray
    eta: float = 0.0
    tilde_m_c: float = math.nan

    @classmethod
    def from_curves(cls, curves, params: ModelParams, eta: float = 0.0) -> "RegionSpec":
        ms, vs = [], []
        for s in curves.e_samples:
            if math.isfinite(s.value):
                ms.append(s.m)
                vs.append(s.value)
        return cls.build(params, curves.m_c_estimate, ms, vs, eta)

    @classmethod
    def build(cls, params: ModelParams, m_c: float, masses, values, eta: float = 0.0) -> "RegionSpec":
        if eta < 0:
            raise ValueError("eta must be nonnegative")
        order = np.argsort(masses)
        tm_c = derive_constants(params).tilde_ratio * m_c
        return cls(m_c, np.asarray(masses, float)[order], np.asarray(values, float)[order], eta, tm_c)

    def e(self, m: float) -> float | None:
        """``e(m)``; ``None`` when ``m`` is outside the sampled coverage."""
        if 0 < m < self.tilde_m_c:
            return math.inf
        if self.e_masses.size == 0 or m < self.e_masses[0] or m > self.e_masses[-1]:
            return None
        return float(np.interp(m, self.e_masses, self.e_values))


@dataclass
class Membership:
    member: bool | None
    mass: float
    energy: float
    e_value: float | None
    mass_gap: float  # (m_c - eta) - M
    energy_gap: float  # (e(M) - eta) - E
    note: str = ""


def in_region(f: Field, spec: RegionSpec, params: ModelParams) -> Membership:
    rep = report(f, params)
    M, E = rep.M, rep.E
    mass_gap = spec.m_c - spec.eta - M
    if not (M > 0 and mass_gap > 0):
        return Membership(False, M, E, None, mass_gap, math.nan, "mass outside (0, m_c - eta)")
    ev = spec.e(M)
    if ev is None:
        return Membership(None, M, E, None, mass_gap, math.nan, "mass outside the sampled e(m) coverage")
    gap = ev - spec.eta - E
    return Membership(bool(gap > 0), M, E, ev, mass_gap, gap)


def virial_gap(f: Field, params: ModelParams) -> float:
    """``Phi(u) - |P(u)|^2 / M(u)``: Phi of the momentum-free Galilean representative."""
    rep = report(f, params)
    if rep.M <= 0:
        raise ValueError("virial gap undefined for the zero field")
    return rep.Phi - rep.P ** 2 / rep.M


@dataclass(frozen=True)
class Thresholds:
    decay_spread: float = 2.0  # max/min of peak * t^(d/2) over the last half
    potential_drop: float = 10.0  # max A1 / final A1
    drift: float = 1e-2
    final_fraction: float = 0.25


@dataclass
class RunVerdict:
    label: str
    evidence: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "evidence": [
                {"criterion": c, "value": v, "threshold": th, "pass": ok} for c, v, th, ok in self.evidence
            ],
        }


def _label(ev: dict) -> str:
    if ev["decay"][3] and ev["phi_positive"][3] and ev["potential_decay"][3]:
        return SCATTERING
    if ev["drift"][3]:
        return SOLITON
    if ev["blowup"][3] or ev["phi_negative_final"][3]:
        return FOCUSING
    return UNDECIDED


def classify_run(series: TimeSeries, params: ModelParams, thresholds: Thresholds = Thresholds()) -> RunVerdict:
    t = series.column("t")
    peak = series.column("peak")
    phi = series.column("Phi")
    a1 = series.column("A1")
    drift = series.column("drift")
    T = t[-1] if t.size else 0.0
    d = series.d

    late = (t >= 0.5 * T) & (t > 0)
    if np.count_nonzero(late) >= 2:
        q = peak[late] * t[late] ** (d / 2)
        spread = float(q.max() / q.min()) if q.min() > 0 else math.inf
    else:
        spread = math.inf
    drop = float(a1.max() / a1[-1]) if a1.size and a1[-1] > 0 else (math.inf if a1.size and a1.max() > 0 else 0.0)
    final = t >= (1 - thresholds.final_fraction) * T
    phi_neg_final = bool(np.count_nonzero(final) > 0 and np.all(phi[final] < 0))

    ev = {
        "decay": ("peak*t^(d/2) max/min over last half", spread, thresholds.decay_spread,
                  spread <= thresholds.decay_spread),
        "phi_positive": ("min Phi(t)", float(phi.min()) if phi.size else math.nan, 0.0,
                         bool(phi.size and phi.min() > 0)),
        "potential_decay": ("max A1 / final A1", drop, thresholds.potential_drop,
                            drop >= thresholds.potential_drop),
        "drift": ("max profile drift", float(drift.max()) if drift.size else math.nan, thresholds.drift,
                  bool(drift.size and drift.max() < thresholds.drift and series.aborted is None)),
        "blowup": ("blow-up flag", float(series.blowup), 1.0, bool(series.blowup)),
        "phi_negative_final": ("Phi < 0 over final quarter", float(phi_neg_final), 1.0, phi_neg_final),
    }
    label = _label(ev)
    return RunVerdict(label, [ev[k] for k in ("decay", "phi_positive", "potential_decay", "drift",
                                              "blowup", "phi_negative_final")])
