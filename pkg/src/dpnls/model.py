"""Nonlinearity parameters and the closed-form constants derived from them.

All quantities here depend only on the triple ``(d, p0, p1)`` describing
the equation ``i u_t + Laplacian u = |u|^p0 u - |u|^p1 u``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

SUBCRITICAL = "energy-subcritical"
CRITICAL = "energy-critical"
SUPERCRITICAL = "energy-supercritical"

# unit-sphere surface measure sigma_{d-1}
def sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


class InadmissibleParams(ValueError):
    """Raised when the variational theory does not apply to ``(d, p0, p1)``."""


@dataclass(frozen=True)
class ModelParams:
    d: int
    p0: float
    p1: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d}")
        if not (self.p0 > 0 and self.p1 > 0):
            raise ValueError("exponents must be positive")
        if not self.p1 < self.p0:
            raise ValueError(f"need p1 < p0, got p0={self.p0}, p1={self.p1}")

    @property
    def admissible(self) -> bool:
        return self.p1 > 4.0 / self.d

    def require_admissible(self) -> None:
        if not self.admissible:
            raise InadmissibleParams(
                f"p1={self.p1} <= 4/d={4.0 / self.d}: threshold theory does not apply"
            )

    def warn_if_inadmissible(self) -> bool:
        if not self.admissible:
            warnings.warn(
                f"p1={self.p1} <= 4/d; solving anyway but variational results are undefined",
                stacklevel=2,
            )
        return self.admissible

    @property
    def c0(self) -> float:
        return self.d * self.p0 / (2.0 * (self.p0 + 2.0))

    @property
    def c1(self) -> float:
        return self.d * self.p1 / (2.0 * (self.p1 + 2.0))


@dataclass(frozen=True)
class DerivedConstants:
    s0: float
    theta: float
    c0: float
    c1: float
    a0: float
    b0: float
    rho: float
    tilde_ratio: float
    tilde_ratio_closed: float
    omega_star: float
    regime: str

    def as_dict(self) -> dict:
        return asdict(self)


def classify_regime(params: ModelParams) -> str:
    d, p0 = params.d, params.p0
    if d <= 2:
        return SUBCRITICAL
    crit = 4.0 / (d - 2)
    if math.isclose(p0, crit, rel_tol=0.0, abs_tol=1e-14):
        return CRITICAL
    return SUBCRITICAL if p0 < crit else SUPERCRITICAL


def nonlinear_potential_frequency(s, params: ModelParams):
    """Largest frequency for which amplitude ``s`` keeps the potential positive.

    ``(2/s^2) (s^(p1+2)/(p1+2) - s^(p0+2)/(p0+2))``; works on scalars and arrays.
    """
    p0, p1 = params.p0, params.p1
    return 2.0 * (s ** p1 / (p1 + 2.0) - s ** p0 / (p0 + 2.0))


def omega_star(params: ModelParams, rtol: float = 1e-10) -> float:
    """Maximal frequency admitting positive decaying solutions.

    Golden-section search on ``log s``; the objective is unimodal in ``s``
    (single interior critical point at ``s^(p0-p1) = p1 (p0+2) / (p0 (p1+2))``).
    """
    params.require_admissible()
    f = lambda t: nonlinear_potential_frequency(math.exp(t), params)
    # bracket around the analytic critical point, wide enough for any triple
    s_crit = (params.p1 * (params.p0 + 2.0) / (params.p0 * (params.p1 + 2.0))) ** (
        1.0 / (params.p0 - params.p1)
    )
    lo, hi = math.log(s_crit) - 5.0, math.log(s_crit) + 5.0
    t = _golden_max(f, lo, hi, rtol)
    return f(t)


def _golden_max(f, lo: float, hi: float, rtol: float) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    e = a + invphi * (b - a)
    fc, fe = f(c), f(e)
    while abs(b - a) > rtol * max(1.0, abs(a) + abs(b)) * 1e-2:
        if fc > fe:
            b, e, fe = e, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + invphi * (b - a)
            fe = f(e)
    return 0.5 * (a + b)


def derive_constants(params: ModelParams) -> DerivedConstants:
    params.require_admissible()
    d, p0, p1 = params.d, params.p0, params.p1
    s0 = d / 2.0 - 2.0 / p0
    theta = (p1 - 4.0 / d) / (p0 - 4.0 / d)
    a0 = (p0 / p1) ** (1.0 / (p0 - p1))
    b0 = math.sqrt(4.0 / (d * p1) * (p0 / p1) ** (p1 / (p0 - p1)))
    rho = a0 ** 2 * b0 ** (-d)
    closed = (p0 / p1) ** ((p1 * d - 4.0) / (2.0 * (p0 - p1))) * (4.0 / (d * p1)) ** (d / 2.0)
    return DerivedConstants(
        s0=s0,
        theta=theta,
        c0=params.c0,
        c1=params.c1,
        a0=a0,
        b0=b0,
        rho=rho,
        tilde_ratio=1.0 / rho,
        tilde_ratio_closed=closed,
        omega_star=omega_star(params),
        regime=classify_regime(params),
    )


def f1(x):
    """``(1 + x)^(1/x)``, strictly decreasing on ``(0, inf)``."""
    return (1.0 + x) ** (1.0 / x)


def f2(x):
    """``x^(x/(x-1))``, strictly increasing on ``(1, inf)``."""
    return x ** (x / (x - 1.0))


def potential_roots(params: ModelParams, omega: float) -> tuple[float | None, float | None]:
    """Amplitude landmarks for shooting at frequency ``omega``.

    Returns ``(zeta, beta)``: ``zeta`` is the first positive zero of
    ``F(s) = s^(p1+2)/(p1+2) - s^(p0+2)/(p0+2) - omega s^2/2`` and ``beta``
    the larger positive zero of ``s^p0 - s^p1 + omega``. Either is ``None``
    when it does not exist (``omega >= omega_star`` for ``zeta``).
    """
    from scipy.optimize import brentq

    p0, p1 = params.p0, params.p1
    g = lambda s: s ** p1 - s ** p0 - omega  # zero set of s^p0 - s^p1 + omega
    s_top = (p1 / p0) ** (1.0 / (p0 - p1))  # maximiser of s^p1 - s^p0
    beta = None
    if g(s_top) > 0:
        hi = s_top
        while g(hi) > 0:
            hi *= 2.0
        beta = brentq(g, s_top, hi, xtol=1e-15, rtol=1e-15)
    F = lambda s: nonlinear_potential_frequency(s, params) - omega
    s_crit = (p1 * (p0 + 2.0) / (p0 * (p1 + 2.0))) ** (1.0 / (p0 - p1))
    zeta = None
    if omega > 0 and F(s_crit) > 0:
        lo = s_crit
        while F(lo) > 0:
            lo *= 0.5
        zeta = brentq(F, lo, s_crit, xtol=1e-15, rtol=1e-15)
    return zeta, beta
