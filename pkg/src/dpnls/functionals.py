"""Conserved quantities and the virial functional, plus rescalings and boosts.

Momentum convention: ``P = Im int conj(u) grad u``. With it a boost obeys
``E(e^{i x xi} u) = E(u) + |xi|^2 M(u) + 2 xi . P(u)`` (``BOOST_SIGN = +1``),
so the energy-minimising boost is ``xi = -P/M``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.fft import dst, idct
from scipy.interpolate import CubicSpline

from .fields import (
    Field,
    FieldError,
    LineGrid,
    RadialGrid,
    gradient_sq_norm,
    lp_norm_pow,
    mass,
    spectral_derivative,
)
from .model import ModelParams

BOOST_SIGN = 1
GN_FLOOR = 1e-300
# mass allowed to leave the grid under a rescaling
RESCALE_TAIL_TOL = 1e-10


@dataclass(frozen=True)
class FunctionalReport:
    M: float
    E: float
    P: float
    Phi: float
    gn_quotient: float | None
    W: float
    V: float
    kinetic: float
    A0: float
    A1: float

    def as_dict(self) -> dict:
        return asdict(self)


def _radial_derivative(f: Field, method: str) -> np.ndarray:
    g = f.grid
    u = f.values
    if method == "spectral":
        if g.d != 3:
            raise FieldError("spectral radial derivative needs d=3")
        r = g.nodes
        c = dst(r * u, type=2, norm="ortho")
        kk = np.pi * (np.arange(g.N) + 1) / g.R
        # d/dr sin(k r) = k cos(k r); the top mode's cosine vanishes at the nodes
        cc = np.zeros(g.N, dtype=complex)
        cc[1:] = (kk * c)[:-1]
        vr = idct(cc, type=2, norm="ortho")
        return (vr - u) / r
    ext = np.concatenate(([u[0]], u, [0.0]))
    return (ext[2:] - ext[:-2]) / (2 * g.dr)


def virial_momentum(f: Field, method: str = "default") -> float:
    """``W = Im int x . grad u conj(u)``."""
    g = f.grid
    if g.kind == "line":
        du = spectral_derivative(f)
        return float(np.sum(g.weights * g.nodes * (du * np.conj(f.values)).imag))
    ur = _radial_derivative(f, method)
    return float(np.sum(g.weights * g.nodes * (ur * np.conj(f.values)).imag))


def momentum(f: Field) -> float:
    if f.kind != "line":
        return 0.0
    du = spectral_derivative(f)
    return float(np.sum(f.grid.weights * (np.conj(f.values) * du).imag))


def variance(f: Field) -> float:
    return float(np.sum(f.grid.weights * f.grid.nodes ** 2 * np.abs(f.values) ** 2))


def energy_from_parts(K, A0, A1, params: ModelParams) -> float:
    return K - 2.0 / (params.p1 + 2) * A1 + 2.0 / (params.p0 + 2) * A0


def virial_from_parts(K, A0, A1, params: ModelParams) -> float:
    return K - params.c1 * A1 + params.c0 * A0


def gn_from_parts(M, K, A0, A1, params: ModelParams) -> float | None:
    d, p0, p1 = params.d, params.p0, params.p1
    theta = (p1 - 4.0 / d) / (p0 - 4.0 / d)
    if min(M, K, A0, A1) < GN_FLOOR:
        return None
    return A1 / (M ** ((p1 - theta * p0) / 2) * K ** (1 - theta) * A0 ** theta)


def parts(f: Field, params: ModelParams, method: str = "default"):
    K = gradient_sq_norm(f, method)
    A0 = lp_norm_pow(f, params.p0 + 2)
    A1 = lp_norm_pow(f, params.p1 + 2)
    return K, A0, A1


def energy(f: Field, params: ModelParams, method: str = "default") -> float:
    return energy_from_parts(*parts(f, params, method), params)


def virial(f: Field, params: ModelParams, method: str = "default") -> float:
    return virial_from_parts(*parts(f, params, method), params)


def report(f: Field, params: ModelParams, method: str = "default") -> FunctionalReport:
    """All functionals of ``f``; ``method="spectral"`` for d=3 radial dynamics."""
    f.check_finite()
    K, A0, A1 = parts(f, params, method)
    M = mass(f)
    return FunctionalReport(
        M=M,
        E=energy_from_parts(K, A0, A1, params),
        P=momentum(f),
        Phi=virial_from_parts(K, A0, A1, params),
        gn_quotient=gn_from_parts(M, K, A0, A1, params),
        W=virial_momentum(f, method),
        V=variance(f),
        kinetic=K,
        A0=A0,
        A1=A1,
    )


# -- rescalings ----------------------------------------------------------------

def _trig_interp(f: Field, y: np.ndarray) -> np.ndarray:
    """Band-limited interpolant of a line field at points ``y``."""
    g = f.grid
    N = g.N
    c = np.fft.fft(f.values) / N
    m = np.fft.fftfreq(N, d=1.0 / N)
    k = 2 * np.pi * m / g.L
    nyq = N // 2
    out = np.empty(y.shape, dtype=complex)
    shift = y + g.L / 2
    step = max(1, 2 ** 22 // N)
    for lo in range(0, y.size, step):
        ys = shift[lo:lo + step]
        ph = np.exp(1j * np.outer(ys, k))
        # split the Nyquist mode symmetrically
        ph[:, nyq] = np.cos(k[nyq] * ys)
        out[lo:lo + step] = ph @ c
    return out


def rescale_ab(f: Field, a: float, b: float) -> Field:
    """``u_{a,b}(x) = a u(b x)`` resampled on the same grid."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if a == 1.0 and b == 1.0:
        return f.copy()
    g = f.grid
    x = g.nodes
    w = g.weights
    dens = np.abs(f.values) ** 2
    total = float(np.sum(w * dens))
    if g.kind == "line":
        outside = np.abs(x) > b * g.L / 2 * (1 - 1e-12)
        if total > 0 and np.sum(w[outside] * dens[outside]) > RESCALE_TAIL_TOL * total:
            raise FieldError("rescaling pushes mass outside the line grid")
        if b > 1 and total > 0:
            spec = np.abs(np.fft.fft(f.values)) ** 2
            kabs = np.abs(g.wavenumbers)
            if np.sum(spec[kabs > kabs.max() / b]) > RESCALE_TAIL_TOL * np.sum(spec):
                raise FieldError("rescaling compresses the field below grid resolution")
        # beyond the domain the field is zero, not its periodic image
        y = b * x
        inside = np.abs(y) < g.L / 2
        vals = np.zeros(g.N, dtype=complex)
        vals[inside] = a * _trig_interp(f, y[inside])
        return Field(g, vals)
    outside = x > b * g.R
    if total > 0 and np.sum(w[outside] * dens[outside]) > RESCALE_TAIL_TOL * total:
        raise FieldError("rescaling pushes mass outside the radial grid")
    # even extension through the origin, zero beyond R
    r = np.concatenate((-x[::-1], x, [g.R + 0.5 * g.dr]))
    v = np.concatenate((f.values[::-1], f.values, [0.0]))
    re = CubicSpline(r, v.real)
    im = CubicSpline(r, v.imag)
    y = b * x
    inside = y < g.R
    vals = np.zeros(g.N, dtype=complex)
    vals[inside] = a * (re(y[inside]) + 1j * im(y[inside]))
    return Field(g, vals)


def scale_lambda(f: Field, lam: float) -> Field:
    """Mass-preserving dilation ``lam^(d/2) u(lam x)``."""
    return rescale_ab(f, lam ** (f.grid.d / 2.0), lam)


def e_ab(f: Field, a: float, b: float, params: ModelParams) -> float:
    K, A0, A1 = parts(f, params)
    return (
        K
        - 2.0 / (params.p1 + 2) * a ** params.p1 * b ** -2 * A1
        + 2.0 / (params.p0 + 2) * a ** params.p0 * b ** -2 * A0
    )


def scaling_derivative_check(f: Field, lam: float, params: ModelParams, h: float | None = None) -> float:
    """``|Phi(u^lam) - (lam/2) dE(u^lam)/dlam|`` with a 4th-order difference."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    h = 1e-3 * lam if h is None else h
    E = lambda mu: energy(scale_lambda(f, mu), params)
    dE = (-E(lam + 2 * h) + 8 * E(lam + h) - 8 * E(lam - h) + E(lam - 2 * h)) / (12 * h)
    return abs(virial(scale_lambda(f, lam), params) - 0.5 * lam * dE)


# -- boosts ----------------------------------------------------------------------

def boost(f: Field, xi: float) -> Field:
    """Galilean boost ``e^{i x xi} u`` (line grids only)."""
    if f.kind != "line":
        raise FieldError("boost is defined on line grids only")
    return Field(f.grid, np.exp(1j * xi * f.grid.nodes) * f.values)


def optimal_boost(f: Field, params: ModelParams) -> tuple[float, Field]:
    """Boost minimising the energy, located from the exact parabola in ``xi``.

    ``E(u_xi)`` is quadratic in ``xi``; three evaluations fix it without
    assuming a momentum sign convention.
    """
    if f.kind != "line":
        raise FieldError("boost is defined on line grids only")
    M = mass(f)
    if M == 0:
        raise FieldError("zero field has no optimal boost")
    # step comparable to the field's own wavenumber scale
    step = 1.0
    e_m = energy(boost(f, -step), params)
    e_0 = energy(f, params)
    e_p = energy(boost(f, step), params)
    curv = (e_p - 2 * e_0 + e_m) / (2 * step ** 2)
    slope = (e_p - e_m) / (2 * step)
    xi = -slope / (2 * curv)
    if abs(xi) < 1e-14 * max(1.0, abs(slope) / curv):
        xi = 0.0
    return xi, boost(f, xi)


def pohozaev_residual(f: Field, alpha0: float, alpha1: float, params: ModelParams) -> float:
    K, A0, A1 = parts(f, params)
    return K + params.c1 * alpha1 * A1 + params.c0 * alpha0 * A0
