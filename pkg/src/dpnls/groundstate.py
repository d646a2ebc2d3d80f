"""Radial ground states of the stationary equation by shooting.

The radial ODE ``Q'' + (d-1)/r Q' = a0 |Q|^p0 Q + a1 |Q|^p1 Q + omega Q`` is
integrated from ``Q(0) = s`` with an adaptive Dormand-Prince pair until the
nonlinear terms are negligible. There the trajectory is split into the
decaying and growing solutions of the linear equation (modified Bessel
functions); the sign of the growing part decides over/undershoot and the
decaying part continues the profile analytically to any radius.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.linalg import solve_banded
from scipy.special import ive, kve

from . import core
from .fields import Field, RadialGrid, radial_stiffness_bands
from .functionals import FunctionalReport, energy_from_parts, report, virial_from_parts
from .model import ModelParams, omega_star, potential_roots, sphere_area

UNDERSHOOT = "undershoot"
OVERSHOOT = "overshoot"
CONVERGED = "converged"
FAILURE = "failure"
UNDECIDED = "undecided"

GROUND_STATE = (1.0, -1.0)  # (alpha0, alpha1) for the double-power problem


class NoSolution(RuntimeError):
    """No positive decaying solution exists (or none was bracketed)."""


@dataclass(frozen=True)
class ShootConfig:
    r0: float = 1e-6
    r_max: float = 5000.0
    rtol: float = 1e-12
    atol: float = 1e-15
    h_max: float = 0.25
    lin_eps: float = 1e-6
    under_frac: float = 1e-14
    over_frac: float = 1e-6
    tail_frac: float = 1e-12
    mix_tol: float = 1e-4


DEFAULT_SHOOT = ShootConfig()


@dataclass
class TailFit:
    r_m: float
    decaying: float
    growing: float
    kappa: float
    nu: float

    @property
    def mixing(self) -> float:
        return self.growing / self.decaying if self.decaying else math.inf

    def value(self, r):
        """Decaying continuation ``D (r_m/r)^nu K_nu(kappa r)/K_nu(kappa r_m)``."""
        r = np.asarray(r, dtype=float)
        x, xm = self.kappa * r, self.kappa * self.r_m
        return self.decaying * (self.r_m / r) ** self.nu * kve(self.nu, x) / kve(self.nu, xm) * np.exp(xm - x)

    def slope(self, r):
        r = np.asarray(r, dtype=float)
        x, xm = self.kappa * r, self.kappa * self.r_m
        return (-self.kappa * self.decaying * (self.r_m / r) ** self.nu
                * kve(self.nu + 1, x) / kve(self.nu, xm) * np.exp(xm - x))


@dataclass
class ShotOutcome:
    label: str
    profile: Field | None
    crossing_radius: float | None
    s: float
    omega: float
    code: int
    trajectory: np.ndarray = field(repr=False)
    moments: np.ndarray = field(repr=False)
    tail: TailFit | None = None
    delta: float = 0.0


def _fit_tail(d: int, omega: float, r: float, q: float, p: float) -> TailFit:
    kappa = math.sqrt(omega)
    nu = d / 2.0 - 1.0
    x = kappa * r
    a = -kappa * kve(nu + 1, x) / kve(nu, x)
    b = kappa * ive(nu + 1, x) / ive(nu, x)
    g = (p - a * q) / (b - a)
    return TailFit(r_m=r, decaying=q - g, growing=g, kappa=kappa, nu=nu)


def _hermite5(traj: np.ndarray, r: np.ndarray, params_rhs) -> np.ndarray:
    """Quintic Hermite interpolation of accepted RK steps at radii ``r``."""
    rs, q, p, q2 = traj[:, 0], traj[:, 1], traj[:, 2], traj[:, 3]
    idx = np.clip(np.searchsorted(rs, r) - 1, 0, len(rs) - 2)
    h = rs[idx + 1] - rs[idx]
    t = (r - rs[idx]) / h
    u = 1 - t

    def H0(t):
        return 1 - 10 * t ** 3 + 15 * t ** 4 - 6 * t ** 5

    def H1(t):
        return t - 6 * t ** 3 + 8 * t ** 4 - 3 * t ** 5

    def H2(t):
        return 0.5 * (t ** 2 - 3 * t ** 3 + 3 * t ** 4 - t ** 5)

    out = (q[idx] * H0(t) + h * p[idx] * H1(t) + h ** 2 * q2[idx] * H2(t)
           + q[idx + 1] * H0(u) - h * p[idx + 1] * H1(u) + h ** 2 * q2[idx + 1] * H2(u))
    # below the seed radius the Taylor seed is exact to O(r0^4)
    small = r < rs[0]
    if np.any(small):
        out[small] = q[0] + 0.5 * q2[0] * (r[small] ** 2 - rs[0] ** 2)
    return out


def shoot(params: ModelParams, omega: float, s: float, grid: RadialGrid | None = None,
          alphas: tuple[float, float] = GROUND_STATE, cfg: ShootConfig = DEFAULT_SHOOT,
          delta: float | None = None) -> ShotOutcome:
    """One shot from ``Q(0) = s``; labels per the event thresholds in ``cfg``.

    With ``delta`` the shot starts at ``s - delta`` where ``s`` should be an
    equilibrium of the profile equation (the plateau value ``beta``). The
    offset is then carried separately, so ``delta`` may be far below the
    spacing of floats near ``s``.
    """
    if omega < 0 or not s > 0:
        raise ValueError("need omega >= 0 and s > 0")
    a0, a1 = alphas
    shift, offset = (0.0, float(s)) if delta is None else (float(s), -float(delta))
    code, r_ev, traj, mom, fin = core.shoot_integrate(
        shift, offset, float(omega), int(params.d), float(params.p0), float(params.p1),
        float(a0), float(a1), cfg.r0, cfg.r_max, cfg.rtol, cfg.atol, cfg.h_max,
        cfg.lin_eps, cfg.under_frac, cfg.over_frac, cfg.tail_frac,
    )
    tail = None
    crossing = None
    if code == 0:
        label, crossing = UNDERSHOOT, r_ev
    elif code == 1:
        label = OVERSHOOT
    elif code == 2:
        tail = _fit_tail(params.d, omega, fin[0], fin[1], fin[2])
        if abs(tail.mixing) <= cfg.mix_tol:
            label = CONVERGED
        else:
            label = OVERSHOOT if tail.growing > 0 else UNDERSHOOT
    elif code == 5:
        label = CONVERGED
    elif code == 3:
        label = UNDECIDED
    else:
        label = FAILURE
    profile = None
    if grid is not None and label == CONVERGED:
        profile = Field(grid, sample_profile(traj, tail, grid.nodes))
    return ShotOutcome(label, profile, crossing, shift + offset, omega, code, traj, mom, tail,
                       0.0 if delta is None else float(delta))


def sample_profile(traj: np.ndarray, tail: TailFit | None, r: np.ndarray) -> np.ndarray:
    r_end = traj[-1, 0]
    out = np.zeros_like(r)
    inner = r <= r_end
    out[inner] = _hermite5(traj, r[inner], None)
    if tail is not None and np.any(~inner):
        out[~inner] = tail.value(r[~inner])
    return out


# -- discrete polishing -----------------------------------------------------------

def discrete_residual(values: np.ndarray, grid: RadialGrid, omega: float, params: ModelParams,
                      alphas=GROUND_STATE) -> np.ndarray:
    """``-L Q + a0|Q|^p0 Q + a1|Q|^p1 Q + omega Q`` on the grid."""
    diag, off = radial_stiffness_bands(grid)
    sq = diag * values
    sq[:-1] += off * values[1:]
    sq[1:] += off * values[:-1]
    a0, a1 = alphas
    q = values
    nl = a0 * np.abs(q) ** params.p0 * q + a1 * np.abs(q) ** params.p1 * q + omega * q
    return sq / grid.weights + nl


def newton_polish(values: np.ndarray, grid: RadialGrid, omega: float, params: ModelParams,
                  alphas=GROUND_STATE, tol: float = 1e-14, max_iter: int = 30) -> tuple[np.ndarray, float]:
    """Newton iteration on the discrete stationary equation (tridiagonal Jacobian)."""
    q = np.array(values, dtype=float)
    diag, off = radial_stiffness_bands(grid)
    w = grid.weights
    a0, a1 = alphas
    scale = max(np.max(np.abs(q)) ** (params.p1 + 1), 1e-300)
    res = np.inf
    for _ in range(max_iter):
        F = discrete_residual(q, grid, omega, params, alphas)
        res = float(np.max(np.abs(F))) / scale
        if res < tol:
            break
        jd = (a0 * (params.p0 + 1) * np.abs(q) ** params.p0
              + a1 * (params.p1 + 1) * np.abs(q) ** params.p1 + omega)
        ab = np.zeros((3, grid.N))
        ab[0, 1:] = off
        ab[1] = diag + w * jd
        ab[2, :-1] = off
        q = q - solve_banded((1, 1), ab, w * F)
    return q, res


# -- ground states --------------------------------------------------------------

@dataclass
class GroundState:
    omega: float
    profile: Field
    mass: float
    report: FunctionalReport
    shooting_amplitude: float
    continuum: dict
    residual: float
    tail_rate: float

    @property
    def phi_ratio(self) -> float:
        return abs(self.report.Phi) / self.report.kinetic


def continuum_moments(params: ModelParams, traj_moments: np.ndarray, tail: TailFit | None) -> dict:
    """Continuum integrals from the ODE moments plus the analytic tail."""
    sig = sphere_area(params.d)
    m2, k2, a0, a1 = (float(x) for x in traj_moments)
    if tail is not None:
        d = params.d
        rm = tail.r_m
        upper = rm + 80.0 / tail.kappa
        qi = lambda fn: integrate.quad(fn, rm, upper, limit=400, epsabs=0, epsrel=1e-13)[0]
        m2 += qi(lambda r: tail.value(r) ** 2 * r ** (d - 1))
        k2 += qi(lambda r: tail.slope(r) ** 2 * r ** (d - 1))
        a0 += qi(lambda r: abs(tail.value(r)) ** (params.p0 + 2) * r ** (d - 1))
        a1 += qi(lambda r: abs(tail.value(r)) ** (params.p1 + 2) * r ** (d - 1))
    M, K, A0, A1 = sig * m2, sig * k2, sig * a0, sig * a1
    return {
        "M": M, "K": K, "A0": A0, "A1": A1,
        "E": energy_from_parts(K, A0, A1, params),
        "Phi": virial_from_parts(K, A0, A1, params),
    }


def default_grid(params: ModelParams, omega: float, r_core: float = 0.0,
                 dr: float = 40.0 / 8192, R_min: float = 40.0) -> RadialGrid:
    """Radial grid wide enough that the tail at ``R`` is below ~1e-14 of the peak."""
    R = max(R_min, r_core + 32.0 / math.sqrt(omega))
    N = int(math.ceil(R / dr))
    return RadialGrid(params.d, N, N * dr)


def _side(out: ShotOutcome) -> str:
    """Over/undershoot side of a shot, using the growing-mode sign when converged."""
    if out.label == CONVERGED and out.tail is not None:
        return OVERSHOOT if out.tail.growing > 0 else UNDERSHOOT
    return out.label


def bracket_amplitudes(params: ModelParams, omega: float, n_scan: int = 64,
                       alphas=GROUND_STATE, cfg: ShootConfig = DEFAULT_SHOOT):
    """Scan amplitudes ``beta - delta`` for an adjacent (overshoot, undershoot) pair.

    The scan covers ``(zeta, beta)``: below the first zero ``zeta`` of the
    potential no shot can reach zero (in d=1 the ground state sits exactly at
    ``zeta``, so the scan starts at ``zeta/2``), and above the unstable
    equilibrium ``beta`` the profile increases at once. Near omega_* the
    amplitude approaches ``beta`` exponentially, so ``delta`` is spaced
    geometrically down to 1e-300.

    Returns ``(beta, delta_a, delta_b, side_a)`` or ``None``.
    """
    zeta, beta = potential_roots(params, omega)
    if zeta is None or beta is None:
        return None
    lo = 0.5 * zeta if params.d == 1 else zeta
    deltas = (beta - lo) * (1 - 1e-3) * np.geomspace(1.0, 1e-300, n_scan)
    prev = None
    for dl in deltas:
        side = _side(shoot(params, omega, beta, alphas=alphas, cfg=cfg, delta=dl))
        if prev is not None and {prev[1], side} == {OVERSHOOT, UNDERSHOOT}:
            return beta, prev[0], dl, prev[1]
        prev = (dl, side)
    return None


def _bisect(params: ModelParams, omega: float, tol: float, cfg: ShootConfig) -> ShotOutcome:
    params.require_admissible()
    w_star = omega_star(params)
    if not 0 < omega < w_star:
        raise NoSolution(f"omega={omega} outside (0, omega_*={w_star})")
    br = bracket_amplitudes(params, omega, cfg=cfg)
    if br is None:
        raise NoSolution(f"no amplitude bracket at omega={omega}")
    beta, d_a, d_b, side_a = br
    best = None
    for _ in range(400):
        # geometric while the bracket spans decades, arithmetic after
        d_mid = math.sqrt(d_a * d_b) if max(d_a, d_b) > 2 * min(d_a, d_b) else 0.5 * (d_a + d_b)
        if d_mid in (d_a, d_b):
            break
        out = shoot(params, omega, beta, cfg=cfg, delta=d_mid)
        if out.tail is not None and (best is None or abs(out.tail.mixing) < abs(best.tail.mixing)):
            best = out
        side = _side(out)
        if side not in (OVERSHOOT, UNDERSHOOT):
            raise NoSolution(f"shot at beta-{d_mid} ended with {out.label}")
        if side == side_a:
            d_a = d_mid
        else:
            d_b = d_mid
        # past delta ~ beta/4 the amplitude itself is the resolved quantity
        if abs(d_a - d_b) < tol * min(d_mid, beta - d_mid):
            break
    if best is None or abs(best.tail.mixing) > 1e-2:
        raise NoSolution(f"bisection did not reach the decaying branch at omega={omega}")
    return best


def solve_ground_state(params: ModelParams, omega: float, tol: float = 1e-14,
                       grid: RadialGrid | None = None, cfg: ShootConfig = DEFAULT_SHOOT,
                       polish: bool = True) -> GroundState:
    """Ground state ``Q_omega`` on ``grid`` (auto-sized when omitted).

    Bisection on the amplitude gives the shot closest to the decaying branch;
    its decaying continuation is sampled on the grid and then Newton-polished
    so that it solves the discrete stationary equation.
    """
    out = _bisect(params, omega, tol, cfg)
    if grid is None:
        grid = default_grid(params, omega, out.tail.r_m)
    values = sample_profile(out.trajectory, out.tail, grid.nodes)
    res = float(np.max(np.abs(discrete_residual(values, grid, omega, params)))
                / np.max(np.abs(values)) ** (params.p1 + 1))
    if polish:
        values, res = newton_polish(values, grid, omega, params)
    prof = Field(grid, values)
    cont = continuum_moments(params, out.moments, out.tail)
    return GroundState(
        omega=omega,
        profile=prof,
        mass=cont["M"],
        report=report(prof, params),
        shooting_amplitude=out.s,
        continuum=cont,
        residual=res,
        tail_rate=measure_tail_rate(prof),
    )


def measure_tail_rate(f: Field, hi: float = 1e-3, lo: float = 1e-9) -> float:
    """Exponential decay rate of ``r^((d-1)/2) Q`` where ``lo < Q/max Q < hi``."""
    g = f.grid
    q = np.abs(f.values)
    r = g.nodes
    rel = q / q.max()
    sel = (rel < hi) & (rel > lo) & (r < 0.75 * g.R)
    if np.count_nonzero(sel) < 8:
        return math.nan
    y = np.log(q[sel] * r[sel] ** ((g.d - 1) / 2.0))
    slope = np.polyfit(r[sel], y, 1)[0]
    return -slope


def mass_curve(params: ModelParams, omegas, tol: float = 1e-14, cfg: ShootConfig = DEFAULT_SHOOT,
               jobs: int = 1) -> list[dict]:
    """``(omega, M(Q_omega))`` per sample; failures are recorded, not raised."""
    from .parallel import pmap

    return pmap(_mass_sample, [(params, float(w), tol, cfg) for w in omegas], jobs)


def _mass_sample(args) -> dict:
    params, w, tol, cfg = args
    try:
        gs = solve_ground_state_continuum(params, w, tol=tol, cfg=cfg)
    except NoSolution as exc:
        return {"omega": w, "mass": math.nan, "phi_residual": math.nan, "status": f"no-solution: {exc}"}
    return {"omega": w, "mass": gs["M"], "phi_residual": gs["Phi"] / gs["K"], "status": "ok"}


def solve_ground_state_continuum(params: ModelParams, omega: float, tol: float = 1e-14,
                                 cfg: ShootConfig = DEFAULT_SHOOT) -> dict:
    """Continuum functionals of ``Q_omega`` without building a grid profile."""
    out = _bisect(params, omega, tol, cfg)
    cont = continuum_moments(params, out.moments, out.tail)
    cont["s"] = out.s
    cont["r_core"] = out.tail.r_m
    return cont


def minimal_mass(params: ModelParams, rtol: float = 1e-8, n_scan: int = 24,
                 tol: float = 1e-14, cfg: ShootConfig = DEFAULT_SHOOT) -> dict:
    """Minimise ``omega -> M(Q_omega)`` on ``(0, omega_*)``.

    A coarse scan locates the smallest sample; golden-section search then
    refines inside its neighbours. If the scan is not unimodal the search is
    restarted around every local minimum and the least is kept.
    """
    from .model import derive_constants

    consts = derive_constants(params)
    w_star = consts.omega_star
    M = lambda w: solve_ground_state_continuum(params, w, tol=tol, cfg=cfg)["M"]
    ws = w_star * (np.arange(1, n_scan + 1) / (n_scan + 1))
    ms = np.array([M(w) for w in ws])
    local = [i for i in range(1, n_scan - 1) if ms[i] <= ms[i - 1] and ms[i] <= ms[i + 1]]
    if not local:
        local = [int(np.argmin(ms))]
    unimodal = len(local) == 1
    best = None
    for i in local:
        lo = ws[max(i - 1, 0)]
        hi = ws[min(i + 1, n_scan - 1)]
        w_c, m_c = _golden_min(M, lo, hi, rtol)
        if best is None or m_c < best[1]:
            best = (w_c, m_c)
    w_c, m_c = best
    return {
        "omega_c": w_c,
        "m_c": m_c,
        "tilde_m_c": consts.tilde_ratio * m_c,
        "unimodal_scan": unimodal,
        "scan": list(zip(ws.tolist(), ms.tolist())),
    }


def critical_mass(params: ModelParams, omega_c: float | None = None, rtol: float = 1e-10,
                  tol: float = 1e-14, cfg: ShootConfig = DEFAULT_SHOOT) -> dict:
    """Zero-energy ground state on the upper branch of the mass curve.

    Along the family ``dE/domega = -omega dM/domega``, so the energy is
    stationary where the mass is, and ``E(Q_omega)`` is positive at the
    minimal-mass state and decreases on ``omega > omega_c``. Its zero
    ``omega_0`` is where ``I(m)`` first becomes negative: ``M(Q_omega_0)`` is
    the variational critical mass. ``m_tilde`` is the rescaled threshold.
    """
    from .model import derive_constants

    consts = derive_constants(params)
    if omega_c is None:
        omega_c = minimal_mass(params, cfg=cfg)["omega_c"]
    E = lambda w: solve_ground_state_continuum(params, w, tol=tol, cfg=cfg)["E"]
    hi = consts.omega_star * 0.99
    if E(omega_c) <= 0:
        # degenerate case: the lightest state already has nonpositive energy
        w0 = omega_c
    else:
        w0 = optimize.brentq(E, omega_c, hi, xtol=rtol * omega_c, rtol=rtol)
    cont = solve_ground_state_continuum(params, w0, tol=tol, cfg=cfg)
    return {
        "omega_0": w0,
        "m_c": cont["M"],
        "tilde_m_c": consts.tilde_ratio * cont["M"],
        "energy": cont["E"],
        "kinetic": cont["K"],
    }


def _golden_min(f, a: float, b: float, rtol: float):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    e = a + invphi * (b - a)
    fc, fe = f(c), f(e)
    while abs(b - a) > rtol * abs(c):
        if fc < fe:
            b, e, fe = e, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + invphi * (b - a)
            fe = f(e)
    return (c, fc) if fc < fe else (e, fe)


# -- zero-frequency probe ---------------------------------------------------------

def zero_frequency_scan(params: ModelParams, alpha0: float, alpha1: float, s_grid,
                        cfg: ShootConfig = DEFAULT_SHOOT) -> dict:
    """Shoot ``Delta Q = a1|Q|^p1 Q + a0|Q|^p0 Q`` at zero frequency.

    A shot counts as converged only if it reaches the tail threshold while
    positive and decreasing and its mass integral is finite in the sense that
    the last quarter of the trajectory adds less than 1% of the mass.
    """
    if params.d not in (1, 2, 3, 4):
        raise ValueError("zero-frequency probe covers d in {1,2,3,4}")
    hist: Counter = Counter()
    converged = []
    for s in s_grid:
        out = shoot(params, 0.0, float(s), alphas=(alpha0, alpha1), cfg=cfg)
        lab = out.label
        if lab == CONVERGED and not _finite_mass_tail(out, params.d):
            lab = "algebraic-tail"
        hist[lab] += 1
        if lab == CONVERGED:
            converged.append(float(s))
    return {"histogram": dict(hist), "converged_amplitudes": converged, "n": len(list(s_grid))}


def _finite_mass_tail(out: ShotOutcome, d: int) -> bool:
    r, q = out.trajectory[:, 0], out.trajectory[:, 1]
    dens = q ** 2 * r ** (d - 1)
    cum = integrate.cumulative_trapezoid(dens, r, initial=0.0)
    if cum[-1] <= 0:
        return False
    cut = np.searchsorted(r, 0.75 * r[-1])
    return (cum[-1] - cum[cut]) < 1e-2 * cum[-1]


# -- single-power test mode -------------------------------------------------------

def solve_single_power(d: int, p: float, omega: float, grid: RadialGrid | None = None,
                       tol: float = 1e-14, n_scan: int = 64, cfg: ShootConfig = DEFAULT_SHOOT) -> Field:
    """Positive decaying solution of ``-Lap Q + omega Q = Q^(p+1)`` by the same shooter.

    Validation mode with a closed form in d=1,
    ``Q(x) = ((p+2) omega / 2)^(1/p) sech^(2/p)(p sqrt(omega) x / 2)``.
    The upper exponent is switched off through ``alpha0 = 0``.
    """
    if not (omega > 0 and p > 0):
        raise ValueError("need omega > 0 and p > 0")
    params = ModelParams(d, p + 1.0, p)  # p0 is inert with alpha0 = 0
    alphas = (0.0, -1.0)
    s_ref = ((p + 2) * omega / 2) ** (1.0 / p)
    prev = None
    lo = hi = None
    for s in s_ref * np.geomspace(1e-2, 1e2, n_scan):
        side = _side(shoot(params, omega, float(s), alphas=alphas, cfg=cfg))
        if prev is not None and {prev[1], side} == {OVERSHOOT, UNDERSHOOT}:
            lo, hi, side_lo = prev[0], float(s), prev[1]
            break
        prev = (float(s), side)
    if lo is None:
        raise NoSolution(f"no amplitude bracket for the single-power problem at omega={omega}")
    best = None
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        out = shoot(params, omega, mid, alphas=alphas, cfg=cfg)
        if out.tail is not None and (best is None or abs(out.tail.mixing) < abs(best.tail.mixing)):
            best = out
        if _side(out) == side_lo:
            lo = mid
        else:
            hi = mid
    if best is None:
        raise NoSolution("single-power bisection never reached the tail")
    if grid is None:
        grid = default_grid(params, omega, best.tail.r_m)
    return Field(grid, sample_profile(best.trajectory, best.tail, grid.nodes))


def sech_soliton(x, p: float, omega: float) -> np.ndarray:
    """Closed-form d=1 single-power ground state."""
    return ((p + 2) * omega / 2) ** (1.0 / p) / np.cosh(p * math.sqrt(omega) * np.asarray(x) / 2) ** (2.0 / p)
