"""Constrained minimisation for the threshold curves.

The curves ``I(m)``, ``tilde I(m)`` and ``e(m)`` are minima over the mass
sphere ``{M(u) = m}`` of radial nonnegative profiles on a
:class:`~dpnls.fields.RadialGrid`. They share one objective family::

    F(u) = kappa K(u) + alpha A0(u) - beta A1(u),   A_j = int |u|^(p_j + 2)

with ``(kappa, alpha, beta) = (1, 2/(p0+2), 2/(p1+2))`` for the energy and
``(1, c0, c1)`` for the virial functional. The threshold ``e(m)`` minimises
``E(u^lam)`` where ``lam`` puts ``u^lam = lam^(d/2) u(lam x)`` on the surface
``Phi = 0``; the scalings ``K(u^lam) = lam^2 K`` and
``A_j(u^lam) = lam^(d p_j / 2) A_j`` make that another member of the family.

The descent is a projected gradient flow in the metric of ``S + c W`` (``S``
the stiffness matrix, ``W`` the quadrature weights, ``c`` tracking the
current Lagrange multiplier). Steps use an Armijo line search and are
retracted to the sphere by amplitude renormalisation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize
from scipy.linalg import solve_banded

from .fields import Field, RadialGrid, radial_stiffness_bands
from .model import ModelParams, derive_constants

ATTAINED = "attained"
VANISHING = "vanishing"
INFEASIBLE = "infeasible"
UNDECIDED = "undecided"


@dataclass
class CurveSample:
    m: float
    value: float  # math.inf for the +infinity marker
    status: str
    minimizer: Field | None = field(default=None, repr=False)
    kinetic: float = math.nan
    multiplier: float = math.nan
    iterations: int = 0
    note: str = ""


@dataclass
class ThresholdCurves:
    I_samples: list
    tildeI_samples: list
    e_samples: list
    m_c_estimate: float
    tilde_m_c_estimate: float
    tildeI_identity: list = field(default_factory=list)


@dataclass(frozen=True)
class FlowConfig:
    tol: float = 1e-9  # relative Euler-Lagrange residual
    max_iters: int = 20000
    armijo: float = 1e-4
    vanish_radius: float = 0.4  # half-mass radius, fraction of R
    vanish_steps: int = 200
    neg_tol: float = 1e-9  # relative to the kinetic scale
    stop_below: float | None = None  # stop once F < -stop_below * K (witness mode)


DEFAULT_FLOW = FlowConfig()
_RESOLUTION = 1e-12  # relative to the sum of the absolute parts of F


def flow_grid(params: ModelParams, R: float | None = None, dr: float | None = None) -> RadialGrid:
    """Default variational grid: wide enough for the slow tails near m_c."""
    if R is None:
        R = 240.0 if params.d == 1 else 80.0
    if dr is None:
        dr = 0.08 if params.d == 1 else 0.05
    N = int(round(R / dr))
    return RadialGrid(params.d, N, N * dr)


# -- the objective family --------------------------------------------------------------

class _Problem:
    """Discrete quadratic form and its banded solves on one grid."""

    def __init__(self, grid: RadialGrid, params: ModelParams):
        self.grid = grid
        self.params = params
        self.w = grid.weights
        self.diag, self.off = radial_stiffness_bands(grid)

    def kinetic(self, u):
        su = self.diag * u
        su[:-1] += self.off * u[1:]
        su[1:] += self.off * u[:-1]
        return float(u @ su), su

    def parts(self, u):
        K, su = self.kinetic(u)
        au = np.abs(u)
        A0 = float(self.w @ au ** (self.params.p0 + 2))
        A1 = float(self.w @ au ** (self.params.p1 + 2))
        return K, A0, A1, su

    def mass(self, u):
        return float(self.w @ (u * u))

    def precond_solve(self, kappa, c, rhs):
        ab = np.zeros((3, self.grid.N))
        ab[0, 1:] = kappa * self.off
        ab[1] = kappa * self.diag + c * self.w
        ab[2, :-1] = kappa * self.off
        return solve_banded((1, 1), ab, rhs)

    def precond_apply(self, kappa, c, v):
        out = (kappa * self.diag + c * self.w) * v
        out[:-1] += kappa * self.off * v[1:]
        out[1:] += kappa * self.off * v[:-1]
        return out

    def half_mass_radius(self, u):
        cm = np.cumsum(self.w * u * u)
        return float(self.grid.nodes[np.searchsorted(cm, 0.5 * cm[-1])])


def _coeffs(params: ModelParams, kind: str):
    if kind == "energy":
        return 2.0 / (params.p0 + 2), 2.0 / (params.p1 + 2)
    if kind == "virial":
        return params.c0, params.c1
    raise ValueError(kind)


def lambda_root(K: float, A0: float, A1: float, params: ModelParams) -> float | None:
    """Larger root of ``Phi(u^lam) = 0`` or ``None`` when ``Phi(u^lam) > 0`` for all lam.

    ``Phi(u^lam)/lam^2 = K - c1 A1 lam^a + c0 A0 lam^b`` with
    ``a = d p1/2 - 2 < b = d p0/2 - 2``; it is convex in ``lam^a`` after a
    change of variable, so it has at most two roots. ``E(u^lam)`` decreases
    between them, so the larger one gives the smaller energy.
    """
    d, p0, p1 = params.d, params.p0, params.p1
    c0, c1 = params.c0, params.c1
    a, b = d * p1 / 2 - 2, d * p0 / 2 - 2
    if A1 <= 0 or A0 <= 0:
        return None
    lt_min = math.log(c1 * A1 * a / (c0 * A0 * b)) / (b - a)
    h = lambda lt: K - c1 * A1 * math.exp(a * lt) + c0 * A0 * math.exp(b * lt)
    if h(lt_min) > 0:
        return None
    hi = lt_min + 1.0
    while h(hi) <= 0:
        hi += 1.0
    return math.exp(optimize.brentq(h, lt_min, hi, xtol=1e-15, rtol=1e-15))


def _scaled_coeffs(params: ModelParams, lam: float):
    d = params.d
    return (lam ** 2,
            lam ** (d * params.p0 / 2) * 2.0 / (params.p0 + 2),
            lam ** (d * params.p1 / 2) * 2.0 / (params.p1 + 2))


def _evaluate(prob: _Problem, u, kind: str):
    """Objective value with the pieces the gradient needs."""
    params = prob.params
    K, A0, A1, su = prob.parts(u)
    if kind == "retracted":
        lam = lambda_root(K, A0, A1, params)
        if lam is None:
            return math.inf, None, K, su, (K, A0, A1)
        kap, al, be = _scaled_coeffs(params, lam)
    else:
        al, be = _coeffs(params, kind)
        kap = 1.0
    return kap * K + al * A0 - be * A1, (kap, al, be), K, su, (K, A0, A1)


def _gradient(prob: _Problem, u, su, coeffs):
    kap, al, be = coeffs
    p0, p1 = prob.params.p0, prob.params.p1
    au = np.abs(u)
    return 2 * kap * su + prob.w * (al * (p0 + 2) * au ** p0 * u - be * (p1 + 2) * au ** p1 * u)


def _dilation(prob: _Problem, u):
    """Generator ``(d/2) u + r u'`` of the mass-preserving dilations."""
    r = prob.grid.nodes
    return 0.5 * prob.params.d * u + r * np.gradient(u, r)


def _renormalize(prob: _Problem, u, m):
    return u * math.sqrt(m / prob.mass(u))


def descend(prob: _Problem, u0: np.ndarray, m: float, kind: str,
            cfg: FlowConfig = DEFAULT_FLOW) -> CurveSample:
    """Projected, preconditioned descent of one objective on ``{M = m}``."""
    u = _renormalize(prob, np.abs(np.asarray(u0, dtype=float)), m)
    F, coeffs, K, su, parts = _evaluate(prob, u, kind)
    if not math.isfinite(F):
        return CurveSample(m, math.inf, INFEASIBLE, note="initial field infeasible")
    flat = 0
    c_shift = 0.1
    tau = 1.0
    streak = 0  # consecutive monotone steps while spreading
    status = UNDECIDED
    mult = math.nan
    it = 0
    for it in range(1, cfg.max_iters + 1):
        g = _gradient(prob, u, su, coeffs)
        wu = prob.w * u
        mult = float(u @ g) / (2 * float(u @ wu))  # g = 2 mult W u at a critical point
        if cfg.stop_below is not None and F < -cfg.stop_below * K:
            status = ATTAINED
            break
        c_shift = min(max(-mult, 1e-4), 1e2)
        z = prob.precond_solve(coeffs[0], c_shift, 0.5 * g)
        y = prob.precond_solve(coeffs[0], c_shift, wu)
        mu = float(wu @ z) / float(wu @ y)
        dvec = z - mu * y
        if kind == "retracted":
            # the retracted objective is dilation invariant: drop that direction
            v = _dilation(prob, u)
            pv = prob.precond_apply(coeffs[0], c_shift, v)
            dvec -= (float(pv @ dvec) / float(pv @ v)) * v
        slope = float(g @ dvec)
        res = math.sqrt(max(slope, 0.0) / max(float(g @ z), 1e-300))
        if res < cfg.tol:
            status = ATTAINED
            break
        kap, al, be = coeffs
        if slope <= _RESOLUTION * (kap * K + al * parts[1] + be * parts[2]):
            # a full step would change F by less than roundoff
            status = ATTAINED
            break
        tau = min(2 * tau, 1.0)
        accepted = False
        while tau > 1e-12:
            un = _renormalize(prob, np.abs(u - tau * dvec), m)
            Fn, cn, Kn, sun, pn = _evaluate(prob, un, kind)
            if Fn <= F - cfg.armijo * tau * slope:
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            # no further decrease resolvable in binary64
            status = ATTAINED
            break
        streak = streak + 1 if Fn < F else 0
        flat = flat + 1 if Fn == F else 0
        u, F, coeffs, K, su, parts = un, Fn, cn, Kn, sun, pn
        if flat >= 5:
            status = ATTAINED
            break
        if streak >= cfg.vanish_steps and prob.half_mass_radius(u) > cfg.vanish_radius * prob.grid.R:
            status = VANISHING
            break
    value = F
    sample = CurveSample(m, value, status, Field(prob.grid, u.astype(complex)), K, mult, it)
    return sample


# -- initial fields ----------------------------------------------------------------------

def _plateau_height(params: ModelParams, kind: str = "energy") -> float:
    # height minimising the bulk value of the objective per unit mass
    al, be = _coeffs(params, "virial" if kind == "virial" else "energy")
    p0, p1 = params.p0, params.p1
    return (be * p1 / (al * p0)) ** (1.0 / (p0 - p1))


def init_gaussian(grid: RadialGrid, params: ModelParams, m: float, kind: str = "energy") -> np.ndarray:
    """Gaussian with the plateau height as its peak and mass ``m``."""
    h = _plateau_height(params, kind)
    # int exp(-r^2/s^2) over R^d = (pi s^2)^(d/2)
    s = (m / h ** 2) ** (1.0 / params.d) / math.sqrt(math.pi)
    s = min(s, 0.2 * grid.R)
    return np.exp(-0.5 * (grid.nodes / s) ** 2)


def init_plateau(grid: RadialGrid, params: ModelParams, m: float, kind: str = "energy",
                 edge: float = 1.0) -> np.ndarray:
    """Smoothed ball at the plateau height whose radius carries mass ``m``."""
    from .model import sphere_area

    h = _plateau_height(params, kind)
    d = params.d
    vol = m / h ** 2
    rho = (vol * d / sphere_area(d)) ** (1.0 / d)
    rho = min(rho, 0.3 * grid.R)
    return 0.5 * (1 - np.tanh((grid.nodes - rho) / edge))


def init_ground_state(grid: RadialGrid, params: ModelParams, m: float) -> np.ndarray | None:
    """Ground-state profile with the nearest mass on the upper branch, if any."""
    from .groundstate import NoSolution, critical_mass, solve_ground_state

    try:
        cm = critical_mass(params)
        gs = solve_ground_state(params, cm["omega_0"], grid=grid, polish=False)
    except NoSolution:
        return None
    return gs.profile.values.real


def _initial_fields(prob: _Problem, m: float, inits, previous=None, kind: str = "energy"):
    out = []
    for name in inits:
        if name == "gaussian":
            out.append((name, init_gaussian(prob.grid, prob.params, m, kind)))
        elif name == "plateau":
            out.append((name, init_plateau(prob.grid, prob.params, m, kind)))
        elif name == "groundstate":
            v = init_ground_state(prob.grid, prob.params, m)
            if v is not None:
                out.append((name, v))
        elif name == "continuation":
            if previous is not None:
                out.append((name, previous))
        else:
            raise ValueError(f"unknown init {name!r}")
    return out


def _kinetic_scale(sample: CurveSample) -> float:
    return sample.kinetic if math.isfinite(sample.kinetic) and sample.kinetic > 0 else 1.0


def _minimize(prob: _Problem, m: float, kind: str, inits, cfg: FlowConfig, previous=None) -> CurveSample:
    best = None
    for name, u0 in _initial_fields(prob, m, inits, previous, kind):
        s = descend(prob, u0, m, kind, cfg)
        s.note = name
        if best is None or s.value < best.value:
            best = s
    if best is None:
        raise ValueError("no initial field available")
    # the dilation u^lam, lam -> 0, drives E and Phi to 0 from above: inf <= 0
    if best.value >= -cfg.neg_tol * _kinetic_scale(best):
        best = replace(best, value=0.0, status=VANISHING, minimizer=None)
    return best


# -- public operations ---------------------------------------------------------------------

DEFAULT_INITS = ("gaussian", "plateau", "continuation")


def minimize_energy_fixed_mass(params: ModelParams, m: float, init: Field | None = None,
                               cfg: FlowConfig = DEFAULT_FLOW, grid: RadialGrid | None = None,
                               kind: str = "energy") -> CurveSample:
    """``I(m)`` (or ``tilde I(m)`` with ``kind='virial'``) from one initial field.

    Returns value 0 with status ``vanishing`` when the flow spreads or ends at
    a nonnegative value: below the threshold the infimum is 0 and unattained.
    """
    params.require_admissible()
    if not m > 0:
        raise ValueError("m must be positive")
    if init is None:
        grid = grid or flow_grid(params)
        u0 = init_plateau(grid, params, m, kind)
    else:
        grid = init.grid
        u0 = init.values.real
    prob = _Problem(grid, params)
    s = descend(prob, u0, m, kind, cfg)
    if s.value >= -cfg.neg_tol * _kinetic_scale(s):
        s = replace(s, value=0.0, status=VANISHING, minimizer=None)
    return s


def _curve(params: ModelParams, m_grid, kind: str, grid, cfg, inits, jobs=1):
    params.require_admissible()
    ms = sorted(float(m) for m in m_grid)
    prob = _Problem(grid or flow_grid(params), params)
    out = []
    previous = None
    # descending masses so that each minimiser seeds the next (continuation)
    for m in reversed(ms):
        s = _minimize(prob, m, kind, inits, cfg, previous)
        if s.minimizer is not None:
            previous = s.minimizer.values.real
        out.append(s)
    return out[::-1]


def _crossing(params: ModelParams, samples, kind: str, grid, cfg: FlowConfig, inits,
              rtol: float = 1e-3) -> float:
    """Bisection for the first mass with a negative attained value."""
    prob = _Problem(grid or flow_grid(params), params)
    neg = [s for s in samples if s.status == ATTAINED and s.value < 0]
    if not neg:
        return math.nan
    hi_s = min(neg, key=lambda s: s.m)
    below = [s for s in samples if s.m < hi_s.m]
    lo = max((s.m for s in below), default=0.5 * hi_s.m)
    hi = hi_s.m
    seed = hi_s.minimizer.values.real
    # witness mode: any field with a negative value certifies the side
    wcfg = replace(cfg, stop_below=cfg.neg_tol)
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        s = _minimize(prob, mid, kind, inits, wcfg, seed)
        if s.status == ATTAINED and s.value < 0:
            hi = mid
            seed = s.minimizer.values.real
        else:
            lo = mid
    return 0.5 * (lo + hi)


def I_curve(params: ModelParams, m_grid, grid: RadialGrid | None = None,
            cfg: FlowConfig = DEFAULT_FLOW, inits=DEFAULT_INITS, crossing_rtol: float = 1e-3):
    """Samples of ``I(m)`` and the critical-mass estimate from their sign change."""
    samples = _curve(params, m_grid, "energy", grid, cfg, inits)
    m_c = _crossing(params, samples, "energy", grid, cfg, inits, crossing_rtol)
    return samples, m_c


def tilde_I_curve(params: ModelParams, m_grid, grid: RadialGrid | None = None,
                  cfg: FlowConfig = DEFAULT_FLOW, inits=DEFAULT_INITS, crossing_rtol: float = 1e-3):
    """``tilde I(m)`` directly and through ``I(rho m) = a0^2 b0^(2-d) tilde I(m)``.

    Returns ``(direct, via_identity, tilde_m_c_estimate)``; the identity
    route minimises the energy at mass ``rho m`` on the same grid.
    """
    consts = derive_constants(params)
    d = params.d
    direct = _curve(params, m_grid, "virial", grid, cfg, inits)
    scaled = _curve(params, [consts.rho * m for m in m_grid], "energy", grid, cfg, inits)
    factor = consts.a0 ** 2 * consts.b0 ** (2 - d)
    via = [replace(s, m=m, value=s.value / factor, minimizer=None) for m, s in zip(sorted(m_grid), scaled)]
    tm_c = _crossing(params, direct, "virial", grid, cfg, inits, crossing_rtol)
    return direct, via, tm_c


def e_of_m(params: ModelParams, m: float, cfg: FlowConfig = DEFAULT_FLOW,
           grid: RadialGrid | None = None, inits=("gaussian", "plateau"),
           seed: Field | None = None) -> CurveSample:
    """``e(m)``: least energy on ``{M = m, Phi = 0}`` (``+inf`` if that set is empty).

    Feasible starting fields come from descending ``Phi`` at fixed mass until
    it turns negative; if every start spreads with ``Phi > 0`` the constraint
    set is reported empty. The retracted objective ``E(u^lam(u))`` is then
    minimised, ``lam(u)`` being the larger root of ``Phi(u^lam) = 0``.
    """
    params.require_admissible()
    prob = _Problem(grid or (seed.grid if seed is not None else flow_grid(params)), params)
    starts = []
    if seed is not None:
        starts.append(seed.values.real)
    wcfg = replace(cfg, stop_below=cfg.neg_tol)
    for name, u0 in _initial_fields(prob, m, inits, kind="virial"):
        s = descend(prob, u0, m, "virial", wcfg)
        if s.status == ATTAINED and s.value < -cfg.neg_tol * _kinetic_scale(s):
            starts.append(s.minimizer.values.real)
    best = None
    for u0 in starts:
        s = descend(prob, u0, m, "retracted", cfg)
        if s.status == INFEASIBLE:
            continue
        if best is None or s.value < best.value:
            best = s
    if best is None:
        return CurveSample(m, math.inf, INFEASIBLE, note="no trial with Phi <= 0")
    if best.minimizer is not None:
        # report the minimiser on the constraint surface
        u = best.minimizer.values.real
        K, A0, A1, _ = prob.parts(u)
        lam = lambda_root(K, A0, A1, params)
        best.multiplier = lam
        best.kinetic = lam ** 2 * K
    return best


def threshold_curves(params: ModelParams, m_grid, e_grid=None, grid: RadialGrid | None = None,
                     cfg: FlowConfig = DEFAULT_FLOW) -> ThresholdCurves:
    grid = grid or flow_grid(params)
    I_s, m_c = I_curve(params, m_grid, grid, cfg)
    direct, via, tm_c = tilde_I_curve(params, m_grid, grid, cfg)
    e_s = [e_of_m(params, m, cfg, grid) for m in (e_grid if e_grid is not None else m_grid)]
    return ThresholdCurves(I_s, direct, e_s, m_c, tm_c, via)


# -- random trial sampling -----------------------------------------------------------------

@dataclass
class _TrialParts:
    K: np.ndarray
    A0: np.ndarray
    A1: np.ndarray
    M: np.ndarray


def _random_shapes(params: ModelParams, n: int, rng: np.random.Generator,
                   grid: RadialGrid) -> _TrialParts:
    """Discrete K, A0, A1, M of random radial superpositions on ``grid``."""
    prob = _Problem(grid, params)
    r = grid.nodes
    Ks, A0s, A1s, Ms = (np.empty(n) for _ in range(4))
    for i in range(n):
        u = np.zeros_like(r)
        for _ in range(rng.integers(1, 5)):
            width = 10 ** rng.uniform(-0.3, 0.7)
            amp = rng.uniform(0.1, 1.0)
            if rng.random() < 0.5:
                centre = rng.uniform(0.0, 3.0) * width if rng.random() < 0.5 else 0.0
                u += amp * np.exp(-0.5 * ((r - centre) / width) ** 2)
            else:
                edge = width * rng.uniform(0.05, 0.5)
                u += amp * 0.5 * (1 - np.tanh((r - width) / edge))
        K, A0, A1, _ = prob.parts(u)
        Ks[i], A0s[i], A1s[i], Ms[i] = K, A0, A1, prob.mass(u)
    return _TrialParts(Ks, A0s, A1s, Ms)


def _trial_grid(params: ModelParams) -> RadialGrid:
    return RadialGrid(params.d, 4096, 40.0)


def _scaled_trials(params: ModelParams, m: float, parts: _TrialParts, lam: np.ndarray):
    """Normalise each shape to mass ``m`` then dilate by ``lam`` (exact scalings)."""
    d, p0, p1 = params.d, params.p0, params.p1
    a2 = m / parts.M  # amplitude squared
    K = parts.K * a2 * lam ** 2
    A0 = parts.A0 * a2 ** ((p0 + 2) / 2) * lam ** (d * p0 / 2)
    A1 = parts.A1 * a2 ** ((p1 + 2) / 2) * lam ** (d * p1 / 2)
    return K, A0, A1


def _seeded_parts(params: ModelParams, fields) -> _TrialParts | None:
    if not fields:
        return None
    vals = []
    for f in fields:
        prob = _Problem(f.grid, params)
        u = np.abs(f.values)
        K, A0, A1, _ = prob.parts(u)
        vals.append((K, A0, A1, prob.mass(u)))
    arr = np.array(vals)
    return _TrialParts(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


def _trials(params: ModelParams, m: float, n_trials: int, seed, extra=()):
    rng = np.random.default_rng(seed)
    parts = _random_shapes(params, n_trials, rng, _trial_grid(params))
    # overall widths over three decades
    lam = 10 ** rng.uniform(-2.0, 1.0, n_trials)
    K, A0, A1 = _scaled_trials(params, m, parts, lam)
    sp = _seeded_parts(params, list(extra))
    if sp is not None:
        Ks, A0s, A1s = _scaled_trials(params, m, sp, np.ones_like(sp.K))
        K, A0, A1 = np.r_[K, Ks], np.r_[A0, A0s], np.r_[A1, A1s]
    return K, A0, A1


def phi_positivity_sample(params: ModelParams, m: float, n_trials: int = 2000, seed=0,
                          extra_fields=()) -> tuple[float, bool]:
    """Smallest observed ``Phi/K`` over random fields of mass ``m``, and whether all ``Phi > 0``."""
    params.require_admissible()
    K, A0, A1 = _trials(params, m, n_trials, seed, extra_fields)
    ratio = 1 - params.c1 * A1 / K + params.c0 * A0 / K
    return float(ratio.min()), bool(np.all(ratio > 0))


def region_energy_bound(params: ModelParams, m: float, m_c: float, n_trials: int = 2000,
                        seed=0) -> dict:
    """Empirical ``delta(m) = min E/K`` over random fields of mass ``m < m_c``.

    ``floor`` is the dilation bound ``1 - (m/m_c)^(2/d)``.
    """
    params.require_admissible()
    K, A0, A1 = _trials(params, m, n_trials, seed)
    ratio = 1 - (2.0 / (params.p1 + 2)) * A1 / K + (2.0 / (params.p0 + 2)) * A0 / K
    floor = 1 - (m / m_c) ** (2.0 / params.d)
    return {"delta": float(ratio.min()), "floor": floor, "all_positive": bool(np.all(ratio > 0))}
