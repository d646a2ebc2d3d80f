"""Strang-split propagation of ``i u_t + Lap u = |u|^p0 u - |u|^p1 u``.

The nonlinear substep is solved exactly (it only rotates the phase, ``|u|``
is constant along it). The linear substep is diagonal in the Fourier basis on
the periodic line and in the sine basis of ``v = r u`` for radial data in
three dimensions, where ``Lap u = (1/r) (r u)''``. Both bases are unitary, so
every step conserves the discrete mass to roundoff.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import astuple, dataclass, field, fields as dc_fields
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from . import core
from .fields import Field, FieldError, LineGrid, RadialGrid, tail_mass_fraction, write_snapshot
from .functionals import report
from .model import ModelParams


@dataclass(frozen=True)
class EvolveConfig:
    dt: float = 1e-2
    T: float = 10.0
    observe_every: int = 10
    snapshot_every: int = 0
    tail_abort: float = 1e-4  # tail mass / M that invalidates the run
    blowup_factor: float = 1e6

    def __post_init__(self):
        if not self.dt > 0 or not self.T > 0:
            raise ValueError("dt and T must be positive")
        if self.observe_every < 1 or self.snapshot_every < 0:
            raise ValueError("observe_every >= 1 and snapshot_every >= 0 required")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass(frozen=True)
class ObservableRow:
    t: float
    M: float
    E: float
    P: float
    Phi: float
    W: float
    V: float
    peak: float
    tail_mass: float
    # extras used by the classifier
    K: float
    A0: float
    A1: float
    drift: float  # sup | |u(t)| - |u(0)| | / sup |u(0)|


COLUMNS = tuple(f.name for f in dc_fields(ObservableRow))


@dataclass
class TimeSeries:
    rows: list = field(default_factory=list)
    d: int = 1
    dt: float = math.nan
    observe_every: int = 1
    aborted: str | None = None
    blowup: bool = False
    final: Field | None = field(default=None, repr=False)
    snapshots: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = COLUMNS.index(name)
        return np.array([astuple(r)[i] for r in self.rows])

    @property
    def cadence(self) -> float:
        return self.dt * self.observe_every

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for r in self.rows:
                w.writerow([format_float(x) for x in astuple(r)])

    @classmethod
    def from_csv(cls, path, d: int = 1, dt: float = math.nan, observe_every: int = 1) -> "TimeSeries":
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            header = next(rd)
            if tuple(header) != COLUMNS:
                raise ValueError(f"unexpected columns {header}")
            rows = [ObservableRow(*(float(x) for x in line)) for line in rd]
        return cls(rows=rows, d=d, dt=dt, observe_every=observe_every)


def format_float(x: float) -> str:
    """17 significant digits (exact binary64 round trip); ``inf``/``nan`` literal."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


# -- one step ------------------------------------------------------------------

@lru_cache(maxsize=32)
def _linear_multiplier(grid, dt: float) -> np.ndarray:
    if grid.kind == "line":
        k = grid.wavenumbers
        return np.exp(-1j * k * k * dt)
    kk = np.pi * (np.arange(grid.N) + 1) / grid.R
    return np.exp(-1j * kk * kk * dt)


def _check_grid(grid) -> None:
    if isinstance(grid, RadialGrid) and grid.d != 3:
        raise FieldError("radial propagation is exact only for d=3 (v = r u)")


def _linear(u: np.ndarray, grid, dt: float) -> np.ndarray:
    mult = _linear_multiplier(grid, dt)
    if grid.kind == "line":
        return sfft.ifft(mult * sfft.fft(u))
    r = grid.nodes
    c = sfft.dst(r * u, type=2, norm="ortho")
    return sfft.idst(mult * c, type=2, norm="ortho") / r


def step_strang(f: Field, dt: float, params: ModelParams) -> Field:
    """One Strang step: half nonlinear phase, full linear flow, half phase.

    ``dt`` may be negative (the scheme is symmetric, so that is its inverse).
    """
    _check_grid(f.grid)
    u = np.array(f.values, dtype=complex)
    core.nonlinear_phase(u, 0.5 * dt, params.p0, params.p1)
    u = _linear(u, f.grid, dt)
    core.nonlinear_phase(u, 0.5 * dt, params.p0, params.p1)
    return Field(f.grid, u)


# -- runs ----------------------------------------------------------------------

def _method(grid) -> str:
    return "spectral" if grid.kind == "radial" else "default"


def observe(f: Field, t: float, params: ModelParams, ref_abs: np.ndarray | None = None) -> ObservableRow:
    rep = report(f, params, _method(f.grid))
    a = np.abs(f.values)
    peak = float(a.max()) if a.size else 0.0
    drift = 0.0
    if ref_abs is not None and ref_abs.max() > 0:
        drift = float(np.max(np.abs(a - ref_abs)) / ref_abs.max())
    return ObservableRow(
        t=t, M=rep.M, E=rep.E, P=rep.P, Phi=rep.Phi, W=rep.W, V=rep.V, peak=peak,
        tail_mass=tail_mass_fraction(f) * rep.M,
        K=rep.kinetic, A0=rep.A0, A1=rep.A1, drift=drift,
    )


def propagate(f0: Field, cfg: EvolveConfig, params: ModelParams, snapshot_dir=None,
              run_id: str = "0", backward: bool = False) -> TimeSeries:
    """Evolve ``f0`` over ``[0, T]`` and record observables every ``observe_every`` steps.

    The run stops early (partial series, ``aborted`` set) when the tail mass
    exceeds ``tail_abort * M`` or the field stops being finite; a peak above
    ``blowup_factor`` times the initial one raises the blow-up flag and stops.
    """
    _check_grid(f0.grid)
    params.warn_if_inadmissible()
    f0.check_finite()
    dt = -cfg.dt if backward else cfg.dt
    ref = np.abs(f0.values)
    series = TimeSeries(d=f0.grid.d, dt=cfg.dt, observe_every=cfg.observe_every)
    row = observe(f0, 0.0, params, ref)
    series.rows.append(row)
    m0 = row.M
    if m0 > 0 and row.tail_mass > cfg.tail_abort * m0:
        series.aborted = "tail mass at t=0 exceeds the validity threshold"
        series.final = f0
        return series
    peak0 = row.peak
    f = f0
    if cfg.snapshot_every and snapshot_dir is not None:
        _snapshot(series, snapshot_dir, run_id, 0, f)
    for n in range(1, cfg.n_steps + 1):
        f = step_strang(f, dt, params)
        if cfg.snapshot_every and snapshot_dir is not None and n % cfg.snapshot_every == 0:
            _snapshot(series, snapshot_dir, run_id, n, f)
        if n % cfg.observe_every and n != cfg.n_steps:
            continue
        if not np.all(np.isfinite(f.values)):
            series.aborted = f"non-finite field at step {n}"
            break
        row = observe(f, n * dt, params, ref)
        series.rows.append(row)
        if m0 > 0 and row.tail_mass > cfg.tail_abort * m0:
            series.aborted = f"tail mass {row.tail_mass:.3g} exceeds {cfg.tail_abort:g} M at t={row.t:g}"
            break
        if peak0 > 0 and row.peak > cfg.blowup_factor * peak0:
            series.blowup = True
            series.aborted = f"peak grew beyond {cfg.blowup_factor:g} x initial at t={row.t:g}"
            break
    series.final = f
    return series


def _snapshot(series: TimeSeries, directory, run_id: str, index: int, f: Field) -> None:
    path = os.path.join(directory, f"run_{run_id}_t{index}.fld")
    write_snapshot(path, f)
    series.snapshots.append(path)


def virial_check(series: TimeSeries) -> float:
    """``max |dW/dt - 2 Phi| / (1 + max |Phi|)`` with 4th-order central differences."""
    if len(series.rows) < 5:
        raise ValueError("virial check needs at least 5 rows")
    t = series.column("t")
    h = np.diff(t)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("virial check needs a uniform cadence")
    W = series.column("W")
    Phi = series.column("Phi")
    dW = (W[:-4] - 8 * W[1:-3] + 8 * W[3:-1] - W[4:]) / (12 * h[0])
    res = np.abs(dW - 2 * Phi[2:-2])
    return float(res.max() / (1 + np.abs(Phi).max()))


# -- reference solutions -------------------------------------------------------

def free_gaussian(grid: LineGrid, t: float, amp: float = 1.0) -> np.ndarray:
    """Free evolution of ``amp exp(-x^2/2)`` on the line."""
    s = 1 + 2j * t
    x = grid.nodes
    return amp * s ** -0.5 * np.exp(-x * x / (2 * s))


def plane_wave(grid: LineGrid, t: float, a: float, n: int, params: ModelParams) -> np.ndarray:
    """Exact plane wave ``a exp(i(kx - (k^2 + a^p0 - a^p1) t))`` with ``k = 2 pi n / L``."""
    k = 2 * math.pi * n / grid.L
    x = grid.nodes
    return a * np.exp(1j * (k * x - (k * k + a ** params.p0 - a ** params.p1) * t))


def translate(f: Field, shift: float) -> Field:
    """``u(x - shift)`` on the periodic line by a Fourier phase."""
    g = f.grid
    if g.kind != "line":
        raise FieldError("translation is defined on line grids")
    return Field(g, sfft.ifft(np.exp(-1j * g.wavenumbers * shift) * sfft.fft(f.values)))
