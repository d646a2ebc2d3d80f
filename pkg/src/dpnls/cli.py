"""Command-line front end: ``dpnls <command> [--config FILE] [--key value ...]``.

Configuration is a flat ``key = value`` file (``#`` starts a comment); any key
can be overridden by the flag ``--key`` (underscores or dashes). Every command
writes its files and a ``manifest.json`` with sha256 checksums into
``output_dir``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 failed
invariant suite.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import platform
import sys
from dataclasses import asdict

import numpy as np

from . import __version__, core
from .fields import FieldError, LineGrid, RadialGrid, write_snapshot
from .model import InadmissibleParams, ModelParams, derive_constants
from .evolve import format_float

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_SUITE = 0, 1, 2, 3

# key -> (type, default, help)
SCHEMA = {
    "d": (int, 3, "spatial dimension"),
    "p0": (float, 4.0, "defocusing (higher) exponent"),
    "p1": (float, 2.0, "focusing (lower) exponent"),
    "seed": (int, 0, "unsigned 64-bit seed for every random stream"),
    "output_dir": (str, "dpnls_out", "directory for results"),
    "jobs": (int, 1, "worker processes (DPNLS_JOBS overrides)"),
    # ground states
    "omega": (str, "", "frequency, or a multiple like 0.9omega_star"),
    "mass_curve": (int, 0, "number of mass-curve samples on (0, omega_*)"),
    "expect_none": (bool, False, "succeed only if no ground state exists"),
    "radial_N": (int, 0, "radial cells (0: automatic)"),
    "radial_R": (float, 0.0, "radial outer radius (0: automatic)"),
    # curves
    "curves_m_min": (float, 0.0, "smallest mass of the I and tilde I grids (0: automatic)"),
    "curves_m_max": (float, 0.0, "largest mass (0: automatic)"),
    "curves_n": (int, 12, "samples of I and tilde I"),
    "e_n": (int, 6, "samples of e(m) on [m_tilde_c, m_c]"),
    "snapshots": (bool, False, "write minimiser / run snapshots"),
    # evolution
    "preset": (str, "dispersive", "soliton | dispersive | focusing"),
    "dt": (float, 1e-2, "time step"),
    "T": (float, 0.0, "horizon (0: preset default)"),
    "observe_every": (int, 10, "steps between observations"),
    "snapshot_every": (int, 0, "steps between snapshots (0: none)"),
    "mass_fraction": (float, 0.5, "dispersive preset: mass as a fraction of m_c"),
    "width": (float, 2.0, "dispersive preset: Gaussian width"),
    "noise": (float, 0.0, "relative amplitude of seeded random perturbations"),
    "line_N": (int, 8192, "line grid points"),
    "line_L": (float, 800.0, "line length"),
    # classification
    "series": (str, "", "classify: time-series CSV"),
    "field": (str, "", "classify: snapshot for region membership"),
    "curves_dir": (str, "", "classify: output directory of a curves run"),
    "eta": (float, 0.0, "region margin"),
    # checks
    "n_random": (int, 100, "random fields in the identity suite"),
}


class InputError(ValueError):
    pass


def _parse_bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise InputError(f"not a boolean: {s!r}")


def _coerce(key: str, raw):
    typ = SCHEMA[key][0]
    try:
        if typ is bool:
            return _parse_bool(raw)
        return typ(raw)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad value for {key}: {raw!r}") from exc


def read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{n}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            k = k.replace("-", "_")
            if k not in SCHEMA:
                raise InputError(f"{path}:{n}: unknown key {k!r}")
            out[k] = _coerce(k, v)
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = {k: v[1] for k, v in SCHEMA.items()}
    if args.config:
        cfg.update(read_config(args.config))
    for k in SCHEMA:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = _coerce(k, v)
    if not 0 <= cfg["seed"] < 2 ** 64:
        raise InputError("seed must be an unsigned 64-bit integer")
    return cfg


def _params(cfg) -> ModelParams:
    return ModelParams(cfg["d"], cfg["p0"], cfg["p1"])


def _sanitize(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, (np.floating, np.integer)):
        return _sanitize(obj.item())
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Output:
    """Single writer for one run directory."""

    def __init__(self, cfg: dict, command: str):
        self.dir = cfg["output_dir"]
        os.makedirs(self.dir, exist_ok=True)
        self.cfg = cfg
        self.command = command
        self.files: list[str] = []
        self.results: dict = {}

    def path(self, name: str) -> str:
        return os.path.join(self.dir, name)

    def csv(self, name: str, header, rows) -> str:
        p = self.path(name)
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([format_float(x) if isinstance(x, float) else x for x in r])
        self.files.append(name)
        return p

    def add(self, name: str) -> None:
        self.files.append(name)

    def manifest(self, params: ModelParams | None, grid=None) -> dict:
        import scipy

        man = {
            "command": self.command,
            "config": {k: v for k, v in sorted(self.cfg.items())},
            "seed": self.cfg["seed"],
            "versions": {
                "dpnls": __version__,
                "backend": core.BACKEND,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "results": self.results,
            "files": {f: _sha256(self.path(f)) for f in sorted(set(self.files))},
        }
        if params is not None:
            man["params"] = {"d": params.d, "p0": params.p0, "p1": params.p1,
                             "admissible": params.admissible}
            if params.admissible and params.p1 < params.p0:
                man["derived"] = derive_constants(params).as_dict()
        if grid is not None:
            man["grid"] = {"kind": grid.kind, **{k: v for k, v in asdict(grid).items()}}
        with open(self.path("manifest.json"), "w") as fh:
            json.dump(_sanitize(man), fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
        return man


# -- commands --------------------------------------------------------------------

def cmd_constants(cfg) -> int:
    params = _params(cfg)
    consts = derive_constants(params)
    out = Output(cfg, "constants")
    out.results = consts.as_dict()
    out.csv("constants.csv", ["name", "value"],
            [(k, v if isinstance(v, str) else float(v)) for k, v in consts.as_dict().items()])
    out.manifest(params)
    print(json.dumps(_sanitize(consts.as_dict()), indent=2))
    return EXIT_OK


def _parse_omega(text: str, params: ModelParams) -> float:
    from .model import omega_star

    t = text.strip()
    if t.endswith("omega_star"):
        head = t[: -len("omega_star")].strip().rstrip("*")
        return (float(head) if head else 1.0) * omega_star(params)
    return float(t)


def cmd_groundstate(cfg) -> int:
    from .groundstate import (NoSolution, critical_mass, default_grid, mass_curve, minimal_mass,
                              solve_ground_state)
    from .model import omega_star
    from .parallel import resolve_jobs

    params = _params(cfg)
    params.require_admissible()
    out = Output(cfg, "groundstate")
    grid = None
    if cfg["omega"]:
        w = _parse_omega(cfg["omega"], params)
        if cfg["radial_N"] and cfg["radial_R"]:
            grid = RadialGrid(params.d, cfg["radial_N"], cfg["radial_R"])
        try:
            gs = solve_ground_state(params, w, grid=grid)
        except NoSolution as exc:
            out.results["ground_state"] = {"omega": w, "status": "no-solution", "reason": str(exc)}
            out.manifest(params)
            print(f"no ground state at omega={w!r}: {exc}")
            return EXIT_OK if cfg["expect_none"] else EXIT_NUMERICAL
        if cfg["expect_none"]:
            out.results["ground_state"] = {"omega": w, "status": "unexpected-solution"}
            out.manifest(params)
            print(f"a ground state exists at omega={w!r}, but none was expected")
            return EXIT_NUMERICAL
        grid = gs.profile.grid
        name = "groundstate.fld"
        write_snapshot(out.path(name), gs.profile)
        out.add(name)
        rep = gs.report.as_dict()
        cols = ["omega", "mass", "shooting_amplitude", "residual", "tail_rate"] + list(rep)
        row = [w, gs.mass, gs.shooting_amplitude, gs.residual, gs.tail_rate] + [
            (math.nan if v is None else float(v)) for v in rep.values()]
        out.csv("groundstate_report.csv", cols, [row])
        out.results["ground_state"] = {"omega": w, "mass": gs.mass, "status": "ok",
                                       "phi_over_K": gs.phi_ratio, "residual": gs.residual}
        print(f"omega={w:.17g} mass={gs.mass:.17g} Phi/K={gs.phi_ratio:.3g}")
    if cfg["mass_curve"]:
        n = cfg["mass_curve"]
        ws = omega_star(params) * np.arange(1, n + 1) / (n + 1)
        rows = mass_curve(params, ws, jobs=resolve_jobs(cfg["jobs"]))
        out.csv("mass_curve.csv", ["omega", "mass", "phi_residual", "status"],
                [(r["omega"], r["mass"], r["phi_residual"], r["status"]) for r in rows])
        mm = minimal_mass(params)
        cm = critical_mass(params, omega_c=mm["omega_c"])
        out.results["minimal_mass"] = {k: mm[k] for k in ("omega_c", "m_c", "tilde_m_c", "unimodal_scan")}
        out.results["critical_mass"] = cm
        print(f"omega_c={mm['omega_c']:.10g} minimal mass={mm['m_c']:.10g} "
              f"critical mass (E=0)={cm['m_c']:.10g} tilde m_c={cm['tilde_m_c']:.10g}")
    if not cfg["omega"] and not cfg["mass_curve"]:
        raise InputError("groundstate needs --omega and/or --mass-curve")
    out.manifest(params, grid)
    return EXIT_OK


def _curve_rows(samples, out: Output, prefix: str, snapshots: bool):
    rows = []
    for i, s in enumerate(samples):
        snap = ""
        if snapshots and s.minimizer is not None:
            snap = f"{prefix}_{i}.fld"
            write_snapshot(out.path(snap), s.minimizer)
            out.add(snap)
        rows.append((float(s.m), float(s.value), s.status, snap))
    return rows


def _e_sample(args):
    from .varflow import e_of_m

    params, m, grid = args
    return e_of_m(params, m, grid=grid)


def cmd_curves(cfg) -> int:
    from .parallel import pmap, resolve_jobs
    from .varflow import I_curve, flow_grid, tilde_I_curve

    params = _params(cfg)
    params.require_admissible()
    consts = derive_constants(params)
    grid = flow_grid(params, cfg["radial_R"] or None,
                     (cfg["radial_R"] / cfg["radial_N"]) if cfg["radial_N"] and cfg["radial_R"] else None)
    m_min, m_max = cfg["curves_m_min"], cfg["curves_m_max"]
    if not (m_min > 0 and m_max > m_min):
        from .groundstate import critical_mass

        guess = critical_mass(params)["m_c"]
        m_min, m_max = 0.25 * guess, 2.5 * guess
    m_grid = np.linspace(m_min, m_max, cfg["curves_n"])
    out = Output(cfg, "curves")
    I_s, m_c = I_curve(params, m_grid, grid)
    direct, via, tm_c = tilde_I_curve(params, m_grid, grid)
    header = ["m", "value", "status", "minimizer_snapshot_path"]
    out.csv("I.csv", header, _curve_rows(I_s, out, "I", cfg["snapshots"]))
    out.csv("tildeI.csv", header, _curve_rows(direct, out, "tildeI", cfg["snapshots"]))
    out.csv("tildeI_identity.csv", header, _curve_rows(via, out, "tildeI_id", False))
    results = {"m_c_estimate": m_c, "tilde_m_c_estimate": tm_c,
               "tilde_m_c_closed_form": consts.tilde_ratio * m_c}
    if math.isfinite(m_c):
        lo = consts.tilde_ratio * m_c
        e_masses = list(np.linspace(lo, m_c, cfg["e_n"] + 2)[1:-1]) + [1.5 * m_c]
        e_s = pmap(_e_sample, [(params, float(m), grid) for m in e_masses], resolve_jobs(cfg["jobs"]))
        out.csv("e.csv", header, _curve_rows(e_s, out, "e", cfg["snapshots"]))
    out.results = results
    out.manifest(params, grid)
    print(json.dumps(_sanitize(results), indent=2))
    return EXIT_OK


def _dispersive_initial(cfg, params: ModelParams):
    from .fields import Field, mass
    from .groundstate import critical_mass

    g = LineGrid(cfg["line_N"], cfg["line_L"])
    m = cfg["mass_fraction"] * critical_mass(params)["m_c"]
    x = g.nodes
    u = np.exp(-0.5 * (x / cfg["width"]) ** 2).astype(complex)
    u *= math.sqrt(m / mass(Field(g, u)))
    return Field(g, u)


def _perturb(f, cfg):
    from .fields import mass

    if cfg["noise"] <= 0:
        return f
    rng = np.random.default_rng(np.random.SeedSequence(cfg["seed"]))
    n = f.grid.N
    a = np.abs(f.values)
    noise = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    g = f.with_values(f.values + cfg["noise"] * a * noise)
    return g.with_values(g.values * math.sqrt(mass(f) / mass(g)))


def cmd_evolve(cfg) -> int:
    from .classify import classify_run
    from .evolve import EvolveConfig, propagate
    from .fields import Field

    params = _params(cfg)
    preset = cfg["preset"]
    if preset == "soliton":
        from .groundstate import solve_ground_state

        if params.d != 3:
            raise InputError("soliton preset propagates radially and needs d=3")
        w = _parse_omega(cfg["omega"] or "0.1", params)
        R = cfg["radial_R"] or 80.0
        N = cfg["radial_N"] or int(R / 0.1)
        grid = RadialGrid(3, N, R)
        f0 = solve_ground_state(params, w, grid=grid, polish=False).profile
        f0 = Field(grid, f0.values.astype(complex))
        T = cfg["T"] or 20.0 / w
    elif preset == "dispersive":
        if params.d != 1:
            raise InputError("dispersive preset runs on the line and needs d=1")
        f0 = _dispersive_initial(cfg, params)
        T = cfg["T"] or 50.0
    elif preset == "focusing":
        from .groundstate import critical_mass
        from .varflow import flow_grid, minimize_energy_fixed_mass
        from .functionals import scale_lambda

        if params.d != 3:
            raise InputError("focusing preset propagates radially and needs d=3")
        m = 2.0 * critical_mass(params)["m_c"]
        grid = RadialGrid(3, cfg["radial_N"] or 1600, cfg["radial_R"] or 80.0)
        s = minimize_energy_fixed_mass(params, m, grid=flow_grid(params, grid.R, grid.R / grid.N),
                                       kind="virial")
        if s.minimizer is None:
            raise RuntimeError("no tilde-I minimiser to seed the focusing preset")
        f0 = scale_lambda(Field(grid, s.minimizer.values), 1.1)
        # solutions are global; the focusing signature is the initial contraction phase
        T = cfg["T"] or 2.0
    else:
        raise InputError(f"unknown preset {preset!r}")
    f0 = _perturb(f0, cfg)
    ecfg = EvolveConfig(dt=cfg["dt"], T=T, observe_every=cfg["observe_every"],
                        snapshot_every=cfg["snapshot_every"] if cfg["snapshots"] else 0)
    out = Output(cfg, "evolve")
    series = propagate(f0, ecfg, params, snapshot_dir=out.dir, run_id=preset)
    for p in series.snapshots:
        out.add(os.path.basename(p))
    series.to_csv(out.path("series.csv"))
    out.add("series.csv")
    verdict = classify_run(series, params)
    out.results = {"verdict": verdict.as_dict(), "aborted": series.aborted, "blowup": series.blowup}
    out.manifest(params, f0.grid)
    print(f"{preset}: {verdict.label}" + (f" (aborted: {series.aborted})" if series.aborted else ""))
    return EXIT_OK


def cmd_classify(cfg) -> int:
    from .classify import RegionSpec, classify_run, in_region, virial_gap
    from .evolve import TimeSeries
    from .fields import read_snapshot

    params = _params(cfg)
    out = Output(cfg, "classify")
    if not cfg["series"] and not cfg["field"]:
        raise InputError("classify needs --series and/or --field")
    if cfg["series"]:
        series = TimeSeries.from_csv(cfg["series"], d=params.d)
        verdict = classify_run(series, params)
        out.results["verdict"] = verdict.as_dict()
        print(f"run: {verdict.label}")
    if cfg["field"]:
        f = read_snapshot(cfg["field"])
        out.results["virial_gap"] = virial_gap(f, params)
        if cfg["curves_dir"]:
            spec = _spec_from_dir(cfg["curves_dir"], params, cfg["eta"])
            mem = in_region(f, spec, params)
            out.results["membership"] = asdict(mem)
            print(f"member: {mem.member} (mass gap {mem.mass_gap:.6g}, energy gap {mem.energy_gap:.6g})")
        print(f"virial gap: {out.results['virial_gap']:.17g}")
    out.manifest(params)
    return EXIT_OK


def _spec_from_dir(path, params, eta):
    from .classify import RegionSpec

    with open(os.path.join(path, "manifest.json")) as fh:
        man = json.load(fh)
    m_c = float(man["results"]["m_c_estimate"])
    ms, vs = [], []
    with open(os.path.join(path, "e.csv"), newline="") as fh:
        for row in csv.DictReader(fh):
            v = float(row["value"])
            if math.isfinite(v):
                ms.append(float(row["m"]))
                vs.append(v)
    return RegionSpec.build(params, m_c, ms, vs, eta)


def cmd_check(cfg) -> int:
    from .checks import all_pass, identity_suite

    params = _params(cfg)
    out = Output(cfg, "check")
    results = identity_suite(params, seed=cfg["seed"], n_random=cfg["n_random"])
    out.csv("check.csv", ["check", "value", "threshold", "pass"],
            [(r["check"], float(r["value"]), float(r["threshold"]), str(r["pass"]).lower()) for r in results])
    ok = all_pass(results)
    out.results = {"all_pass": ok}
    out.manifest(params)
    for r in results:
        print(f"{'PASS' if r['pass'] else 'FAIL'}  {r['check']}: {r['value']:.3g} (threshold {r['threshold']:.3g})")
    return EXIT_OK if ok else EXIT_SUITE


COMMANDS = {
    "constants": cmd_constants,
    "groundstate": cmd_groundstate,
    "curves": cmd_curves,
    "evolve": cmd_evolve,
    "classify": cmd_classify,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dpnls", description="double-power NLS numerics lab")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value configuration file")
        for key, (typ, _, helptext) in SCHEMA.items():
            flag = "--" + key.replace("_", "-")
            alias = "--" + key if "_" in key else None
            names = [flag] + ([alias] if alias else [])
            if typ is bool:
                sp.add_argument(*names, dest=key, nargs="?", const="true", default=None, help=helptext)
            else:
                sp.add_argument(*names, dest=key, default=None, help=helptext)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except (InputError, InadmissibleParams, FieldError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RuntimeError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
