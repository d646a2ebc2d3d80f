"""Compiled vs pure-Python kernels.

Times the shooting integrator on plain and plateau-offset shots of the
(3, 4, 2) profile equation, then the nonlinear phase step. Backends are
compared through the accumulated moment integrals of each shot.

    python benchmarks/bench_core.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from dpnls import _core_py
from dpnls.groundstate import DEFAULT_SHOOT as C
from dpnls.groundstate import bracket_amplitudes
from dpnls.model import ModelParams

try:
    from dpnls import _core
except ImportError:
    _core = None


def shots(params):
    out = []
    for omega in (0.05, 0.15):
        beta, d_a, d_b, _ = bracket_amplitudes(params, omega)
        out.append((f"omega={omega} plateau offset", beta, -np.sqrt(d_a * d_b), omega))
        out.append((f"omega={omega} plain", 0.0, 0.5 * beta, omega))
    return out


def run_shot(mod, shift, offset, omega, params):
    return mod.shoot_integrate(shift, offset, omega, params.d, params.p0, params.p1, 1.0, -1.0,
                               C.r0, C.r_max, C.rtol, C.atol, C.h_max, C.lin_eps, C.under_frac,
                               C.over_frac, C.tail_frac)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    params = ModelParams(3, 4.0, 2.0)
    if _core is None:
        print("compiled extension not built; only the pure backend is available")
    print(f"{'kernel':38s} {'pure [s]':>10s} {'compiled [s]':>13s} {'speed-up':>9s} {'rel diff':>10s}")
    for name, shift, offset, omega in shots(params):
        tp = min(timeit.repeat(lambda: run_shot(_core_py, shift, offset, omega, params),
                               number=1, repeat=args.repeat))
        if _core is None:
            print(f"shoot {name:32s} {tp:10.4f}")
            continue
        tc = min(timeit.repeat(lambda: run_shot(_core, shift, offset, omega, params),
                               number=1, repeat=args.repeat))
        a = run_shot(_core_py, shift, offset, omega, params)
        b = run_shot(_core, shift, offset, omega, params)
        same_code = a[0] == b[0]
        # adaptive steps may differ in the last digits, so compare integrals, not raw steps
        ma, mb = np.asarray(a[3]), np.asarray(b[3])
        diff = float(np.max(np.abs(ma - mb) / np.abs(ma)))
        flag = "" if same_code else "  (event codes differ)"
        print(f"shoot {name:32s} {tp:10.4f} {tc:13.5f} {tp / tc:9.1f} {diff:10.2e}{flag}")
    u = (np.random.default_rng(0).standard_normal(1 << 16) + 0j).astype(complex)
    for mod, label in ((_core_py, "pure"), (_core, "compiled")):
        if mod is None:
            continue
        t = min(timeit.repeat(lambda: mod.nonlinear_phase(u.copy(), 1e-3, 4.0, 2.0), number=20,
                              repeat=args.repeat)) / 20
        print(f"nonlinear_phase (65536 points) {label:9s} {t * 1e3:8.3f} ms")


if __name__ == "__main__":
    main()
