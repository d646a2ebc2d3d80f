"""Pure-Python reference for the compiled kernels in ``_core.pyx``.

Return codes of :func:`shoot_integrate`:

0 undershoot (Q crossed below ``-under_frac * s``), 1 overshoot (Q' > 0 while
Q > ``over_frac * s``), 2 linear hand-off (nonlinear terms below
``lin_eps * omega`` while decreasing), 3 reached ``r_max``, 4 step-size
underflow, 5 tail threshold reached (Q < ``tail_frac * s`` while decreasing).

The amplitude is passed as ``shift + offset``. While ``|Q - shift|`` stays
below ``shift/4`` the state carries ``Q - shift`` and the nonlinearity is
evaluated as ``g(shift + y) - g(shift)`` through ``expm1``/``log1p``, so a
shot can start arbitrarily close to the equilibrium ``shift`` (the plateau
of large ground states) without cancellation.
"""
import math

import numpy as np

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40


def _spow(q, p):
    return abs(q) ** p * q


def _gnl(y, c, p0, p1, al0, al1, om):
    if c == 0.0:
        return al0 * _spow(y, p0) + al1 * _spow(y, p1) + om * y
    t = math.log1p(y / c)
    return (al0 * c ** (p0 + 1.0) * math.expm1((p0 + 1.0) * t)
            + al1 * c ** (p1 + 1.0) * math.expm1((p1 + 1.0) * t) + om * y)


def _rhs(r, y, dm1, p0, p1, al0, al1, om, c):
    q, pq = c + y[0], y[1]
    aq = abs(q)
    w = r ** dm1
    return [
        pq,
        _gnl(y[0], c, p0, p1, al0, al1, om) - dm1 * pq / r,
        q * q * w,
        pq * pq * w,
        aq ** (p0 + 2.0) * w,
        aq ** (p1 + 2.0) * w,
    ]


def _axpy(y, h, coeffs, ks):
    return [y[i] + h * sum(c * k[i] for c, k in zip(coeffs, ks)) for i in range(6)]


def shoot_integrate(shift, offset, omega, d, p0, p1, alpha0, alpha1, r0, r_max,
                    rtol, atol, h_max, lin_eps, under_frac, over_frac, tail_frac):
    dm1 = d - 1.0
    c = shift
    s = shift + offset
    if c != 0.0 and abs(offset) > 0.25 * c:
        c = 0.0
    y0 = offset if c != 0.0 else s
    f0 = _gnl(y0, c, p0, p1, alpha0, alpha1, omega)
    y = [
        y0 + f0 * r0 * r0 / (2.0 * d),
        f0 * r0 / d,
        s * s * r0 ** d / d,
        0.0,
        s ** (p0 + 2.0) * r0 ** d / d,
        s ** (p1 + 2.0) * r0 ** d / d,
    ]
    args = (dm1, p0, p1, alpha0, alpha1, omega)
    r = r0
    k1 = _rhs(r, y, *args, c)
    traj = [(r, c + y[0], y[1], k1[1])]
    h = min(h_max, 1e-3)
    code, r_event = -1, -1.0
    while True:
        if r >= r_max:
            code = 3
            break
        if r + h > r_max:
            h = r_max - r
        if h < 1e-14 * max(r, 1.0):
            code = 4
            break
        k2 = _rhs(r + C2 * h, _axpy(y, h, (A21,), (k1,)), *args, c)
        k3 = _rhs(r + C3 * h, _axpy(y, h, (A31, A32), (k1, k2)), *args, c)
        k4 = _rhs(r + C4 * h, _axpy(y, h, (A41, A42, A43), (k1, k2, k3)), *args, c)
        k5 = _rhs(r + C5 * h, _axpy(y, h, (A51, A52, A53, A54), (k1, k2, k3, k4)), *args, c)
        k6 = _rhs(r + h, _axpy(y, h, (A61, A62, A63, A64, A65), (k1, k2, k3, k4, k5)), *args, c)
        yn = _axpy(y, h, (B1, 0.0, B3, B4, B5, B6), (k1, k2, k3, k4, k5, k6))
        k7 = _rhs(r + h, yn, *args, c)
        err = 0.0
        floor_sc = atol if c == 0.0 else 1e-300
        for i in range(2):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sc = floor_sc + rtol * max(abs(y[i]), abs(yn[i]))
            err += (e / sc) ** 2
        err = math.sqrt(err / 2.0)
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        rn = r + h
        qo, qn = c + y[0], c + yn[0]
        traj.append((rn, qn, yn[1], k7[1]))
        if qn < -under_frac * s:
            code = 0
            r_event = r + h * qo / (qo - qn)
        elif yn[1] > 0.0 and qn > over_frac * s:
            code, r_event = 1, rn
        elif (omega > 0.0 and qn > 0.0 and yn[1] < 0.0
              and abs(alpha0) * qn ** p0 + abs(alpha1) * qn ** p1 <= lin_eps * omega):
            code, r_event = 2, rn
        elif qn > 0.0 and yn[1] < 0.0 and qn < tail_frac * s:
            code, r_event = 5, rn
        y, k1, r = yn, k7, rn
        if c != 0.0 and abs(y[0]) > 0.25 * c:
            y = [c + y[0]] + y[1:]
            c = 0.0
            k1 = _rhs(r, y, *args, c)
        if code >= 0:
            break
        fac = 5.0 if err < 1e-10 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h = min(h * fac, h_max)
    return (code, r_event, np.array(traj, dtype=float), np.array(y[2:6]),
            np.array([r, c + y[0], y[1]]))


def nonlinear_phase(u, tau, p0, p1):
    """In place: u <- u exp(-i (|u|^p0 - |u|^p1) tau)."""
    a = np.abs(u)
    u *= np.exp(-1j * (a ** p0 - a ** p1) * tau)
    return u
