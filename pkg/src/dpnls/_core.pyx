# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: radial shooting integrator and the nonlinear phase step.

Must stay numerically equivalent to ``_core_py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt, cos, sin, exp, log, fmax, fmin, expm1, log1p

cnp.import_array()

# Dormand-Prince 5(4)
cdef double C2 = 1.0/5, C3 = 3.0/10, C4 = 4.0/5, C5 = 8.0/9
cdef double A21 = 1.0/5
cdef double A31 = 3.0/40, A32 = 9.0/40
cdef double A41 = 44.0/45, A42 = -56.0/15, A43 = 32.0/9
cdef double A51 = 19372.0/6561, A52 = -25360.0/2187, A53 = 64448.0/6561, A54 = -212.0/729
cdef double A61 = 9017.0/3168, A62 = -355.0/33, A63 = 46732.0/5247, A64 = 49.0/176, A65 = -5103.0/18656
cdef double B1 = 35.0/384, B3 = 500.0/1113, B4 = 125.0/192, B5 = -2187.0/6784, B6 = 11.0/84
cdef double E1 = 71.0/57600, E3 = -71.0/16695, E4 = 71.0/1920, E5 = -17253.0/339200, E6 = 22.0/525, E7 = -1.0/40

DEF NS = 6

cdef inline double spow(double q, double p) nogil:
    # |q|^p q
    return pow(fabs(q), p) * q

cdef inline double gnl(double y, double c, double p0, double p1,
                       double al0, double al1, double om) nogil:
    # g(c + y) - g(c) for g(q) = al0|q|^p0 q + al1|q|^p1 q + om q; exact zero at y=0
    cdef double q, t
    if c == 0.0:
        return al0 * spow(y, p0) + al1 * spow(y, p1) + om * y
    t = log1p(y / c)
    return (al0 * pow(c, p0 + 1.0) * expm1((p0 + 1.0) * t)
            + al1 * pow(c, p1 + 1.0) * expm1((p1 + 1.0) * t) + om * y)


cdef inline void rhs(double r, double* y, double* dy, double dm1, double p0, double p1,
                     double al0, double al1, double om, double c) nogil:
    # y[0] holds Q - c
    cdef double q = c + y[0], pq = y[1]
    cdef double aq = fabs(q)
    cdef double w = pow(r, dm1)
    dy[0] = pq
    dy[1] = gnl(y[0], c, p0, p1, al0, al1, om) - dm1 * pq / r
    dy[2] = q * q * w
    dy[3] = pq * pq * w
    dy[4] = pow(aq, p0 + 2.0) * w
    dy[5] = pow(aq, p1 + 2.0) * w


def shoot_integrate(double shift, double offset, double omega, int d, double p0, double p1,
                    double alpha0, double alpha1, double r0, double r_max,
                    double rtol, double atol, double h_max, double lin_eps,
                    double under_frac, double over_frac, double tail_frac):
    """Integrate Q'' + (d-1)/r Q' = a0|Q|^p0 Q + a1|Q|^p1 Q + omega Q from r0.

    ``Q(0) = shift + offset``; see ``_core_py`` for the shifted variable and
    the meaning of the return codes.
    """
    cdef double dm1 = d - 1.0
    cdef double y[NS]
    cdef double yn[NS]
    cdef double yt[NS]
    cdef double k1[NS]
    cdef double k2[NS]
    cdef double k3[NS]
    cdef double k4[NS]
    cdef double k5[NS]
    cdef double k6[NS]
    cdef double k7[NS]
    cdef double r = r0, h, err, sc, e, fac, rn, f0, qo, qn
    cdef int i, code = -1, naccept = 0
    cdef Py_ssize_t cap = 1024, n = 0
    cdef double r_event = -1.0
    cdef double c = shift, s = shift + offset, floor_sc, y0

    if c != 0.0 and fabs(offset) > 0.25 * c:
        c = 0.0
    y0 = offset if c != 0.0 else s
    f0 = gnl(y0, c, p0, p1, alpha0, alpha1, omega)
    y[0] = y0 + f0 * r0 * r0 / (2.0 * d)
    y[1] = f0 * r0 / d
    y[2] = s * s * pow(r0, d) / d
    y[3] = 0.0
    y[4] = pow(s, p0 + 2.0) * pow(r0, d) / d
    y[5] = pow(s, p1 + 2.0) * pow(r0, d) / d

    traj = np.empty((cap, 4), dtype=np.float64)
    cdef double[:, ::1] tv = traj

    rhs(r, y, k1, dm1, p0, p1, alpha0, alpha1, omega, c)
    tv[0, 0] = r; tv[0, 1] = c + y[0]; tv[0, 2] = y[1]; tv[0, 3] = k1[1]
    n = 1
    h = fmin(h_max, 1e-3)

    while True:
        if r >= r_max:
            code = 3
            break
        if r + h > r_max:
            h = r_max - r
        if h < 1e-14 * fmax(r, 1.0):
            code = 4
            break
        for i in range(NS):
            yt[i] = y[i] + h * A21 * k1[i]
        rhs(r + C2 * h, yt, k2, dm1, p0, p1, alpha0, alpha1, omega, c)
        for i in range(NS):
            yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
        rhs(r + C3 * h, yt, k3, dm1, p0, p1, alpha0, alpha1, omega, c)
        for i in range(NS):
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        rhs(r + C4 * h, yt, k4, dm1, p0, p1, alpha0, alpha1, omega, c)
        for i in range(NS):
            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        rhs(r + C5 * h, yt, k5, dm1, p0, p1, alpha0, alpha1, omega, c)
        for i in range(NS):
            yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
        rhs(r + h, yt, k6, dm1, p0, p1, alpha0, alpha1, omega, c)
        for i in range(NS):
            yn[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
        rhs(r + h, yn, k7, dm1, p0, p1, alpha0, alpha1, omega, c)
        err = 0.0
        # on the plateau the offset is the meaningful scale: relative control only
        floor_sc = atol if c == 0.0 else 1e-300
        for i in range(2):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sc = floor_sc + rtol * fmax(fabs(y[i]), fabs(yn[i]))
            err += (e / sc) * (e / sc)
        err = sqrt(err / 2.0)
        if err > 1.0:
            fac = fmax(0.2, 0.9 * pow(err, -0.2))
            h *= fac
            continue
        rn = r + h
        if n >= cap:
            cap *= 2
            traj = np.resize(traj, (cap, 4))
            tv = traj
        qo = c + y[0]
        qn = c + yn[0]
        tv[n, 0] = rn; tv[n, 1] = qn; tv[n, 2] = yn[1]; tv[n, 3] = k7[1]
        n += 1
        naccept += 1
        # events on the accepted state
        if qn < -under_frac * s:
            code = 0
            r_event = r + h * qo / (qo - qn)
        elif yn[1] > 0.0 and qn > over_frac * s:
            code = 1
            r_event = rn
        elif omega > 0.0 and qn > 0.0 and yn[1] < 0.0 and \
                fabs(alpha0) * pow(qn, p0) + fabs(alpha1) * pow(qn, p1) <= lin_eps * omega:
            code = 2
            r_event = rn
        elif qn > 0.0 and yn[1] < 0.0 and qn < tail_frac * s:
            code = 5
            r_event = rn
        for i in range(NS):
            y[i] = yn[i]
            k1[i] = k7[i]
        r = rn
        if c != 0.0 and fabs(y[0]) > 0.25 * c:
            # leave the plateau: back to the plain variable
            y[0] = c + y[0]
            c = 0.0
            rhs(r, y, k1, dm1, p0, p1, alpha0, alpha1, omega, c)
        if code >= 0:
            break
        if err < 1e-10:
            fac = 5.0
        else:
            fac = fmin(5.0, fmax(0.2, 0.9 * pow(err, -0.2)))
        h = fmin(h * fac, h_max)

    moments = np.array([y[2], y[3], y[4], y[5]])
    return code, r_event, traj[:n].copy(), moments, np.array([r, c + y[0], y[1]])


def nonlinear_phase(cnp.ndarray[cnp.complex128_t, ndim=1] u, double tau, double p0, double p1):
    """In place: u <- u exp(-i (|u|^p0 - |u|^p1) tau)."""
    cdef Py_ssize_t j, n = u.shape[0]
    cdef double re, im, la, ph, c, sn, h0 = 0.5 * p0, h1 = 0.5 * p1
    cdef double complex z
    cdef double complex[::1] uv = u
    with nogil:
        for j in range(n):
            z = uv[j]
            re = z.real
            im = z.imag
            la = log(re * re + im * im)  # -inf at zero gives exp(.) = 0
            ph = (exp(h0 * la) - exp(h1 * la)) * tau
            c = cos(ph)
            sn = sin(ph)
            uv[j] = (re * c + im * sn) + 1j * (im * c - re * sn)
    return u
