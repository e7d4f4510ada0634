# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled rollout kernel; mirrors ``idlimits._kernel_py.rollout`` operation for operation."""
from libc.math cimport sin, log2, fabs

cdef enum:
    ZERO = 0
    LINEAR = 1
    SIN_MODULATED = 2
    OPEN_LOOP = 3


def rollout(double a, double b, int kind, double gain, const double[::1] sequence,
            const double[::1] noises, double guard, double noise_var,
            double m0, double m1, double p00, double p01, double p11,
            double[::1] x, double[::1] u, double[::1] y, double[::1] F):
    cdef Py_ssize_t T = noises.shape[0]
    cdef Py_ssize_t t, n = 0, updates = 0
    cdef double xt, ut, yt, xn, g0, g1, s, innov, det_prev, det, f
    cdef bint diverged = 0
    if x.shape[0] < T + 1 or u.shape[0] < T or y.shape[0] < T or F.shape[0] < T:
        raise ValueError("output buffers too short for the horizon")
    if kind == OPEN_LOOP and sequence.shape[0] < T:
        raise ValueError("open-loop sequence shorter than the horizon")
    with nogil:
        det_prev = p00 * p11 - p01 * p01
        x[0] = 0.0
        for t in range(T):
            xt = x[t]
            if kind == LINEAR:
                ut = gain * xt
            elif kind == SIN_MODULATED:
                ut = gain * xt * (1.0 + sin(xt))
            elif kind == OPEN_LOOP:
                ut = sequence[t]
            else:
                ut = 0.0
            yt = a * xt + b * ut
            xn = yt + noises[t]
            x[t + 1] = xn
            u[t] = ut
            y[t] = yt
            n = t + 1
            if not fabs(xn) <= guard:
                diverged = 1
                break
            g0 = p00 * xt + p01 * ut
            g1 = p01 * xt + p11 * ut
            s = noise_var + (xt * g0 + ut * g1)
            innov = xn - (xt * m0 + ut * m1)
            m0 = m0 + g0 * innov / s
            m1 = m1 + g1 * innov / s
            p00 = p00 - g0 * g0 / s
            p01 = p01 - g0 * g1 / s
            p11 = p11 - g1 * g1 / s
            det = p00 * p11 - p01 * p01
            f = 0.5 * (log2(det_prev) - log2(det))
            if f < 0.0:
                f = 0.0
            F[t] = f
            det_prev = det
            updates = t + 1
    return n, updates, bool(diverged), m0, m1, p00, p01, p11
