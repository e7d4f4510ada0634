"""Pure-Python rollout kernel, used when the compiled extension is unavailable.

Operation order matches ``_kernel.pyx`` exactly so both backends produce
identical bits.
"""
from math import log2, sin

ZERO, LINEAR, SIN_MODULATED, OPEN_LOOP = 0, 1, 2, 3


def rollout(a, b, kind, gain, sequence, noises, guard, noise_var,
            m0, m1, p00, p01, p11, x, u, y, F):
    T = len(noises)
    if len(x) < T + 1 or len(u) < T or len(y) < T or len(F) < T:
        raise ValueError("output buffers too short for the horizon")
    if kind == OPEN_LOOP and len(sequence) < T:
        raise ValueError("open-loop sequence shorter than the horizon")
    noises = noises.tolist()
    seq = sequence.tolist() if kind == OPEN_LOOP else ()
    xs = [0.0]
    us = []
    ys = []
    fs = []
    diverged = False
    det_prev = p00 * p11 - p01 * p01
    xt = 0.0
    for t in range(T):
        if kind == LINEAR:
            ut = gain * xt
        elif kind == SIN_MODULATED:
            ut = gain * xt * (1.0 + sin(xt))
        elif kind == OPEN_LOOP:
            ut = seq[t]
        else:
            ut = 0.0
        yt = a * xt + b * ut
        xn = yt + noises[t]
        xs.append(xn)
        us.append(ut)
        ys.append(yt)
        if not abs(xn) <= guard:
            diverged = True
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
        fs.append(f)
        det_prev = det
        xt = xn
    n = len(us)
    x[:n + 1] = xs
    u[:n] = us
    y[:n] = ys
    F[:len(fs)] = fs
    return n, len(fs), diverged, m0, m1, p00, p01, p11
