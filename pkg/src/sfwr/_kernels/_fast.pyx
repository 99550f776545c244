# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-burst kernels: correlation lag search and sine fitting.

Contracts match ``sfwr._kernels.fallback``. The correlation runs the direct
O(n_y * n_x) lag scan and the sine fit accumulates 4x4 normal equations in
one pass, both without the GIL so burst pairs can be processed in parallel
threads.
"""

from libc.math cimport atan2, cos, fabs, sin, sqrt

import numpy as np

from sfwr.errors import SineFitError

DEF MAX_COLS = 4


def xcorr_peak(y, x):
    """Lag and value of the maximum of sum_k y[lag+k]*x[k] over lag >= 0."""
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t ny = yv.shape[0], nx = xv.shape[0]
    cdef Py_ssize_t lag, k, kmax, tail, best_lag = 0
    cdef double a0, a1, a2, a3, best = 0.0
    cdef bint first = True
    if ny == 0 or nx == 0:
        raise ValueError("empty sequence")
    with nogil:
        for lag in range(ny):
            kmax = nx if nx <= ny - lag else ny - lag
            # Four accumulators break the serial-add dependency chain.
            a0 = a1 = a2 = a3 = 0.0
            tail = kmax - (kmax & 3)
            for k in range(0, tail, 4):
                a0 += yv[lag + k] * xv[k]
                a1 += yv[lag + k + 1] * xv[k + 1]
                a2 += yv[lag + k + 2] * xv[k + 2]
                a3 += yv[lag + k + 3] * xv[k + 3]
            for k in range(tail, kmax):
                a0 += yv[lag + k] * xv[k]
            a0 += a1 + a2 + a3
            if first or a0 > best:
                best = a0
                best_lag = lag
                first = False
    return best_lag, best


cdef int _solve(double[MAX_COLS][MAX_COLS] g, double[MAX_COLS] b,
                double[MAX_COLS] out, Py_ssize_t n) noexcept nogil:
    """Gaussian elimination with partial pivoting; 1 on near-singularity."""
    cdef Py_ssize_t i, j, k, piv
    cdef double big, tmp, factor, scale = 0.0
    for i in range(n):
        if fabs(g[i][i]) > scale:
            scale = fabs(g[i][i])
    if scale == 0.0:
        return 1
    for i in range(n):
        piv = i
        big = fabs(g[i][i])
        for j in range(i + 1, n):
            if fabs(g[j][i]) > big:
                big = fabs(g[j][i])
                piv = j
        if big <= 1e-13 * scale:
            return 1
        if piv != i:
            for k in range(n):
                tmp = g[i][k]; g[i][k] = g[piv][k]; g[piv][k] = tmp
            tmp = b[i]; b[i] = b[piv]; b[piv] = tmp
        for j in range(i + 1, n):
            factor = g[j][i] / g[i][i]
            for k in range(i, n):
                g[j][k] -= factor * g[i][k]
            b[j] -= factor * b[i]
    for i in range(n - 1, -1, -1):
        tmp = b[i]
        for k in range(i + 1, n):
            tmp -= g[i][k] * out[k]
        out[i] = tmp / g[i][i]
    return 0


def sine_fit(z, double omega, double ts, Py_ssize_t i0, Py_ssize_t i1, bint with_trend):
    """Least-squares a*sin(omega t) + b*cos(omega t) [+ c + m*t] on z[i0:i1].

    Same contract as the numpy fallback: times are t_n = n*ts with n the
    global index into z; returns (a, b, c, m, resid_rms).
    """
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t ncols = 4 if with_trend else 2
    cdef Py_ssize_t nwin = i1 - i0
    if nwin < ncols:
        raise SineFitError(f"window of {nwin} samples cannot support {ncols} regressors")
    if i0 < 0 or i1 > zv.shape[0]:
        raise ValueError("window out of range")

    cdef double t_mid = 0.5 * (i0 + i1 - 1) * ts
    cdef double half = 0.5 * (i1 - 1 - i0) * ts
    if half < ts:
        half = ts

    cdef double[MAX_COLS][MAX_COLS] g
    cdef double[MAX_COLS] rhs
    cdef double[MAX_COLS] coef
    cdef double[MAX_COLS] reg
    cdef Py_ssize_t n, j, k
    cdef double t, value, model, acc
    cdef int status

    for j in range(MAX_COLS):
        rhs[j] = 0.0
        coef[j] = 0.0
        for k in range(MAX_COLS):
            g[j][k] = 0.0

    with nogil:
        for n in range(i0, i1):
            t = n * ts
            reg[0] = sin(omega * t)
            reg[1] = cos(omega * t)
            if with_trend:
                reg[2] = 1.0
                reg[3] = (t - t_mid) / half
            value = zv[n]
            for j in range(ncols):
                rhs[j] += reg[j] * value
                for k in range(j, ncols):
                    g[j][k] += reg[j] * reg[k]
        for j in range(ncols):
            for k in range(j):
                g[j][k] = g[k][j]
        status = _solve(g, rhs, coef, ncols)
        acc = 0.0
        if status == 0:
            for n in range(i0, i1):
                t = n * ts
                model = coef[0] * sin(omega * t) + coef[1] * cos(omega * t)
                if with_trend:
                    model += coef[2] + coef[3] * (t - t_mid) / half
                acc += (zv[n] - model) ** 2
    if status != 0:
        raise SineFitError("ill-conditioned sine fit (window shorter than one period?)")

    cdef double resid_rms = sqrt(acc / nwin)
    cdef double offset = 0.0, slope = 0.0
    if with_trend:
        slope = coef[3] / half
        offset = coef[2] - slope * t_mid
    return coef[0], coef[1], offset, slope, resid_rms
