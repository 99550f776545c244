"""Numpy implementations of the per-burst kernels.

Same contracts as the compiled module in ``_fast.pyx``; selected at import
time by ``sfwr._kernels`` when the extension is unavailable or disabled.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import correlate

from sfwr.errors import SineFitError

# Design matrices with singular-value spread beyond this are rejected: the
# window is a vanishing fraction of a carrier period and the sine regressors
# have collapsed onto the trend.
COND_LIMIT = 1e6


def xcorr_peak(y: np.ndarray, x: np.ndarray) -> tuple[int, float]:
    """Lag and value of the maximum of sum_k y[lag+k]*x[k] over lag >= 0."""
    y = np.ascontiguousarray(y, dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    r = correlate(y, x, mode="full", method="auto")[len(x) - 1:]
    lag = int(np.argmax(r))
    return lag, float(r[lag])


def sine_fit(z: np.ndarray, omega: float, ts: float,
             i0: int, i1: int, with_trend: bool) -> tuple[float, float, float, float, float]:
    """Least-squares a*sin(omega t) + b*cos(omega t) [+ c + m*t] on z[i0:i1].

    Sample times are t_n = n*ts with n the global index into z, so the
    fitted phase refers to the start of z. Returns (a, b, c, m, resid_rms);
    c and m are zero when the trend is disabled.
    """
    n_cols = 4 if with_trend else 2
    if i1 - i0 < n_cols:
        raise SineFitError(f"window of {i1 - i0} samples cannot support {n_cols} regressors")
    t = np.arange(i0, i1) * ts
    zw = np.asarray(z[i0:i1], dtype=float)

    cols = [np.sin(omega * t), np.cos(omega * t)]
    if with_trend:
        # Center and scale the time regressor; the offset/slope are mapped
        # back to absolute time below.
        t_mid = 0.5 * (t[0] + t[-1])
        half = max(0.5 * (t[-1] - t[0]), ts)
        cols.append(np.ones_like(t))
        cols.append((t - t_mid) / half)
    design = np.column_stack(cols)

    coef, _, rank, sv = np.linalg.lstsq(design, zw, rcond=None)
    if rank < n_cols or sv[0] > COND_LIMIT * sv[-1]:
        raise SineFitError("ill-conditioned sine fit (window shorter than one period?)")

    resid = zw - design @ coef
    resid_rms = float(np.sqrt(np.mean(resid ** 2)))

    a, b = float(coef[0]), float(coef[1])
    if with_trend:
        slope = float(coef[3]) / half
        offset = float(coef[2]) - slope * t_mid
    else:
        offset = slope = 0.0
    return a, b, offset, slope, resid_rms
