"""Per-burst numeric kernels with a compiled fast path.

The Cython extension is used when it is built and ``SFWR_PURE_PYTHON`` is
not set; otherwise the numpy fallback provides the same functions. Both
backends implement:

    xcorr_peak(y, x) -> (lag, value)
    sine_fit(z, omega, ts, i0, i1, with_trend) -> (a, b, c, m, resid_rms)
"""

import os

if os.environ.get("SFWR_PURE_PYTHON"):
    from sfwr._kernels.fallback import sine_fit, xcorr_peak

    BACKEND = "numpy"
else:
    try:
        from sfwr._kernels._fast import sine_fit, xcorr_peak

        BACKEND = "cython"
    except ImportError:
        from sfwr._kernels.fallback import sine_fit, xcorr_peak

        BACKEND = "numpy"

__all__ = ["BACKEND", "sine_fit", "xcorr_peak"]
