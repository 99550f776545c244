"""Both kernel backends must implement the same contracts."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import sfwr._kernels as kernels
import sfwr._kernels.fallback as fallback
from sfwr.errors import SineFitError

BACKENDS = [pytest.param(fallback, id="numpy")]
try:
    import sfwr._kernels._fast as fast

    BACKENDS.append(pytest.param(fast, id="cython"))
except ImportError:
    fast = None

TWO_PI = 2.0 * math.pi


def test_selected_backend_is_reported():
    assert kernels.BACKEND in ("numpy", "cython")
    assert callable(kernels.xcorr_peak)
    assert callable(kernels.sine_fit)


@pytest.mark.parametrize("backend", BACKENDS)
def test_xcorr_peak_pure_shift(backend):
    rng = np.random.default_rng(3)
    x = rng.normal(size=200)
    y = np.zeros(1800)
    y[40:240] = x
    lag, value = backend.xcorr_peak(y, x)
    assert lag == 40
    assert value == pytest.approx(float(np.dot(x, x)), rel=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_xcorr_peak_matches_reference(backend):
    rng = np.random.default_rng(11)
    for _ in range(10):
        nx = int(rng.integers(3, 64))
        ny = int(rng.integers(nx, 256))
        x = rng.normal(size=nx)
        y = rng.normal(size=ny)
        reference = np.correlate(y, x, mode="full")[nx - 1:]
        lag, value = backend.xcorr_peak(y, x)
        assert lag == int(np.argmax(reference))
        assert value == pytest.approx(float(reference.max()), rel=1e-10)


@pytest.mark.parametrize("backend", BACKENDS)
def test_sine_fit_exact_model(backend):
    ts = 1e-9
    omega = TWO_PI * 10e6
    n = np.arange(0, 200)
    t = n * ts
    z = 0.8 * np.sin(omega * t) - 0.3 * np.cos(omega * t) + 0.05 + 4e5 * t
    a, b, c, m, resid = backend.sine_fit(z, omega, ts, 0, 200, True)
    assert a == pytest.approx(0.8, abs=1e-11)
    assert b == pytest.approx(-0.3, abs=1e-11)
    assert c == pytest.approx(0.05, abs=1e-10)
    assert m == pytest.approx(4e5, rel=1e-9)
    assert resid <= 1e-10


@pytest.mark.parametrize("backend", BACKENDS)
def test_sine_fit_without_trend(backend):
    ts = 1e-9
    omega = TWO_PI * 10e6
    t = np.arange(0, 200) * ts
    z = 1.5 * np.sin(omega * t + 0.4)
    a, b, c, m, resid = backend.sine_fit(z, omega, ts, 0, 200, False)
    assert c == 0.0 and m == 0.0
    assert math.hypot(a, b) == pytest.approx(1.5, rel=1e-12)
    assert math.atan2(b, a) == pytest.approx(0.4, abs=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_sine_fit_window_offset(backend):
    # indices i0..i1 refer to absolute sample times n*ts, not window-local
    ts = 1e-9
    omega = TWO_PI * 12e6
    t = np.arange(0, 500) * ts
    z = 0.7 * np.sin(omega * t + 1.1)
    a, b, _, _, _ = backend.sine_fit(z, omega, ts, 250, 450, True)
    assert math.atan2(b, a) == pytest.approx(1.1, abs=1e-9)


@pytest.mark.parametrize("backend", BACKENDS)
def test_sine_fit_rejects_degenerate_window(backend):
    ts = 1e-9
    omega = TWO_PI * 1e4  # 5e-4 carrier periods in the window: sin ~ t
    z = np.ones(400)
    with pytest.raises(SineFitError):
        backend.sine_fit(z, omega, ts, 0, 50, True)


@pytest.mark.parametrize("backend", BACKENDS)
def test_sine_fit_rejects_tiny_window(backend):
    with pytest.raises(SineFitError):
        backend.sine_fit(np.ones(10), TWO_PI * 1e7, 1e-9, 0, 3, True)


@pytest.mark.skipif(fast is None, reason="compiled backend not built")
def test_backends_agree():
    rng = np.random.default_rng(5)
    ts = 1e-9
    omega = TWO_PI * 17e6
    t = np.arange(0, 300) * ts
    z = 0.6 * np.sin(omega * t + 0.9) + 0.02 + 3e4 * t + 1e-6 * rng.normal(size=300)
    got_np = fallback.sine_fit(z, omega, ts, 30, 280, True)
    got_cy = fast.sine_fit(z, omega, ts, 30, 280, True)
    assert got_np == pytest.approx(got_cy, rel=1e-9, abs=1e-12)

    y = rng.normal(size=900)
    x = rng.normal(size=120)
    assert fallback.xcorr_peak(y, x)[0] == fast.xcorr_peak(y, x)[0]


@settings(max_examples=40, deadline=None)
@given(amp=st.floats(0.05, 10.0), phase=st.floats(-3.1, 3.1),
       offset=st.floats(-2.0, 2.0), slope=st.floats(-1e6, 1e6))
def test_sine_fit_recovers_random_models(amp, phase, offset, slope):
    ts = 1e-9
    omega = TWO_PI * 10e6
    t = np.arange(0, 300) * ts
    z = amp * np.sin(omega * t + phase) + offset + slope * t
    a, b, c, m, _ = kernels.sine_fit(z, omega, ts, 0, 300, True)
    assert math.hypot(a, b) == pytest.approx(amp, rel=1e-9)
    assert math.atan2(b, a) == pytest.approx(phase, abs=1e-8)
