"""Reflection-channel simulation and the first-order transient reference.

The reflected record is produced in the frequency domain: the exact channel
response is known in closed form at any frequency, so multiplying the padded
spectrum of the transmitted record by it captures every transient implicitly,
limited only by the zero-padding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft, rfftfreq

from sfwr.errors import PaddingInsufficientError

WRAP_ENERGY_LIMIT = 1e-9
GROSS_WRAP_LIMIT = 1e-6

#: Fixed ring-down allowance added to every padded transform, samples.
PAD_ALLOWANCE = 65536


def _check_padding(full: np.ndarray, x: np.ndarray):
    """Raise when the padded region says the response wrapped around.

    Probes run on first differences, which keeps the carrier-band content
    that would corrupt the record while suppressing the harmless slow
    diffusive drift a lossy line reflects near DC. Two indicators, both
    relative to the differenced input energy: the quietest stretch of the
    padded region must drop below WRAP_ENERGY_LIMIT (a ring-down that never
    dies inside the pad fails this) and the buffer end must stay below
    GROSS_WRAP_LIMIT (a delayed response crossing it fails that).
    """
    n = len(x)
    ref = np.diff(x)
    input_energy = float(np.dot(ref, ref))
    if input_energy <= 0.0 or len(full) - n < 2:
        return
    pad = np.diff(full[n:])
    chunk = max(64, min(8192, len(pad) // 8))
    energies = [float(np.dot(pad[i:i + chunk], pad[i:i + chunk])) / input_energy
                for i in range(0, max(len(pad) - chunk, 0) + 1, chunk)]
    if min(energies) > WRAP_ENERGY_LIMIT:
        raise PaddingInsufficientError(
            f"channel ring-down floor {min(energies):.3e} of the input energy never "
            f"drops below {WRAP_ENERGY_LIMIT:g} inside the pad; increase group_delay_s")
    end_energy = float(np.dot(pad[-chunk:], pad[-chunk:])) / input_energy
    if end_energy > GROSS_WRAP_LIMIT:
        raise PaddingInsufficientError(
            f"energy {end_energy:.3e} of the input at the end of the padded buffer: "
            "the response wraps around; increase group_delay_s")


@dataclass(frozen=True)
class NoiseSpec:
    """Additive white Gaussian noise, deterministic for a given seed."""

    std_dev: float
    seed: int = 0

    def __post_init__(self):
        if self.std_dev < 0.0:
            raise ValueError("noise std must be >= 0")


@dataclass(frozen=True)
class FirstOrderLp:
    """First-order low-pass with cutoff omega_c = 1/time_constant."""

    time_constant: float

    def __post_init__(self):
        if self.time_constant <= 0.0:
            raise ValueError("time constant must be > 0")

    @property
    def omega_c(self) -> float:
        return 1.0 / self.time_constant

    def gain_phase(self, omega: float) -> tuple[float, float]:
        """Steady-state magnitude and phase at omega."""
        x = omega * self.time_constant
        return 1.0 / math.hypot(1.0, x), -math.atan(x)


def reflect(transmitted: np.ndarray,
            sample_rate: float,
            response: Callable[[np.ndarray], np.ndarray],
            noise: NoiseSpec | None = None,
            group_delay_s: float = 0.0) -> np.ndarray:
    """Pass a record through a channel given by its frequency response.

    ``response`` maps frequency in Hz (> 0) to the complex channel gain.
    The record is zero-padded to at least twice its length plus
    8 * group_delay_s * sample_rate samples before the FFT round trip, and
    the result is truncated back to the input length. The DC bin is taken
    from the first nonzero bin when the response is singular at 0. Raises
    when energy at the end of the padded buffer says the padding was not
    enough to suppress circular wrap-around.
    """
    x = np.asarray(transmitted, dtype=float)
    n = len(x)
    if n == 0:
        raise ValueError("empty input record")
    # The pad meets the 2x-plus-delay minimum and always leaves a fixed
    # allowance for slow ring-down tails, which short records need too.
    margin = int(math.ceil(8.0 * max(group_delay_s, 0.0) * sample_rate))
    m = next_fast_len(2 * n + margin + PAD_ALLOWANCE)

    freqs = rfftfreq(m, d=1.0 / sample_rate)
    h = np.empty(len(freqs), dtype=complex)
    h[1:] = response(freqs[1:])
    try:
        h0 = complex(np.asarray(response(np.array([0.0])))[0])
    except (ValueError, ZeroDivisionError, FloatingPointError):
        h0 = h[1]
    if not np.isfinite(h0):
        h0 = h[1]
    h[0] = h0

    spectrum = rfft(x, m) * h
    full = irfft(spectrum, m)

    _check_padding(full, x)

    out = full[:n]
    if noise is not None and noise.std_dev > 0.0:
        rng = np.random.default_rng(noise.seed)
        out = out + rng.normal(0.0, noise.std_dev, n)
    return out


def first_order_burst_response(lp: FirstOrderLp, omega: float, tau: float,
                               amplitude: float, phase: float,
                               t: np.ndarray) -> np.ndarray:
    """Exact response of the first-order low-pass to one sinusoidal burst.

    The burst is amplitude*sin(omega*t + phase) on [0, tau). The response is
    the sum of the windowed steady-state sinusoid, an exponential switching
    transient from t = 0 and another from t = tau; the transient amplitudes
    follow from the partial-fraction expansion of the filter driven by a
    switched sinusoid, so the total is continuous and starts at exactly 0.
    """
    t = np.asarray(t, dtype=float)
    gain, phi_lp = lp.gain_phase(omega)
    tau_c = lp.time_constant

    steady_amp = gain * amplitude
    out = np.zeros_like(t)

    in_burst = (t >= 0.0) & (t < tau)
    out[in_burst] += steady_amp * np.sin(omega * t[in_burst] + phase + phi_lp)

    on = t >= 0.0
    out[on] += -steady_amp * math.sin(phase + phi_lp) * np.exp(-t[on] / tau_c)

    off = t >= tau
    out[off] += steady_amp * math.sin(omega * tau + phase + phi_lp) * np.exp(
        -(t[off] - tau) / tau_c)
    return out
