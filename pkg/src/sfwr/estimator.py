"""FRF estimation from burst pairs by modified least-squares sine fitting.

Per frequency: a raw delay from the cross-correlation peak pre-aligns the
reflected burst, plain sine fitting recovers the transmitted amplitude and
phase, a sine-plus-trend fit on the second half of the aligned reflected
burst suppresses the switching transients, and the raw delay restores the
physical (unwrapped) phase of the ratio.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from sfwr._kernels import sine_fit as _sine_fit
from sfwr._kernels import xcorr_peak as _xcorr_peak
from sfwr.errors import NoReflectionError, SegmentationError, SineFitError
from sfwr.waveform import BurstPair, SfwrPlan

TWO_PI = 2.0 * math.pi

# Fit window of the aligned reflected burst, as fractions of the burst
# duration; the last 5% is dropped so a raw-delay error of a few samples
# cannot pull post-burst samples into the window.
REFLECTED_WINDOW = (0.5, 0.95)

#: Correlation peaks below 10 * eps * max|x|^2 * sqrt(n_x n_y) are treated
#: as numeric debris of an exactly zero reflection.
_EPS_FLOOR_FACTOR = 10.0 * np.finfo(float).eps


def wrap_angle(angle):
    """Wrap to (-pi, pi]."""
    return angle - TWO_PI * np.ceil((angle - math.pi) / TWO_PI)


@dataclass(frozen=True)
class SineFitResult:
    """Amplitude/phase of the fitted sinusoid plus the discarded trend."""

    amplitude: float        # >= 0
    phase: float            # rad, in (-pi, pi]
    offset: float
    trend_slope: float      # per second
    residual_rms: float


@dataclass(frozen=True)
class FrfRecord:
    """Channel estimate at one burst frequency.

    ``phase`` is the physical unwrapped phase (typically a large negative
    number); ``raw_delay_samples`` counts from the transmitted burst start,
    window offset included, so tau_d_raw = raw_delay_samples / fs.
    """

    freq_index: int
    omega: float                # rad/s
    h_mag: float
    phase: float                # rad, unwrapped
    tau_d: float                # s, refined delay -phase/omega
    raw_delay_samples: int


@dataclass(frozen=True)
class FrfEstimate:
    """Per-frequency FRF records in frequency order."""

    records: tuple
    sample_rate: float

    def __len__(self):
        return len(self.records)

    @property
    def omega(self) -> np.ndarray:
        return np.array([r.omega for r in self.records])

    @property
    def f_hz(self) -> np.ndarray:
        return self.omega / TWO_PI

    @property
    def h_mag(self) -> np.ndarray:
        return np.array([r.h_mag for r in self.records])

    @property
    def phase(self) -> np.ndarray:
        return np.array([r.phase for r in self.records])

    @property
    def tau_d(self) -> np.ndarray:
        return np.array([r.tau_d for r in self.records])

    @property
    def raw_delay_samples(self) -> np.ndarray:
        return np.array([r.raw_delay_samples for r in self.records])

    def write_csv(self, path):
        data = np.column_stack([self.f_hz, self.h_mag, self.phase,
                                self.tau_d, self.raw_delay_samples])
        np.savetxt(path, data, fmt="%.17g", delimiter=",",
                   header="f_hz,h_mag,h_phase_rad_unwrapped,tau_d_s,raw_lag_samples",
                   comments="")

    @classmethod
    def read_csv(cls, path, sample_rate: float) -> "FrfEstimate":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        records = tuple(
            FrfRecord(freq_index=i, omega=TWO_PI * row[0], h_mag=row[1],
                      phase=row[2], tau_d=row[3], raw_delay_samples=int(round(row[4])))
            for i, row in enumerate(data))
        return cls(records=records, sample_rate=sample_rate)


def raw_delay(pair: BurstPair, noise_std: float = 0.0) -> tuple[int, float]:
    """Integer-sample delay of the reflected burst from the correlation peak.

    Returns (lag, tau_d_raw): ``lag`` is the window-local correlation lag,
    ``tau_d_raw`` the physical transmitted-to-reflected delay, which adds
    the known burst duration because the y window starts that much later.
    """
    x_peak = float(np.max(np.abs(pair.x)))
    if x_peak == 0.0:
        raise SineFitError("transmitted window is zero")
    lag, peak = _xcorr_peak(pair.y, pair.x)
    floor = _EPS_FLOOR_FACTOR * x_peak ** 2 * math.sqrt(len(pair.x) * len(pair.y))
    if noise_std > 0.0:
        floor = max(floor, 5.0 * noise_std * float(np.linalg.norm(pair.x)))
    if peak < floor:
        raise NoReflectionError(
            f"correlation peak {peak:.3e} below the no-reflection floor {floor:.3e}")
    n_burst = len(pair.x)
    ts = 1.0 / pair.sample_rate
    return lag, (lag + n_burst) * ts


def envelope_lag(pair: BurstPair) -> int:
    """Cycle-free burst alignment from the energy-envelope correlation.

    The signed correlation peak locks to a carrier cycle and can sit up to
    half a period away from the burst onset; correlating the squared
    sequences removes the carrier sign and peaks at the envelope overlap,
    which is what the fit window placement needs.
    """
    lag, _ = _xcorr_peak(np.square(pair.y), np.square(pair.x))
    return lag


def _window_indices(window, sample_rate, n_samples):
    start, stop = window
    i0 = int(math.ceil(start * sample_rate - 1e-9))
    i1 = int(math.floor(stop * sample_rate + 1e-9))
    if not 0 <= i0 < i1 <= n_samples:
        raise SineFitError(f"window [{start:g}, {stop:g}) s maps to empty or out-of-range "
                           f"samples [{i0}, {i1}) of {n_samples}")
    return i0, i1


def _fit(x, omega, sample_rate, window, with_trend) -> SineFitResult:
    x = np.asarray(x, dtype=float)
    i0, i1 = _window_indices(window, sample_rate, len(x))
    if not np.any(x[i0:i1]):
        raise SineFitError("zero signal in the fit window")
    a, b, offset, slope, resid = _sine_fit(x, omega, 1.0 / sample_rate, i0, i1, with_trend)
    amplitude = math.hypot(a, b)
    if amplitude == 0.0:
        raise SineFitError("fitted amplitude is zero")
    return SineFitResult(amplitude=amplitude, phase=float(wrap_angle(math.atan2(b, a))),
                         offset=offset, trend_slope=slope, residual_rms=resid)


def fit_plain_sine(x, omega: float, sample_rate: float,
                   window: tuple[float, float] | None = None) -> SineFitResult:
    """Two-parameter sine fit (offset and trend forced to zero)."""
    if window is None:
        window = (0.0, len(x) / sample_rate)
    return _fit(x, omega, sample_rate, window, with_trend=False)


def fit_modified_sine(z, omega: float, sample_rate: float,
                      window: tuple[float, float]) -> SineFitResult:
    """Sine plus constant and linear trend on the given time window.

    The trend absorbs the slow exponential transient; window endpoints are
    rounded to samples as [ceil(start*fs), floor(stop*fs)).
    """
    return _fit(z, omega, sample_rate, window, with_trend=True)


def estimate_frf(pair: BurstPair, plan: SfwrPlan, noise_std: float = 0.0) -> FrfRecord:
    """One frequency of the FRF estimate from a burst pair.

    The reflected window is advanced by the raw delay, both bursts are
    fitted, and the fitted reflected phase is restored to the physical one
    by subtracting omega * tau_d_raw, which unwraps it consistently with
    the correlation delay.
    """
    lag, tau_d_raw = raw_delay(pair, noise_std)
    omega = pair.omega
    n_burst = plan.n_burst

    fit_tr = fit_plain_sine(pair.x, omega, plan.sample_rate, (0.0, plan.tau))

    # The fit window tracks the burst envelope, not the cycle-aligned lag:
    # the lag can sit half a carrier period off the onset, which would push
    # a window anchored to it into the onset or past the burst end. The
    # phase below still refers to the lag-advanced time origin.
    shift = envelope_lag(pair) - lag
    ts = 1.0 / plan.sample_rate
    window = (REFLECTED_WINDOW[0] * plan.tau + shift * ts,
              REFLECTED_WINDOW[1] * plan.tau + shift * ts)
    z = pair.y[lag:]
    i1_needed = int(math.floor(window[1] * plan.sample_rate + 1e-9))
    if window[0] < 0.0 or len(z) < i1_needed:
        raise SegmentationError(
            f"aligned reflected burst holds {len(z)} samples, fit window needs "
            f"{i1_needed}; reflector beyond the plan's diagnostic range")
    fit_re = fit_modified_sine(z, omega, plan.sample_rate, window)

    phase_re = fit_re.phase - omega * tau_d_raw
    phase_h = phase_re - fit_tr.phase
    return FrfRecord(
        freq_index=pair.freq_index,
        omega=omega,
        h_mag=fit_re.amplitude / fit_tr.amplitude,
        phase=phase_h,
        tau_d=-phase_h / omega,
        raw_delay_samples=lag + n_burst,
    )


def estimate_all(pairs, plan: SfwrPlan, noise_std: float = 0.0,
                 max_workers: int | None = None) -> FrfEstimate:
    """Estimate every pair; output ordered by frequency index.

    Per-pair work is independent and side-effect-free, so it may run on a
    thread pool (the compiled kernels release the GIL).
    """
    pairs = sorted(pairs, key=lambda p: p.freq_index)
    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            records = list(pool.map(lambda p: estimate_frf(p, plan, noise_std), pairs))
    else:
        records = [estimate_frf(pair, plan, noise_std) for pair in pairs]
    return FrfEstimate(records=tuple(records), sample_rate=plan.sample_rate)
