"""Burst-train synthesis, timing design and segmentation.

The transmitted signal is a train of N sinusoidal bursts of linearly spaced
frequencies: burst i occupies [i*T, i*T + tau) and the rest of its segment
is exactly zero, so the reflected burst can be cut out of the same record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sfwr.errors import InfeasiblePlanError, SegmentationError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SfwrPlan:
    """Burst-train timing and frequency grid.

    tau and period must be whole numbers of samples; the grid is
    f0 + i*delta_f for i in range(n_freqs).
    """

    tau: float                  # burst duration, s
    period: float               # segment period T, s
    f0: float                   # Hz
    delta_f: float              # Hz
    n_freqs: int
    sample_rate: float          # Hz
    amplitude: float = 1.0
    initial_phase: float = 0.0  # rad

    def __post_init__(self):
        if self.n_freqs < 1:
            raise InfeasiblePlanError("need at least one frequency")
        if not self.tau < self.period:
            raise InfeasiblePlanError("burst duration must be shorter than the segment period")
        if self.n_freqs > 1 and self.delta_f <= 0.0:
            raise InfeasiblePlanError("frequency step must be positive")
        if not self.sample_rate > 2.0 * self.f_last:
            raise InfeasiblePlanError(
                f"sample rate {self.sample_rate:g} Hz does not cover the top frequency "
                f"{self.f_last:g} Hz")
        if self.f0 * self.tau < 2.0 * (1.0 - 1e-12):
            raise InfeasiblePlanError(
                f"lowest burst holds {self.f0 * self.tau:.3f} periods, need at least 2")
        for name, value in (("tau", self.tau), ("period", self.period)):
            samples = value * self.sample_rate
            if abs(samples - round(samples)) > 1e-6:
                raise InfeasiblePlanError(f"{name} is not a whole number of samples: {value!r}")

    @property
    def f_last(self) -> float:
        return self.f0 + (self.n_freqs - 1) * self.delta_f

    @property
    def ts(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def n_burst(self) -> int:
        return round(self.tau * self.sample_rate)

    @property
    def n_segment(self) -> int:
        return round(self.period * self.sample_rate)

    @property
    def n_total(self) -> int:
        return self.n_freqs * self.n_segment

    @property
    def freqs(self) -> np.ndarray:
        return self.f0 + self.delta_f * np.arange(self.n_freqs)

    @property
    def omegas(self) -> np.ndarray:
        return TWO_PI * self.freqs

    def omega(self, i: int) -> float:
        return TWO_PI * (self.f0 + self.delta_f * i)


@dataclass(frozen=True)
class BurstPair:
    """Window-local transmitted and reflected sequences of one segment.

    ``x`` spans [i*T, i*T + tau) and ``y`` spans [i*T + tau, (i+1)*T); both
    are re-indexed from n = 0 at their own window start.
    """

    freq_index: int
    omega: float                # rad/s
    x: np.ndarray
    y: np.ndarray
    sample_rate: float


def design_plan(l_min: float, l_max: float, vp_est: float,
                u_r: float = 0.01, phi_gamma_max: float = TWO_PI,
                sample_rate: float = 1.0e9, delta_f: float = 0.5e6,
                n_freqs: int | None = None,
                amplitude: float = 1.0, initial_phase: float = 0.0) -> SfwrPlan:
    """Choose burst timing and frequency grid for a diagnostic range.

    tau = 2*l_min/vp so the nearest reflection starts after the burst ends;
    T = 2*l_max/vp + tau so the farthest one dies out inside the segment
    (both at equality, then sample-aligned). f0 = 2/tau rounded up to a
    whole hertz gives two carrier periods per burst. The top frequency
    satisfies the requested relative location-error bound u_r for a
    reflector phase up to phi_gamma_max. Supply either delta_f or n_freqs
    to fill [f0, f_max].
    """
    if not (0.0 < l_min < l_max):
        raise InfeasiblePlanError("need 0 < l_min < l_max")
    if vp_est <= 0.0 or sample_rate <= 0.0:
        raise InfeasiblePlanError("velocity and sample rate must be positive")
    if not (0.0 < u_r < 1.0):
        raise InfeasiblePlanError("relative error bound must be in (0, 1)")

    n_burst = math.floor(2.0 * l_min / vp_est * sample_rate)
    if n_burst < 1:
        raise InfeasiblePlanError(
            f"l_min={l_min:g} m leaves no whole sample for the burst at fs={sample_rate:g}")
    tau = n_burst / sample_rate
    f0 = float(math.ceil(2.0 / tau))

    f_top_req = phi_gamma_max * vp_est / (4.0 * math.pi * l_max * u_r)
    f_top = max(f0, f_top_req)

    if n_freqs is not None:
        if n_freqs < 1:
            raise InfeasiblePlanError("need at least one frequency")
        n = n_freqs
        step = 0.0 if n == 1 else math.ceil((f_top - f0) / (n - 1))
        if n > 1 and step <= 0.0:
            # The bound is already met at f0; spread the grid at the
            # default spacing rather than collapsing it.
            step = delta_f
    else:
        step = delta_f
        if step <= 0.0:
            raise InfeasiblePlanError("frequency step must be positive")
        n = max(1, 1 + math.ceil((f_top - f0) / step - 1e-9))

    n_segment = math.ceil((2.0 * l_max / vp_est + tau) * sample_rate - 1e-9)
    period = n_segment / sample_rate

    f_last = f0 + (n - 1) * step
    if not sample_rate > 2.0 * f_last:
        raise InfeasiblePlanError(
            f"top frequency {f_last:g} Hz needs a sample rate above {2 * f_last:g} Hz")
    if f0 * tau < 2.0 * (1.0 - 1e-12):
        raise InfeasiblePlanError("burst too short for two periods of f0")

    return SfwrPlan(tau=tau, period=period, f0=f0, delta_f=float(step), n_freqs=n,
                    sample_rate=sample_rate, amplitude=amplitude,
                    initial_phase=initial_phase)


def generate(plan: SfwrPlan) -> np.ndarray:
    """Sampled burst train of length n_freqs * n_segment."""
    out = np.zeros(plan.n_total)
    t_burst = np.arange(plan.n_burst) * plan.ts
    for i in range(plan.n_freqs):
        start = i * plan.n_segment
        out[start:start + plan.n_burst] = plan.amplitude * np.sin(
            plan.omega(i) * t_burst + plan.initial_phase)
    return out


def segment(acquisition: np.ndarray, plan: SfwrPlan) -> list[BurstPair]:
    """Cut an acquisition into window-local (x, y) pairs, one per frequency."""
    acquisition = np.asarray(acquisition, dtype=float)
    if acquisition.ndim != 1:
        raise SegmentationError("acquisition must be one-dimensional")
    if len(acquisition) < plan.n_total:
        raise SegmentationError(
            f"acquisition holds {len(acquisition)} samples, plan needs {plan.n_total}")
    pairs = []
    for i in range(plan.n_freqs):
        start = i * plan.n_segment
        seg = acquisition[start:start + plan.n_segment]
        pairs.append(BurstPair(
            freq_index=i,
            omega=plan.omega(i),
            x=seg[:plan.n_burst].copy(),
            y=seg[plan.n_burst:].copy(),
            sample_rate=plan.sample_rate,
        ))
    return pairs


# --------------------------------------------------------------------------
# Plan serialization

_PLAN_KEYS = {
    "burst_duration_s": "tau",
    "segment_period_s": "period",
    "f0_hz": "f0",
    "delta_f_hz": "delta_f",
    "n_freqs": "n_freqs",
    "sample_rate_hz": "sample_rate",
    "amplitude_v": "amplitude",
    "initial_phase_rad": "initial_phase",
}


def write_plan(plan: SfwrPlan, path):
    from sfwr.sigio import write_kv

    write_kv(path, {key: getattr(plan, attr) for key, attr in _PLAN_KEYS.items()})


def read_plan(path) -> SfwrPlan:
    from sfwr.sigio import read_kv

    kv = read_kv(path)
    kwargs = {attr: float(kv[key]) for key, attr in _PLAN_KEYS.items()}
    kwargs["n_freqs"] = int(round(kwargs["n_freqs"]))
    return SfwrPlan(**kwargs)
