"""Reference-cable characterization and fault location from FRF estimates."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from sfwr.errors import FaultSolveError
from sfwr.estimator import FrfEstimate, wrap_angle
from sfwr.line import Reflector, RlgcProfile, propagation, reflection_coefficient

TWO_PI = 2.0 * math.pi

#: Below this reflection magnitude the fitted phase is meaningless and the
#: report is flagged as near-matched.
NEAR_MATCHED_GAMMA = 0.05


@dataclass(frozen=True)
class PropagationTable:
    """Estimated attenuation and phase constants on the burst grid."""

    omega: np.ndarray           # rad/s
    alpha: np.ndarray           # Np/m
    beta: np.ndarray            # rad/m
    reference_length: float     # m

    @property
    def f_hz(self):
        return self.omega / TWO_PI

    def vp(self):
        return self.omega / self.beta

    def index_of(self, omega_sel: float) -> int:
        idx = int(np.argmin(np.abs(self.omega - omega_sel)))
        if abs(self.omega[idx] - omega_sel) > 1e-6 * max(omega_sel, 1.0):
            raise FaultSolveError(f"frequency {omega_sel:g} rad/s is not on the "
                                  "characterization grid")
        return idx

    def write_csv(self, path):
        data = np.column_stack([self.f_hz, self.alpha, self.beta])
        np.savetxt(path, data, fmt="%.17g", delimiter=",",
                   header="f_hz,alpha_np_per_m,beta_rad_per_m", comments="")

    @classmethod
    def read_csv(cls, path, reference_length: float) -> "PropagationTable":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(omega=TWO_PI * data[:, 0], alpha=data[:, 1], beta=data[:, 2],
                   reference_length=reference_length)


@dataclass(frozen=True)
class FaultReport:
    """Estimated reflector position and reflection coefficient."""

    method: str                          # 'generic' | 'constant_gamma'
    position_m: float
    gamma_mag: float | np.ndarray        # scalar in constant-gamma mode
    gamma_phase_rad: float | None = None   # only in constant-gamma mode
    error_bound_rel: float | None = None   # only in generic mode
    flags: tuple = field(default_factory=tuple)

    def to_json(self) -> str:
        gamma = self.gamma_mag
        payload = {
            "method": self.method,
            "position_m": self.position_m,
            "position_error_bound_rel": self.error_bound_rel,
            "gamma_mag": gamma.tolist() if isinstance(gamma, np.ndarray) else gamma,
            "gamma_phase_deg": (None if self.gamma_phase_rad is None
                                else math.degrees(self.gamma_phase_rad)),
            "flags": list(self.flags),
        }
        return json.dumps(payload, indent=2)

    def write_json(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def from_json(cls, text: str) -> "FaultReport":
        payload = json.loads(text)
        gamma = payload["gamma_mag"]
        phase = payload["gamma_phase_deg"]
        return cls(
            method=payload["method"],
            position_m=payload["position_m"],
            gamma_mag=np.asarray(gamma) if isinstance(gamma, list) else gamma,
            gamma_phase_rad=None if phase is None else math.radians(phase),
            error_bound_rel=payload["position_error_bound_rel"],
            flags=tuple(payload["flags"]),
        )


def characterize_reference(estimate: FrfEstimate, length: float,
                           termination: Reflector | None = None,
                           profile: RlgcProfile | None = None) -> PropagationTable:
    """Attenuation and phase constants from a known-length reference run.

    For the open-ended reference, alpha = -ln(H)/(2l) and
    beta = -phase/(2l). A different known termination is divided out first,
    which needs the line profile to evaluate its reflection coefficient.
    """
    if length <= 0.0:
        raise FaultSolveError("reference length must be > 0")
    h = estimate.h_mag.copy()
    phase = estimate.phase.copy()
    if termination is not None and not (termination.kind == "termination"
                                        and termination.is_open):
        if profile is None:
            raise FaultSolveError("non-open termination needs the line profile")
        sec = propagation(profile, estimate.omega)
        g = np.atleast_1d(reflection_coefficient(termination, sec.z0, estimate.omega))
        h = h / np.abs(g)
        phase = phase - np.unwrap(np.angle(g))
    if np.any(h <= 0.0):
        raise FaultSolveError("nonpositive FRF magnitude cannot be characterized")
    alpha = -np.log(h) / (2.0 * length)
    beta = -phase / (2.0 * length)
    return PropagationTable(omega=estimate.omega, alpha=alpha, beta=beta,
                            reference_length=length)


def error_bound(phi_gamma_max: float, vp_max: float, length: float, omega: float) -> float:
    """Bound on the relative position error of the generic location method."""
    if min(phi_gamma_max, vp_max, length, omega) < 0 or length == 0 or omega == 0:
        raise ValueError("arguments must be positive (phi_gamma_max may be 0)")
    return phi_gamma_max * vp_max / (2.0 * length * omega)


def _check_grids(estimate: FrfEstimate, prop: PropagationTable):
    if len(estimate.omega) != len(prop.omega) or not np.allclose(
            estimate.omega, prop.omega, rtol=1e-9):
        raise FaultSolveError("estimate and characterization grids differ")


def locate_generic(estimate: FrfEstimate, prop: PropagationTable,
                   omega_sel: float | None = None,
                   phi_gamma_max: float = TWO_PI) -> FaultReport:
    """Position from the phase at one frequency, no reflector model.

    Uses the delay approximation at omega_sel (default: the top of the
    grid), so the position carries a systematic error bounded by
    phi_gamma_max * vp / (2 l omega). The magnitude of the reflection
    coefficient follows at every frequency; its phase is not identifiable
    here.
    """
    _check_grids(estimate, prop)
    if omega_sel is None:
        omega_sel = float(prop.omega[-1])
    idx = prop.index_of(omega_sel)
    beta_sel = float(prop.beta[idx])
    if beta_sel <= 0.0:
        raise FaultSolveError("phase constant at the selected frequency is not positive")
    position = -float(estimate.phase[idx]) / (2.0 * beta_sel)
    if position <= 0.0:
        raise FaultSolveError(f"estimated position {position:g} m is not positive")
    gamma = estimate.h_mag * np.exp(2.0 * prop.alpha * position)
    bound = error_bound(phi_gamma_max, float(omega_sel / beta_sel), position, omega_sel)
    return FaultReport(method="generic", position_m=position, gamma_mag=gamma,
                       error_bound_rel=bound)


def per_frequency_positions(estimate: FrfEstimate, prop: PropagationTable) -> np.ndarray:
    """Generic position estimate evaluated at every grid frequency."""
    _check_grids(estimate, prop)
    if np.any(prop.beta <= 0.0):
        raise FaultSolveError("phase constants must be positive")
    return -estimate.phase / (2.0 * prop.beta)


def consistent_unwrapped_phase(estimate: FrfEstimate) -> np.ndarray:
    """Re-unwrap the estimated phase across the grid.

    Each record is unwrapped against its own raw delay; this pass removes
    residual 2*pi offsets between neighboring frequencies by requiring the
    increment to match the local delay: |phase[i+1] - phase[i] +
    d_omega * tau_d[i]| < pi after correction. The prediction absorbs the
    reflector phase imperfectly, so the grid must be fine enough that
    d_omega/omega * |phase of Gamma| stays below pi (any sane plan has
    d_omega << omega_0).
    """
    omega = estimate.omega
    phase = estimate.phase.copy()
    for i in range(1, len(phase)):
        tau_prev = -phase[i - 1] / omega[i - 1]
        predicted = phase[i - 1] - (omega[i] - omega[i - 1]) * tau_prev
        jumps = round((phase[i] - predicted) / TWO_PI)
        phase[i] -= TWO_PI * jumps
    return phase


def locate_constant_gamma(estimate: FrfEstimate, prop: PropagationTable) -> FaultReport:
    """Joint least-squares (ln Gamma, phase, position) over all frequencies.

    Valid when the reflection coefficient is frequency-independent: stacking
    ln H = ln Gamma - 2 alpha l and phase_H = phi_Gamma - 2 beta l for every
    grid frequency gives an overdetermined linear system in
    (ln Gamma, phi_Gamma, l).
    """
    _check_grids(estimate, prop)
    n = len(prop.omega)
    if n < 2:
        raise FaultSolveError("need at least two frequencies")
    h = estimate.h_mag
    if np.any(h <= 0.0):
        raise FaultSolveError("nonpositive FRF magnitude")
    phase = consistent_unwrapped_phase(estimate)

    design = np.zeros((2 * n, 3))
    design[:n, 0] = 1.0
    design[:n, 2] = -2.0 * prop.alpha
    design[n:, 1] = 1.0
    design[n:, 2] = -2.0 * prop.beta
    rhs = np.concatenate([np.log(h), phase])

    solution, _, rank, _ = np.linalg.lstsq(design, rhs, rcond=None)
    if rank < 3:
        raise FaultSolveError("singular location system: no spread in alpha/beta")

    gamma = float(np.exp(solution[0]))
    phi_gamma = float(wrap_angle(solution[1]))
    position = float(solution[2])
    flags = ("near_matched",) if gamma < NEAR_MATCHED_GAMMA else ()
    return FaultReport(method="constant_gamma", position_m=position,
                       gamma_mag=gamma, gamma_phase_rad=phi_gamma, flags=flags)
