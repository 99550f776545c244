"""Lossy coaxial transmission line model.

Per-unit-length RLGC parameters of a skin-effect coax, secondary parameters
(propagation function and characteristic impedance), reflection coefficients
of terminations and point faults, and the exact reflection-channel frequency
response used as ground truth by the estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy.optimize import least_squares

from sfwr.errors import SingularReflectorError

MU_0 = 4e-7 * math.pi           # H/m
EPS_0 = 8.8541878128e-12        # F/m

ImpedanceLike = Union[complex, float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class RlgcProfile:
    """Geometry and material data of a coaxial line.

    Radii in meters (conductor outer radius a, shield inner radius b),
    conductivity in S/m, DC resistance in ohm/m.
    """

    conductor_inner_radius: float
    shield_inner_radius: float
    relative_permittivity: float
    conductor_conductivity: float
    loss_tangent: float
    dc_resistance_per_m: float = 0.0

    def __post_init__(self):
        a = self.conductor_inner_radius
        b = self.shield_inner_radius
        if not (b > a > 0.0):
            raise ValueError(f"need shield radius > conductor radius > 0, got a={a}, b={b}")
        if self.relative_permittivity < 1.0:
            raise ValueError("relative permittivity must be >= 1")
        if self.conductor_conductivity <= 0.0:
            raise ValueError("conductor conductivity must be > 0")
        if self.loss_tangent < 0.0:
            raise ValueError("loss tangent must be >= 0")
        if self.dc_resistance_per_m < 0.0:
            raise ValueError("dc resistance must be >= 0")

    @property
    def radius_ratio_log(self) -> float:
        return math.log(self.shield_inner_radius / self.conductor_inner_radius)


@dataclass(frozen=True)
class SecondaryParams:
    """Secondary line parameters at one or more angular frequencies."""

    frequency: np.ndarray       # rad/s
    gamma: np.ndarray           # 1/m, alpha + j*beta
    z0: np.ndarray              # ohm, complex

    @property
    def alpha(self):
        return np.real(self.gamma)

    @property
    def beta(self):
        return np.imag(self.gamma)

    @property
    def vp(self):
        return self.frequency / self.beta


def primary_params(profile: RlgcProfile, omega):
    """Per-unit-length R, L, G, C at angular frequency ``omega`` (rad/s).

    Skin effect enters through the (1+j) surface impedance of both
    conductors; the resulting R is blended with the DC value as
    sqrt(R_dc^2 + R_hf^2) so it stays finite at low frequency, and the
    matching internal inductance R_hf/omega adds to the external L.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0.0):
        raise ValueError("omega must be > 0")
    a = profile.conductor_inner_radius
    b = profile.shield_inner_radius
    log_ratio = profile.radius_ratio_log
    sigma = profile.conductor_conductivity

    c_per_m = 2.0 * math.pi * EPS_0 * profile.relative_permittivity / log_ratio
    l_ext = MU_0 / (2.0 * math.pi) * log_ratio

    skin_depth = np.sqrt(2.0 / (w * MU_0 * sigma))
    r_hf = (1.0 / (sigma * skin_depth)) * (1.0 / (2.0 * math.pi * a) + 1.0 / (2.0 * math.pi * b))

    r = np.sqrt(profile.dc_resistance_per_m ** 2 + r_hf ** 2)
    l = l_ext + r_hf / w
    g = w * c_per_m * profile.loss_tangent
    c = np.broadcast_to(c_per_m, w.shape).copy() if w.ndim else c_per_m
    if w.ndim == 0:
        return float(r), float(l), float(g), float(c_per_m)
    return r, l, g, c


def secondary_from_rlgc(r, l, g, c, omega):
    """gamma and Z0 from per-unit-length parameters (principal branches)."""
    w = np.asarray(omega, dtype=float)
    series = r + 1j * w * l
    shunt = g + 1j * w * c
    gamma = np.sqrt(series * shunt)
    z0 = np.sqrt(series / shunt)
    return gamma, z0


def propagation(profile: RlgcProfile, omega) -> SecondaryParams:
    """Secondary parameters of the line; ``omega`` may be scalar or array."""
    w = np.asarray(omega, dtype=float)
    r, l, g, c = primary_params(profile, w)
    gamma, z0 = secondary_from_rlgc(r, l, g, c, w)
    return SecondaryParams(frequency=w, gamma=gamma, z0=z0)


# --------------------------------------------------------------------------
# Reflectors

_OPEN = "open"


@dataclass(frozen=True)
class Reflector:
    """A termination or point fault characterized by its impedance.

    ``impedance`` is either a constant (ohm), the string ``"open"`` for an
    infinite impedance, or a callable mapping omega (rad/s) to complex ohm.
    """

    kind: str                   # 'termination' | 'series_fault' | 'shunt_fault'
    impedance: ImpedanceLike

    _KINDS = ("termination", "series_fault", "shunt_fault")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown reflector kind {self.kind!r}")

    @classmethod
    def open_termination(cls) -> "Reflector":
        return cls("termination", _OPEN)

    @classmethod
    def short_termination(cls) -> "Reflector":
        return cls("termination", 0.0)

    @classmethod
    def termination(cls, impedance: ImpedanceLike) -> "Reflector":
        return cls("termination", impedance)

    @classmethod
    def series_fault(cls, impedance: ImpedanceLike) -> "Reflector":
        return cls("series_fault", impedance)

    @classmethod
    def shunt_fault(cls, impedance: ImpedanceLike) -> "Reflector":
        return cls("shunt_fault", impedance)

    @classmethod
    def series_capacitance(cls, farad: float) -> "Reflector":
        """Series capacitive fault, Z(omega) = 1/(j omega C)."""
        if farad <= 0.0:
            raise ValueError("capacitance must be > 0")
        return cls("series_fault", lambda w: 1.0 / (1j * np.asarray(w) * farad))

    @property
    def is_open(self) -> bool:
        return isinstance(self.impedance, str) and self.impedance == _OPEN

    def impedance_at(self, omega):
        if self.is_open:
            return np.broadcast_to(np.inf + 0j, np.shape(omega))
        if callable(self.impedance):
            return np.asarray(self.impedance(omega), dtype=complex)
        return np.broadcast_to(complex(self.impedance), np.shape(omega))


def reflection_coefficient(reflector: Reflector, z0, omega):
    """Complex reflection coefficient of a reflector against Z0(omega).

    Termination: (Z_L - Z0)/(Z_L + Z0); series fault: Z_S/(Z_S + 2 Z0);
    shunt fault: -Z0/(Z0 + 2 Z_P). Open/short terminations and the healthy
    limits (Z_S -> 0, Z_P -> inf) come out exact.
    """
    z0 = np.asarray(z0, dtype=complex)
    kind = reflector.kind
    if reflector.is_open:
        if kind == "termination":
            return np.broadcast_to(1.0 + 0j, z0.shape).copy() if z0.ndim else 1.0 + 0j
        if kind == "shunt_fault":
            return np.zeros(z0.shape, complex) if z0.ndim else 0.0 + 0j
        raise SingularReflectorError("open series fault blocks the line entirely")

    z = np.asarray(reflector.impedance_at(omega), dtype=complex)
    infinite = ~np.isfinite(z)
    if np.any(infinite):
        # Infinite impedances behave like the named special cases.
        if kind == "series_fault":
            raise SingularReflectorError("open series fault blocks the line entirely")
        limit = 1.0 if kind == "termination" else 0.0
        if np.all(infinite):
            out = np.broadcast_to(limit + 0j, np.broadcast(z, z0).shape)
            return out.copy() if out.ndim else complex(limit)
        z = np.where(infinite, 0.0, z)
    else:
        infinite = None

    if kind == "termination":
        den = z + z0
        num = z - z0
    elif kind == "series_fault":
        den = z + 2.0 * z0
        num = z
    else:  # shunt_fault
        den = z0 + 2.0 * z
        num = -z0
    if np.any(den == 0):
        raise SingularReflectorError(f"singular {kind}: impedance cancels the line impedance")
    out = num / den
    if infinite is not None:
        out = np.where(infinite, 1.0 if kind == "termination" else 0.0, out)
    return out if np.ndim(out) else complex(out)


# --------------------------------------------------------------------------
# Ground-truth reflection channel

@dataclass(frozen=True)
class FrfSamples:
    """Exact reflection-channel response on a frequency grid."""

    omega: np.ndarray             # rad/s, strictly increasing
    h: np.ndarray                 # complex H(omega)
    phase_unwrapped: np.ndarray   # rad, physical (continuous) phase
    alpha: np.ndarray             # Np/m
    beta: np.ndarray              # rad/m

    @property
    def h_mag(self):
        return np.abs(self.h)

    @property
    def f_hz(self):
        return self.omega / (2.0 * math.pi)


def transfer_samples(alpha, beta, gamma_refl, length):
    """H = Gamma * exp(-2*length*(alpha + j*beta)) with unwrapped phase.

    The unwrapped phase is the physical one: the continuous angle of the
    reflection coefficient (principal at the first grid point) minus
    2*length*beta, so phase(omega_0) ~ -omega_0 * tau_d.
    """
    alpha = np.asarray(alpha, float)
    beta = np.asarray(beta, float)
    g = np.asarray(gamma_refl, complex)
    h = g * np.exp(-2.0 * length * (alpha + 1j * beta))
    phase_gamma = np.unwrap(np.angle(g)) if g.ndim else np.angle(g)
    phase = phase_gamma - 2.0 * length * beta
    return h, phase


def frf(profile: RlgcProfile, reflector: Reflector, length: float, omega_grid) -> FrfSamples:
    """Ground-truth FRF of the reflection channel over a frequency grid."""
    w = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    if length <= 0.0:
        raise ValueError("length must be > 0")
    if w.size > 1 and np.any(np.diff(w) <= 0.0):
        raise ValueError("frequency grid must be strictly increasing")
    sec = propagation(profile, w)
    g = reflection_coefficient(reflector, sec.z0, w)
    h, phase = transfer_samples(sec.alpha, sec.beta, g, length)
    return FrfSamples(omega=w, h=h, phase_unwrapped=phase, alpha=sec.alpha, beta=sec.beta)


def frf_response(profile: RlgcProfile, reflector: Reflector, length: float):
    """Callable f_hz -> complex H, for driving the channel simulator."""

    def response(f_hz):
        w = 2.0 * math.pi * np.asarray(f_hz, dtype=float)
        sec = propagation(profile, w)
        g = reflection_coefficient(reflector, sec.z0, w)
        return g * np.exp(-2.0 * length * sec.gamma)

    return response


def round_trip_delay(profile: RlgcProfile, length: float, omega_ref: float) -> float:
    """Round-trip propagation time 2*l/vp at a reference frequency."""
    sec = propagation(profile, omega_ref)
    return 2.0 * length / float(sec.vp)


# --------------------------------------------------------------------------
# Default profile and calibration

#: Starting point for the default line: RG58-like geometry, solid-PE
#: dielectric, copper-scale conductivity.
BASE_PROFILE = RlgcProfile(
    conductor_inner_radius=0.40e-3,
    shield_inner_radius=1.47e-3,
    relative_permittivity=2.25,
    conductor_conductivity=5.8e7,
    loss_tangent=2.0e-4,
    dc_resistance_per_m=0.048,
)

#: Calibration anchor for the default profile at 1 MHz.
CAL_FREQ_HZ = 1.0e6
CAL_Z0_MAG = 49.5


def calibrate_profile(base: RlgcProfile = BASE_PROFILE,
                      f_ref_hz: float = CAL_FREQ_HZ,
                      z0_mag: float = CAL_Z0_MAG) -> RlgcProfile:
    """Tune the shield radius so |Z0| at f_ref hits the anchor.

    Conductivity stays at the base (copper) value: raising the loss enough
    to push the 1 MHz impedance phase much beyond -0.05 rad would make the
    line several times lossier than a real RG58 in the 10-60 MHz band and
    the burst switching transients would dominate every estimate.
    """
    w_ref = 2.0 * math.pi * f_ref_hz

    def residual(x):
        prof = RlgcProfile(
            conductor_inner_radius=base.conductor_inner_radius,
            shield_inner_radius=float(np.exp(x[0])),
            relative_permittivity=base.relative_permittivity,
            conductor_conductivity=base.conductor_conductivity,
            loss_tangent=base.loss_tangent,
            dc_resistance_per_m=base.dc_resistance_per_m,
        )
        sec = propagation(prof, w_ref)
        return [abs(complex(sec.z0)) - z0_mag]

    x0 = np.log([base.shield_inner_radius])
    sol = least_squares(residual, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return RlgcProfile(
        conductor_inner_radius=base.conductor_inner_radius,
        shield_inner_radius=float(np.exp(sol.x[0])),
        relative_permittivity=base.relative_permittivity,
        conductor_conductivity=base.conductor_conductivity,
        loss_tangent=base.loss_tangent,
        dc_resistance_per_m=base.dc_resistance_per_m,
    )


@lru_cache(maxsize=1)
def default_profile() -> RlgcProfile:
    """The calibrated RG58-like profile used throughout the experiments."""
    return calibrate_profile()


# --------------------------------------------------------------------------
# Serialization

_PROFILE_FIELDS = (
    "conductor_inner_radius",
    "shield_inner_radius",
    "relative_permittivity",
    "conductor_conductivity",
    "loss_tangent",
    "dc_resistance_per_m",
)


def write_profile(profile: RlgcProfile, path):
    from sfwr.sigio import write_kv

    write_kv(path, {name: getattr(profile, name) for name in _PROFILE_FIELDS})


def read_profile(path) -> RlgcProfile:
    from sfwr.sigio import read_kv

    kv = read_kv(path)
    return RlgcProfile(**{name: float(kv[name]) for name in _PROFILE_FIELDS})


def write_frf_csv(samples: FrfSamples, path):
    """CSV columns: f_hz, h_mag, h_phase_rad_unwrapped, alpha_np_per_m, beta_rad_per_m."""
    data = np.column_stack([samples.f_hz, samples.h_mag, samples.phase_unwrapped,
                            samples.alpha, samples.beta])
    np.savetxt(path, data, fmt="%.17g", delimiter=",",
               header="f_hz,h_mag,h_phase_rad_unwrapped,alpha_np_per_m,beta_rad_per_m",
               comments="")
