import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfwr.errors import SingularReflectorError
from sfwr.line import (Reflector, RlgcProfile, default_profile, frf, frf_response,
                       primary_params, propagation, read_profile,
                       reflection_coefficient, secondary_from_rlgc, transfer_samples,
                       write_frf_csv, write_profile)

TWO_PI = 2.0 * math.pi


def test_profile_invariants_enforced():
    with pytest.raises(ValueError):
        RlgcProfile(1.5e-3, 0.4e-3, 2.25, 5.8e7, 2e-4)  # b < a
    with pytest.raises(ValueError):
        RlgcProfile(0.4e-3, 1.5e-3, 0.9, 5.8e7, 2e-4)
    with pytest.raises(ValueError):
        RlgcProfile(0.4e-3, 1.5e-3, 2.25, -1.0, 2e-4)
    with pytest.raises(ValueError):
        RlgcProfile(0.4e-3, 1.5e-3, 2.25, 5.8e7, -1e-4)


def test_calibrated_impedance_anchor(profile):
    sec = propagation(profile, TWO_PI * 1e6)
    z0 = complex(sec.z0)
    assert 49.0 <= abs(z0) <= 50.0
    # See the notes in calibrate_profile: the phase stays at the level of a
    # real low-loss RG58 instead of the several-times-lossier -0.12 rad.
    assert -0.15 < np.angle(z0) < -0.02


def test_zero_loss_tangent_means_zero_conductance(profile):
    lossless_dielectric = RlgcProfile(
        profile.conductor_inner_radius, profile.shield_inner_radius,
        profile.relative_permittivity, profile.conductor_conductivity, 0.0,
        profile.dc_resistance_per_m)
    _, _, g, _ = primary_params(lossless_dielectric, TWO_PI * 5e6)
    assert g == 0.0


def test_resistance_follows_sqrt_frequency(profile):
    f = np.linspace(10e6, 100e6, 64)
    r, _, _, _ = primary_params(profile, TWO_PI * f)
    slope = np.polyfit(np.log(f), np.log(r), 1)[0]
    assert abs(slope - 0.5) <= 0.005


def test_omega_must_be_positive(profile):
    with pytest.raises(ValueError):
        primary_params(profile, 0.0)
    with pytest.raises(ValueError):
        primary_params(profile, -1e6)


def test_lossless_limit_is_pure_imaginary():
    l_per_m, c_per_m = 2.5e-7, 1.0e-10
    omega = TWO_PI * 25e6
    gamma, z0 = secondary_from_rlgc(0.0, l_per_m, 0.0, c_per_m, omega)
    assert gamma.real == 0.0
    assert gamma.imag == pytest.approx(omega * math.sqrt(l_per_m * c_per_m), rel=1e-15)
    assert z0.imag == 0.0


def test_velocity_near_nominal(profile):
    sec = propagation(profile, TWO_PI * 60e6)
    assert float(sec.vp) == pytest.approx(2e8, rel=0.03)
    assert float(sec.vp) == pytest.approx(float(sec.frequency) / float(sec.beta), rel=1e-15)


def test_secondary_params_monotone_over_grid(profile, plan):
    sec = propagation(profile, plan.omegas)
    assert np.all(sec.alpha > 0.0)
    assert np.all(np.diff(sec.alpha) > 0.0)
    assert np.all(np.diff(sec.beta) > 0.0)


def test_reflection_trivial_values():
    w = TWO_PI * 10e6
    assert reflection_coefficient(Reflector.termination(50.0), 50.0 + 0j, w) == 0.0
    assert reflection_coefficient(Reflector.series_fault(100.0), 50.0, w) == pytest.approx(0.5)
    assert reflection_coefficient(Reflector.shunt_fault(25.0), 50.0, w) == pytest.approx(-0.5)
    assert reflection_coefficient(Reflector.open_termination(), 50.0 + 1j, w) == 1.0
    assert reflection_coefficient(Reflector.short_termination(), 50.0 + 1j, w) == -1.0


def test_capacitive_series_fault_coefficient():
    # 1/(1 + j*omega*2*Z0*C) at 60 MHz, 100 pF, nominal 50 ohm
    omega = TWO_PI * 60e6
    x = omega * 2.0 * 50.0 * 100e-12
    expected = 1.0 / (1.0 + 1j * x)
    got = reflection_coefficient(Reflector.series_capacitance(100e-12), 50.0, omega)
    assert got == pytest.approx(expected, rel=1e-12)
    assert abs(got) == pytest.approx(0.2564, abs=2e-4)
    assert np.angle(got) == pytest.approx(-1.311, abs=2e-3)


def test_healthy_limits():
    w = TWO_PI * 10e6
    assert reflection_coefficient(Reflector.series_fault(0.0), 50.0, w) == 0.0
    assert reflection_coefficient(Reflector.shunt_fault(math.inf), 50.0, w) == 0.0


def test_singular_reflectors():
    w = TWO_PI * 10e6
    with pytest.raises(SingularReflectorError):
        reflection_coefficient(Reflector.termination(-50.0), 50.0 + 0j, w)
    with pytest.raises(SingularReflectorError):
        reflection_coefficient(Reflector.series_fault(-100.0), 50.0 + 0j, w)


@settings(max_examples=60, deadline=None)
@given(re_z=st.floats(0.0, 1e4), im_z=st.floats(-1e4, 1e4),
       kind=st.sampled_from(["termination", "series_fault", "shunt_fault"]))
def test_passive_reflectors_bounded(re_z, im_z, kind):
    # Bounded against a real reference impedance; a complex Z0 is known to
    # push |Gamma| of a purely reactive load slightly past 1.
    z = complex(re_z, im_z)
    refl = Reflector(kind, z)
    try:
        g = reflection_coefficient(refl, 50.0 + 0j, TWO_PI * 1e7)
    except SingularReflectorError:
        return
    assert abs(g) <= 1.0 + 1e-9


def test_frf_zero_length_limit(profile):
    w = np.array([TWO_PI * 10e6, TWO_PI * 20e6])
    samples = frf(profile, Reflector.open_termination(), 1e-12, w)
    assert np.allclose(samples.h, 1.0, atol=1e-9)


def test_pure_delay_phase():
    # alpha = 0, beta = omega/vp: round trip of 100 m at 2e8 m/s is 1 us
    w = TWO_PI * np.arange(10e6, 61e6, 1e6)
    beta = w / 2e8
    h, phase = transfer_samples(np.zeros_like(w), beta, np.ones_like(w), 100.0)
    assert np.allclose(phase, -w * 1e-6, rtol=1e-12)
    assert np.allclose(np.abs(h), 1.0, rtol=1e-12)


def test_frf_round_trip_recovers_secondary(profile, plan):
    sec = propagation(profile, plan.omegas)
    samples = frf(profile, Reflector.open_termination(), 50.0, plan.omegas)
    alpha_rec = -np.log(samples.h_mag) / 100.0
    beta_rec = -samples.phase_unwrapped / 100.0
    assert np.allclose(alpha_rec, sec.alpha, rtol=1e-12)
    assert np.allclose(beta_rec, sec.beta, rtol=1e-12)


def test_frf_magnitude_passive_and_decreasing(profile, plan):
    h_50 = frf(profile, Reflector.open_termination(), 50.0, plan.omegas).h_mag
    h_80 = frf(profile, Reflector.open_termination(), 80.0, plan.omegas).h_mag
    assert np.all(h_50 <= 1.0)
    assert np.all(h_80 < h_50)


def test_unwrapped_phase_differs_by_whole_turns(profile, plan):
    samples = frf(profile, Reflector.short_termination(), 62.0, plan.omegas)
    principal = np.angle(samples.h)
    turns = (samples.phase_unwrapped - principal) / TWO_PI
    assert np.allclose(turns, np.round(turns), atol=1e-9)


def test_frf_grid_must_increase(profile):
    with pytest.raises(ValueError):
        frf(profile, Reflector.open_termination(), 50.0, TWO_PI * np.array([2e7, 1e7]))


def test_frf_response_matches_frf(profile, plan):
    samples = frf(profile, Reflector.open_termination(), 50.0, plan.omegas)
    h = frf_response(profile, Reflector.open_termination(), 50.0)(plan.freqs)
    assert np.allclose(h, samples.h, rtol=1e-13)


def test_profile_round_trip(tmp_path, profile):
    path = tmp_path / "profile.cfg"
    write_profile(profile, path)
    again = read_profile(path)
    assert again == profile


def test_frf_csv_export(tmp_path, profile, plan):
    samples = frf(profile, Reflector.open_termination(), 50.0, plan.omegas)
    path = tmp_path / "truth.csv"
    write_frf_csv(samples, path)
    header = path.read_text().splitlines()[0]
    assert header == "f_hz,h_mag,h_phase_rad_unwrapped,alpha_np_per_m,beta_rad_per_m"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.allclose(data[:, 0], plan.freqs)
    assert np.allclose(data[:, 1], samples.h_mag)
    assert np.allclose(data[:, 2], samples.phase_unwrapped)


def test_default_profile_is_cached():
    assert default_profile() is default_profile()
