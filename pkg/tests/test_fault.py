import json
import math

import numpy as np
import pytest

from sfwr.errors import FaultSolveError
from sfwr.estimator import FrfEstimate, FrfRecord, wrap_angle
from sfwr.fault import (FaultReport, PropagationTable, characterize_reference,
                        consistent_unwrapped_phase, error_bound, locate_constant_gamma,
                        locate_generic, per_frequency_positions)
from sfwr.line import Reflector, propagation, reflection_coefficient
from sfwr.repro import run_scenario

TWO_PI = 2.0 * math.pi


def _estimate_from(omega, h_mag, phase, fs=1e9):
    records = tuple(
        FrfRecord(freq_index=i, omega=float(omega[i]), h_mag=float(h_mag[i]),
                  phase=float(phase[i]), tau_d=float(-phase[i] / omega[i]),
                  raw_delay_samples=int(round(-phase[i] / omega[i] * fs)))
        for i in range(len(omega)))
    return FrfEstimate(records=records, sample_rate=fs)


def _synthetic(profile, omegas, gamma_mag, gamma_phase, length):
    sec = propagation(profile, omegas)
    h = gamma_mag * np.exp(-2.0 * length * sec.alpha)
    phase = gamma_phase - 2.0 * length * sec.beta
    return _estimate_from(omegas, h, phase), sec


def test_characterization_inverts_exactly(profile, plan):
    est, sec = _synthetic(profile, plan.omegas, 1.0, 0.0, 50.0)
    prop = characterize_reference(est, 50.0)
    assert np.allclose(prop.alpha, sec.alpha, rtol=1e-12)
    assert np.allclose(prop.beta, sec.beta, rtol=1e-12)


def test_characterization_log_magnitude():
    omega = np.array([TWO_PI * 1e7])
    est = _estimate_from(omega, np.array([math.exp(-1.0)]), np.array([-1.0]))
    prop = characterize_reference(est, 50.0)
    assert prop.alpha[0] == pytest.approx(0.01, rel=1e-12)


def test_characterization_divides_out_termination(profile, plan):
    sec = propagation(profile, plan.omegas)
    refl = Reflector.termination(10.0)
    g = np.atleast_1d(reflection_coefficient(refl, sec.z0, plan.omegas))
    h = np.abs(g) * np.exp(-2.0 * 50.0 * sec.alpha)
    phase = np.unwrap(np.angle(g)) - 2.0 * 50.0 * sec.beta
    est = _estimate_from(plan.omegas, h, phase)
    prop = characterize_reference(est, 50.0, termination=refl, profile=profile)
    assert np.allclose(prop.alpha, sec.alpha, rtol=1e-10)
    assert np.allclose(prop.beta, sec.beta, rtol=1e-10)


def test_characterization_needs_profile_for_termination(profile, plan):
    est, _ = _synthetic(profile, plan.omegas, 0.5, 0.0, 50.0)
    with pytest.raises(FaultSolveError):
        characterize_reference(est, 50.0, termination=Reflector.termination(10.0))


def test_error_bound_values(profile):
    assert error_bound(TWO_PI, 2e8, 180.0, TWO_PI * 55.56e6) == pytest.approx(0.01, rel=2e-3)
    assert error_bound(0.0, 2e8, 180.0, TWO_PI * 55.56e6) == 0.0
    vp = float(propagation(profile, TWO_PI * 60e6).vp)
    bound = error_bound(1.311, vp, 55.0, TWO_PI * 60e6)
    assert bound == pytest.approx(0.0063, abs=6e-4)


def test_locate_generic_pure_delay(profile, plan):
    est, sec = _synthetic(profile, plan.omegas, 0.5, 0.0, 70.0)
    prop = PropagationTable(plan.omegas, sec.alpha, sec.beta, 50.0)
    report = locate_generic(est, prop)
    assert report.method == "generic"
    assert report.position_m == pytest.approx(70.0, rel=1e-9)
    assert np.allclose(report.gamma_mag, 0.5, rtol=1e-9)
    assert report.gamma_phase_rad is None
    assert report.error_bound_rel > 0.0


def test_locate_generic_frequency_selection(profile, plan):
    est, sec = _synthetic(profile, plan.omegas, 0.5, 0.0, 70.0)
    prop = PropagationTable(plan.omegas, sec.alpha, sec.beta, 50.0)
    report = locate_generic(est, prop, omega_sel=float(plan.omegas[10]))
    assert report.position_m == pytest.approx(70.0, rel=1e-9)
    with pytest.raises(FaultSolveError):
        locate_generic(est, prop, omega_sel=TWO_PI * 1.234e6)


def test_constant_gamma_recovers_synthetic_triple(profile, plan):
    est, sec = _synthetic(profile, plan.omegas, 0.5, 0.0, 70.0)
    prop = PropagationTable(plan.omegas, sec.alpha, sec.beta, 50.0)
    report = locate_constant_gamma(est, prop)
    assert report.position_m == pytest.approx(70.0, rel=1e-10)
    assert report.gamma_mag == pytest.approx(0.5, rel=1e-10)
    assert abs(wrap_angle(report.gamma_phase_rad)) <= 1e-10


def test_constant_gamma_residual_orthogonality(profile, plan):
    rng = np.random.default_rng(4)
    est, sec = _synthetic(profile, plan.omegas, 0.4, 0.3, 65.0)
    h = est.h_mag * np.exp(rng.normal(0, 1e-4, len(plan.omegas)))
    phase = est.phase + rng.normal(0, 1e-4, len(plan.omegas))
    noisy = _estimate_from(plan.omegas, h, phase)
    prop = PropagationTable(plan.omegas, sec.alpha, sec.beta, 50.0)
    report = locate_constant_gamma(noisy, prop)

    n = len(plan.omegas)
    design = np.zeros((2 * n, 3))
    design[:n, 0] = 1.0
    design[:n, 2] = -2.0 * sec.alpha
    design[n:, 1] = 1.0
    design[n:, 2] = -2.0 * sec.beta
    rhs = np.concatenate([np.log(h), phase])
    x = np.array([math.log(report.gamma_mag), report.gamma_phase_rad, report.position_m])
    resid = rhs - design @ x
    for col in design.T:
        assert abs(np.dot(resid, col)) <= 1e-10 * np.linalg.norm(resid) * np.linalg.norm(col)


def test_constant_gamma_agrees_with_generic_within_bound(profile, plan):
    est, sec = _synthetic(profile, plan.omegas, 0.6, -0.4, 80.0)
    prop = PropagationTable(plan.omegas, sec.alpha, sec.beta, 50.0)
    joint = locate_constant_gamma(est, prop)
    single = locate_generic(est, prop, phi_gamma_max=0.5)
    assert joint.position_m == pytest.approx(80.0, rel=1e-9)
    assert abs(single.position_m - joint.position_m) / joint.position_m \
        <= single.error_bound_rel + 1e-12


def test_constant_gamma_rejects_degenerate_grid():
    omega = TWO_PI * np.array([1e7, 2e7, 3e7])
    alpha = np.full(3, 0.01)
    beta = np.full(3, 0.5)  # no spread at all: position column collinear
    est = _estimate_from(omega, np.full(3, 0.5), np.full(3, -1.0))
    prop = PropagationTable(omega, alpha, beta, 50.0)
    with pytest.raises(FaultSolveError):
        locate_constant_gamma(est, prop)


def test_constant_gamma_flags_near_matched(profile, plan):
    est, sec = _synthetic(profile, plan.omegas, 0.01, 0.2, 100.0)
    prop = PropagationTable(plan.omegas, sec.alpha, sec.beta, 50.0)
    report = locate_constant_gamma(est, prop)
    assert "near_matched" in report.flags


def test_grid_mismatch_rejected(profile, plan):
    est, sec = _synthetic(profile, plan.omegas, 0.5, 0.0, 70.0)
    prop = PropagationTable(plan.omegas[:-1], sec.alpha[:-1], sec.beta[:-1], 50.0)
    with pytest.raises(FaultSolveError):
        locate_generic(est, prop)


def test_unwrap_consistency_pass_repairs_jumps(profile, plan):
    est, _ = _synthetic(profile, plan.omegas, 0.7, 0.1, 60.0)
    broken_phase = est.phase.copy()
    broken_phase[5:] += TWO_PI
    broken_phase[60:] -= 2 * TWO_PI
    broken = _estimate_from(plan.omegas, est.h_mag, broken_phase)
    repaired = consistent_unwrapped_phase(broken)
    assert np.allclose(repaired, est.phase, atol=1e-9)


def test_per_frequency_positions_monotone_bias(profile, plan):
    # A reflector with negative phase makes every single-frequency estimate
    # overshoot by phi/(2 beta); the overshoot shrinks with frequency.
    est, sec = _synthetic(profile, plan.omegas, 0.5, -0.8, 70.0)
    prop = PropagationTable(plan.omegas, sec.alpha, sec.beta, 50.0)
    positions = per_frequency_positions(est, prop)
    assert np.all(positions > 70.0)
    assert np.all(np.diff(np.abs(positions - 70.0)) < 0.0)


def test_fault_report_json_round_trip(tmp_path):
    report = FaultReport(method="constant_gamma", position_m=70.25, gamma_mag=0.5,
                         gamma_phase_rad=math.pi, flags=("near_matched",))
    payload = json.loads(report.to_json())
    assert payload["gamma_phase_deg"] == pytest.approx(180.0)
    assert payload["flags"] == ["near_matched"]
    again = FaultReport.from_json(report.to_json())
    assert again.position_m == report.position_m
    assert again.gamma_phase_rad == pytest.approx(report.gamma_phase_rad)

    path = tmp_path / "report.json"
    report.write_json(path)
    assert FaultReport.from_json(path.read_text()).gamma_mag == 0.5


def test_generic_report_serializes_array(tmp_path, profile, plan):
    est, sec = _synthetic(profile, plan.omegas, 0.5, 0.0, 70.0)
    prop = PropagationTable(plan.omegas, sec.alpha, sec.beta, 50.0)
    report = locate_generic(est, prop)
    payload = json.loads(report.to_json())
    assert isinstance(payload["gamma_mag"], list)
    assert payload["gamma_phase_deg"] is None
    assert payload["position_error_bound_rel"] == pytest.approx(report.error_bound_rel)


def test_propagation_table_csv_round_trip(tmp_path, ref_prop):
    path = tmp_path / "prop.csv"
    ref_prop.write_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "f_hz,alpha_np_per_m,beta_rad_per_m"
    again = PropagationTable.read_csv(path, reference_length=50.0)
    assert np.allclose(again.omega, ref_prop.omega, rtol=1e-12)
    assert np.allclose(again.alpha, ref_prop.alpha, rtol=1e-12)
    assert np.allclose(again.beta, ref_prop.beta, rtol=1e-12)


def test_estimated_table_invariants(ref_prop):
    assert np.all(ref_prop.alpha >= 0.0)
    assert np.all(np.diff(ref_prop.beta) > 0.0)


def test_end_to_end_short_termination(profile, plan, ref_prop):
    est = run_scenario(profile, plan, Reflector.short_termination(), 100.0)
    report = locate_constant_gamma(est, ref_prop)
    assert report.position_m == pytest.approx(100.0, rel=5e-4)
    assert report.gamma_mag == pytest.approx(1.0, abs=1e-3)
    assert abs(wrap_angle(report.gamma_phase_rad - math.pi)) <= math.radians(1.5)


def test_gamma_invariant_under_transmit_amplitude(profile, ref_prop, plan):
    from dataclasses import replace

    louder = replace(plan, amplitude=3.0)
    refl = Reflector.series_fault(100.0)
    report_1 = locate_generic(run_scenario(profile, plan, refl, 40.0), ref_prop)
    report_3 = locate_generic(run_scenario(profile, louder, refl, 40.0), ref_prop)
    assert np.allclose(report_3.gamma_mag, report_1.gamma_mag, rtol=1e-9)
    assert report_3.position_m == pytest.approx(report_1.position_m, rel=1e-9)
