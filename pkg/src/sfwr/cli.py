"""Command-line front end for the reflectometry pipeline."""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from sfwr import repro as repro_mod
from sfwr.channel import NoiseSpec
from sfwr.errors import SfwrError
from sfwr.estimator import estimate_all
from sfwr.fault import (PropagationTable, characterize_reference, locate_constant_gamma,
                        locate_generic, per_frequency_positions)
from sfwr.line import Reflector, default_profile, read_profile, write_profile
from sfwr.sigio import read_kv, read_signal, write_signal_csv, write_signal_raw
from sfwr.waveform import design_plan, read_plan, segment, write_plan

SCENARIOS = ("reference", "termination", "series_fault", "shunt_fault", "capacitive_fault")


def _echo_json(payload):
    click.echo(json.dumps(payload, indent=2, default=float))


def _load_profile(path):
    return read_profile(path) if path else default_profile()


def _fail(message: str):
    raise click.ClickException(message)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Key/value file supplying defaults for command flags.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Noise generator seed (used when a noise level is set).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Default output directory for commands that write files.")
@click.pass_context
def main(ctx, config_path, seed, out_dir):
    """Stepped-frequency waveform reflectometry toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["out_dir"] = out_dir
    if config_path:
        defaults = dict(read_kv(config_path))
        ctx.default_map = {cmd: defaults for cmd in
                           ("design", "simulate", "characterize", "locate", "repro")}


@main.command()
@click.option("--lmin", type=float, required=True, help="Nearest reflector position, m.")
@click.option("--lmax", type=float, required=True, help="Farthest reflector position, m.")
@click.option("--vp", type=float, required=True, help="Estimated propagation velocity, m/s.")
@click.option("--ur", type=float, default=0.01, show_default=True,
              help="Relative position-error bound for the generic method.")
@click.option("--phi-gamma-max", type=float, default=2.0 * math.pi, show_default=True,
              help="Worst-case reflector phase magnitude, rad.")
@click.option("--fs", type=float, default=1e9, show_default=True, help="Sample rate, Hz.")
@click.option("--df", type=float, default=0.5e6, show_default=True, help="Frequency step, Hz.")
@click.option("--nfreqs", type=int, default=None, help="Grid size (overrides --df).")
@click.option("--amplitude", type=float, default=1.0, show_default=True)
@click.option("--plan-out", type=click.Path(dir_okay=False), default=None,
              help="Write the plan as a key/value config file.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable summary on stdout.")
def design(lmin, lmax, vp, ur, phi_gamma_max, fs, df, nfreqs, amplitude, plan_out, as_json):
    """Choose burst timing and the frequency grid for a diagnostic range."""
    try:
        plan = design_plan(lmin, lmax, vp, u_r=ur, phi_gamma_max=phi_gamma_max,
                           sample_rate=fs, delta_f=df, n_freqs=nfreqs, amplitude=amplitude)
    except SfwrError as exc:
        _fail(str(exc))
    if plan_out:
        write_plan(plan, plan_out)
    summary = {
        "tau_s": plan.tau,
        "period_s": plan.period,
        "f0_hz": plan.f0,
        "delta_f_hz": plan.delta_f,
        "n_freqs": plan.n_freqs,
        "f_last_hz": plan.f_last,
        "sample_rate_hz": plan.sample_rate,
        "plan_file": plan_out,
    }
    if as_json:
        _echo_json(summary)
    else:
        click.echo(f"burst duration   {plan.tau * 1e9:.6g} ns")
        click.echo(f"segment period   {plan.period * 1e6:.6g} us")
        click.echo(f"f0               {plan.f0 / 1e6:.6g} MHz")
        click.echo(f"delta f          {plan.delta_f / 1e3:.6g} kHz")
        click.echo(f"frequencies      {plan.n_freqs} up to {plan.f_last / 1e6:.6g} MHz")
        if plan_out:
            click.echo(f"plan written to  {plan_out}")


def _reflector_for(scenario, z_ohm, cf_farad):
    if scenario == "reference":
        return Reflector.open_termination()
    if scenario == "termination":
        if z_ohm is None:
            _fail("--z-ohm is required for a termination scenario ('inf' for open)")
        return Reflector.open_termination() if math.isinf(z_ohm) else Reflector.termination(z_ohm)
    if scenario == "series_fault":
        if z_ohm is None:
            _fail("--z-ohm is required for a series fault")
        return Reflector.series_fault(z_ohm)
    if scenario == "shunt_fault":
        if z_ohm is None:
            _fail("--z-ohm is required for a shunt fault")
        return Reflector.shunt_fault(z_ohm)
    if cf_farad is None:
        _fail("--cf-farad is required for a capacitive fault")
    return Reflector.series_capacitance(cf_farad)


@main.command()
@click.option("--plan", "plan_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Plan config from `design`.")
@click.option("--scenario", type=click.Choice(SCENARIOS), required=True)
@click.option("--length", type=float, required=True, help="Cable length, m.")
@click.option("--fault-pos", type=float, default=None, help="Fault position, m.")
@click.option("--z-ohm", type=float, default=None,
              help="Termination or fault impedance, ohm (inf = open).")
@click.option("--cf-farad", type=float, default=None, help="Fault capacitance, F.")
@click.option("--profile", "profile_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Line profile config (default: calibrated RG58-like).")
@click.option("--noise-std", type=float, default=0.0, show_default=True,
              help="Additive white Gaussian noise level, V.")
@click.option("--format", "fmt", type=click.Choice(["csv", "raw"]), default="csv",
              show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Output directory (falls back to the global --out).")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def simulate(ctx, plan_path, scenario, length, fault_pos, z_ohm, cf_farad, profile_path,
             noise_std, fmt, out_dir, as_json):
    """Simulate an acquisition; writes transmitted and received records."""
    plan = read_plan(plan_path)
    profile = _load_profile(profile_path)
    reflector = _reflector_for(scenario, z_ohm, cf_farad)
    distance = length if scenario in ("reference", "termination") else fault_pos
    if distance is None:
        _fail("--fault-pos is required for fault scenarios")
    if distance <= 0.0:
        _fail("reflector distance must be positive")
    noise = NoiseSpec(noise_std, ctx.obj.get("seed", 0)) if noise_std > 0.0 else None

    out_dir = Path(out_dir or ctx.obj.get("out_dir") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        tx, rx = repro_mod.simulate_reflection(profile, plan, reflector, distance, noise)
    except SfwrError as exc:
        _fail(str(exc))
    writer = write_signal_csv if fmt == "csv" else write_signal_raw
    suffix = ".csv" if fmt == "csv" else ".f64"
    tx_path = out_dir / f"transmitted{suffix}"
    rx_path = out_dir / f"received{suffix}"
    writer(tx_path, tx, plan.sample_rate)
    writer(rx_path, rx, plan.sample_rate)
    write_profile(profile, out_dir / "profile.cfg")
    summary = {"transmitted": str(tx_path), "received": str(rx_path),
               "n_samples": len(tx), "scenario": scenario,
               "reflector_distance_m": distance}
    if as_json:
        _echo_json(summary)
    else:
        click.echo(f"wrote {tx_path} and {rx_path} ({len(tx)} samples each)")


def _acquire(plan_path, tx_path, rx_path, noise_std):
    plan = read_plan(plan_path)
    tx, fs_tx = read_signal(tx_path)
    rx, fs_rx = read_signal(rx_path)
    for fs in (fs_tx, fs_rx):
        if abs(fs - plan.sample_rate) > 1e-3 * plan.sample_rate:
            _fail(f"record sample rate {fs:g} Hz does not match the plan "
                  f"({plan.sample_rate:g} Hz)")
    if len(tx) != len(rx):
        _fail("transmitted and received records differ in length")
    est = estimate_all(segment(tx + rx, plan), plan, noise_std=noise_std)
    return plan, est


@main.command()
@click.option("--plan", "plan_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--transmitted", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--received", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--length", type=float, required=True, help="Known reference length, m.")
@click.option("--termination", default="open", show_default=True,
              help="Known termination: open, short, or an impedance in ohm.")
@click.option("--profile", "profile_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Needed to divide out a non-open termination.")
@click.option("--noise-std", type=float, default=0.0, show_default=True)
@click.option("--prop-out", type=click.Path(dir_okay=False), required=True,
              help="Output CSV for the propagation table.")
@click.option("--frf-out", type=click.Path(dir_okay=False), default=None,
              help="Optional CSV of the raw FRF estimate.")
@click.option("--json", "as_json", is_flag=True)
def characterize(plan_path, transmitted, received, length, termination, profile_path,
                 noise_std, prop_out, frf_out, as_json):
    """Estimate attenuation/phase constants from a known reference cable."""
    plan, est = _acquire(plan_path, transmitted, received, noise_std)
    if termination == "open":
        refl, profile = None, None
    elif termination == "short":
        refl, profile = Reflector.short_termination(), _load_profile(profile_path)
    else:
        refl, profile = Reflector.termination(float(termination)), _load_profile(profile_path)
    try:
        prop = characterize_reference(est, length, termination=refl, profile=profile)
    except SfwrError as exc:
        _fail(str(exc))
    prop.write_csv(prop_out)
    if frf_out:
        est.write_csv(frf_out)
    summary = {"prop_table": prop_out, "n_freqs": len(prop.omega),
               "alpha_range_np_per_m": [float(prop.alpha.min()), float(prop.alpha.max())],
               "beta_range_rad_per_m": [float(prop.beta.min()), float(prop.beta.max())]}
    if as_json:
        _echo_json(summary)
    else:
        click.echo(f"wrote {prop_out} ({len(prop.omega)} frequencies)")


@main.command()
@click.option("--plan", "plan_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--transmitted", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--received", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--prop", "prop_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Propagation table CSV from `characterize`.")
@click.option("--const-gamma", is_flag=True,
              help="Joint solve assuming a frequency-independent reflection coefficient.")
@click.option("--phi-gamma-max", type=float, default=2.0 * math.pi, show_default=True,
              help="Reflector phase bound for the generic error bound, rad.")
@click.option("--noise-std", type=float, default=0.0, show_default=True)
@click.option("--report-out", type=click.Path(dir_okay=False), default=None,
              help="Write the report JSON here as well as stdout.")
@click.option("--curve-out", type=click.Path(dir_okay=False), default=None,
              help="CSV of per-frequency position estimates (generic method).")
def locate(plan_path, transmitted, received, prop_path, const_gamma, phi_gamma_max,
           noise_std, report_out, curve_out):
    """Locate and characterize the reflector behind an acquisition."""
    plan, est = _acquire(plan_path, transmitted, received, noise_std)
    prop = PropagationTable.read_csv(prop_path, reference_length=math.nan)
    try:
        if const_gamma:
            report = locate_constant_gamma(est, prop)
        else:
            report = locate_generic(est, prop, phi_gamma_max=phi_gamma_max)
            if curve_out:
                positions = per_frequency_positions(est, prop)
                np.savetxt(curve_out, np.column_stack([est.f_hz, positions]),
                           fmt="%.17g", delimiter=",", header="f_hz,l_est_m", comments="")
    except SfwrError as exc:
        _fail(str(exc))
    if report_out:
        report.write_json(report_out)
    click.echo(report.to_json())


@main.command()
@click.argument("experiment", type=click.Choice(repro_mod.EXPERIMENTS))
@click.option("--tolerances", "tol_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Override the packaged tolerance file.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Directory for plot-ready CSV output.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def repro(ctx, experiment, tol_path, out_dir, as_json):
    """Re-run a simulated-cable experiment and check its tolerances."""
    tol = repro_mod.load_tolerances(tol_path)
    out_dir = out_dir or ctx.obj.get("out_dir")
    result = repro_mod.run_experiment(experiment, tolerances=tol, out_dir=out_dir)
    if as_json:
        _echo_json(result.summary())
    else:
        click.echo(result.render())
    if not result.passed:
        sys.exit(1)


if __name__ == "__main__":
    main()
