"""Benchmark the compiled per-burst kernels against the numpy fallback.

Runs the two hot kernels on a study-sized workload (101 burst pairs per
acquisition) and the full per-acquisition estimation loop, printing the
per-call time of each backend and the speedup.

    python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import math
import time

import numpy as np

import sfwr._kernels.fallback as np_backend
from sfwr.estimator import estimate_all
from sfwr.line import Reflector, default_profile, frf_response, round_trip_delay
from sfwr.channel import reflect
from sfwr.repro import study_plan
from sfwr.waveform import generate, segment

try:
    import sfwr._kernels._fast as cy_backend
except ImportError:
    cy_backend = None


def build_workload():
    profile = default_profile()
    plan = study_plan()
    tx = generate(plan)
    response = frf_response(profile, Reflector.open_termination(), 50.0)
    delay = round_trip_delay(profile, 50.0, plan.omega(0))
    rx = reflect(tx, plan.sample_rate, response, group_delay_s=delay)
    return plan, segment(tx + rx, plan)


def time_call(fn, repeats):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def check_agreement(pairs):
    if cy_backend is None:
        return
    for pair in pairs[::20]:
        lag_np, _ = np_backend.xcorr_peak(pair.y, pair.x)
        lag_cy, _ = cy_backend.xcorr_peak(pair.y, pair.x)
        assert lag_np == lag_cy, f"lag mismatch at index {pair.freq_index}"
        got_np = np_backend.sine_fit(pair.x, pair.omega, 1e-9, 0, len(pair.x), False)
        got_cy = cy_backend.sine_fit(pair.x, pair.omega, 1e-9, 0, len(pair.x), False)
        err = max(abs(a - b) for a, b in zip(got_np, got_cy))
        assert err < 1e-9, f"sine_fit mismatch {err:.2e} at index {pair.freq_index}"
    print("backends agree on the workload\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    plan, pairs = build_workload()
    check_agreement(pairs)

    rows = []

    def bench(label, np_fn, cy_fn):
        t_np = time_call(np_fn, args.repeats)
        t_cy = time_call(cy_fn, args.repeats) if cy_fn is not None else None
        rows.append((label, t_np, t_cy))

    def run_xcorr(backend):
        def call():
            for pair in pairs:
                backend.xcorr_peak(pair.y, pair.x)
        return call

    def run_fits(backend):
        def call():
            for pair in pairs:
                backend.sine_fit(pair.x, pair.omega, 1e-9, 0, 200, False)
                backend.sine_fit(pair.y, pair.omega, 1e-9, 400, 600, True)
        return call

    bench("xcorr_peak x101", run_xcorr(np_backend),
          run_xcorr(cy_backend) if cy_backend else None)
    bench("sine_fit   x202", run_fits(np_backend),
          run_fits(cy_backend) if cy_backend else None)

    import os
    env = dict(os.environ)

    def estimate_with(flag):
        def call():
            os.environ.clear()
            os.environ.update(env)
            estimate_all(pairs, plan)
        return call

    # estimate_all uses the backend selected at import; report it as-is.
    from sfwr._kernels import BACKEND
    t_est = time_call(lambda: estimate_all(pairs, plan), args.repeats)

    print(f"{'kernel':<18} {'numpy':>12} {'cython':>12} {'speedup':>9}")
    for label, t_np, t_cy in rows:
        if t_cy is None:
            print(f"{label:<18} {t_np * 1e3:>10.2f}ms {'n/a':>12} {'n/a':>9}")
        else:
            print(f"{label:<18} {t_np * 1e3:>10.2f}ms {t_cy * 1e3:>10.2f}ms "
                  f"{t_np / t_cy:>8.1f}x")
    print(f"\nestimate_all (101 pairs, {BACKEND} backend): {t_est * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
