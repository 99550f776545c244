"""File formats: key/value configs, signal CSV and raw float64 records."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def write_kv(path, mapping: dict):
    """Write a flat `key = value` config file."""
    lines = [f"{key} = {value!r}" if isinstance(value, str) else f"{key} = {value:.17g}"
             for key, value in mapping.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_kv(path) -> dict:
    """Read a `key = value` config file; values stay strings."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip().strip("'\"")
    return out


def write_signal_csv(path, samples: np.ndarray, sample_rate: float, t0: float = 0.0):
    """Signal as CSV `t_s,v` with round-trip float formatting."""
    t = t0 + np.arange(len(samples)) / sample_rate
    np.savetxt(path, np.column_stack([t, samples]), fmt="%.17g", delimiter=",",
               header="t_s,v", comments="")


def read_signal_csv(path):
    """Returns (samples, sample_rate) from a `t_s,v` CSV."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t, v = data[:, 0], data[:, 1]
    if len(t) < 2:
        raise ValueError("signal file must hold at least two samples")
    sample_rate = 1.0 / float(np.mean(np.diff(t)))
    return v, sample_rate


def write_signal_raw(path, samples: np.ndarray, sample_rate: float, t0: float = 0.0):
    """Raw little-endian float64 samples plus a JSON sidecar descriptor."""
    path = Path(path)
    np.asarray(samples, dtype="<f8").tofile(path)
    descriptor = {
        "dtype": "float64",
        "byte_order": "little",
        "n_samples": int(len(samples)),
        "sample_rate_hz": float(sample_rate),
        "t0_s": float(t0),
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(descriptor, indent=2) + "\n")


def read_signal_raw(path):
    """Returns (samples, sample_rate) from a raw record with sidecar."""
    path = Path(path)
    descriptor = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    samples = np.fromfile(path, dtype="<f8")
    if len(samples) != descriptor["n_samples"]:
        raise ValueError("raw record length does not match its descriptor")
    return samples, float(descriptor["sample_rate_hz"])


def read_signal(path):
    """Dispatch on extension: `.csv` or raw float64 with sidecar."""
    if str(path).endswith(".csv"):
        return read_signal_csv(path)
    return read_signal_raw(path)
