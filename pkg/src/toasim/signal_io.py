"""Signal file I/O.

Binary format: little-endian interleaved float64 (re, im) pairs, with a JSON
sidecar at <path>.json holding {"rate_hz", "t0_s", "n_samples"}.  A CSV export
(index, re, im) exists for eyeballing traces in other tools.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .sigproc import Signal


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def write_signal(s: Signal, path) -> Path:
    """Write raw interleaved float64 pairs plus the JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    inter = np.empty(2 * len(s), dtype="<f8")
    inter[0::2] = s.samples.real
    inter[1::2] = s.samples.imag
    path.write_bytes(inter.tobytes())
    meta = {"rate_hz": s.rate, "t0_s": s.t0, "n_samples": len(s)}
    sidecar_path(path).write_text(json.dumps(meta, sort_keys=True) + "\n")
    return path


def read_signal(path) -> Signal:
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    n = int(meta["n_samples"])
    inter = np.frombuffer(path.read_bytes(), dtype="<f8")
    if inter.size != 2 * n:
        raise ValueError(f"{path}: expected {2 * n} float64 values, found {inter.size}")
    samples = inter[0::2] + 1j * inter[1::2]
    return Signal(samples, float(meta["rate_hz"]), float(meta["t0_s"]))


def write_signal_csv(s: Signal, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write("index,re,im\n")
        for k, v in enumerate(s.samples):
            fh.write(f"{k},{v.real:.17g},{v.imag:.17g}\n")
    return path
