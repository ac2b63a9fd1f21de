"""RTT receiver path: differential cross-correlation ToA plus NADM metrics.

The correlator works on lag-1-symbol differential products, r(t) conj(r(t-T)),
so a carrier frequency offset collapses to a constant phase and cannot move
the peak.  Metrics (normalized cross-correlation, phase MSE, envelope DFT
ratio) quantify how "normal" an attacked packet still looks.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import fft as _fft

from .btcs import PhyMode, gfsk_demodulate
from .sigproc import Correlation, Signal, cross_correlate

PMSE_ENVELOPE_FLOOR = 0.1       # fraction of median envelope below which
PMSE_MAX_EXCLUDED = 0.1         # samples are excluded, and how many may be


@dataclass(frozen=True)
class ToaEstimate:
    coarse_index: int
    fractional: float
    toa_seconds: float
    peak_magnitude: float
    valid: bool = True
    flat_peak: bool = False

    def __post_init__(self):
        if not (-0.5 <= self.fractional <= 0.5):
            raise ValueError("fractional offset must lie in [-0.5, 0.5]")


@dataclass(frozen=True)
class NadmReport:
    ncc: float
    pmse: float
    dft: float


def differential_xcorr(received: Signal, template: Signal, t_sym: float) -> Correlation:
    """Correlate lag-one-symbol differential products of received vs template.

    t_sym must be an integer number of samples at the common rate.  The full
    lag axis is returned; acquisition and refinement happen in estimate_toa.
    """
    if abs(received.rate - template.rate) > 1e-6 * received.rate:
        raise ValueError("received and template rates differ")
    lag_f = t_sym * received.rate
    lag = int(round(lag_f))
    if abs(lag_f - lag) > 1e-6 or lag < 1:
        raise ValueError("t_sym must be a positive integer number of samples")
    if len(received) <= lag or len(template) <= lag:
        raise ValueError("signals shorter than one symbol")
    dr = received.samples[lag:] * np.conj(received.samples[:-lag])
    ds = template.samples[lag:] * np.conj(template.samples[:-lag])
    d_rx = Signal(dr, received.rate, received.t0 + lag / received.rate)
    d_tp = Signal(ds, template.rate, template.t0 + lag / template.rate)
    return cross_correlate(d_rx, d_tp)


def estimate_toa(corr: Correlation) -> ToaEstimate:
    """Peak pick on |R|^2 with three-point parabolic refinement.

    Ties break toward the earliest lag.  A peak on the first or last lag has
    no neighbors and raises; an exactly flat triple keeps fractional = 0 and
    sets flat_peak.
    """
    power = np.abs(corr.values) ** 2
    coarse = int(np.argmax(power))
    if coarse == 0 or coarse == len(power) - 1:
        raise ValueError("correlation peak sits on the lag-window edge")
    ym, y0, yp = power[coarse - 1], power[coarse], power[coarse + 1]
    denom = ym - 2.0 * y0 + yp
    flat = denom == 0.0
    frac = 0.0 if flat else 0.5 * (ym - yp) / denom
    frac = float(np.clip(frac, -0.5, 0.5))
    toa = corr.offset + (coarse - corr.zero_lag_index + frac) / corr.rate
    return ToaEstimate(coarse_index=coarse, fractional=frac, toa_seconds=float(toa),
                       peak_magnitude=float(np.abs(corr.values[coarse])),
                       flat_peak=bool(flat))


def _aligned_extent(received: Signal, n: int, toa: ToaEstimate) -> np.ndarray:
    """First n received samples re-timed so index k lands at toa + k/rate.

    Sub-sample alignment via an FFT phase ramp on a padded grid.
    """
    if n > len(received):
        raise ValueError("requested extent longer than received signal")
    shift = (toa.toa_seconds - received.t0) * received.rate
    nfft = _fft.next_fast_len(len(received) + 256)
    spec = _fft.fft(received.samples, nfft)
    spec *= np.exp(2j * np.pi * np.fft.fftfreq(nfft) * shift)
    return _fft.ifft(spec)[:n]


def align_to_template(received: Signal, template: Signal, toa: ToaEstimate) -> np.ndarray:
    return _aligned_extent(received, len(template), toa)


def check_bits(received: Signal, expected_bits, phy: PhyMode, toa: ToaEstimate) -> bool:
    """Demodulate at symbol centers derived from the ToA and compare bits."""
    expected = np.asarray(expected_bits, dtype=np.int8)
    oversampling = int(round(received.rate / phy.symbol_rate))
    # one extra symbol so the boundary sample after the last center exists
    n = (expected.size + 1) * oversampling
    try:
        aligned = _aligned_extent(received, n, toa)
        decoded = gfsk_demodulate(Signal(aligned, received.rate, 0.0), phy,
                                  sync_index=oversampling // 2, n_bits=expected.size)
    except ValueError:
        return False
    return bool(np.array_equal(decoded, expected))


def nadm_ncc(received: Signal, template: Signal, toa: ToaEstimate) -> float:
    """|<r, s>| / (||r|| ||s||) over the packet extent after ToA alignment."""
    r = align_to_template(received, template, toa)
    s = template.samples
    denom = np.linalg.norm(r) * np.linalg.norm(s)
    if denom == 0:
        raise ValueError("zero-energy input to ncc")
    return float(np.abs(np.vdot(r, s)) / denom)


def nadm_pmse(received: Signal, template: Signal, toa: ToaEstimate) -> float:
    """Mean squared phase-trajectory error after removing constant and slope.

    The wrapped difference angle(r conj(s)) is unwrapped over samples whose
    envelope clears 10% of the median; if more than 10% of the extent falls
    below that floor the phase comparison is meaningless and raises.
    """
    r = align_to_template(received, template, toa)
    env = np.abs(r)
    keep = env >= PMSE_ENVELOPE_FLOOR * np.median(env)
    if np.count_nonzero(~keep) > PMSE_MAX_EXCLUDED * env.size:
        raise ValueError("envelope collapses over too much of the packet")
    d = np.unwrap(np.angle(r[keep] * np.conj(template.samples[keep])))
    t = np.flatnonzero(keep).astype(np.float64)
    basis = np.column_stack([np.ones_like(t), t])
    resid = d - basis @ np.linalg.lstsq(basis, d, rcond=None)[0]
    return float(np.mean(resid * resid))


def nadm_dft(received: Signal, toa: ToaEstimate, symbol_rate: float,
             n_samples: int | None = None) -> float:
    """Envelope-power spectral ratio: energy at the symbol rate over DC.

    The squared envelope of the aligned extent is transformed; energy in the
    bin nearest symbol_rate and its two neighbors is referenced to the DC
    bin.  Scale-invariant, near zero for constant-envelope packets.
    """
    if symbol_rate <= 0 or symbol_rate >= received.rate / 2:
        raise ValueError("symbol_rate must be positive and below Nyquist")
    n = len(received) if n_samples is None else int(n_samples)
    if n < 8:
        raise ValueError("extent too short for an envelope spectrum")
    p = np.abs(_aligned_extent(received, n, toa)) ** 2
    spec = np.abs(_fft.fft(p)) ** 2
    k_sym = int(round(symbol_rate * n / received.rate))
    if k_sym < 2 or k_sym > n // 2 - 1:
        raise ValueError("symbol-rate bin collides with DC or Nyquist")
    if spec[0] == 0:
        raise ValueError("zero envelope power")
    return float(spec[k_sym - 1:k_sym + 2].sum() / spec[0])


def mark_validity(est: ToaEstimate, bits_ok: bool) -> ToaEstimate:
    return replace(est, valid=bool(bits_ok))
