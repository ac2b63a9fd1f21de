"""Numerical cross-checks of the closed-form results the attack modules rely on.

Each check compares an independently computed quantity (dense-grid finite
differences, direct sums) against the closed form and reports both sides with
absolute and relative error.  Near-zero comparisons use energy-scaled floors
instead of relative error.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

from . import attack, btcs
from .sigproc import Signal, cross_correlate, resample

DENSE_GRID_FACTOR = 16          # correlation interpolation factor for derivatives
REL_TOLERANCE = 0.01
ZERO_FLOOR_SCALE = 1e-9


@dataclass(frozen=True)
class DerivationReport:
    lhs: float
    rhs: float
    abs_err: float
    rel_err: float
    passed: bool


def _bl_derivative(samples: np.ndarray, rate: float) -> np.ndarray:
    """Exact derivative of the band-limited interpolant via the FFT."""
    n = samples.size
    nfft = _fft.next_fast_len(n + 128)
    spec = _fft.fft(samples, nfft)
    w = 2j * np.pi * np.fft.fftfreq(nfft, d=1.0 / rate)
    return _fft.ifft(spec * w)[:n]


def _dense_correlation_power(x_tilde: Signal, x: Signal, factor: int):
    """|R(tau)|^2 on a grid `factor` times finer than the sample lag axis.

    Returns (power, dense zero-lag index, dense step seconds).  Correlation
    values carry the continuous-integral dt weighting.
    """
    corr = cross_correlate(x_tilde, x)
    dt = 1.0 / x.rate
    holder = Signal(corr.values * dt, x.rate, 0.0)
    dense = resample(holder, x.rate * factor)
    power = np.abs(dense.samples) ** 2
    return power, corr.zero_lag_index * factor, dt / factor


def verify_peak_derivative_identity(x: Signal, delta_x: Signal,
                                    fd_step: float | None = None,
                                    tolerance: float = REL_TOLERANCE) -> DerivationReport:
    """Check d|R~|^2/dtau at zero lag against -2 Re{<dx, x'> <x~, x>*}.

    The left side is a central difference of the interpolated correlation
    power; the right side pairs the perturbation with the band-limited
    derivative of the clean signal.  Holds when <dx, x> has no imaginary
    part, which every real mask, real-envelope shift, and centered NGD
    perturbation satisfies.
    """
    attack._check_aligned(x, delta_x)
    dt = 1.0 / x.rate
    if fd_step is None:
        fd_step = dt / DENSE_GRID_FACTOR
    if fd_step > dt / 4:
        raise ValueError("fd_step must resolve at least a quarter sample")
    factor = max(4, int(np.ceil(dt / fd_step)))
    x_tilde = x.with_samples(x.samples + delta_x.samples)
    power, z, step = _dense_correlation_power(x_tilde, x, factor)
    lhs = (power[z + 1] - power[z - 1]) / (2.0 * step)
    xp = _bl_derivative(x.samples, x.rate)
    inner_dx_xp = np.vdot(xp, delta_x.samples) * dt       # <dx, x'>
    inner_xt_x = np.vdot(x.samples, x_tilde.samples) * dt  # <x~, x>
    rhs = -2.0 * float(np.real(inner_dx_xp * np.conj(inner_xt_x)))
    abs_err = abs(lhs - rhs)
    # near-zero floor: 1e-9 of the peak power per sample period
    floor = ZERO_FLOOR_SCALE * power[z] * x.rate
    rel_err = abs_err / max(abs(rhs), floor)
    passed = rel_err <= tolerance or (abs(lhs) <= floor and abs(rhs) <= floor)
    return DerivationReport(float(lhs), float(rhs), float(abs_err),
                            float(rel_err), bool(passed))


def _fsk_trajectory(phi_seed: int, n_bits: int, oversampling: int):
    """Seeded random GFSK phase trajectory; returns (x, phi_rate, rate)."""
    rng = np.random.default_rng(phi_seed)
    bits = rng.integers(0, 2, n_bits)
    phy = btcs.LE1M
    rate = phy.symbol_rate * oversampling
    finst = btcs.instantaneous_frequency(bits, phy, oversampling)
    phi_rate = 2.0 * np.pi * finst                 # phase derivative, rad/s
    phase = np.cumsum(phi_rate) / rate
    return np.exp(1j * phase), phi_rate, rate


def _tile_mask(mask, n: int) -> np.ndarray:
    m = np.atleast_1d(np.asarray(mask))
    if m.ndim != 1 or m.size < 1:
        raise ValueError("mask must be a 1-d vector")
    reps = int(np.ceil(n / m.size))
    return np.tile(m, reps)[:n]


def verify_fsk_real_mask(phi_seed: int, mask, n_bits: int = 64,
                         oversampling: int = 8) -> DerivationReport:
    """Re<m x, x'> vanishes for any real mask on a unit-envelope trajectory.

    Uses the analytic derivative x' = j phi' x, under which each term of the
    projection is purely imaginary; the residual is pure round-off, checked
    against a floor of 1e-9 times the signal energy per symbol period.
    """
    x, phi_rate, rate = _fsk_trajectory(phi_seed, n_bits, oversampling)
    m = _tile_mask(mask, x.size)
    if np.iscomplexobj(m) and np.any(np.imag(m) != 0):
        raise ValueError("real-mask check requires a real mask")
    dt = 1.0 / rate
    xp = 1j * phi_rate * x
    lhs = float(np.real(np.vdot(xp, m.real * x) * dt))
    energy = float(np.sum(np.abs(x) ** 2) * dt)
    t_sym = oversampling * dt
    floor = ZERO_FLOOR_SCALE * energy / t_sym
    return DerivationReport(lhs, 0.0, abs(lhs), abs(lhs) / floor, abs(lhs) <= floor)


def verify_fsk_complex_mask_flip(phi_seed: int, mask, n_bits: int = 64,
                                 oversampling: int = 8) -> tuple[float, float]:
    """Projections of one complex mask onto e^{j phi} and e^{-j phi}.

    Returns (Re<m x1, x1'>, Re<m x2, x2'>); the bit-flipped trajectory picks
    up the opposite sign, so no single mask advances both.
    """
    x, phi_rate, rate = _fsk_trajectory(phi_seed, n_bits, oversampling)
    m = _tile_mask(np.asarray(mask, dtype=np.complex128), x.size)
    dt = 1.0 / rate
    x2 = np.conj(x)
    v1 = float(np.real(np.vdot(1j * phi_rate * x, m * x) * dt))
    v2 = float(np.real(np.vdot(-1j * phi_rate * x2, m * x2) * dt))
    return v1, v2


def tof_twr(t_round: float, t_reply: float, drift: float = 0.0) -> float:
    """Two-way-ranging time of flight: (t_round - (1 - drift) t_reply) / 2."""
    if t_round < 0 or t_reply < 0:
        raise ValueError("timestamps must be nonnegative")
    tof = 0.5 * (t_round - (1.0 - drift) * t_reply)
    if tof < 0:
        raise ValueError("reply interval exceeds round trip: negative flight time")
    return tof


@dataclass(frozen=True)
class PulseFamily:
    """Reference pulse for the prediction study: a real Gaussian envelope."""

    sigma_s: float = 1e-6
    rate: float = 50e6
    duration_s: float = 16e-6

    def build(self) -> Signal:
        if self.duration_s < 8 * self.sigma_s:
            raise ValueError("duration must cover the pulse support")
        n = int(round(self.duration_s * self.rate))
        t = (np.arange(n) - n / 2) / self.rate
        return Signal(np.exp(-t * t / (2.0 * self.sigma_s**2)), self.rate, 0.0)


def _fft_time_shift(s: Signal, shift_s: float) -> Signal:
    """Band-limited time shift: positive shift_s advances the waveform."""
    nfft = _fft.next_fast_len(len(s) + 256)
    spec = _fft.fft(s.samples, nfft)
    f = np.fft.fftfreq(nfft, d=1.0 / s.rate)
    out = _fft.ifft(spec * np.exp(2j * np.pi * f * shift_s))[:len(s)]
    return s.with_samples(out)


def _measured_peak_advance(x_tilde: Signal, x: Signal) -> float:
    """Sub-sample correlation peak displacement, log-parabola refined.

    Positive return means the peak moved to an earlier lag (negated peak
    position, matching the sign convention of attack.predict_advance).
    Refinement runs on the raw correlation grid: interpolating first would
    bury nanosecond shifts of these very flat peaks under resampler ripple,
    and the log of a Gaussian-shaped peak is locally an exact parabola.
    """
    corr = cross_correlate(x_tilde, x)
    power = np.abs(corr.values) ** 2
    z = corr.zero_lag_index
    step = 1.0 / x.rate
    w = 8          # lag window in samples; perturbations under study stay well inside
    lo = z - w
    k = lo + int(np.argmax(power[lo:z + w + 1]))
    ym, y0, yp = np.log(power[k - 1]), np.log(power[k]), np.log(power[k + 1])
    denom = ym - 2.0 * y0 + yp
    frac = 0.0 if denom == 0 else 0.5 * (ym - yp) / denom
    return -(k + frac - z) * step


def advance_prediction_study(pulse_family: PulseFamily, deltas) -> list[dict]:
    """First-order peak-shift prediction vs dense-grid measurement.

    For each delta the perturbed signal is the pulse shifted earlier by
    delta; rows report the predicted and measured advances (both positive,
    ideally equal to delta) and their relative disagreement.
    """
    x = pulse_family.build()
    rows = []
    for delta in np.atleast_1d(np.asarray(deltas, dtype=np.float64)):
        if delta < 0:
            raise ValueError("deltas must be nonnegative advances")
        x_tilde = _fft_time_shift(x, delta)
        predicted = attack.predict_advance(x, x_tilde)
        measured = _measured_peak_advance(x_tilde, x)
        rel = abs(predicted - measured) / max(abs(measured), 1e-18)
        rows.append({"delta_s": float(delta), "predicted_s": float(predicted),
                     "measured_s": float(measured), "rel_err": float(rel)})
    return rows


def random_perturbation_pair(seed: int) -> tuple[Signal, Signal]:
    """Seeded (x, delta_x) pair for identity sweeps.

    Base signals are real Gaussian bursts; the perturbation cycles through
    truncation masks, sub-sample shifts, and NGD filtering, all of which keep
    <delta_x, x> real so the closed-form derivative applies.
    """
    rng = np.random.default_rng(seed)
    rate = 40e6
    n = 2048
    t = (np.arange(n) - n / 2) / rate
    x_arr = np.zeros(n)
    for _ in range(int(rng.integers(1, 4))):
        center = rng.uniform(-8e-6, 8e-6)
        width = rng.uniform(0.5e-6, 2e-6)
        amp = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
        x_arr = x_arr + amp * np.exp(-(t - center) ** 2 / (2.0 * width**2))
    x = Signal(x_arr, rate, 0.0)
    kind = int(seed) % 3
    if kind == 0:
        period = 1e-6
        spec = attack.MaskSpec(kind="truncation", period_s=period,
                               offset_s=float(rng.uniform(0, period)),
                               duty=float(rng.uniform(0.4, 0.9)),
                               edge_s=period / 16)
        x_tilde = attack.apply_mask(x, spec)
    elif kind == 1:
        x_tilde = _fft_time_shift(x, float(rng.uniform(1e-9, 20e-9)))
    else:
        spec = attack.NgdFilterSpec(delta_t_s=float(rng.uniform(20e-9, 80e-9)))
        x_tilde = attack.apply_ngd(x, spec)
    return x, x.with_samples(x_tilde.samples - x.samples)
