"""Attack-side transforms: temporal masks and negative-group-delay filtering.

The mask path multiplies a symbol-periodic window onto the waveform.  The NGD
path runs the signal through H = 1 + jwD/(1 + jwD) evaluated around a center
frequency (w = 2 pi (f - fc), D = delta_t).  That response is causal, has
gain bounded by [1, 2], and shows a group delay of -D near the band center.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft
from scipy import signal as _sps

from .sigproc import DEFAULT_FFT_TAIL, LinearFilter, Signal, frequency_shift

MASK_KINDS = ("truncation", "derivative_exponential")
NGD_REALIZATIONS = ("frequency_domain", "rational_discrete")


@dataclass(frozen=True)
class MaskSpec:
    """Symbol-periodic mask description.

    truncation: keep the leading `duty` fraction of each period, with
    raised-cosine ramps of width edge_s at both transitions.
    derivative_exponential: exp(alpha * g'(t)) from a caller-supplied
    frequency-pulse derivative sampled over one period.
    """

    kind: str
    period_s: float
    offset_s: float = 0.0
    duty: float = 0.5
    edge_s: float = 0.0
    alpha: float = 0.3
    pulse_derivative: np.ndarray | None = None
    complex_allowed: bool = False

    def __post_init__(self):
        if self.kind not in MASK_KINDS:
            raise ValueError(f"unknown mask kind {self.kind!r}")
        if self.period_s <= 0:
            raise ValueError("period_s must be positive")
        if self.kind == "truncation":
            if not (0.0 < self.duty <= 1.0):
                raise ValueError("duty must be in (0, 1]")
            if self.edge_s < 0 or self.edge_s > self.period_s * min(self.duty, 1.0 - self.duty + 1e-12):
                raise ValueError("edge_s must fit inside the kept window")
        else:
            if self.pulse_derivative is None:
                raise ValueError("derivative_exponential needs pulse_derivative")
            pd = np.asarray(self.pulse_derivative, dtype=np.complex128)
            if pd.ndim != 1 or pd.size < 2 or not np.all(np.isfinite(pd)):
                raise ValueError("pulse_derivative must be a finite 1-d vector")
            if not self.complex_allowed and np.any(pd.imag != 0):
                raise ValueError("complex pulse_derivative requires complex_allowed")
            pd.setflags(write=False)
            object.__setattr__(self, "pulse_derivative", pd)


def _truncation_profile(u: np.ndarray, duty: float, edge_frac: float) -> np.ndarray:
    """Mask value over normalized period phase u in [0, 1)."""
    m = np.zeros_like(u)
    if edge_frac <= 0:
        m[u < duty] = 1.0
        return m
    e = edge_frac
    rise = u < e
    m[rise] = 0.5 * (1.0 - np.cos(np.pi * u[rise] / e))
    flat = (u >= e) & (u < duty - e)
    m[flat] = 1.0
    fall = (u >= duty - e) & (u < duty)
    m[fall] = 0.5 * (1.0 - np.cos(np.pi * (duty - u[fall]) / e))
    return m


def build_mask(spec: MaskSpec, rate: float, n_samples: int) -> np.ndarray:
    """Sample the periodic mask; element k sits at time k/rate - offset_s.

    The periodic phase is computed in sample units, not seconds: sample
    indices are exact in floating point, so integer-period masks classify
    transition samples identically in every period.
    """
    if rate <= 0 or n_samples < 1:
        raise ValueError("rate and n_samples must be positive")
    period = spec.period_s * rate
    k = np.arange(n_samples) - spec.offset_s * rate
    u = np.mod(k, period) / period
    if spec.kind == "truncation":
        m = _truncation_profile(u, spec.duty, spec.edge_s / spec.period_s)
        return m.astype(np.float64)
    pd = spec.pulse_derivative
    # interpolate the one-period derivative onto the sampling phase grid
    src = np.arange(pd.size) / pd.size
    gp_re = np.interp(u, src, pd.real, period=1.0)
    gp = gp_re.astype(np.complex128)
    if np.any(pd.imag != 0):
        gp += 1j * np.interp(u, src, pd.imag, period=1.0)
    m = np.exp(spec.alpha * gp)
    if not spec.complex_allowed:
        m = m.real.astype(np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("mask magnitude must stay bounded")
    return m


def apply_mask(s: Signal, spec: MaskSpec) -> Signal:
    return s.with_samples(s.samples * build_mask(spec, s.rate, len(s)))


@dataclass(frozen=True)
class NgdFilterSpec:
    delta_t_s: float
    center_freq_hz: float = 0.0
    realization: str = "frequency_domain"

    def __post_init__(self):
        if self.delta_t_s <= 0:
            raise ValueError("delta_t_s must be positive")
        if self.realization not in NGD_REALIZATIONS:
            raise ValueError(f"unknown realization {self.realization!r}")


def ngd_response(spec: NgdFilterSpec, freqs) -> np.ndarray:
    """Complex response at the given absolute frequencies in Hz.

    H = 1 + jwD/(1 + jwD) with w = 2 pi (f - center); conjugate-symmetric
    about the center frequency, magnitude between 1 (center) and 2 (far out).
    """
    f = np.atleast_1d(np.asarray(freqs, dtype=np.float64))
    jwd = 1j * 2.0 * np.pi * (f - spec.center_freq_hz) * spec.delta_t_s
    return 1.0 + jwd / (1.0 + jwd)


def ngd_group_delay(spec: NgdFilterSpec, freqs) -> np.ndarray:
    """Closed-form group delay of the NGD response, in seconds."""
    f = np.atleast_1d(np.asarray(freqs, dtype=np.float64))
    u = 2.0 * np.pi * (f - spec.center_freq_hz) * spec.delta_t_s
    u2 = u * u
    return -spec.delta_t_s * (1.0 - 2.0 * u2) / ((1.0 + u2) * (1.0 + 4.0 * u2))


def ngd_linear_filter(spec: NgdFilterSpec, rate: float, n_grid: int = 8192) -> LinearFilter:
    """Tabulated LinearFilter view of the response over [-rate/2, rate/2]."""
    grid = np.linspace(-rate / 2, rate / 2, n_grid)
    return LinearFilter.from_frequency_response(grid, ngd_response(spec, grid), rate)


def apply_ngd(s: Signal, spec: NgdFilterSpec, tail: int = DEFAULT_FFT_TAIL) -> Signal:
    """Filter a signal through the NGD response.

    frequency_domain: exact response on a zero-padded FFT grid, truncated back
    to the input window.  rational_discrete: bilinear-transformed one-pole
    section run as a causal difference equation around the center frequency.
    """
    if abs(spec.center_freq_hz) >= s.rate / 2:
        raise ValueError("center frequency must sit inside the Nyquist band")
    if spec.delta_t_s * s.rate < 0.1:
        raise ValueError("delta_t_s is unresolvable at this sample rate")
    if spec.realization == "frequency_domain":
        n = len(s)
        nfft = _fft.next_fast_len(n + int(tail))
        grid = np.fft.fftfreq(nfft, d=1.0 / s.rate)
        y = _fft.ifft(_fft.fft(s.samples, nfft) * ngd_response(spec, grid))[:n]
        return s.with_samples(y)
    # causal realization of H(s) = (1 + 2sD)/(1 + sD) at baseband, then shift back
    d = spec.delta_t_s
    bz, az = _sps.bilinear([2.0 * d, 1.0], [d, 1.0], fs=s.rate)
    base = frequency_shift(s, -spec.center_freq_hz) if spec.center_freq_hz else s
    y = _sps.lfilter(bz, az, base.samples)
    out = Signal(y, s.rate, s.t0)
    return frequency_shift(out, spec.center_freq_hz) if spec.center_freq_hz else out


def _central_derivative(x: np.ndarray, rate: float) -> np.ndarray:
    """Central-difference time derivative, one-sided at the endpoints."""
    d = np.empty_like(x)
    d[1:-1] = (x[2:] - x[:-2]) * (0.5 * rate)
    d[0] = (x[1] - x[0]) * rate
    d[-1] = (x[-1] - x[-2]) * rate
    return d


def _check_aligned(x: Signal, x_tilde: Signal):
    if len(x) != len(x_tilde) or abs(x.rate - x_tilde.rate) > 1e-6 * x.rate \
            or abs(x.t0 - x_tilde.t0) > 1e-12:
        raise ValueError("signals must share length, rate, and start time")


def perturbation_projection(x: Signal, x_tilde: Signal) -> float:
    """Re<x_tilde, x'> with x' from central differences.

    Positive means the perturbation pushes the correlation peak earlier
    (distance decrease); the clean signal itself projects to zero.
    """
    _check_aligned(x, x_tilde)
    xp = _central_derivative(x.samples, x.rate)
    return float(np.real(np.vdot(xp, x_tilde.samples)))


def predict_advance(x: Signal, x_tilde: Signal) -> float:
    """First-order prediction of the correlation peak displacement, in seconds.

    Peak-power derivative at zero lag is the closed form
    -2 Re{<dx, x'> <x_tilde, x>*}; curvature comes from the second finite
    difference of |R(tau)|^2 there.  Positive result means the peak moves
    to an earlier lag (a range reduction), same sign convention as
    perturbation_projection.
    """
    _check_aligned(x, x_tilde)
    dt = 1.0 / x.rate
    xp = _central_derivative(x.samples, x.rate)
    dx = x_tilde.samples - x.samples
    inner_dx_xp = np.vdot(xp, dx)           # <dx, x'>
    inner_xt_x = np.vdot(x.samples, x_tilde.samples)  # <x_tilde, x>
    num = -2.0 * np.real(inner_dx_xp * np.conj(inner_xt_x))
    # autocorrelation power at lags -1, 0, +1
    r0 = np.vdot(x.samples, x.samples)
    r1 = np.vdot(x.samples[:-1], x.samples[1:])   # <x, x shifted by +1>
    p0 = np.abs(r0) ** 2
    p1 = np.abs(r1) ** 2
    den = (2.0 * p1 - 2.0 * p0) / dt**2    # symmetric: P(+dt) == P(-dt)
    if den >= 0:
        raise ValueError("degenerate correlation peak: nonnegative curvature")
    return float(num / den)


def phase_offset_sweep(x: Signal, delta_x: Signal, phases) -> np.ndarray:
    """Re{e^{j phi} <dx, x'>} for each phase offset phi."""
    _check_aligned(x, delta_x)
    xp = _central_derivative(x.samples, x.rate)
    v = np.vdot(xp, delta_x.samples)
    ph = np.atleast_1d(np.asarray(phases, dtype=np.float64))
    return np.real(np.exp(1j * ph) * v)
