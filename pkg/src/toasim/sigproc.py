"""Sampled-signal containers and the DSP primitives everything else builds on.

All signals are uniformly sampled complex vectors with an explicit sample rate
and start time.  Operations are pure functions: no global state, and every
random draw comes from a caller-supplied seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import fft as _fft
from scipy import signal as _sps

C_LIGHT = 299_792_458.0  # m/s, exact

# Zero-padding tail appended before frequency-domain filtering so circular
# wrap-around stays out of the analysis window.  4096 samples covers every
# impulse-response tail used in this package by orders of magnitude.
DEFAULT_FFT_TAIL = 4096

# Windowed-sinc resampling kernel: 32 zero crossings per side at the limiting
# rate (8 symbols at the 4-sample-per-symbol legs), Kaiser beta 11 for a
# stopband around -110 dB.
RESAMPLE_KERNEL_HALF_CYCLES = 32
RESAMPLE_KAISER_BETA = 11.0
# Cutoff sits slightly above the slower rate's Nyquist.  A sampled input has
# no content beyond its own Nyquist, so the extra margin costs nothing there,
# and it keeps the transition band off the occupied spectrum.  Pushing it any
# higher would start passing the first polyphase image.
RESAMPLE_CUTOFF_MARGIN = 0.02


def _as_samples(x) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if arr.size < 1:
        raise ValueError("signal needs at least one sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError("samples must be finite")
    return arr


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled complex signal.

    samples: complex128 vector (read-only)
    rate:    samples per second, > 0
    t0:      time of samples[0] in seconds
    """

    samples: np.ndarray
    rate: float
    t0: float = 0.0

    def __post_init__(self):
        arr = _as_samples(self.samples)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        rate = float(self.rate)
        if not np.isfinite(rate) or rate <= 0:
            raise ValueError("rate must be positive and finite")
        object.__setattr__(self, "rate", rate)
        t0 = float(self.t0)
        if not np.isfinite(t0):
            raise ValueError("t0 must be finite")
        object.__setattr__(self, "t0", t0)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return len(self) / self.rate

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) / self.rate

    def with_samples(self, samples) -> "Signal":
        return Signal(samples, self.rate, self.t0)


@dataclass(frozen=True)
class LinearFilter:
    """LTI filter in one of two forms.

    Rational: feedforward b and feedback a at reference rate `rate`
    (a[0] normalized to 1, poles strictly inside the unit circle).
    Tabulated: complex response over an explicit frequency grid in Hz.
    """

    rate: float
    b: np.ndarray | None = None
    a: np.ndarray | None = None
    freqs: np.ndarray | None = None
    response: np.ndarray | None = None

    def __post_init__(self):
        rate = float(self.rate)
        if not np.isfinite(rate) or rate <= 0:
            raise ValueError("rate must be positive and finite")
        object.__setattr__(self, "rate", rate)
        rational = self.b is not None or self.a is not None
        tabulated = self.freqs is not None or self.response is not None
        if rational == tabulated:
            raise ValueError("exactly one of rational or tabulated form required")
        if rational:
            b = np.atleast_1d(np.asarray(self.b, dtype=np.float64 if np.isrealobj(self.b) else np.complex128))
            a = np.atleast_1d(np.asarray(self.a if self.a is not None else [1.0], dtype=np.float64))
            if a[0] == 0:
                raise ValueError("a[0] must be nonzero")
            b = b / a[0]
            a = a / a[0]
            if a.size > 1:
                poles = np.roots(a)
                if poles.size and np.max(np.abs(poles)) >= 1.0:
                    raise ValueError("unstable filter: pole on or outside the unit circle")
            object.__setattr__(self, "b", b)
            object.__setattr__(self, "a", a)
        else:
            freqs = np.asarray(self.freqs, dtype=np.float64)
            resp = np.asarray(self.response, dtype=np.complex128)
            if freqs.ndim != 1 or freqs.size < 2 or freqs.shape != resp.shape:
                raise ValueError("tabulated form needs matching 1-d freqs/response, >= 2 points")
            if not np.all(np.diff(freqs) > 0):
                raise ValueError("frequency grid must be strictly increasing")
            if not (np.all(np.isfinite(freqs)) and np.all(np.isfinite(resp))):
                raise ValueError("tabulated response must be finite")
            freqs.setflags(write=False)
            resp.setflags(write=False)
            object.__setattr__(self, "freqs", freqs)
            object.__setattr__(self, "response", resp)

    @property
    def is_rational(self) -> bool:
        return self.b is not None

    @classmethod
    def from_coefficients(cls, b, a, rate: float) -> "LinearFilter":
        return cls(rate=rate, b=b, a=a)

    @classmethod
    def from_frequency_response(cls, freqs, response, rate: float) -> "LinearFilter":
        return cls(rate=rate, freqs=freqs, response=response)

    def frequency_response(self, freqs) -> np.ndarray:
        """Evaluate the complex response at the given frequencies in Hz."""
        f = np.atleast_1d(np.asarray(freqs, dtype=np.float64))
        if self.is_rational:
            w = 2.0 * np.pi * f / self.rate
            z = np.exp(-1j * w)
            num = np.polyval(self.b[::-1], z)
            den = np.polyval(self.a[::-1], z)
            return num / den
        # tolerate round-off overhang at the grid ends (fftfreq vs linspace)
        slack = 1e-9 * (self.freqs[-1] - self.freqs[0])
        if f.min() < self.freqs[0] - slack or f.max() > self.freqs[-1] + slack:
            raise ValueError("requested frequency outside tabulated grid")
        f = np.clip(f, self.freqs[0], self.freqs[-1])
        re = np.interp(f, self.freqs, self.response.real)
        im = np.interp(f, self.freqs, self.response.imag)
        return re + 1j * im

    def cascade(self, other: "LinearFilter") -> "LinearFilter":
        """Series combination of two filters at the same reference rate."""
        if abs(self.rate - other.rate) > 1e-6 * self.rate:
            raise ValueError("cascade requires matching rates")
        if self.is_rational and other.is_rational:
            # convolve, not polymul: polymul strips leading zeros, which are
            # significant delay taps in lowest-order-first layout
            return LinearFilter(rate=self.rate,
                                b=np.convolve(self.b, other.b),
                                a=np.convolve(self.a, other.a))
        # fall back to a tabulated product on the finer grid
        if not self.is_rational:
            grid = self.freqs
        else:
            grid = other.freqs
        return LinearFilter(rate=self.rate, freqs=grid,
                            response=self.frequency_response(grid) * other.frequency_response(grid))


@dataclass(frozen=True)
class Correlation:
    """Cross-correlation values over a uniform lag axis.

    values[k] corresponds to lag (k - zero_lag_index)/rate + offset seconds,
    where offset carries the start-time difference of the correlated signals.
    """

    values: np.ndarray
    rate: float
    zero_lag_index: int
    offset: float = 0.0

    def __post_init__(self):
        arr = _as_samples(self.values)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if not (0 <= self.zero_lag_index < arr.size):
            raise ValueError("zero_lag_index out of bounds")

    def __len__(self) -> int:
        return self.values.size

    def lags(self) -> np.ndarray:
        return (np.arange(len(self)) - self.zero_lag_index) / self.rate + self.offset


def cross_correlate(a: Signal, b: Signal) -> Correlation:
    """Full linear cross-correlation, values[k] = sum_t a[t] conj(b[t - k]).

    Raw sample sums (no dt weighting).  The lag axis offset carries
    a.t0 - b.t0 so absolute arrival times survive the correlation.
    """
    if abs(a.rate - b.rate) > 1e-6 * a.rate:
        raise ValueError("cross_correlate requires equal rates")
    v = _sps.correlate(a.samples, b.samples, mode="full", method="fft")
    return Correlation(values=v, rate=a.rate, zero_lag_index=len(b) - 1,
                       offset=a.t0 - b.t0)


def frequency_shift(s: Signal, shift_hz: float) -> Signal:
    """Multiply by exp(j 2 pi f t) on the signal's absolute time axis."""
    f = float(shift_hz)
    if abs(f) >= s.rate / 2:
        raise ValueError("shift exceeds Nyquist")
    ph = np.exp(2j * np.pi * f * s.times())
    return s.with_samples(s.samples * ph)


def _resample_kernel(up: int, down: int) -> np.ndarray:
    m = max(up, down)
    half = RESAMPLE_KERNEL_HALF_CYCLES * m
    k = np.arange(-half, half + 1)
    c = 1.0 + RESAMPLE_CUTOFF_MARGIN
    h = np.sinc(k * c / m) * c / m
    h *= np.kaiser(h.size, RESAMPLE_KAISER_BETA)
    return h


def resample(s: Signal, new_rate: float) -> Signal:
    """Band-limited rate conversion by polyphase windowed-sinc interpolation.

    The ratio must be rational with small terms.  Start time is preserved;
    duration is preserved to within one output sample.  When decimating, the
    kernel is the anti-alias filter, so the caller only needs the occupied
    band below the new Nyquist.
    """
    new_rate = float(new_rate)
    if not np.isfinite(new_rate) or new_rate <= 0:
        raise ValueError("new_rate must be positive and finite")
    if abs(new_rate - s.rate) <= 1e-9 * s.rate:
        return s
    frac = Fraction(new_rate / s.rate).limit_denominator(1024)
    if frac.numerator == 0 or abs(float(frac) * s.rate - new_rate) > 1e-6 * new_rate:
        raise ValueError("rate ratio is not a small rational")
    up, down = frac.numerator, frac.denominator
    y = _sps.resample_poly(s.samples, up, down, window=_resample_kernel(up, down))
    return Signal(y, new_rate, s.t0)


def apply_filter(s: Signal, h: LinearFilter, tail: int = DEFAULT_FFT_TAIL) -> Signal:
    """Run a signal through a filter; output length equals input length.

    Rational filters run as causal difference equations.  Tabulated filters
    multiply on a zero-padded FFT grid (pad >= tail samples) and truncate
    back to the input window.
    """
    if abs(h.rate - s.rate) > 1e-6 * s.rate:
        raise ValueError("filter reference rate does not match signal rate")
    if h.is_rational:
        y = _sps.lfilter(h.b, h.a, s.samples)
        return s.with_samples(y)
    if h.freqs[0] > -s.rate / 2 or h.freqs[-1] < s.rate / 2:
        raise ValueError("tabulated grid must cover [-rate/2, rate/2]")
    n = len(s)
    nfft = _fft.next_fast_len(n + int(tail))
    grid = np.fft.fftfreq(nfft, d=1.0 / s.rate)
    resp = h.frequency_response(grid)
    y = _fft.ifft(_fft.fft(s.samples, nfft) * resp)[:n]
    return s.with_samples(y)


def group_delay(h: LinearFilter, freqs, step_hz: float = 1e3) -> np.ndarray:
    """Group delay -dphi/domega in seconds at each requested frequency.

    Central difference of the response phase over a grid step <= step_hz.
    Entries where the response magnitude collapses (phase undefined near
    nulls) come back as NaN.
    """
    f = np.atleast_1d(np.asarray(freqs, dtype=np.float64))
    if step_hz <= 0 or step_hz > 1e3:
        raise ValueError("step_hz must be in (0, 1000]")
    d = step_hz / 2.0
    hp = h.frequency_response(f + d)
    hm = h.frequency_response(f - d)
    # wrapped phase difference between two close points; no global unwrap needed
    dphi = np.angle(hp * np.conj(hm))
    tau = -dphi / (2.0 * np.pi * 2.0 * d)
    mag = np.minimum(np.abs(hp), np.abs(hm))
    floor = 1e-9 * max(np.max(np.abs(hp)), np.max(np.abs(hm)), 1e-300)
    tau = np.where(mag <= floor, np.nan, tau)
    return tau


def rms_bandwidth(s: Signal) -> float:
    """RMS bandwidth: sqrt of the energy-weighted second moment of frequency.

    Frequencies are taken relative to the baseband center (0 Hz).
    """
    spec = np.abs(_fft.fft(s.samples)) ** 2
    total = spec.sum()
    if total <= 0:
        raise ValueError("zero-energy signal has no bandwidth")
    f = np.fft.fftfreq(len(s), d=1.0 / s.rate)
    return float(np.sqrt(np.sum(f * f * spec) / total))


def crlb_toa_std(snr_linear: float, beta_rms_hz: float) -> float:
    """Lower bound on ToA standard deviation: 1/sqrt(8 pi^2 SNR beta^2).

    snr_linear is the total (energy) signal-to-noise ratio, not per sample.
    """
    if snr_linear <= 0 or beta_rms_hz <= 0:
        raise ValueError("snr and bandwidth must be positive")
    return 1.0 / np.sqrt(8.0 * np.pi**2 * snr_linear * beta_rms_hz**2)


def add_awgn(s: Signal, snr_db: float | None, seed: int,
             power_extent: tuple[int, int] | None = None) -> Signal:
    """Add complex circular white Gaussian noise at the given per-sample SNR.

    snr_db of None or +inf means no noise.  Signal power is measured over
    power_extent (sample index range) when given, otherwise the whole vector;
    this keeps zero padding from diluting the reference power.
    """
    if snr_db is None or np.isinf(snr_db):
        return s
    if power_extent is None:
        ref = s.samples
    else:
        i0, i1 = int(power_extent[0]), int(power_extent[1])
        if not (0 <= i0 < i1 <= len(s)):
            raise ValueError("power_extent out of bounds")
        ref = s.samples[i0:i1]
    p = float(np.mean(np.abs(ref) ** 2))
    if p <= 0:
        raise ValueError("cannot set SNR against a zero-power signal")
    var = p / 10.0 ** (float(snr_db) / 10.0)
    rng = np.random.default_rng(seed)
    n = rng.normal(0.0, np.sqrt(var / 2.0), size=(2, len(s)))
    return s.with_samples(s.samples + n[0] + 1j * n[1])


def butterworth_bandpass(order: int, f_lo: float, f_hi: float, rate: float) -> LinearFilter:
    """Butterworth bandpass of the given overall order (-3 dB at f_lo, f_hi)."""
    if order < 2 or order % 2 != 0:
        raise ValueError("order must be even and >= 2")
    if not (0 < f_lo < f_hi < rate / 2):
        raise ValueError("band edges must satisfy 0 < f_lo < f_hi < rate/2")
    b, a = _sps.butter(order // 2, [f_lo, f_hi], btype="bandpass", fs=rate)
    return LinearFilter.from_coefficients(b, a, rate)
