"""Channel-sounding SYNC packet construction and GFSK modulation.

Packet layout: preamble || access address (32 bits) || trailer (4 bits)
|| optional payload sequence (random bits or a marked sounding sequence).
Bits are indexed in transmission order; the access address hex value reads
the first transmitted bit as the least significant bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sigproc import Signal

GFSK_MOD_INDEX = 0.5   # h
GFSK_BT = 0.5
GAUSS_SPAN_SYMBOLS = 3          # truncation width of the Gaussian pulse filter
ACCESS_ADDRESS_BITS = 32
TRAILER_BITS = 4
MAX_RANDOM_BITS = 128
MARKER_LEN = 4
MARKER_PATTERNS = ((0, 1, 1, 0), (1, 0, 0, 1))


@dataclass(frozen=True)
class PhyMode:
    name: str
    symbol_rate: float
    preamble_bits: int

    def __post_init__(self):
        if self.symbol_rate <= 0 or self.preamble_bits <= 0:
            raise ValueError("invalid PHY parameters")


LE1M = PhyMode("LE1M", 1e6, 8)
LE2M = PhyMode("LE2M", 2e6, 16)
_PHYS = {"LE1M": LE1M, "LE2M": LE2M}


def phy_from_name(name: str) -> PhyMode:
    try:
        return _PHYS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown PHY {name!r}, expected one of {sorted(_PHYS)}") from None


DEFAULT_PAYLOAD_BITS = {"none": 0, "random": 128, "sounding": 96}


@dataclass(frozen=True)
class CsSyncConfig:
    """Recipe for one SYNC packet.  Everything random derives from `seed`.

    payload_bits of None picks the usual size for the payload kind (128
    random, 96 sounding).
    """

    phy: PhyMode = LE1M
    payload_kind: str = "none"        # none | random | sounding
    payload_bits: int | None = None
    n_markers: int = 3                # sounding only
    seed: int = 0

    def __post_init__(self):
        if self.payload_kind not in ("none", "random", "sounding"):
            raise ValueError(f"unknown payload_kind {self.payload_kind!r}")
        if self.payload_bits is None:
            object.__setattr__(self, "payload_bits",
                               DEFAULT_PAYLOAD_BITS[self.payload_kind])
        if self.payload_kind == "none" and self.payload_bits != 0:
            raise ValueError("payload_bits must be 0 for payload_kind none")
        if self.payload_kind == "random":
            if not (1 <= self.payload_bits <= MAX_RANDOM_BITS):
                raise ValueError(f"random payload limited to 1..{MAX_RANDOM_BITS} bits")
        if self.payload_kind == "sounding":
            if self.payload_bits < 1:
                raise ValueError("sounding payload needs at least 1 bit")
            if self.n_markers < 0:
                raise ValueError("n_markers must be >= 0")
        if self.seed < 0 or self.seed > 2**64 - 1:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class CsSyncPacket:
    config: CsSyncConfig
    bits: np.ndarray
    waveform: Signal
    oversampling: int
    access_address: np.ndarray
    marker_positions: tuple[int, ...] | None = None

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.int8)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        aa = np.asarray(self.access_address, dtype=np.int8)
        aa.setflags(write=False)
        object.__setattr__(self, "access_address", aa)
        if len(self.waveform) != bits.size * self.oversampling:
            raise ValueError("waveform length must be n_bits * oversampling")

    @property
    def n_bits(self) -> int:
        return int(self.bits.size)


def access_address_hex(bits) -> str:
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size != ACCESS_ADDRESS_BITS:
        raise ValueError("access address must be 32 bits")
    value = int(np.sum(bits << np.arange(ACCESS_ADDRESS_BITS)))
    return f"{value:08x}"


def _max_run_length(bits: np.ndarray) -> int:
    best = run = 1
    for k in range(1, bits.size):
        run = run + 1 if bits[k] == bits[k - 1] else 1
        best = max(best, run)
    return best


def draw_access_address(rng: np.random.Generator) -> np.ndarray:
    # sanity rule: reject addresses with more than 6 identical bits in a row
    while True:
        aa = rng.integers(0, 2, ACCESS_ADDRESS_BITS, dtype=np.int8)
        if _max_run_length(aa) <= 6:
            return aa


def sounding_sequence(n_bits: int, n_markers: int, seed: int):
    """Alternating 1010... base with `n_markers` non-overlapping 4-bit markers.

    Each marker is 0110 or 1001 (seeded choice), replacing the alternation at
    its position; either pattern differs from the local alternation in exactly
    two bit positions.  Returns (bits, marker_positions).
    """
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    if n_markers * MARKER_LEN > n_bits:
        raise ValueError("markers do not fit in the sequence")
    rng = np.random.default_rng(seed)
    bits = ((np.arange(n_bits) + 1) % 2).astype(np.int8)  # 1,0,1,0,...
    if n_markers == 0:
        return bits, ()
    # non-overlapping placement: sorted draws in the gap space, then spread
    free = n_bits - MARKER_LEN * n_markers
    slack = np.sort(rng.integers(0, free + 1, size=n_markers))
    positions = tuple(int(slack[j] + MARKER_LEN * j) for j in range(n_markers))
    for pos in positions:
        pattern = MARKER_PATTERNS[int(rng.integers(0, 2))]
        bits[pos:pos + MARKER_LEN] = pattern
    return bits, positions


def _alternating(first: int, count: int) -> np.ndarray:
    out = np.empty(count, dtype=np.int8)
    out[0::2] = first
    out[1::2] = 1 - first
    return out


def build_cs_sync(config: CsSyncConfig, oversampling: int = 8) -> CsSyncPacket:
    """Assemble the bit sequence for a SYNC packet and modulate it.

    Preamble alternates starting from the complement of the access address's
    first bit; the trailer continues the alternation off the last address bit.
    """
    if oversampling < 2:
        raise ValueError("oversampling must be >= 2")
    rng = np.random.default_rng(config.seed)
    aa = draw_access_address(rng)
    preamble = _alternating(1 - int(aa[0]), config.phy.preamble_bits)
    trailer = _alternating(1 - int(aa[-1]), TRAILER_BITS)
    marker_positions = None
    if config.payload_kind == "none":
        payload = np.empty(0, dtype=np.int8)
    elif config.payload_kind == "random":
        payload = rng.integers(0, 2, config.payload_bits, dtype=np.int8)
    else:
        payload, marker_positions = sounding_sequence(
            config.payload_bits, config.n_markers, config.seed + 1)
    bits = np.concatenate([preamble, aa, trailer, payload])
    waveform = gfsk_modulate(bits, config.phy, oversampling)
    return CsSyncPacket(config=config, bits=bits, waveform=waveform,
                        oversampling=oversampling, access_address=aa,
                        marker_positions=marker_positions)


def _gaussian_pulse_filter(oversampling: int, bt: float) -> np.ndarray:
    # standard deviation of the Gaussian frequency pulse, in samples
    sigma = np.sqrt(np.log(2.0)) / (2.0 * np.pi * bt) * oversampling
    half = (GAUSS_SPAN_SYMBOLS * oversampling) // 2
    t = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return g / g.sum()  # unit DC gain so a constant NRZ level passes unchanged


def instantaneous_frequency(bits, phy: PhyMode, oversampling: int,
                            h: float = GFSK_MOD_INDEX, bt: float = GFSK_BT) -> np.ndarray:
    """Gaussian-filtered NRZ frequency trajectory in Hz, one value per sample."""
    bits = np.asarray(bits)
    if bits.size == 0:
        raise ValueError("need at least one bit")
    if not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bits must be 0/1")
    nrz = np.repeat(2.0 * bits.astype(np.float64) - 1.0, oversampling)
    shaped = np.convolve(nrz, _gaussian_pulse_filter(oversampling, bt), mode="same")
    return 0.5 * h * phy.symbol_rate * shaped


def gfsk_modulate(bits, phy: PhyMode, oversampling: int,
                  h: float = GFSK_MOD_INDEX, bt: float = GFSK_BT) -> Signal:
    """GFSK waveform with exactly unit envelope at rate symbol_rate * oversampling."""
    rate = phy.symbol_rate * oversampling
    finst = instantaneous_frequency(bits, phy, oversampling, h=h, bt=bt)
    phase = 2.0 * np.pi * np.cumsum(finst) / rate
    return Signal(np.exp(1j * phase), rate, 0.0)


def gfsk_demodulate(s: Signal, phy: PhyMode, sync_index: int,
                    n_bits: int | None = None) -> np.ndarray:
    """Hard bit decisions from the phase increment across each symbol.

    sync_index is the sample index of the first symbol center.  The increment
    for symbol i is measured between the two symbol boundaries around center
    sync_index + i * oversampling.
    """
    ratio = s.rate / phy.symbol_rate
    oversampling = int(round(ratio))
    if abs(ratio - oversampling) > 1e-9 or oversampling < 2:
        raise ValueError("sample rate must be an integer multiple of the symbol rate")
    half = oversampling // 2
    if sync_index < half:
        raise ValueError("sync_index leaves no room for the first symbol")
    # last read is centers[-1] + half, which must stay inside the signal
    max_bits = (len(s) - 1 - sync_index - half) // oversampling + 1
    if n_bits is None:
        n_bits = max_bits
    if n_bits < 1 or n_bits > max_bits:
        raise ValueError("requested bits extend past the end of the signal")
    centers = sync_index + oversampling * np.arange(n_bits)
    inc = s.samples[centers + half] * np.conj(s.samples[centers - half])
    return (np.angle(inc) > 0).astype(np.int8)


def differential_template(bits, phy: PhyMode, oversampling: int) -> Signal:
    """Ideal noise-free reference waveform; same generation path as modulation."""
    return gfsk_modulate(bits, phy, oversampling)


def packet_descriptor(packet: CsSyncPacket) -> dict:
    """JSON-ready packet metadata."""
    return {
        "phy": packet.config.phy.name,
        "access_address_hex": access_address_hex(packet.access_address),
        "payload_kind": packet.config.payload_kind,
        "n_bits": packet.n_bits,
        "seed": packet.config.seed,
        "oversampling": packet.oversampling,
    }
