"""BLE carrier generation: GFSK, LE Coded FEC chain, CRC-24 and whitening."""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field

import numpy as np

from .iqcore import SAMPLE_RATE, PhyMode, Waveform, as_bits, bytes_to_bits, int_to_bits

ADV_ACCESS_ADDRESS = 0x8E89BED6
ADV_CRC_INIT = 0x555555
CRC_POLY = 0x00065B  # x^24 + x^10 + x^9 + x^6 + x^4 + x^3 + x + 1, x^24 implicit
CODED_PREAMBLE = np.tile(np.array([0, 0, 1, 1, 1, 1, 0, 0], dtype=np.uint8), 10)
TERM = np.zeros(3, dtype=np.uint8)


class Coding(enum.Enum):
    S2 = 2
    S8 = 8


CI_BITS = {Coding.S8: np.array([0, 0], dtype=np.uint8), Coding.S2: np.array([0, 1], dtype=np.uint8)}


@dataclass(frozen=True)
class GfskParams:
    bt: float = 0.5
    modulation_index: float = 0.5
    symbol_rate: float = 1e6
    samples_per_symbol: int = 16
    filter_span_symbols: int = 3

    def __post_init__(self):
        if not 0 < self.bt <= 1:
            raise ValueError("bt must be in (0, 1]")
        if not 0.45 <= self.modulation_index <= 0.55:
            raise ValueError("modulation_index outside the BLE range [0.45, 0.55]")
        if int(self.samples_per_symbol) != self.samples_per_symbol or self.samples_per_symbol < 2:
            raise ValueError("samples_per_symbol must be an integer >= 2")
        if int(self.filter_span_symbols) != self.filter_span_symbols or self.filter_span_symbols < 1:
            raise ValueError("filter_span_symbols must be a positive integer")

    @property
    def sample_rate(self) -> float:
        return self.symbol_rate * self.samples_per_symbol

    @classmethod
    def for_mode(cls, mode: PhyMode, sample_rate: float = SAMPLE_RATE, **kw) -> "GfskParams":
        sps = sample_rate / mode.symbol_rate
        if sps != int(sps):
            raise ValueError("sample rate is not an integer multiple of the symbol rate")
        return cls(symbol_rate=mode.symbol_rate, samples_per_symbol=int(sps), **kw)


@dataclass(frozen=True)
class CodedPacketConfig:
    pdu: np.ndarray
    ci: Coding = Coding.S8
    access_address: int = ADV_ACCESS_ADDRESS
    crc_init: int = ADV_CRC_INIT
    whitening: bool = True
    channel: int = 37

    def __post_init__(self):
        pdu = as_bits(self.pdu)
        if pdu.size % 8 or not 1 <= pdu.size // 8 <= 255:
            raise ValueError("pdu must be 1..255 whole bytes")
        if not 0 <= self.access_address < 1 << 32:
            raise ValueError("access_address must fit in 32 bits")
        if not 0 <= self.crc_init < 1 << 24:
            raise ValueError("crc_init must fit in 24 bits")
        if not 0 <= self.channel <= 39:
            raise ValueError("channel index must be in 0..39")
        object.__setattr__(self, "pdu", pdu)


def gaussian_taps(bt: float, samples_per_symbol: int, span_symbols: int) -> np.ndarray:
    """Gaussian frequency-pulse taps normalised to unit DC gain."""
    sigma = np.sqrt(np.log(2)) / (2 * np.pi * bt)
    t = np.arange(-span_symbols * samples_per_symbol / 2, span_symbols * samples_per_symbol / 2 + 1)
    t = t / samples_per_symbol
    h = np.exp(-(t**2) / (2 * sigma**2))
    return h / h.sum()


def gfsk_frequency(symbols, params: GfskParams) -> np.ndarray:
    """Gaussian-filtered NRZ train, one value per output sample, in [-1, 1]."""
    sym = as_bits(symbols)
    if sym.size == 0:
        raise ValueError("no symbols to modulate")
    sps = params.samples_per_symbol
    nrz = np.repeat(2.0 * sym - 1.0, sps)
    taps = gaussian_taps(params.bt, sps, params.filter_span_symbols)
    delay = (len(taps) - 1) // 2
    return np.convolve(nrz, taps)[delay : delay + nrz.size]


def gfsk_modulate(symbols, params: GfskParams = GfskParams()) -> Waveform:
    freq = gfsk_frequency(symbols, params)
    step = np.pi * params.modulation_index / params.samples_per_symbol
    phase = np.empty_like(freq)
    phase[0] = 0.0
    np.cumsum(freq[:-1] * step, out=phase[1:])
    return Waveform(np.exp(1j * phase), params.sample_rate)


class ConvEncoder:
    """Rate-1/2 K=4 encoder, generators 1+x+x^2+x^3 and 1+x^2+x^3.

    The delay line persists across calls so fields of one FEC block share
    state; callers flush with three zero TERM bits.
    """

    def __init__(self):
        self.state = [0, 0, 0]  # d1, d2, d3

    def encode(self, bits) -> np.ndarray:
        b = as_bits(bits)
        out = np.empty(2 * b.size, dtype=np.uint8)
        d1, d2, d3 = self.state
        for i, x in enumerate(b.tolist()):
            out[2 * i] = x ^ d1 ^ d2 ^ d3
            out[2 * i + 1] = x ^ d2 ^ d3
            d1, d2, d3 = x, d1, d2
        self.state = [d1, d2, d3]
        return out


def conv_encode(bits) -> np.ndarray:
    return ConvEncoder().encode(bits)


def pattern_map(coded_bits, scheme: Coding) -> np.ndarray:
    b = as_bits(coded_bits)
    if scheme is Coding.S2:
        return b.copy()
    # 0 -> 0011, 1 -> 1100
    return np.repeat(b, 4) ^ np.tile(np.array([0, 0, 1, 1], dtype=np.uint8), b.size)


def crc24(bits, init: int = ADV_CRC_INIT) -> np.ndarray:
    """BLE link-layer CRC; result serialised position 23 first (air order)."""
    reg = init & 0xFFFFFF
    for b in as_bits(bits).tolist():
        fb = ((reg >> 23) & 1) ^ b
        reg = (reg << 1) & 0xFFFFFF
        if fb:
            reg ^= CRC_POLY
    return np.array([(reg >> (23 - i)) & 1 for i in range(24)], dtype=np.uint8)


def whitening_sequence(n: int, channel: int) -> np.ndarray:
    """Output of the x^7 + x^4 + 1 whitening LFSR for a channel index."""
    if not 0 <= channel <= 39:
        raise ValueError("channel index must be in 0..39")
    # the LFSR has period 127, so one period covers any length
    period = _whitening_period(channel)
    return np.resize(period, n)


@functools.lru_cache(maxsize=None)
def _whitening_period(channel: int) -> np.ndarray:
    n = 127
    # position 0 forced to 1, positions 1..6 hold the channel index MSB first
    s = [1] + [(channel >> (5 - i)) & 1 for i in range(6)]
    out = np.empty(n, dtype=np.uint8)
    for i in range(n):
        o = s[6]
        out[i] = o
        s = [o, s[0], s[1], s[2], s[3] ^ o, s[4], s[5]]
    out.setflags(write=False)
    return out


def whiten(bits, channel: int) -> np.ndarray:
    b = as_bits(bits)
    return b ^ whitening_sequence(b.size, channel)


def build_coded_packet(cfg: CodedPacketConfig) -> np.ndarray:
    """Preamble, FEC block 1 (always S=8) and FEC block 2 (S per CI) as GFSK symbols."""
    enc = ConvEncoder()
    block1 = np.concatenate([
        enc.encode(int_to_bits(cfg.access_address, 32)),
        enc.encode(CI_BITS[cfg.ci]),
        enc.encode(TERM),
    ])
    payload = np.concatenate([cfg.pdu, crc24(cfg.pdu, cfg.crc_init)])
    if cfg.whitening:
        payload = whiten(payload, cfg.channel)
    enc = ConvEncoder()
    block2 = np.concatenate([enc.encode(payload), enc.encode(TERM)])
    return np.concatenate([
        CODED_PREAMBLE,
        pattern_map(block1, Coding.S8),
        pattern_map(block2, cfg.ci),
    ])


def build_uncoded_packet(mode: PhyMode, pdu, access_address: int = ADV_ACCESS_ADDRESS,
                         crc_init: int = ADV_CRC_INIT, whitening: bool = True,
                         channel: int = 37) -> np.ndarray:
    pdu = as_bits(pdu)
    if pdu.size == 0:
        raise ValueError("payload must be non-empty")
    aa = int_to_bits(access_address, 32)
    # alternating preamble whose last bit differs from the first access-address bit
    n_pre = 16 if mode is PhyMode.LE2M else 8
    preamble = (np.arange(n_pre, dtype=np.uint8) + aa[0] + n_pre) % 2
    payload = np.concatenate([pdu, crc24(pdu, crc_init)])
    if whitening:
        payload = whiten(payload, channel)
    return np.concatenate([preamble, aa, payload])


def packet_symbols(mode: PhyMode, pdu, *, access_address: int = ADV_ACCESS_ADDRESS,
                   crc_init: int = ADV_CRC_INIT, whitening: bool = True,
                   channel: int = 37) -> np.ndarray:
    if mode.coded:
        ci = Coding.S2 if mode is PhyMode.LE500K else Coding.S8
        return build_coded_packet(CodedPacketConfig(
            pdu=pdu, ci=ci, access_address=access_address, crc_init=crc_init,
            whitening=whitening, channel=channel))
    return build_uncoded_packet(mode, pdu, access_address, crc_init, whitening, channel)


def generate_ble_waveform(mode: PhyMode, payload, params: GfskParams | None = None,
                          **packet_kw) -> Waveform:
    """One BLE packet for `mode`; LE500K uses CI=S2 and LE125K uses CI=S8."""
    if params is None:
        params = GfskParams.for_mode(mode)
    return gfsk_modulate(packet_symbols(mode, payload, **packet_kw), params)


def generate_carrier(mode: PhyMode, min_samples: int, rng: np.random.Generator,
                     payload_bytes: int = 255, params: GfskParams | None = None,
                     **packet_kw) -> Waveform:
    """Back-to-back random-payload packets, phase-continuous, cut to `min_samples`."""
    if params is None:
        params = GfskParams.for_mode(mode)
    need = -(-min_samples // params.samples_per_symbol)
    chunks, have = [], 0
    while have < need:
        pdu = bytes_to_bits(rng.integers(0, 256, payload_bytes, dtype=np.uint8).tobytes())
        sym = packet_symbols(mode, pdu, **packet_kw)
        chunks.append(sym)
        have += sym.size
    w = gfsk_modulate(np.concatenate(chunks), params)
    return Waveform(w.samples[:min_samples], w.sample_rate)
