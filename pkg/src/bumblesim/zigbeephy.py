"""IEEE 802.15.4 2.4 GHz O-QPSK modem with a phase-sign (quadrature) receiver.

Chips are modulated as half-sine O-QPSK, which is an MSK waveform: the phase
ramps linearly by +-pi/2 over each chip interval.  The receiver never sees the
raw chips, only the sign of each chip's phase ramp (the "MSK drive"), so
despreading compares those signs against the chip table mapped into the same
domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .iqcore import SAMPLE_RATE, Waveform, as_bits

CHIPS_PER_SYMBOL = 32

_BASE_SEQUENCE = "11011001110000110101001000101110"


def _build_chip_table() -> np.ndarray:
    row0 = np.array([int(c) for c in _BASE_SEQUENCE], dtype=np.uint8)
    rows = [np.roll(row0, 4 * k) for k in range(8)]
    # symbols 8..15 invert the odd-indexed chips of symbols 0..7
    odd = np.tile(np.array([0, 1], dtype=np.uint8), 16)
    rows += [r ^ odd for r in rows]
    table = np.array(rows, dtype=np.uint8)
    table.setflags(write=False)
    return table


CHIP_TABLE = _build_chip_table()


@dataclass(frozen=True)
class ZigbeeParams:
    chip_rate: float = 2e6
    samples_per_chip: int = 8

    def __post_init__(self):
        if int(self.samples_per_chip) != self.samples_per_chip or self.samples_per_chip < 2:
            raise ValueError("samples_per_chip must be an integer >= 2")
        if not self.chip_rate > 0:
            raise ValueError("chip_rate must be positive")

    @property
    def chip_duration(self) -> float:
        return 1.0 / self.chip_rate

    @property
    def sample_rate(self) -> float:
        return self.chip_rate * self.samples_per_chip

    @classmethod
    def for_rate(cls, sample_rate: float = SAMPLE_RATE) -> "ZigbeeParams":
        n = sample_rate / 2e6
        if n != int(n):
            raise ValueError("sample rate is not a multiple of the 2 Mchip/s chip rate")
        return cls(samples_per_chip=int(n))


def bits_to_symbols(bits) -> np.ndarray:
    b = as_bits(bits)
    if b.size % 4:
        raise ValueError("bit count is not a multiple of 4")
    return (b.reshape(-1, 4) @ np.array([1, 2, 4, 8])).astype(np.uint8)


def symbols_to_bits(symbols) -> np.ndarray:
    s = np.asarray(symbols, dtype=np.int64)
    return ((s[:, None] >> np.arange(4)) & 1).astype(np.uint8).ravel()


def spread(symbols) -> np.ndarray:
    s = np.asarray(symbols, dtype=np.int64)
    if s.size and (s.min() < 0 or s.max() > 15):
        raise ValueError("symbol value outside 0..15")
    return CHIP_TABLE[s].ravel()


def despread(chips) -> np.ndarray:
    """Nearest chip-table row per 32-chip group (ties go to the lower symbol)."""
    c = as_bits(chips)
    if c.size % CHIPS_PER_SYMBOL:
        raise ValueError("chip count is not a multiple of 32")
    groups = c.reshape(-1, CHIPS_PER_SYMBOL)
    return _nearest(groups, CHIP_TABLE)


def _nearest(groups: np.ndarray, table: np.ndarray) -> np.ndarray:
    # Hamming distance via +-1 correlation: d = (32 - <g, t>) / 2
    g = 2 * groups.astype(np.int32) - 1
    t = 2 * table.astype(np.int32) - 1
    dist = (groups.shape[-1] - g @ t.T) // 2
    return np.argmin(dist, axis=1).astype(np.uint8)


def msk_drive(chips) -> np.ndarray:
    """Sign (1 = positive) of the O-QPSK phase ramp inside each chip window.

    Window k >= 1 carries c[k-1] ^ c[k] ^ (k odd); the first window of a
    burst has no ramp (its phase stays put) and reads as 1.
    """
    c = as_bits(chips)
    d = np.ones(c.size, dtype=np.uint8)
    if c.size > 1:
        k = np.arange(1, c.size)
        d[1:] = c[:-1] ^ c[1:] ^ (k % 2).astype(np.uint8)
    return d


def _msk_table(prev_chip: int | None) -> np.ndarray:
    """Chip table in the phase-sign domain, given the previous symbol's last chip."""
    t = CHIP_TABLE
    k = np.arange(1, CHIPS_PER_SYMBOL)
    m = np.empty_like(t)
    m[:, 1:] = t[:, :-1] ^ t[:, 1:] ^ (k % 2).astype(np.uint8)
    # symbols start on even chip indices, so window 0 uses parity 0
    m[:, 0] = 1 if prev_chip is None else prev_chip ^ t[:, 0]
    return m


MSK_TABLES = {p: _msk_table(p) for p in (None, 0, 1)}


def despread_msk(drive) -> np.ndarray:
    """Despread phase-sign decisions into symbols.

    Window 0 of each symbol depends on the previous symbol's last chip.  A
    first pass decides on windows 1..31 only; the decided symbols then supply
    that chip for a full 32-window decision.
    """
    d = as_bits(drive)
    if d.size % CHIPS_PER_SYMBOL:
        raise ValueError("chip count is not a multiple of 32")
    groups = d.reshape(-1, CHIPS_PER_SYMBOL)
    if groups.shape[0] == 0:
        return np.zeros(0, dtype=np.uint8)
    first = _nearest(groups[:, 1:], MSK_TABLES[0][:, 1:])
    prev_last = CHIP_TABLE[first, -1]
    g = 2 * groups.astype(np.int32) - 1
    dist = np.empty((groups.shape[0], 16), dtype=np.int32)
    for p in (0, 1):
        t = 2 * MSK_TABLES[p].astype(np.int32) - 1
        rows = np.flatnonzero(np.r_[False, prev_last[:-1] == p])
        dist[rows] = (CHIPS_PER_SYMBOL - g[rows] @ t.T) // 2
    t = 2 * MSK_TABLES[None].astype(np.int32) - 1
    dist[0] = (CHIPS_PER_SYMBOL - g[0] @ t.T) // 2
    return np.argmin(dist, axis=1).astype(np.uint8)


def oqpsk_modulate(chips, params: ZigbeeParams = ZigbeeParams()) -> Waveform:
    """Half-sine O-QPSK; output spans exactly len(chips) chip intervals.

    Even chips drive I with pulses of 2*Tc; odd chips drive Q, offset by Tc.
    Samples sit at mid-sample instants (n + 1/2)/fs, so no sample lands on the
    zero of the first I pulse.
    """
    c = as_bits(chips)
    if c.size % 2:
        raise ValueError("chip count must be even")
    n = params.samples_per_chip
    a = 2.0 * c - 1.0
    # one 2*Tc half-sine pulse sampled at mid-sample instants
    pulse = np.sin(np.pi * (np.arange(2 * n) + 0.5) / (2 * n))
    i_amp = (a[0::2, None] * pulse).ravel()
    q_amp = np.zeros_like(i_amp)
    q_amp[n:] = (a[1::2, None] * pulse).ravel()[:-n]
    return Waveform(i_amp + 1j * q_amp, params.sample_rate)


def zigbee_tag_waveform(bits, params: ZigbeeParams = ZigbeeParams()) -> Waveform:
    return oqpsk_modulate(spread(bits_to_symbols(bits)), params)


def chip_decide(delta_phi):
    """Quadrature-demodulator rule: non-negative phase shift -> chip 1."""
    return (np.asarray(delta_phi) >= 0).astype(np.uint8)


def zigbee_demodulate(w: Waveform, params: ZigbeeParams = ZigbeeParams()) -> np.ndarray:
    from .analysis import per_chip_phase_shifts

    n = params.samples_per_chip
    if len(w) % (n * CHIPS_PER_SYMBOL):
        raise ValueError("waveform length is not a whole number of 32-chip symbols")
    if len(w) == 0:
        return np.zeros(0, dtype=np.uint8)
    drive = chip_decide(per_chip_phase_shifts(w, params))
    return symbols_to_bits(despread_msk(drive))
