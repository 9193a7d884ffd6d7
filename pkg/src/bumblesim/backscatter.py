"""Bumblebee tag models: overwrite ZigBee chips onto a BLE carrier's phase."""

from __future__ import annotations

import enum

import numpy as np

from .iqcore import Waveform
from .zigbeephy import ZigbeeParams, bits_to_symbols, msk_drive, spread, zigbee_tag_waveform


class Method(enum.Enum):
    PHASE_ADDITION = "phase-add"
    SQUARE_WAVE = "square-wave"


def _carrier_window(carrier: Waveform, length: int, alignment: int) -> np.ndarray:
    if alignment < 0:
        raise ValueError("alignment must be non-negative")
    if len(carrier) - alignment < length:
        raise ValueError("carrier too short")
    return carrier.samples[alignment : alignment + length]


def phase_add_modulate(carrier: Waveform, tag: Waveform, alignment: int = 0) -> Waveform:
    """Keep the carrier's magnitude, add the tag's phase sample by sample."""
    if carrier.sample_rate != tag.sample_rate:
        raise ValueError("sample rate mismatch between carrier and tag")
    c = _carrier_window(carrier, len(tag), alignment)
    z = np.angle(c) + np.angle(tag.samples)
    return Waveform(np.abs(c) * np.exp(1j * z), carrier.sample_rate)


def square_wave_phase(drive, samples_per_chip: int) -> np.ndarray:
    """Switch phase schedule: each chip steps the phase by +-pi/2.

    The step is spread as a linear ramp over the chip's samples so the
    within-chip phase shift is exactly +-pi/2; the boundary into the next
    chip carries no extra rotation.
    """
    d = np.asarray(drive)
    n = samples_per_chip
    steps = np.where(d == 1, np.pi / 2, -np.pi / 2)
    start = np.concatenate([[0.0], np.cumsum(steps)[:-1]])
    frac = np.arange(n) / (n - 1)
    return (start[:, None] + steps[:, None] * frac[None, :]).ravel()


def square_wave_modulate(carrier: Waveform, tag_bits, params: ZigbeeParams = ZigbeeParams(),
                         alignment: int = 0) -> Waveform:
    if carrier.sample_rate != params.sample_rate:
        raise ValueError("sample rate mismatch between carrier and tag")
    drive = msk_drive(spread(bits_to_symbols(tag_bits)))
    theta = square_wave_phase(drive, params.samples_per_chip)
    c = _carrier_window(carrier, theta.size, alignment)
    return Waveform(c * np.exp(1j * theta), carrier.sample_rate)


def bumblebee_link(carrier: Waveform, tag_bits, method: Method = Method.PHASE_ADDITION,
                   params: ZigbeeParams = ZigbeeParams(), alignment: int = 0) -> Waveform:
    if method is Method.PHASE_ADDITION:
        return phase_add_modulate(carrier, zigbee_tag_waveform(tag_bits, params), alignment)
    if method is Method.SQUARE_WAVE:
        return square_wave_modulate(carrier, tag_bits, params, alignment)
    raise ValueError(f"unknown backscatter method {method!r}")


def tag_samples(n_bits: int, params: ZigbeeParams = ZigbeeParams()) -> int:
    """Carrier samples needed to carry `n_bits` of tag data."""
    return n_bits // 4 * 32 * params.samples_per_chip
