"""Seeded AWGN channel; SNR is per complex sample against measured power."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .iqcore import Waveform, measure_power

GENERATOR_NAME = "numpy.random.PCG64"


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float
    seed: int = 0


def awgn(w: Waveform, cfg: ChannelConfig) -> Waveform:
    power = measure_power(w)
    sigma2 = power / 10 ** (cfg.snr_db / 10)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    noise = rng.standard_normal((2, len(w)))
    noise *= np.sqrt(sigma2 / 2)
    return Waveform(w.samples + (noise[0] + 1j * noise[1]), w.sample_rate)
