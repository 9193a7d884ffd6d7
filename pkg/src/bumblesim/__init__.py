"""Baseband simulation of BLE-to-ZigBee (Bumblebee) backscatter."""

from .iqcore import SAMPLE_RATE, PhyMode, Waveform, measure_power, unwrap_phase

__all__ = ["SAMPLE_RATE", "PhyMode", "Waveform", "measure_power", "unwrap_phase"]
__version__ = "0.1.0"
