"""Shared signal types, phase/power helpers and the IQ file format."""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass

import numpy as np

SAMPLE_RATE = 16e6  # 16 samples per 1 Msym/s BLE symbol, 8 per ZigBee chip


class PhyMode(enum.Enum):
    LE1M = "le1m"
    LE2M = "le2m"
    LE500K = "le500k"
    LE125K = "le125k"

    @property
    def symbol_rate(self) -> float:
        return 2e6 if self is PhyMode.LE2M else 1e6

    @property
    def coded(self) -> bool:
        return self in (PhyMode.LE500K, PhyMode.LE125K)

    @classmethod
    def parse(cls, name: str) -> "PhyMode":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown PHY mode {name!r}") from None


@dataclass(frozen=True)
class Waveform:
    """Complex baseband samples at a fixed sample rate (Hz)."""

    samples: np.ndarray
    sample_rate: float = SAMPLE_RATE

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        if s.ndim != 1:
            raise ValueError("waveform samples must be one-dimensional")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(s)):
            raise ValueError("waveform contains non-finite samples")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def as_bits(bits) -> np.ndarray:
    """Validate a 0/1 sequence and return it as a uint8 array."""
    b = np.asarray(bits)
    if b.ndim != 1:
        raise ValueError("bit stream must be one-dimensional")
    if b.size and not np.all((b == 0) | (b == 1)):
        raise ValueError("bit stream elements must be 0 or 1")
    return b.astype(np.uint8)


def bytes_to_bits(data: bytes) -> np.ndarray:
    """Serialize bytes least-significant bit first (BLE/802.15.4 air order)."""
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8), bitorder="little")


def bits_to_bytes(bits) -> bytes:
    b = as_bits(bits)
    if b.size % 8:
        raise ValueError("bit count is not a multiple of 8")
    return np.packbits(b, bitorder="little").tobytes()


def int_to_bits(value: int, width: int) -> np.ndarray:
    """LSB-first serialization of an unsigned integer."""
    return np.array([(value >> i) & 1 for i in range(width)], dtype=np.uint8)


def measure_power(w: Waveform) -> float:
    if len(w) == 0:
        raise ValueError("empty waveform")
    s = w.samples
    return float(np.mean(s.real**2 + s.imag**2))


def unwrap_phase(w: Waveform) -> np.ndarray:
    """Continuous phase trajectory; the first value lies in (-pi, pi]."""
    s = w.samples
    if np.any(s == 0):
        raise ValueError("zero sample has undefined phase")
    phase = np.angle(s)
    if phase.size and phase[0] == -np.pi:
        phase[0] = np.pi
    return np.unwrap(phase)


# --- IQ files: interleaved little-endian float32 I/Q plus a key=value sidecar ---

def meta_path(path: str | os.PathLike) -> str:
    return os.fspath(path) + ".meta"


def write_iq(path: str | os.PathLike, w: Waveform) -> None:
    inter = np.empty(2 * len(w), dtype="<f4")
    inter[0::2] = w.samples.real
    inter[1::2] = w.samples.imag
    with open(path, "wb") as fh:
        fh.write(inter.tobytes())
    with open(meta_path(path), "w") as fh:
        fh.write("format=cf32_le\n")
        fh.write(f"sample_rate={w.sample_rate!r}\n")
        fh.write(f"sample_count={len(w)}\n")


def read_meta(path: str | os.PathLike) -> dict[str, str]:
    meta = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            meta[key.strip()] = value.strip()
    return meta


def read_iq(path: str | os.PathLike) -> Waveform:
    """Read an IQ file; the sidecar, when present, supplies rate and count."""
    raw = open(path, "rb").read()
    sample_rate = SAMPLE_RATE
    count = None
    if os.path.exists(meta_path(path)):
        meta = read_meta(meta_path(path))
        sample_rate = float(meta.get("sample_rate", SAMPLE_RATE))
        if "sample_count" in meta:
            count = int(meta["sample_count"])
    if count is not None and len(raw) < 8 * count:
        raise ValueError(
            f"truncated IQ file {os.fspath(path)}: data ends at byte offset {len(raw)}, "
            f"expected {8 * count} bytes")
    if len(raw) % 8:
        raise ValueError(
            f"truncated IQ file {os.fspath(path)}: partial sample at byte offset "
            f"{len(raw) - len(raw) % 8}")
    inter = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    if count is not None:
        inter = inter[: 2 * count]
    return Waveform(inter[0::2] + 1j * inter[1::2], sample_rate)
