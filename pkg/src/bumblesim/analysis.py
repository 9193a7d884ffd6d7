"""Per-chip phase shifts, histograms, BER and the BER-vs-SNR sweep."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import blephy
from .backscatter import Method, bumblebee_link, tag_samples
from .channel import GENERATOR_NAME, ChannelConfig, awgn
from .iqcore import PhyMode, Waveform, as_bits, unwrap_phase
from .zigbeephy import ZigbeeParams, zigbee_demodulate, zigbee_tag_waveform

SCHEMES = ("bumblebee-phase-add", "bumblebee-square-wave", "interscatter")
INTERSCATTER_MODE = "zigbee"  # mode label for rows with no BLE carrier
CSV_HEADER = ["mode", "scheme", "snr_db", "bits_total", "bit_errors", "ber"]


def per_chip_phase_shifts(w: Waveform, params: ZigbeeParams = ZigbeeParams()) -> np.ndarray:
    """Phase change from the first to the last sample of every whole chip."""
    n = params.samples_per_chip
    n_chips = len(w) // n
    if n_chips == 0:
        raise ValueError("waveform shorter than one chip")
    phi = unwrap_phase(Waveform(w.samples[: n_chips * n], w.sample_rate)).reshape(n_chips, n)
    return phi[:, -1] - phi[:, 0]


@dataclass(frozen=True)
class PhaseHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    total: int
    out_of_range: int
    values: np.ndarray = field(repr=False)

    def fraction_in(self, lo: float, hi: float) -> float:
        v = self.values
        return float(np.count_nonzero((v >= lo) & (v <= hi)) / v.size)


def histogram(values, bin_count: int = 101, value_range=(-math.pi, math.pi)) -> PhaseHistogram:
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("no values to histogram")
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    lo, hi = map(float, value_range)
    if not hi > lo:
        raise ValueError("histogram range is degenerate")
    counts, edges = np.histogram(v, bins=bin_count, range=(lo, hi))
    inside = int(counts.sum())
    return PhaseHistogram(edges, counts, v.size, v.size - inside, v)


def ber(tx, rx) -> tuple[int, int, float]:
    """(bit_errors, bits_total, ber) between two equal-length streams."""
    a, b = as_bits(tx), as_bits(rx)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size} bits")
    if a.size == 0:
        raise ValueError("empty bit streams")
    errors = int(np.count_nonzero(a != b))
    return errors, a.size, errors / a.size


@dataclass(frozen=True)
class BerRecord:
    mode: str
    scheme: str
    snr_db: float
    bit_errors: int
    bits_total: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total

    def sort_key(self):
        return (self.mode, self.scheme, self.snr_db)


@dataclass(frozen=True)
class SweepConfig:
    modes: tuple[PhyMode, ...] = (PhyMode.LE1M, PhyMode.LE500K, PhyMode.LE125K)
    schemes: tuple[str, ...] = ("bumblebee-phase-add", "interscatter")
    snr_start: float = -15.0
    snr_stop: float = 15.0
    snr_step: float = 1.0
    tag_bytes: int = 4096
    base_seed: int = 2023
    trials_per_point: int = 3

    def __post_init__(self):
        if self.snr_start > self.snr_stop:
            raise ValueError("snr_start must not exceed snr_stop")
        if not self.snr_step > 0:
            raise ValueError("snr_step must be positive")
        if self.tag_bytes < 1:
            raise ValueError("tag_bytes must be >= 1")
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must be >= 1")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown scheme {s!r}")
        if any(s.startswith("bumblebee") for s in self.schemes):
            if PhyMode.LE2M in self.modes:
                raise ValueError("Bumblebee over LE2M carriers is not supported")
            if not self.modes:
                raise ValueError("Bumblebee schemes need at least one carrier mode")

    def snr_grid(self) -> list[float]:
        n = int(math.floor((self.snr_stop - self.snr_start) / self.snr_step + 1e-9)) + 1
        return [self.snr_start + i * self.snr_step for i in range(n)]

    def points(self) -> list[tuple[str, str, int]]:
        """(mode label, scheme, snr index) for every sweep point."""
        pts = []
        for scheme in self.schemes:
            labels = [INTERSCATTER_MODE] if scheme == "interscatter" else [m.value for m in self.modes]
            for label in labels:
                pts += [(label, scheme, i) for i in range(len(self.snr_grid()))]
        return pts


class SweepError(RuntimeError):
    pass


# stream ids for seed derivation; carriers additionally mix in the mode
_TAG, _NOISE, _CARRIER = 0, 1, 2
_MODE_IDS = {m.value: i for i, m in enumerate(PhyMode)}


def _rng(base_seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(base_seed, spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def _noise_seed(base_seed: int, snr_index: int, trial: int) -> int:
    ss = np.random.SeedSequence(base_seed, spawn_key=(snr_index, trial, _NOISE))
    return int(ss.generate_state(1, np.uint64)[0])


def run_trial(mode: str, scheme: str, snr_db: float, snr_index: int, trial: int,
              tag_bytes: int, base_seed: int) -> tuple[int, int]:
    """One tag transmission; returns (bit_errors, bits_total)."""
    params = ZigbeeParams()
    tag = _rng(base_seed, snr_index, trial, _TAG).integers(0, 2, 8 * tag_bytes, dtype=np.uint8)
    if scheme == "interscatter":
        tx = zigbee_tag_waveform(tag, params)
    else:
        carrier = blephy.generate_carrier(
            PhyMode(mode), tag_samples(tag.size, params),
            _rng(base_seed, snr_index, trial, _CARRIER, _MODE_IDS[mode]))
        method = Method.PHASE_ADDITION if scheme == "bumblebee-phase-add" else Method.SQUARE_WAVE
        tx = bumblebee_link(carrier, tag, method, params)
    rx = awgn(tx, ChannelConfig(snr_db, _noise_seed(base_seed, snr_index, trial)))
    errors, total, _ = ber(tag, zigbee_demodulate(rx, params))
    return errors, total


def _run_point(args) -> BerRecord:
    mode, scheme, snr_index, cfg = args
    snr = cfg.snr_grid()[snr_index]
    try:
        errors = total = 0
        for trial in range(cfg.trials_per_point):
            e, t = run_trial(mode, scheme, snr, snr_index, trial, cfg.tag_bytes, cfg.base_seed)
            errors += e
            total += t
    except Exception as exc:
        raise SweepError(f"sweep point mode={mode} scheme={scheme} snr_db={snr!r} failed: {exc}") from exc
    return BerRecord(mode, scheme, snr, errors, total)


def run_sweep(cfg: SweepConfig, workers: int = 1) -> list[BerRecord]:
    jobs = [(m, s, i, cfg) for m, s, i in cfg.points()]
    if workers <= 1:
        records = [_run_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(_run_point, jobs))
    return sorted(records, key=BerRecord.sort_key)


def sweep_metadata(cfg: SweepConfig) -> list[str]:
    grid = cfg.snr_grid()
    return [
        f"generator={GENERATOR_NAME}",
        f"base_seed={cfg.base_seed}",
        f"snr_grid={grid[0]!r}:{cfg.snr_step!r}:{grid[-1]!r}",
        f"modes={','.join(m.value for m in cfg.modes)}",
        f"schemes={','.join(cfg.schemes)}",
        f"tag_bytes={cfg.tag_bytes}",
        f"trials_per_point={cfg.trials_per_point}",
    ]


def format_ber_csv(records, metadata=()) -> str:
    buf = io.StringIO()
    for line in metadata:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.mode, r.scheme, repr(float(r.snr_db)), r.bits_total, r.bit_errors, repr(r.ber)])
    return buf.getvalue()


def parse_ber_csv(text: str) -> list[BerRecord]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError("not a BER sweep CSV")
    out = []
    for row in rows[1:]:
        mode, scheme, snr, total, errors, _ = row
        out.append(BerRecord(mode, scheme, float(snr), int(errors), int(total)))
    return out
