"""Command-line front end.

Exit codes: 0 success, 1 runtime/computation failure, 2 usage/validation error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import analysis, blephy
from .backscatter import Method, bumblebee_link
from .iqcore import PhyMode, Waveform, bits_to_bytes, bytes_to_bits, read_iq, write_iq
from .zigbeephy import CHIPS_PER_SYMBOL, ZigbeeParams, zigbee_demodulate, zigbee_tag_waveform


class UsageError(Exception):
    pass


# --- experiment config files -------------------------------------------------

CONFIG_KEYS = {
    "modes", "schemes", "snr_start", "snr_stop", "snr_step", "tag_bytes",
    "base_seed", "trials_per_point", "workers", "out",
}


def parse_config(text: str, source: str = "<config>") -> dict:
    """Flat key=value config with '#' comments; errors carry line numbers."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise UsageError(f"{source}:{lineno}: expected key=value")
        if key not in CONFIG_KEYS:
            raise UsageError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise UsageError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = (lineno, value)

    def conv(key, fn):
        lineno, value = raw[key]
        try:
            return fn(value)
        except ValueError as exc:
            raise UsageError(f"{source}:{lineno}: bad value for {key}: {exc}") from None

    def csv_list(v):
        return tuple(x.strip() for x in v.split(",") if x.strip())

    kw = {}
    if "modes" in raw:
        kw["modes"] = conv("modes", lambda v: tuple(PhyMode.parse(m) for m in csv_list(v)))
    if "schemes" in raw:
        kw["schemes"] = conv("schemes", csv_list)
    for key in ("snr_start", "snr_stop", "snr_step"):
        if key in raw:
            kw[key] = conv(key, float)
    for key in ("tag_bytes", "base_seed", "trials_per_point"):
        if key in raw:
            kw[key] = conv(key, int)
    try:
        sweep = analysis.SweepConfig(**kw)
    except ValueError as exc:
        raise UsageError(f"{source}: {exc}") from None
    return {
        "sweep": sweep,
        "workers": conv("workers", int) if "workers" in raw else 1,
        "out": raw["out"][1] if "out" in raw else None,
    }


# --- helpers -------------------------------------------------------------------

def _check_writable(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
        raise UsageError(f"cannot write to {path}: directory missing or not writable")
    if os.path.isdir(path):
        raise UsageError(f"cannot write to {path}: is a directory")


def _check_readable(path: str) -> None:
    if not os.path.isfile(path):
        raise UsageError(f"cannot read {path}: no such file")


def _parse_mode(name: str) -> PhyMode:
    try:
        return PhyMode.parse(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _parse_hex(text: str) -> bytes:
    try:
        data = bytes.fromhex(text)
    except ValueError:
        raise UsageError(f"bad hex payload {text!r}") from None
    if not data:
        raise UsageError("payload must be non-empty")
    return data


def _ble_carrier(mode: PhyMode, payload_hex, random_bytes, seed, packets, channel, whitening):
    if payload_hex is None and random_bytes is None:
        raise UsageError("give --payload HEX or --random-bytes N")
    if packets < 1:
        raise UsageError("--packets must be >= 1")
    rng = np.random.default_rng(seed)
    chunks = []
    for _ in range(packets):
        if payload_hex is not None:
            data = _parse_hex(payload_hex)
        else:
            if random_bytes < 1:
                raise UsageError("--random-bytes must be >= 1")
            data = rng.integers(0, 256, random_bytes, dtype=np.uint8).tobytes()
        chunks.append(blephy.packet_symbols(mode, bytes_to_bits(data), whitening=whitening,
                                            channel=channel))
    return blephy.gfsk_modulate(np.concatenate(chunks), blephy.GfskParams.for_mode(mode))


def _random_tag(n_bytes: int, seed: int) -> bytes:
    if n_bytes < 1:
        raise UsageError("--tag-bytes must be >= 1")
    return np.random.default_rng(seed).integers(0, 256, n_bytes, dtype=np.uint8).tobytes()


# --- subcommands ---------------------------------------------------------------

def cmd_gen_ble(args) -> int:
    mode = _parse_mode(args.mode)
    _check_writable(args.out)
    w = _ble_carrier(mode, args.payload, args.random_bytes, args.seed, args.packets,
                     args.channel, not args.no_whitening)
    write_iq(args.out, w)
    print(f"samples={len(w)} duration_us={w.duration * 1e6:g}")
    return 0


def cmd_gen_zigbee(args) -> int:
    _check_writable(args.out)
    tag = _random_tag(args.tag_bytes, args.seed)
    w = zigbee_tag_waveform(bytes_to_bits(tag))
    write_iq(args.out, w)
    if args.tag_out:
        with open(args.tag_out, "w") as fh:
            fh.write(tag.hex() + "\n")
    print(f"samples={len(w)} duration_us={w.duration * 1e6:g}")
    return 0


def cmd_phase_hist(args) -> int:
    _check_writable(args.out)
    if args.input:
        _check_readable(args.input)
        w = read_iq(args.input)
    elif args.mode == "zigbee":
        w = zigbee_tag_waveform(bytes_to_bits(_random_tag(args.random_bytes or 1, args.seed)))
    elif args.mode:
        w = _ble_carrier(_parse_mode(args.mode), None, args.random_bytes, args.seed,
                         args.packets, args.channel, True)
    else:
        raise UsageError("give --in PATH or --mode MODE")
    lo, hi = args.range if args.range else (-math.pi, math.pi)
    shifts = analysis.per_chip_phase_shifts(w, ZigbeeParams.for_rate(w.sample_rate))
    hist = analysis.histogram(shifts, args.bins, (lo, hi))
    frac = hist.fraction_in(-1.0, 1.0)
    with open(args.out, "w") as fh:
        fh.write(f"# total={hist.total} out_of_range={hist.out_of_range}\n")
        fh.write("bin_lo,bin_hi,count\n")
        for a, b, c in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts):
            fh.write(f"{float(a)!r},{float(b)!r},{int(c)}\n")
        fh.write(f"# fraction_in_minus1_plus1={frac!r}\n")
    print(f"chips={hist.total} fraction_in_minus1_plus1={frac:.6f}")
    return 0


def cmd_ber_sweep(args) -> int:
    _check_readable(args.config)
    with open(args.config) as fh:
        conf = parse_config(fh.read(), args.config)
    out = args.out or conf["out"]
    if not out:
        raise UsageError("no output path: pass --out or set out= in the config")
    _check_writable(out)
    workers = args.workers if args.workers is not None else conf["workers"]
    cfg = conf["sweep"]
    records = analysis.run_sweep(cfg, workers=workers)
    text = analysis.format_ber_csv(records, analysis.sweep_metadata(cfg))
    with open(out, "w") as fh:
        fh.write(text)
    print(f"rows={len(records)} out={out}")
    return 0


def cmd_backscatter(args) -> int:
    _check_readable(args.carrier)
    _check_writable(args.out)
    if args.tag_out:
        _check_writable(args.tag_out)
    carrier = read_iq(args.carrier)
    params = ZigbeeParams.for_rate(carrier.sample_rate)
    tag = _random_tag(args.tag_bytes, args.seed)
    w = bumblebee_link(carrier, bytes_to_bits(tag), Method(args.method), params)
    write_iq(args.out, w)
    if args.tag_out:
        with open(args.tag_out, "w") as fh:
            fh.write(tag.hex() + "\n")
    print(f"samples={len(w)} tag_bytes={len(tag)}")
    return 0


def cmd_demod(args) -> int:
    _check_readable(args.input)
    _check_writable(args.out)
    w = read_iq(args.input)
    params = ZigbeeParams.for_rate(w.sample_rate)
    # whole bytes only: two 32-chip symbols per byte
    per_byte = 2 * CHIPS_PER_SYMBOL * params.samples_per_chip
    usable = len(w) // per_byte * per_byte
    s = w.samples[:usable]
    # exact zeros carry no phase; nudge them so the demodulator stays total
    s = np.where(s == 0, np.finfo(float).tiny, s)
    bits = zigbee_demodulate(Waveform(s, w.sample_rate), params)
    data = bits_to_bytes(bits)
    with open(args.out, "w") as fh:
        fh.write(data.hex() + "\n")
    print(f"bytes={len(data)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bumblesim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-ble", help="generate a BLE carrier IQ file")
    g.add_argument("--mode", required=True, help="le1m, le2m, le500k or le125k")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--payload", help="PDU as hex")
    src.add_argument("--random-bytes", type=int, help="random PDU length in bytes")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--packets", type=int, default=1, help="back-to-back packets")
    g.add_argument("--channel", type=int, default=37)
    g.add_argument("--no-whitening", action="store_true")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_ble)

    z = sub.add_parser("gen-zigbee", help="generate a ZigBee (O-QPSK) IQ file from random tag bytes")
    z.add_argument("--tag-bytes", type=int, required=True)
    z.add_argument("--seed", type=int, default=0)
    z.add_argument("--tag-out", help="write the tag bytes as hex here")
    z.add_argument("--out", required=True)
    z.set_defaults(func=cmd_gen_zigbee)

    h = sub.add_parser("phase-hist", help="histogram of per-chip phase shifts")
    h.add_argument("--in", dest="input")
    h.add_argument("--mode", help="le1m, le2m, le500k, le125k or zigbee")
    h.add_argument("--random-bytes", type=int, default=255)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--packets", type=int, default=1)
    h.add_argument("--channel", type=int, default=37)
    h.add_argument("--bins", type=int, default=101)
    h.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"))
    h.add_argument("--out", required=True)
    h.set_defaults(func=cmd_phase_hist)

    b = sub.add_parser("ber-sweep", help="run a BER-vs-SNR sweep from a config file")
    b.add_argument("config")
    b.add_argument("--out")
    b.add_argument("--workers", type=int)
    b.set_defaults(func=cmd_ber_sweep)

    s = sub.add_parser("backscatter", help="overwrite random tag data onto a carrier IQ file")
    s.add_argument("--carrier", required=True)
    s.add_argument("--tag-bytes", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--method", choices=[m.value for m in Method], default=Method.PHASE_ADDITION.value)
    s.add_argument("--tag-out")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_backscatter)

    d = sub.add_parser("demod", help="ZigBee-demodulate an IQ file to hex")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_demod)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except analysis.SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
