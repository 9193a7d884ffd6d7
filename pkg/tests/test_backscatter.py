import numpy as np
import pytest

from bumblesim import blephy
from bumblesim.analysis import per_chip_phase_shifts
from bumblesim.backscatter import (
    Method, bumblebee_link, phase_add_modulate, square_wave_modulate, tag_samples,
)
from bumblesim.iqcore import PhyMode, Waveform
from bumblesim.zigbeephy import (
    bits_to_symbols, msk_drive, spread, zigbee_demodulate, zigbee_tag_waveform,
)

CARRIER_MODES = [PhyMode.LE1M, PhyMode.LE500K, PhyMode.LE125K]


def _carrier(mode, n_bits, seed):
    return blephy.generate_carrier(mode, tag_samples(n_bits), np.random.default_rng(seed))


def _bumpy_carrier(rng, n):
    # GFSK phase with a non-constant envelope, to exercise magnitude handling
    w = blephy.generate_carrier(PhyMode.LE1M, n, rng)
    return Waveform(w.samples * rng.uniform(0.2, 3.0, n))


def test_phase_add_identity_tag(rng):
    c = _bumpy_carrier(rng, 4096)
    out = phase_add_modulate(c, Waveform(np.ones(2048)))
    assert len(out) == 2048
    assert np.max(np.abs(out.samples - c.samples[:2048])) <= 1e-9


def test_phase_add_magnitude_and_additivity(rng):
    bits = rng.integers(0, 2, 64)
    tag = zigbee_tag_waveform(bits)
    c = _bumpy_carrier(rng, len(tag) + 100)
    out = phase_add_modulate(c, tag)
    np.testing.assert_allclose(np.abs(out.samples), np.abs(c.samples[: len(tag)]), rtol=1e-12)
    carrier_prefix = Waveform(c.samples[: len(tag)])
    np.testing.assert_allclose(per_chip_phase_shifts(out),
                               per_chip_phase_shifts(carrier_prefix) + per_chip_phase_shifts(tag),
                               atol=1e-9)


def test_phase_add_errors(rng):
    c = _bumpy_carrier(rng, 100)
    with pytest.raises(ValueError, match="carrier too short"):
        phase_add_modulate(c, Waveform(np.ones(101)))
    with pytest.raises(ValueError, match="sample rate"):
        phase_add_modulate(c, Waveform(np.ones(10), 8e6))


def test_square_wave_steps(rng):
    bits = rng.integers(0, 2, 128)
    c = _carrier(PhyMode.LE1M, bits.size, 3)
    out = square_wave_modulate(c, bits)
    delta = per_chip_phase_shifts(out) - per_chip_phase_shifts(c)
    np.testing.assert_allclose(np.abs(delta), np.pi / 2, atol=1e-9)
    drive = msk_drive(spread(bits_to_symbols(bits)))
    np.testing.assert_array_equal((delta > 0).astype(int), drive)
    np.testing.assert_allclose(np.abs(out.samples), np.abs(c.samples), atol=1e-12)


def test_square_wave_too_short(rng):
    c = _carrier(PhyMode.LE1M, 8, 1)
    with pytest.raises(ValueError, match="carrier too short"):
        square_wave_modulate(c, rng.integers(0, 2, 16))


@pytest.mark.parametrize("seed", range(5))
def test_square_wave_roundtrip_le1m(seed):
    r = np.random.default_rng(seed)
    bits = r.integers(0, 2, 512)
    out = square_wave_modulate(_carrier(PhyMode.LE1M, bits.size, seed + 100), bits)
    np.testing.assert_array_equal(zigbee_demodulate(out), bits)


def test_phase_addition_le1m_4kb_noiseless():
    bits = np.random.default_rng(9).integers(0, 2, 4096 * 8)
    out = bumblebee_link(_carrier(PhyMode.LE1M, bits.size, 4), bits, Method.PHASE_ADDITION)
    assert np.count_nonzero(zigbee_demodulate(out) != bits) == 0


@pytest.mark.parametrize("mode", [PhyMode.LE500K, PhyMode.LE125K])
def test_phase_addition_coded_noiseless(mode):
    bits = np.random.default_rng(10).integers(0, 2, 1024 * 8)
    out = bumblebee_link(_carrier(mode, bits.size, 5), bits, Method.PHASE_ADDITION)
    assert np.count_nonzero(zigbee_demodulate(out) != bits) == 0


@pytest.mark.parametrize("mode", CARRIER_MODES)
def test_methods_decode_identically(mode, rng):
    bits = rng.integers(0, 2, 2048)
    c = _carrier(mode, bits.size, 11)
    a = zigbee_demodulate(bumblebee_link(c, bits, Method.PHASE_ADDITION))
    b = zigbee_demodulate(bumblebee_link(c, bits, Method.SQUARE_WAVE))
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("mode", CARRIER_MODES)
@pytest.mark.parametrize("method", list(Method))
def test_magnitude_preserved(mode, method, rng):
    bits = rng.integers(0, 2, 64)
    c = _carrier(mode, bits.size, 12)
    out = bumblebee_link(c, bits, method)
    np.testing.assert_allclose(np.abs(out.samples), np.abs(c.samples[: len(out)]), atol=1e-12)


@pytest.mark.parametrize("mode", CARRIER_MODES)
def test_sign_dominance(mode, rng):
    bits = rng.integers(0, 2, 8192)
    c = _carrier(mode, bits.size, 13)
    tag = zigbee_tag_waveform(bits)
    carrier_shift = per_chip_phase_shifts(c)
    tag_shift = per_chip_phase_shifts(tag)
    out_shift = per_chip_phase_shifts(phase_add_modulate(c, tag))
    ok = np.abs(carrier_shift) < np.pi / 2
    # the first chip of the burst carries no tag ramp
    ok[0] = False
    assert np.mean(ok) >= 0.999
    assert np.all(np.sign(out_shift[ok]) == np.sign(tag_shift[ok]))


def test_carrier_independence(rng):
    bits = rng.integers(0, 2, 4096)
    outs = [zigbee_demodulate(bumblebee_link(_carrier(m, bits.size, s), bits))
            for m, s in [(PhyMode.LE1M, 1), (PhyMode.LE1M, 2), (PhyMode.LE125K, 3)]]
    for o in outs:
        np.testing.assert_array_equal(o, bits)


def test_alignment_offset(rng):
    bits = rng.integers(0, 2, 64)
    c = _carrier(PhyMode.LE1M, bits.size + 64, 14)
    out = bumblebee_link(c, bits, Method.SQUARE_WAVE, alignment=333)
    np.testing.assert_allclose(np.abs(out.samples), 1.0, atol=1e-12)
    np.testing.assert_array_equal(zigbee_demodulate(out), bits)
