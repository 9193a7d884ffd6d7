import numpy as np
import pytest

from bumblesim import analysis, blephy
from bumblesim.analysis import (
    BerRecord, SweepConfig, SweepError, ber, format_ber_csv, histogram, parse_ber_csv,
    per_chip_phase_shifts, run_sweep,
)
from bumblesim.iqcore import PhyMode, Waveform

N = 8


def test_per_chip_constant():
    np.testing.assert_array_equal(per_chip_phase_shifts(Waveform(np.ones(80))), np.zeros(10))


def test_per_chip_tone():
    n = np.arange(20 * N + 5)  # trailing partial chip is dropped
    shifts = per_chip_phase_shifts(Waveform(np.exp(1j * (np.pi / 2) * n / N)))
    assert shifts.size == 20
    np.testing.assert_allclose(shifts, (np.pi / 2) * (N - 1) / N, atol=1e-12)


def test_per_chip_too_short():
    with pytest.raises(ValueError):
        per_chip_phase_shifts(Waveform(np.ones(N - 1)))


def _shifts(mode, chips, seed):
    w = blephy.generate_carrier(mode, chips * N, np.random.default_rng(seed))
    return per_chip_phase_shifts(w)


def test_le1m_concentration():
    assert np.mean(np.abs(_shifts(PhyMode.LE1M, 20_000, 1)) <= 1) >= 0.99


def test_le2m_spreads_beyond_one_radian():
    s = _shifts(PhyMode.LE2M, 20_000, 2)
    assert np.max(np.abs(s)) > 1.0
    assert np.mean(np.abs(s) <= 1) < 0.99


def test_histogram_examples():
    h = histogram([0, 0, 0], 1, (-1, 1))
    assert h.counts.tolist() == [3] and h.total == 3
    h = histogram(np.linspace(-1, 1, 100), 2, (-1, 1))
    assert h.counts.tolist() == [50, 50]
    h = histogram(_shifts(PhyMode.LE500K, 20_000, 3))
    assert h.fraction_in(-1, 1) >= 0.99
    assert h.counts.size == 101 and h.bin_edges[0] == -np.pi and h.bin_edges[-1] == np.pi
    assert int(h.counts.sum()) == h.total
    assert np.all(np.diff(h.bin_edges) > 0)


def test_histogram_default_centers_zero():
    h = histogram([0.0])
    centre = (h.bin_edges[:-1] + h.bin_edges[1:]) / 2
    assert centre[np.argmax(h.counts)] == pytest.approx(0, abs=1e-12)


def test_histogram_out_of_range():
    h = histogram([-5, 0, 5, 0.5], 4, (-1, 1))
    assert h.total == 4 and h.out_of_range == 2 and int(h.counts.sum()) == 2
    with pytest.raises(ValueError):
        histogram([], 4)
    with pytest.raises(ValueError):
        histogram([1], 4, (1, 1))


def test_ber_examples(rng):
    tx = rng.integers(0, 2, 32768)
    assert ber(tx, tx)[2] == 0.0
    assert ber(tx, 1 - tx)[2] == 1.0
    rx = tx.copy()
    rx[1234] ^= 1
    assert ber(tx, rx) == (1, 32768, 1 / 32768)
    with pytest.raises(ValueError):
        ber(tx, tx[:-1])


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(snr_start=5, snr_stop=0)
    with pytest.raises(ValueError):
        SweepConfig(snr_step=0)
    with pytest.raises(ValueError):
        SweepConfig(tag_bytes=0)
    with pytest.raises(ValueError):
        SweepConfig(modes=(PhyMode.LE2M,))
    with pytest.raises(ValueError):
        SweepConfig(schemes=("bogus",))
    assert len(SweepConfig().snr_grid()) == 31
    assert SweepConfig(snr_start=0, snr_stop=1, snr_step=0.25).snr_grid() == [0, 0.25, 0.5, 0.75, 1.0]


SMALL = SweepConfig(
    modes=(PhyMode.LE1M, PhyMode.LE125K),
    schemes=("bumblebee-phase-add", "bumblebee-square-wave", "interscatter"),
    snr_start=-4, snr_stop=2, snr_step=3, tag_bytes=64, base_seed=5, trials_per_point=2,
)


@pytest.fixture(scope="module")
def small_records():
    return run_sweep(SMALL)


def test_sweep_shape_and_order(small_records):
    assert len(small_records) == (2 * 2 + 1) * 3
    assert small_records == sorted(small_records, key=BerRecord.sort_key)
    assert {r.mode for r in small_records} == {"le1m", "le125k", "zigbee"}
    for r in small_records:
        assert r.bits_total == 2 * 64 * 8
        assert 0 <= r.bit_errors <= r.bits_total
        assert 0 <= r.ber <= 1


def test_sweep_deterministic(small_records):
    assert run_sweep(SMALL) == small_records


def test_sweep_workers_do_not_change_results(small_records):
    assert run_sweep(SMALL, workers=2) == small_records


def test_sweep_noiseless_is_error_free():
    cfg = SweepConfig(modes=(PhyMode.LE1M, PhyMode.LE500K, PhyMode.LE125K), schemes=analysis.SCHEMES,
                      snr_start=300, snr_stop=300, tag_bytes=128, trials_per_point=1)
    assert all(r.bit_errors == 0 for r in run_sweep(cfg))


def test_sweep_failure_names_point(monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("kaput")

    monkeypatch.setattr(analysis, "run_trial", boom)
    with pytest.raises(SweepError, match="scheme=interscatter snr_db=0.0"):
        run_sweep(SweepConfig(schemes=("interscatter",), snr_start=0, snr_stop=0, tag_bytes=1))


def test_csv_roundtrip(small_records):
    text = format_ber_csv(small_records, analysis.sweep_metadata(SMALL))
    assert text.startswith("# generator=numpy.random.PCG64\n")
    assert "mode,scheme,snr_db,bits_total,bit_errors,ber\n" in text
    assert parse_ber_csv(text) == small_records
    assert format_ber_csv(parse_ber_csv(text), analysis.sweep_metadata(SMALL)) == text
