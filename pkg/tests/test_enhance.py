import numpy as np
import pytest

from conftest import harmonic_signal, white_noise

import harmonmf as h
from harmonmf.enhance import (EnhanceConfig, build_speech_atoms, enhance,
                              enhance_oracle, enhance_plain,
                              sweep_atoms_sparsity, wiener_reconstruct,
                              write_magnitude_csv, write_pgm)
from harmonmf.signal_io import Signal, snr_db
from harmonmf.stft import ComplexSpectrogram, MagnitudeSpectrogram, stft


def small_config(**kw):
    defaults = dict(L=5, m=2, p_star=10, m_n=4, iterations=5, seed=0)
    defaults.update(kw)
    return EnhanceConfig(**defaults)


def test_config_defaults_match_protocol():
    c = EnhanceConfig()
    assert (c.sr, c.window_ms, c.overlap) == (8000, 32.0, 0.75)
    assert (c.f_min, c.f_max, c.L, c.m, c.p_star) == (80, 400, 33, 4, 30)
    assert (c.r, c.m_n) == (16, 16)
    assert (c.lambda_s, c.lambda_n, c.alpha, c.iterations) == (0.2, 0.0, 10.0, 25)


def test_default_dictionary_sizing(frame_params):
    atoms = build_speech_atoms(EnhanceConfig(), frame_params)
    assert len(atoms) == 132


def random_spec(frame_params, seed=0):
    rng = np.random.default_rng(seed)
    K, T = frame_params.n_bins, 8
    vals = rng.standard_normal((K, T)) + 1j * rng.standard_normal((K, T))
    return ComplexSpectrogram(vals, frame_params)


def test_wiener_passthrough(frame_params):
    spec = random_spec(frame_params)
    mag = spec.magnitude()
    out = wiener_reconstruct(spec, mag, mag)
    assert np.allclose(out.values, spec.values, atol=1e-12)


def test_wiener_full_suppression(frame_params):
    spec = random_spec(frame_params)
    zero = MagnitudeSpectrogram(np.zeros_like(spec.magnitude().values), frame_params)
    out = wiener_reconstruct(spec, zero, spec.magnitude())
    assert np.all(out.values == 0)


def test_wiener_half_gain(frame_params):
    spec = random_spec(frame_params)
    total = spec.magnitude()
    half = MagnitudeSpectrogram(total.values / 2, frame_params)
    out = wiener_reconstruct(spec, half, total)
    assert np.allclose(out.values, spec.values / 2, atol=1e-12)


def test_wiener_gain_bounded(frame_params):
    spec = random_spec(frame_params)
    mag = spec.magnitude()
    big = MagnitudeSpectrogram(mag.values * 3, frame_params)
    out = wiener_reconstruct(spec, big, mag)  # speech exceeding total clips to 1
    assert np.allclose(np.abs(out.values), np.abs(spec.values), atol=1e-12)


def test_wiener_shape_mismatch(frame_params):
    spec = random_spec(frame_params)
    bad = MagnitudeSpectrogram(np.zeros((frame_params.n_bins, 3)), frame_params)
    with pytest.raises(ValueError):
        wiener_reconstruct(spec, bad, bad)


def test_enhance_output_length_and_partition(noise_shapes, desk_mixture):
    clean, noisy = desk_mixture
    res = enhance(noisy, noise_shapes, small_config())
    assert len(res.denoised) == len(noisy)
    total = res.speech_magnitude.values + res.noise_magnitude.values
    assert np.all(res.speech_magnitude.values >= 0)
    assert np.all(res.noise_magnitude.values >= 0)
    assert np.all(np.isfinite(total))
    assert len(res.objective_trace) == small_config().iterations + 1


def test_enhance_deterministic(noise_shapes, desk_mixture):
    _, noisy = desk_mixture
    a = enhance(noisy, noise_shapes, small_config())
    b = enhance(noisy, noise_shapes, small_config())
    assert np.array_equal(a.speech_magnitude.values, b.speech_magnitude.values)
    assert np.array_equal(a.denoised.samples, b.denoised.samples)


def test_enhance_rate_mismatch(noise_shapes):
    bad = Signal(np.zeros(16000), 16000)
    with pytest.raises(ValueError, match="sample rate"):
        enhance(bad, noise_shapes, small_config())


def test_enhance_shapes_params_mismatch(noise_shapes):
    with pytest.raises(ValueError, match="frame parameters"):
        enhance(white_noise(), noise_shapes, small_config(window_ms=16.0))


def test_noise_only_mostly_suppressed(noise_shapes):
    noise = white_noise(seconds=1.0, seed=7)
    res = enhance(noise, noise_shapes, EnhanceConfig(mode="dense", seed=0))
    ratio = np.sum(res.denoised.samples**2) / np.sum(noise.samples**2)
    assert ratio <= 0.10


def test_enhance_improves_snr(noise_shapes, desk_mixture):
    clean, noisy = desk_mixture
    res = enhance(noisy, noise_shapes, EnhanceConfig(mode="dense", seed=0))
    assert snr_db(clean, res.denoised) >= snr_db(clean, noisy) + 3.0


def test_plain_baseline(noise_shapes, desk_mixture):
    clean, noisy = desk_mixture
    res = enhance_plain(noisy, noise_shapes, small_config(), free_atoms=16)
    assert len(res.denoised) == len(noisy)
    out = snr_db(clean, res.denoised)
    assert np.isfinite(out)
    obj = [p.total for p in res.objective_trace]
    for a, b in zip(obj, obj[1:]):
        assert b <= a + 1e-9 * (1 + abs(a))


def test_oracle_frozen_and_monotone(noise_shapes, desk_mixture):
    clean, noisy = desk_mixture
    res = enhance_oracle(noisy, clean, noise_shapes, small_config(),
                         oracle_atoms=8)
    obj = [p.total for p in res.objective_trace]
    for a, b in zip(obj, obj[1:]):
        assert b <= a + 1e-9 * (1 + abs(a))


def test_oracle_on_clean_input(noise_shapes):
    clean = harmonic_signal()
    res = enhance_oracle(clean, clean, noise_shapes, EnhanceConfig(seed=0),
                         oracle_atoms=32)
    assert snr_db(clean, res.denoised) >= 20.0


def test_oracle_alignment_check(noise_shapes):
    clean = harmonic_signal()
    short = Signal(clean.samples[:-10], clean.sample_rate)
    with pytest.raises(ValueError, match="aligned"):
        enhance_oracle(short, clean, noise_shapes, small_config())


def test_sweep_single_cell_matches_direct(noise_shapes, desk_mixture):
    clean, noisy = desk_mixture
    cfg = small_config(m=2)
    rows = sweep_atoms_sparsity(noisy, clean, noise_shapes, cfg, [5], [0.3])
    assert len(rows) == 1
    L, lam, n_atoms, out_snr = rows[0]
    assert (L, lam, n_atoms) == (5, 0.3, 5 * 2 + 4)
    from dataclasses import replace
    direct = enhance(noisy, noise_shapes,
                     replace(cfg, L=5, lambda_s=0.3, mode="dense"))
    assert out_snr == snr_db(clean, direct.denoised)


def test_sweep_row_ordering(noise_shapes, desk_mixture):
    clean, noisy = desk_mixture
    cfg = small_config(iterations=2)
    rows = sweep_atoms_sparsity(noisy, clean, noise_shapes, cfg,
                                [4, 2], [0.5, 0.2])
    assert [(r[0], r[1]) for r in rows] == [(2, 0.2), (2, 0.5),
                                            (4, 0.2), (4, 0.5)]


def test_pgm_and_csv_dumps(tmp_path, frame_params):
    rng = np.random.default_rng(0)
    mag = MagnitudeSpectrogram(rng.random((frame_params.n_bins, 7)), frame_params)
    pgm = tmp_path / "m.pgm"
    write_pgm(mag, pgm)
    data = pgm.read_bytes()
    assert data.startswith(b"P5\n7 129\n255\n")
    assert len(data) == len(b"P5\n7 129\n255\n") + 129 * 7
    csv_path = tmp_path / "m.csv"
    write_magnitude_csv(mag, csv_path)
    back = np.loadtxt(csv_path, delimiter=",")
    assert np.allclose(back, mag.values)
