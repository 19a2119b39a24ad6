"""End-to-end enhancement: harmonic + noise dictionary, constrained
factorization of the noisy spectrogram, Wiener reconstruction.  Includes
the Oracle and unconstrained-NMF baselines and the atoms-vs-sparsity sweep.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import nmf
from .dictionary import (NoiseShapes, build_harmonic_basis, build_noise_bases,
                         fundamental_grid)
from .signal_io import Signal, snr_db
from .stft import (ComplexSpectrogram, FrameParams, MagnitudeSpectrogram,
                   default_frame_params, istft, stft, window_magnitude_spectrum)

ORACLE_TRAIN_ITERATIONS = 100
_COEFF_JITTER = 0.001


@dataclass(frozen=True)
class EnhanceConfig:
    sr: int = 8000
    window_ms: float = 32.0
    overlap: float = 0.75
    f_min: float = 80.0
    f_max: float = 400.0
    L: int = 33
    m: int = 4
    p_star: int = 30
    r: int = 16
    m_n: int = 16
    lambda_s: float = 0.2
    lambda_n: float = 0.0
    alpha: float = 10.0
    iterations: int = 25
    mode: str = "dense"
    seed: int = 0

    def frame_params(self) -> FrameParams:
        return default_frame_params(self.sr, self.window_ms, self.overlap)

    def solver_settings(self) -> nmf.SolverSettings:
        return nmf.SolverSettings(lambda_speech=self.lambda_s,
                                  lambda_noise=self.lambda_n,
                                  alpha=self.alpha,
                                  iterations=self.iterations,
                                  seed=self.seed)


@dataclass
class EnhanceResult:
    denoised: Signal
    speech_magnitude: MagnitudeSpectrogram
    noise_magnitude: MagnitudeSpectrogram
    objective_trace: list = field(default_factory=list)


def build_speech_atoms(config: EnhanceConfig, params: FrameParams) -> list:
    """L*m harmonic atoms: m per grid fundamental, shared basis, coefficients
    started near-uniform and strictly positive."""
    grid = fundamental_grid(config.f_min, config.f_max, config.L, config.sr)
    wspec = window_magnitude_spectrum(params)
    rng = np.random.default_rng(config.seed)
    atoms = []
    for f0 in grid.frequencies:
        basis = build_harmonic_basis(f0, params, config.p_star, wspec)
        p = basis.harmonic_count
        for _ in range(config.m):
            coeffs = rng.uniform(1.0 / p - _COEFF_JITTER, 1.0 / p + _COEFF_JITTER, p)
            atoms.append(nmf.ConstrainedAtom(psi=basis.psi, coeffs=coeffs,
                                             kind="speech"))
    return atoms


def wiener_reconstruct(noisy: ComplexSpectrogram, speech_mag: MagnitudeSpectrogram,
                       total_mag: MagnitudeSpectrogram,
                       epsilon: float = nmf.EPSILON) -> ComplexSpectrogram:
    """Scale each noisy bin by speech/(speech+noise); gains clipped to [0, 1]."""
    if speech_mag.values.shape != noisy.values.shape or \
            total_mag.values.shape != noisy.values.shape:
        raise ValueError("spectrogram shape mismatch")
    gains = speech_mag.values / np.maximum(total_mag.values, epsilon)
    np.clip(gains, 0.0, 1.0, out=gains)
    return ComplexSpectrogram(noisy.values * gains, noisy.params)


def _check_shapes(shapes: NoiseShapes, params: FrameParams):
    p = shapes.params
    if (p.sample_rate, p.window_len, p.hop) != \
            (params.sample_rate, params.window_len, params.hop):
        raise ValueError("noise shapes were trained with different frame parameters")


def _run(noisy: Signal, dictionary: nmf.CompositeDictionary,
         config: EnhanceConfig, mode: str, frozen: bool = False,
         settings: nmf.SolverSettings | None = None) -> EnhanceResult:
    params = config.frame_params()
    if noisy.sample_rate != config.sr:
        raise ValueError("input sample rate does not match configuration")
    # pad so every input sample sits in the fully overlapped interior region,
    # where Wiener-filtered overlap-add is well conditioned
    wl = params.window_len
    n = len(noisy)
    padded = Signal(np.pad(noisy.samples, (wl, wl)), config.sr)
    spec = stft(padded, params)
    Y = spec.magnitude()
    if settings is None:
        settings = config.solver_settings()
    result = nmf.solve(Y.values, dictionary, settings, mode=mode,
                       frozen_dictionary=frozen)
    D, X = result.dictionary.realized, result.gains
    ms = result.dictionary.n_speech
    speech = MagnitudeSpectrogram(D[:, :ms] @ X[:ms], params)
    noise = MagnitudeSpectrogram(D[:, ms:] @ X[ms:], params)
    total = MagnitudeSpectrogram(speech.values + noise.values, params)
    filtered = wiener_reconstruct(spec, speech, total)
    out = istft(filtered).samples[wl:]
    if out.size < n:
        out = np.pad(out, (0, n - out.size))
    denoised = Signal(out[:n], config.sr)
    return EnhanceResult(denoised, speech, noise, result.trace)


def enhance(noisy: Signal, shapes: NoiseShapes, config: EnhanceConfig) -> EnhanceResult:
    """Constrained enhancement with harmonic speech atoms (lin or dense mode)."""
    params = config.frame_params()
    _check_shapes(shapes, params)
    atoms = build_speech_atoms(config, params)
    atoms += build_noise_bases(shapes, config.m_n, config.seed)
    return _run(noisy, nmf.CompositeDictionary(atoms), config, config.mode)


def _fit_free_dictionary(mag: MagnitudeSpectrogram, n_atoms: int, seed: int,
                         iterations: int = ORACLE_TRAIN_ITERATIONS) -> np.ndarray:
    rng = np.random.default_rng(seed)
    K = mag.values.shape[0]
    atoms = [nmf.ConstrainedAtom(psi=None, coeffs=1.0 - rng.random(K), kind="speech")
             for _ in range(n_atoms)]
    settings = nmf.SolverSettings(lambda_speech=0.0, lambda_noise=0.0, alpha=0.0,
                                  iterations=iterations, seed=seed)
    result = nmf.solve(mag.values, nmf.CompositeDictionary(atoms), settings,
                       mode="plain")
    return result.dictionary.realized.copy()


def enhance_oracle(noisy: Signal, clean: Signal, shapes: NoiseShapes,
                   config: EnhanceConfig, oracle_atoms: int = 32) -> EnhanceResult:
    """Baseline with the speech dictionary fit on the clean signal and frozen;
    only the gains adapt."""
    if len(clean) != len(noisy) or clean.sample_rate != noisy.sample_rate:
        raise ValueError("clean and noisy signals must be aligned")
    params = config.frame_params()
    _check_shapes(shapes, params)
    clean_mag = stft(clean, params).magnitude()
    D_s = _fit_free_dictionary(clean_mag, oracle_atoms, config.seed)
    atoms = [nmf.ConstrainedAtom(psi=None, coeffs=D_s[:, j].copy(), kind="speech")
             for j in range(oracle_atoms)]
    atoms += build_noise_bases(shapes, config.m_n, config.seed)
    return _run(noisy, nmf.CompositeDictionary(atoms), config, "lin", frozen=True)


def enhance_plain(noisy: Signal, shapes: NoiseShapes, config: EnhanceConfig,
                  free_atoms: int = 132) -> EnhanceResult:
    """Unconstrained-NMF baseline: free speech columns, trained noise shapes."""
    params = config.frame_params()
    _check_shapes(shapes, params)
    rng = np.random.default_rng(config.seed)
    K = params.n_bins
    atoms = [nmf.ConstrainedAtom(psi=None, coeffs=1.0 - rng.random(K), kind="speech")
             for _ in range(free_atoms)]
    atoms += build_noise_bases(shapes, config.m_n, config.seed)
    return _run(noisy, nmf.CompositeDictionary(atoms), config, "lin")


def sweep_atoms_sparsity(noisy: Signal, clean: Signal, shapes: NoiseShapes,
                         config: EnhanceConfig, L_values, lambda_values,
                         jobs: int = 1) -> list:
    """Dense-mode output SNR for every (L, lambda_s) pair.

    Returns rows (L, lambda_s, total_atoms, output_snr_db) sorted by (L, lambda).
    """
    cells = [(int(L), float(lam)) for L in L_values for lam in lambda_values]
    args = [(noisy, clean, shapes, config, L, lam) for L, lam in cells]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, args))
    else:
        rows = [_sweep_cell(a) for a in args]
    return sorted(rows, key=lambda r: (r[0], r[1]))


def _sweep_cell(arg):
    noisy, clean, shapes, config, L, lam = arg
    cell_config = replace(config, L=L, lambda_s=lam, mode="dense")
    result = enhance(noisy, shapes, cell_config)
    return (L, lam, L * config.m + config.m_n,
            snr_db(clean, result.denoised))


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("L,lambda_s,total_atoms,output_snr_db\n")
        for L, lam, n_atoms, out_snr in rows:
            fh.write(f"{L},{lam!r},{n_atoms},{out_snr!r}\n")


def write_pgm(mag: MagnitudeSpectrogram, path, floor: float = 1e-10) -> None:
    """Log-magnitude spectrogram as binary 8-bit PGM, min-max normalized,
    frequency increasing from the bottom row up."""
    logm = np.log10(np.maximum(mag.values, floor))
    lo, hi = logm.min(), logm.max()
    scaled = np.zeros_like(logm) if hi == lo else (logm - lo) / (hi - lo)
    img = np.flipud(np.round(scaled * 255).astype(np.uint8))
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())


def write_magnitude_csv(mag: MagnitudeSpectrogram, path) -> None:
    """Raw magnitudes, one row per frequency bin."""
    np.savetxt(path, mag.values, delimiter=",", newline="\n")
