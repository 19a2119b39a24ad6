"""Constrained dictionary construction: harmonic atom bases from the
sinusoidal speech-production model, and noise atom bases from spectral
shapes trained offline on noise-only audio.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .stft import FrameParams, MagnitudeSpectrogram, WindowSpectrum

AMPLITUDE_FLOOR = 1e-8
COLUMN_TRUNCATION = 1e-4
NOISE_TRAIN_ITERATIONS = 100
_SHAPES_MAGIC = b"NSHP"


@dataclass(frozen=True)
class FundamentalGrid:
    frequencies: np.ndarray  # Hz, strictly increasing, equally spaced
    bounds: tuple

    def __len__(self):
        return self.frequencies.size


@dataclass(frozen=True)
class HarmonicAtomBasis:
    psi: np.ndarray        # K x p, non-negative; column k is |w_hat(. - k*w0)| * c_k
    fundamental: float     # rad/sample
    harmonic_count: int


@dataclass(frozen=True)
class NoiseShapes:
    n_matrix: np.ndarray   # K x r, columns unit l1
    params: FrameParams


def fundamental_grid(f_min: float, f_max: float, count: int,
                     sample_rate: float) -> FundamentalGrid:
    """count equally spaced fundamentals in Hz, endpoints inclusive."""
    if not (0 < f_min < f_max < sample_rate / 2):
        raise ValueError("fundamental bounds must satisfy 0 < f_min < f_max < sr/2")
    if count < 2:
        raise ValueError("grid needs at least 2 points")
    return FundamentalGrid(np.linspace(f_min, f_max, count), (f_min, f_max))


def harmonic_amplitudes(fundamental: float, p: int) -> np.ndarray:
    """c_k = sinc^2(k*w0/2), unnormalized sinc, floored to avoid dead harmonics."""
    if not (0 < fundamental < np.pi):
        raise ValueError("fundamental must be in (0, pi) rad/sample")
    if p < 1:
        raise ValueError("need at least one harmonic")
    k = np.arange(1, p + 1)
    x = k * fundamental / 2.0
    c = np.sinc(x / np.pi) ** 2  # np.sinc is sin(pi t)/(pi t)
    return np.maximum(c, AMPLITUDE_FLOOR)


def harmonic_count(fundamental_hz: float, sample_rate: float, p_star: int) -> int:
    """Number of harmonics kept below Nyquist: min(p_star, floor(sr/(2*f0)))."""
    if fundamental_hz <= 0:
        raise ValueError("fundamental must be positive")
    return int(min(p_star, sample_rate // (2.0 * fundamental_hz)))


def build_harmonic_basis(fundamental_hz: float, params: FrameParams, p_star: int,
                         window_spectrum: WindowSpectrum) -> HarmonicAtomBasis:
    """Basis whose column k is the window spectrum centered on harmonic k,
    scaled by the sinc^2 amplitude profile; small entries zeroed for sparsity."""
    p = harmonic_count(fundamental_hz, params.sample_rate, p_star)
    w0 = 2.0 * np.pi * fundamental_hz / params.sample_rate
    c = harmonic_amplitudes(w0, p)
    omegas = 2.0 * np.pi * np.arange(params.n_bins) / params.fft_len
    psi = np.empty((params.n_bins, p))
    for k in range(1, p + 1):
        col = window_spectrum.evaluate(omegas - k * w0) * c[k - 1]
        col[col < COLUMN_TRUNCATION * col.max()] = 0.0
        psi[:, k - 1] = col
    return HarmonicAtomBasis(psi, w0, p)


def train_noise_shapes(noise_mag: MagnitudeSpectrogram, r: int,
                       iterations: int = NOISE_TRAIN_ITERATIONS,
                       seed: int = 0) -> NoiseShapes:
    """Fit r spectral shapes to a noise spectrogram by unconstrained KL-NMF;
    columns are returned l1-normalized."""
    from . import nmf  # deferred: nmf imports this module's types

    if r < 1:
        raise ValueError("need at least one noise shape")
    if noise_mag.values.shape[1] < r:
        raise ValueError("noise spectrogram has fewer frames than shapes")
    if not np.any(noise_mag.values > 0):
        raise ValueError("noise spectrogram is identically zero")
    K = noise_mag.values.shape[0]
    rng = np.random.default_rng(seed)
    atoms = [nmf.ConstrainedAtom(psi=None, coeffs=1.0 - rng.random(K), kind="noise")
             for _ in range(r)]
    dictionary = nmf.CompositeDictionary(atoms)
    settings = nmf.SolverSettings(lambda_speech=0.0, lambda_noise=0.0, alpha=0.0,
                                  iterations=iterations, seed=seed)
    result = nmf.solve(noise_mag.values, dictionary, settings, mode="plain")
    shapes = result.dictionary.realized.copy()
    sums = shapes.sum(axis=0)
    if np.any(sums <= 0):
        raise ValueError("noise training produced an empty shape")
    return NoiseShapes(shapes / sums, noise_mag.params)


def build_noise_bases(shapes: NoiseShapes, m_n: int, seed: int) -> list:
    """m_n noise atoms sharing the trained shape matrix as basis.

    With m_n equal to the shape count each atom starts near one shape
    (perturbed identity); otherwise coefficients start uniform random.
    Strictly positive starts keep multiplicative updates from locking zeros.
    """
    from . import nmf

    if m_n < 1:
        raise ValueError("need at least one noise atom")
    r = shapes.n_matrix.shape[1]
    rng = np.random.default_rng(seed)
    atoms = []
    for j in range(m_n):
        if m_n == r:
            b = rng.uniform(0.0, 0.01, r)
            b[j] += 1.0
        else:
            b = 1.0 - rng.random(r)
        atoms.append(nmf.ConstrainedAtom(psi=shapes.n_matrix, coeffs=b, kind="noise"))
    return atoms


def save_noise_shapes(shapes: NoiseShapes, path) -> None:
    """Little-endian binary: magic, u32 K, u32 r, f64 sample_rate,
    u32 window_len, u32 hop, then K*r float64 column-major."""
    K, r = shapes.n_matrix.shape
    p = shapes.params
    header = _SHAPES_MAGIC + struct.pack("<IIdII", K, r, float(p.sample_rate),
                                         p.window_len, p.hop)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.asfortranarray(shapes.n_matrix, dtype="<f8").tobytes(order="F"))


def load_noise_shapes(path) -> NoiseShapes:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _SHAPES_MAGIC:
            raise ValueError(f"not a noise-shapes file: {path}")
        K, r, sample_rate, window_len, hop = struct.unpack("<IIdII", fh.read(24))
        data = np.frombuffer(fh.read(K * r * 8), dtype="<f8")
    params = FrameParams(window_len=window_len, hop=hop, fft_len=window_len,
                         sample_rate=int(sample_rate))
    if K != params.n_bins:
        raise ValueError(f"corrupt noise-shapes file: K={K} does not match window")
    return NoiseShapes(data.reshape((K, r), order="F").copy(), params)
