from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.fft import dct

from ..errors import InputError
from .framing import next_pow2

LOG_FLOOR = 1e-10


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


@lru_cache(maxsize=16)
def mel_filterbank(n_mels: int, nfft: int, sample_rate: int) -> np.ndarray:
    """Triangular filters evenly spaced on the HTK mel scale, shape (n_mels, nfft // 2 + 1)."""
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    freqs = np.fft.rfftfreq(nfft, 1.0 / sample_rate)
    lower, centre, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - lower) / (centre - lower)
    falling = (upper - freqs[None, :]) / (upper - centre)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    fb.setflags(write=False)
    return fb


def mfcc(
    frames: np.ndarray,
    sample_rate: int,
    n_coeffs: int = 40,
    n_mels: int = 64,
    nfft: int | None = None,
) -> np.ndarray:
    """Log-mel filterbank energies followed by an orthonormal DCT-II.

    ``frames`` must already be windowed. Mel energies are floored at 1e-10
    before the natural log, so silence yields a constant log spectrum.
    """
    if sample_rate < 8000:
        raise InputError(f"MFCC needs sample rate >= 8 kHz, got {sample_rate}")
    if n_coeffs > n_mels:
        raise InputError(f"n_coeffs ({n_coeffs}) exceeds n_mels ({n_mels})")
    frames = np.atleast_2d(frames)
    nfft = next_pow2(frames.shape[1]) if nfft is None else nfft
    power = np.abs(np.fft.rfft(frames, nfft, axis=1)) ** 2
    energies = power @ mel_filterbank(n_mels, nfft, sample_rate).T
    log_mel = np.log(np.maximum(energies, LOG_FLOOR))
    return dct(log_mel, type=2, norm="ortho", axis=1)[:, :n_coeffs]
