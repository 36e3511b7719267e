from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .framing import next_pow2

_EPS = 1e-20
MIN_RATE_FOR_HIGH_BANDS = 10_000


@dataclass(frozen=True)
class SpectralDescriptors:
    alpha_ratio_db: np.ndarray
    hammarberg_db: np.ndarray
    slope_0_500: np.ndarray
    slope_500_1500: np.ndarray
    h1_h2_db: np.ndarray
    h1_a3_db: np.ndarray
    unavailable: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict[str, np.ndarray]:
        return {
            "alpha_ratio_db": self.alpha_ratio_db,
            "hammarberg_db": self.hammarberg_db,
            "slope_0_500": self.slope_0_500,
            "slope_500_1500": self.slope_500_1500,
            "h1_h2_db": self.h1_h2_db,
            "h1_a3_db": self.h1_a3_db,
        }


def power_spectrum(frames: np.ndarray, nfft: int | None = None) -> tuple[np.ndarray, int]:
    frames = np.atleast_2d(frames)
    nfft = next_pow2(frames.shape[1]) if nfft is None else nfft
    if nfft < frames.shape[1]:
        raise ValueError(f"nfft {nfft} shorter than frame length {frames.shape[1]}")
    return np.abs(np.fft.rfft(frames, nfft, axis=1)) ** 2, nfft


def _band(freqs: np.ndarray, lo: float, hi: float, include_hi: bool = True) -> np.ndarray:
    return (freqs >= lo) & ((freqs <= hi) if include_hi else (freqs < hi))


def _slope(freqs: np.ndarray, db: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Least-squares dB-per-Hz slope for every frame over the masked bins."""
    if mask.sum() < 2:
        return np.full(db.shape[0], np.nan)
    f = freqs[mask]
    fc = f - f.mean()
    y = db[:, mask]
    return (y - y.mean(axis=1, keepdims=True)) @ fc / np.dot(fc, fc)


def _harmonic_db(db_row: np.ndarray, bin_hz: float, target_hz: float, f0: float) -> float:
    """Peak level near ``target_hz``: local maximum within a quarter of f0, parabola-refined."""
    centre = int(round(target_hz / bin_hz))
    reach = max(1, int(round(0.25 * f0 / bin_hz)))
    lo, hi = max(1, centre - reach), min(db_row.size - 2, centre + reach)
    if lo > hi:
        return np.nan
    k = lo + int(np.argmax(db_row[lo:hi + 1]))
    y0, y1, y2 = db_row[k - 1], db_row[k], db_row[k + 1]
    denom = y0 - 2 * y1 + y2
    if denom == 0:
        return float(y1)
    p = float(np.clip(0.5 * (y0 - y2) / denom, -0.5, 0.5))
    return float(y1 - 0.25 * (y0 - y2) * p)


def spectral_descriptors(
    frames: np.ndarray,
    sample_rate: int,
    f0: np.ndarray | None = None,
    f3: np.ndarray | None = None,
    nfft: int | None = None,
) -> SpectralDescriptors:
    """Alpha ratio, Hammarberg index, band slopes and harmonic differences per windowed frame.

    ``f0``/``f3`` are per-frame Hz (0 = unknown); the harmonic differences are
    NaN wherever they are unknown. Bands reaching 5 kHz are NaN and listed in
    ``unavailable`` when the sample rate is under 10 kHz.
    """
    frames = np.atleast_2d(frames)
    n = frames.shape[0]
    if nfft is None:
        nfft = max(4096, next_pow2(frames.shape[1]))
    power, nfft = power_spectrum(frames, nfft)
    freqs = np.fft.rfftfreq(nfft, 1.0 / sample_rate)
    bin_hz = sample_rate / nfft
    db = 10 * np.log10(power + _EPS)

    unavailable = []
    if sample_rate < MIN_RATE_FOR_HIGH_BANDS:
        alpha = np.full(n, np.nan)
        hammarberg = np.full(n, np.nan)
        unavailable += ["alpha_ratio_db", "hammarberg_db"]
    else:
        low = power[:, _band(freqs, 50, 1000, include_hi=False)].sum(axis=1)
        high = power[:, _band(freqs, 1000, 5000)].sum(axis=1)
        alpha = 10 * np.log10((low + _EPS) / (high + _EPS))
        hammarberg = (
            db[:, _band(freqs, 0, 2000)].max(axis=1)
            - db[:, (freqs > 2000) & (freqs <= 5000)].max(axis=1)
        )
    slope_lo = _slope(freqs, db, _band(freqs, 0, 500))
    slope_hi = _slope(freqs, db, _band(freqs, 500, 1500))

    h1_h2 = np.full(n, np.nan)
    h1_a3 = np.full(n, np.nan)
    if f0 is not None:
        f0 = np.asarray(f0, dtype=float)
        f3 = np.zeros(n) if f3 is None else np.asarray(f3, dtype=float)
        nyq = sample_rate / 2
        for i in range(n):
            if f0[i] <= 0 or 2 * f0[i] >= nyq:
                continue
            h1 = _harmonic_db(db[i], bin_hz, f0[i], f0[i])
            h1_h2[i] = h1 - _harmonic_db(db[i], bin_hz, 2 * f0[i], f0[i])
            if f3[i] > 0:
                k = max(1, int(round(f3[i] / f0[i])))
                if k * f0[i] < nyq:
                    h1_a3[i] = h1 - _harmonic_db(db[i], bin_hz, k * f0[i], f0[i])
    return SpectralDescriptors(
        alpha, hammarberg, slope_lo, slope_hi, h1_h2, h1_a3, tuple(unavailable)
    )
