from __future__ import annotations

import numpy as np

from ..errors import UndefinedResultError
from .pitch import PitchTrack

HNR_CLIP_DB = 100.0


def _local_perturbation(values: np.ndarray, regions: np.ndarray) -> float:
    same = regions[1:] == regions[:-1]
    diffs = np.abs(np.diff(values))[same]
    if diffs.size == 0:
        raise UndefinedResultError("need at least two consecutive cycles")
    mean = float(np.mean(values))
    if mean == 0.0:
        raise UndefinedResultError("mean cycle value is zero")
    return float(np.mean(diffs)) / abs(mean)


def jitter_shimmer(track: PitchTrack) -> tuple[float, float]:
    """Local jitter and shimmer as ratios.

    jitter = mean |T_i - T_{i-1}| / mean T, shimmer likewise over cycle peak
    amplitudes. Consecutive pairs never straddle two voiced regions.
    """
    if track.periods.size < 2 or track.cycle_peaks.size < 2:
        raise UndefinedResultError(
            f"jitter/shimmer need >= 2 cycles, got {track.periods.size} periods"
        )
    jitter = _local_perturbation(track.periods, track.period_region)
    shimmer = _local_perturbation(track.cycle_peaks, track.peak_region)
    return jitter, shimmer


def hnr(track: PitchTrack, floor_db: float = -100.0) -> np.ndarray:
    """Per-frame harmonics-to-noise ratio in dB from the autocorrelation peak.

    Voiced frames get ``10 log10(r / (1 - r))`` clipped to +-100 dB; unvoiced
    frames get ``floor_db``.
    """
    r = np.clip(track.strength, 0.0, 1.0)
    out = np.full(r.shape, float(floor_db))
    v = track.voiced
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(r[v]) - 10.0 * np.log10(1.0 - r[v])
    out[v] = np.clip(db, -HNR_CLIP_DB, HNR_CLIP_DB)
    return out
