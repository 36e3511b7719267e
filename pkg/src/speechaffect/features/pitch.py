"""Autocorrelation pitch tracking and glottal-cycle marking.

Each analysis frame is centred on the corresponding :func:`frame_signal`
frame but spans at least three periods of ``f0_min`` so the longest lag is
well resolved. The autocorrelation of the Hann-windowed segment is divided
by the window's own autocorrelation before the peak search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataio import AudioBuffer
from ..errors import InputError
from .framing import FrameConfig, frame_starts, next_pow2


@dataclass(frozen=True)
class PitchTrack:
    f0: np.ndarray
    voiced: np.ndarray
    periods: np.ndarray
    cycle_peaks: np.ndarray
    strength: np.ndarray | None = None
    # region index of each period / peak; consecutive-cycle differences are
    # only taken inside one voiced region
    period_region: np.ndarray | None = None
    peak_region: np.ndarray | None = None
    f0_min: float = 60.0
    f0_max: float = 500.0

    def __post_init__(self):
        for name in ("f0", "periods", "cycle_peaks"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        object.__setattr__(self, "voiced", np.asarray(self.voiced, dtype=bool))
        if self.strength is None:
            object.__setattr__(self, "strength", np.where(self.voiced, 1.0, 0.0))
        if self.period_region is None:
            object.__setattr__(self, "period_region", np.zeros(self.periods.size, dtype=int))
        if self.peak_region is None:
            object.__setattr__(self, "peak_region", np.zeros(self.cycle_peaks.size, dtype=int))

    @property
    def voiced_fraction(self) -> float:
        return float(self.voiced.mean()) if self.voiced.size else 0.0


def _parabolic(y_prev: float, y0: float, y_next: float) -> tuple[float, float]:
    """Vertex offset in [-0.5, 0.5] and value of the parabola through three points."""
    denom = y_prev - 2.0 * y0 + y_next
    if denom == 0.0:
        return 0.0, y0
    offset = 0.5 * (y_prev - y_next) / denom
    offset = min(0.5, max(-0.5, offset))
    return offset, y0 - 0.25 * (y_prev - y_next) * offset


_SINC_HALF = 64
_SINC_GRID = np.linspace(-1.0, 1.0, 65)
_SINC_TAPS = np.arange(-_SINC_HALF, _SINC_HALF + 1)


def _interp_kernel() -> np.ndarray:
    dist = _SINC_GRID[:, None] - _SINC_TAPS[None, :]
    taper = np.i0(8.0 * np.sqrt(np.clip(1 - (dist / (_SINC_HALF + 1)) ** 2, 0, 1))) / np.i0(8.0)
    kernel = np.sinc(dist) * taper
    # unit DC gain at every fractional offset
    return kernel / kernel.sum(axis=1, keepdims=True)


_SINC_KERNEL = _interp_kernel()


def refine_peak(x: np.ndarray, k: int) -> tuple[float, float]:
    """Sub-sample peak position and height near sample ``k`` (Kaiser-windowed sinc interpolation)."""
    idx = k + _SINC_TAPS
    valid = (idx >= 0) & (idx < x.size)
    seg = np.where(valid, x[np.clip(idx, 0, x.size - 1)], 0.0)
    curve = _SINC_KERNEL @ seg
    j = int(np.argmax(curve))
    if 0 < j < curve.size - 1:
        off, val = _parabolic(curve[j - 1], curve[j], curve[j + 1])
    else:
        off, val = 0.0, float(curve[j])
    step = _SINC_GRID[1] - _SINC_GRID[0]
    return k + float(_SINC_GRID[j] + off * step), float(val)


def analysis_segments(
    audio: AudioBuffer, cfg: FrameConfig, f0_min: float
) -> tuple[np.ndarray, np.ndarray]:
    """Analysis segments around each frame centre, and the centres.

    Segments are shifted to stay inside the signal near its edges; only a
    signal shorter than one segment is zero-padded.
    """
    sr = audio.sample_rate
    flen = cfg.frame_length(sr)
    starts = frame_starts(audio, cfg)
    if starts.size == 0:
        raise InputError("audio is shorter than one frame")
    width = max(flen, int(np.ceil(3.0 * sr / f0_min)))
    centers = starts + flen // 2
    n = audio.samples.size
    padded = np.concatenate([audio.samples, np.zeros(max(0, width - n))])
    first = np.clip(centers - width // 2, 0, max(0, n - width))
    idx = np.arange(width)[None, :] + first[:, None]
    return padded[idx], centers


def track_pitch(
    audio: AudioBuffer,
    cfg: FrameConfig = FrameConfig(),
    f0_min: float = 60.0,
    f0_max: float = 500.0,
    voicing_threshold: float = 0.45,
    silence_threshold: float = 0.03,
    octave_cost: float = 0.01,
) -> PitchTrack:
    if f0_min >= f0_max:
        raise InputError(f"f0_min ({f0_min}) must be below f0_max ({f0_max})")
    sr = audio.sample_rate
    if sr < 8 * f0_max:
        raise InputError(f"sample rate {sr} Hz too low for f0_max={f0_max} Hz")

    segments, centers = analysis_segments(audio, cfg, f0_min)
    n_frames, width = segments.shape
    global_peak = float(np.max(np.abs(audio.samples))) if audio.samples.size else 0.0

    win = np.hanning(width)
    nfft = next_pow2(2 * width)
    win_ac = np.fft.irfft(np.abs(np.fft.rfft(win, nfft)) ** 2, nfft)[:width]
    win_ac = win_ac / win_ac[0]

    seg = segments - segments.mean(axis=1, keepdims=True)
    spec = np.fft.rfft(seg * win[None, :], nfft, axis=1)
    ac = np.fft.irfft(np.abs(spec) ** 2, nfft, axis=1)[:, :width]

    lag_lo = max(2, int(np.floor(sr / f0_max)))
    lag_hi = min(width // 2, int(np.ceil(sr / f0_min)) + 1)

    f0 = np.zeros(n_frames)
    strength = np.zeros(n_frames)
    voiced = np.zeros(n_frames, dtype=bool)
    for i in range(n_frames):
        local_peak = float(np.max(np.abs(segments[i])))
        if global_peak == 0.0 or local_peak < silence_threshold * global_peak or ac[i, 0] <= 0:
            continue
        r = ac[i] / ac[i, 0]
        r = r / np.maximum(win_ac, 1e-12)
        best_score, best_lag, best_r = -np.inf, 0.0, 0.0
        for lag in range(lag_lo, lag_hi):
            if r[lag] > r[lag - 1] and r[lag] >= r[lag + 1] and r[lag] > 0:
                offset, value = _parabolic(r[lag - 1], r[lag], r[lag + 1])
                tau = lag + offset
                score = value - octave_cost * np.log2(f0_min * tau / sr)
                if score > best_score:
                    best_score, best_lag, best_r = score, tau, value
        if best_lag == 0.0:
            continue
        strength[i] = min(1.0, best_r)
        candidate = sr / best_lag
        if best_r >= voicing_threshold and f0_min <= candidate <= f0_max:
            voiced[i] = True
            f0[i] = candidate

    periods, peaks, period_region, peak_region = _mark_cycles(
        audio, centers, f0, voiced, cfg.hop_length(sr)
    )
    return PitchTrack(
        f0=f0,
        voiced=voiced,
        periods=periods,
        cycle_peaks=peaks,
        strength=strength,
        period_region=period_region,
        peak_region=peak_region,
        f0_min=f0_min,
        f0_max=f0_max,
    )


def _voiced_runs(voiced: np.ndarray) -> list[tuple[int, int]]:
    runs, start = [], None
    for i, v in enumerate(voiced):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, voiced.size))
    return runs


def _mark_cycles(audio, centers, f0, voiced, hop):
    """Walk positive waveform peaks one local period apart through each voiced run."""
    x = audio.samples
    sr = audio.sample_rate
    periods, peaks, period_region, peak_region = [], [], [], []
    for region, (a, b) in enumerate(_voiced_runs(voiced)):
        lo = max(1, int(centers[a] - hop // 2))
        hi = min(x.size - 2, int(centers[b - 1] + hop // 2))
        run_centers = centers[a:b]
        run_periods = sr / f0[a:b]

        def period_at(pos: float) -> float:
            return float(run_periods[np.argmin(np.abs(run_centers - pos))])

        T = period_at(lo)
        if lo + T >= hi:
            continue
        stop = int(lo + T)
        first = lo + int(np.argmax(x[lo:stop + 1]))
        positions, values = [], []
        pos = float(first)
        while True:
            k = int(round(pos))
            if k <= 0 or k >= x.size - 1:
                break
            where, value = refine_peak(x, k)
            positions.append(where)
            values.append(value)
            T = period_at(where)
            s0 = int(np.floor(where + 0.8 * T))
            s1 = int(np.ceil(where + 1.2 * T))
            if s1 > hi:
                break
            pos = float(s0 + int(np.argmax(x[s0:s1 + 1])))
        if len(positions) >= 2:
            periods.extend(np.diff(positions) / sr)
            period_region.extend([region] * (len(positions) - 1))
        peaks.extend(values)
        peak_region.extend([region] * len(values))
    return (
        np.asarray(periods),
        np.asarray(peaks),
        np.asarray(period_region, dtype=int),
        np.asarray(peak_region, dtype=int),
    )
