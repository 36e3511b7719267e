from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..dataio import AudioBuffer, Matrix
from ..errors import UndefinedResultError
from .formants import formants_lpc
from .framing import FrameConfig, frame_signal, raw_frames
from .mfcc import mfcc
from .pitch import PitchTrack, track_pitch
from .spectral import spectral_descriptors
from .voice import hnr, jitter_shimmer

N_MFCC = 40

FEATURE_COLUMNS: tuple[str, ...] = (
    "loudness",
    "hnr_db",
    "f0_hz",
    "F1_hz",
    "F2_hz",
    "F3_hz",
    "F1_rel_energy_db",
    "F2_rel_energy_db",
    "F3_rel_energy_db",
    "alpha_ratio_db",
    "hammarberg_db",
    "slope_0_500",
    "slope_500_1500",
    "h1_h2_db",
    "h1_a3_db",
) + tuple(f"mfcc_{i}" for i in range(N_MFCC))

LOUDNESS_FLOOR = 1e-10


@dataclass(frozen=True)
class ExtractionConfig:
    frame: FrameConfig = FrameConfig()
    f0_min: float = 60.0
    f0_max: float = 500.0
    voicing_threshold: float = 0.45
    hnr_floor_db: float = -100.0
    n_mels: int = 64


@dataclass(frozen=True)
class FeatureMatrix:
    matrix: Matrix
    scalars: dict[str, Any] = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return self.matrix.values

    @property
    def columns(self) -> tuple[str, ...]:
        return self.matrix.columns

    def column(self, name: str) -> np.ndarray:
        return self.matrix.column(name)

    def sidecar_json(self) -> str:
        return json.dumps(self.scalars, indent=2, sort_keys=True) + "\n"


def loudness_db(frames: np.ndarray) -> np.ndarray:
    rms = np.sqrt(np.mean(np.square(frames), axis=1))
    return 20.0 * np.log10(np.maximum(rms, LOUDNESS_FLOOR))


def extract_features(audio: AudioBuffer, cfg: ExtractionConfig = ExtractionConfig()) -> FeatureMatrix:
    """Frame-level paralinguistic descriptors plus utterance-level jitter/shimmer."""
    sr = audio.sample_rate
    raw = raw_frames(audio, cfg.frame)
    windowed = frame_signal(audio, cfg.frame)
    track: PitchTrack = track_pitch(
        audio, cfg.frame, cfg.f0_min, cfg.f0_max, cfg.voicing_threshold
    )
    voiced = track.voiced

    formants = formants_lpc(raw, sr, voiced=voiced)
    fmt = np.where(voiced[:, None], formants.freqs, 0.0)
    rel = np.where(voiced[:, None], formants.rel_energy_db, 0.0)

    spec = spectral_descriptors(windowed, sr, f0=track.f0, f3=fmt[:, 2])
    spectral_cols = {k: np.nan_to_num(v, nan=0.0) for k, v in spec.as_dict().items()}

    columns = [
        loudness_db(raw),
        hnr(track, cfg.hnr_floor_db),
        track.f0,
        fmt[:, 0], fmt[:, 1], fmt[:, 2],
        rel[:, 0], rel[:, 1], rel[:, 2],
        spectral_cols["alpha_ratio_db"],
        spectral_cols["hammarberg_db"],
        spectral_cols["slope_0_500"],
        spectral_cols["slope_500_1500"],
        spectral_cols["h1_h2_db"],
        spectral_cols["h1_a3_db"],
    ]
    values = np.column_stack(columns + [mfcc(windowed, sr, N_MFCC, cfg.n_mels)])

    try:
        jitter, shimmer = jitter_shimmer(track)
    except UndefinedResultError:
        jitter = shimmer = None
    scalars = {
        "jitter_local": jitter,
        "shimmer_local": shimmer,
        "n_frames": int(values.shape[0]),
        "n_cycles": int(track.periods.size),
        "voiced_fraction": round(track.voiced_fraction, 6),
        "sample_rate": sr,
        "formant_frames_skipped": formants.skipped,
        "unavailable": list(spec.unavailable),
    }
    return FeatureMatrix(Matrix(values, FEATURE_COLUMNS), scalars)
