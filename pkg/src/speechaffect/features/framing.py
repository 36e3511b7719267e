from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataio import AudioBuffer
from ..errors import InputError

WINDOWS = ("hann", "hamming")


@dataclass(frozen=True)
class FrameConfig:
    frame_len_ms: float = 25.0
    hop_ms: float = 10.0
    window: str = "hann"

    def __post_init__(self):
        if not self.frame_len_ms >= self.hop_ms > 0:
            raise InputError(
                f"need frame_len_ms >= hop_ms > 0, got {self.frame_len_ms}/{self.hop_ms}"
            )
        if self.window not in WINDOWS:
            raise InputError(f"unknown window {self.window!r}; choose from {WINDOWS}")

    def frame_length(self, sample_rate: int) -> int:
        return int(round(self.frame_len_ms * sample_rate / 1000.0))

    def hop_length(self, sample_rate: int) -> int:
        return max(1, int(round(self.hop_ms * sample_rate / 1000.0)))


def window_fn(name: str, length: int) -> np.ndarray:
    # periodic=False (symmetric) windows, as used for analysis frames
    if name == "hann":
        return np.hanning(length)
    if name == "hamming":
        return np.hamming(length)
    raise InputError(f"unknown window {name!r}")


def frame_count(n_samples: int, frame_len: int, hop: int) -> int:
    if n_samples < frame_len:
        return 0
    return (n_samples - frame_len) // hop + 1


def frame_starts(audio: AudioBuffer, cfg: FrameConfig) -> np.ndarray:
    sr = audio.sample_rate
    n = frame_count(audio.samples.size, cfg.frame_length(sr), cfg.hop_length(sr))
    return np.arange(n) * cfg.hop_length(sr)


def raw_frames(audio: AudioBuffer, cfg: FrameConfig) -> np.ndarray:
    """Unwindowed frames, shape (n_frames, frame_len)."""
    sr = audio.sample_rate
    flen, hop = cfg.frame_length(sr), cfg.hop_length(sr)
    n = frame_count(audio.samples.size, flen, hop)
    if n == 0:
        raise InputError(
            f"audio of {audio.samples.size} samples is shorter than one frame ({flen})"
        )
    idx = np.arange(flen)[None, :] + hop * np.arange(n)[:, None]
    return audio.samples[idx]


def frame_signal(audio: AudioBuffer, cfg: FrameConfig = FrameConfig()) -> np.ndarray:
    """Split into overlapping frames and apply the analysis window.

    Returns an array of shape ``(floor((len - frame_len) / hop) + 1, frame_len)``.
    """
    frames = raw_frames(audio, cfg)
    return frames * window_fn(cfg.window, frames.shape[1])[None, :]


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())
