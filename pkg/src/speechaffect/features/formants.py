from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .framing import window_fn

PRE_EMPHASIS = 0.97
MAX_BANDWIDTH_HZ = 400.0
MIN_FORMANT_HZ = 90.0
N_FORMANTS = 3


@dataclass(frozen=True)
class FormantResult:
    """Per-frame F1..F3 (Hz, 0 where not found) and envelope energies relative to the frame (dB)."""

    freqs: np.ndarray
    rel_energy_db: np.ndarray
    reliable: np.ndarray
    skipped: int


def default_lpc_order(sample_rate: int) -> int:
    return 2 + int(round(sample_rate / 1000.0))


def levinson_durbin(r: np.ndarray, order: int) -> tuple[np.ndarray, float]:
    """Prediction polynomial ``a`` (a[0] = 1) and final prediction error power.

    Raises ``FloatingPointError`` when the error power turns non-positive.
    """
    a = np.zeros(order + 1)
    a[0] = 1.0
    err = float(r[0])
    if err <= 0.0:
        raise FloatingPointError("zero-energy frame")
    for i in range(1, order + 1):
        acc = r[i] + np.dot(a[1:i], r[i - 1:0:-1])
        k = -acc / err
        a[1:i] = a[1:i] + k * a[i - 1:0:-1]
        a[i] = k
        err *= 1.0 - k * k
        if err <= 0.0:
            raise FloatingPointError(f"non-positive prediction error at order {i}")
    return a, err


def lpc_frame(frame: np.ndarray, order: int, window: str = "hamming") -> tuple[np.ndarray, float, float]:
    """LPC coefficients, prediction error and frame power of one raw frame."""
    x = np.append(frame[0], frame[1:] - PRE_EMPHASIS * frame[:-1])
    x = x * window_fn(window, x.size)
    n = x.size
    r = np.correlate(x, x, mode="full")[n - 1:n + order] / n
    a, err = levinson_durbin(r, order)
    return a, err, float(r[0])


def _roots_to_formants(a: np.ndarray, sample_rate: int) -> np.ndarray:
    roots = np.roots(a)
    roots = roots[np.imag(roots) > 0]
    freqs = np.angle(roots) * sample_rate / (2 * np.pi)
    bw = -np.log(np.abs(roots)) * sample_rate / np.pi
    keep = (bw < MAX_BANDWIDTH_HZ) & (freqs > MIN_FORMANT_HZ)
    return np.sort(freqs[keep])


def envelope_db(a: np.ndarray, err: float, freq_hz: float, sample_rate: int) -> float:
    w = 2 * np.pi * freq_hz / sample_rate
    resp = np.polyval(a[::-1], np.exp(-1j * w))
    return float(10 * np.log10(err / max(abs(resp) ** 2, 1e-300)))


def formants_lpc(
    frames: np.ndarray,
    sample_rate: int,
    order: int | None = None,
    voiced: np.ndarray | None = None,
) -> FormantResult:
    """F1..F3 per raw (unwindowed) frame via autocorrelation LPC.

    Roots with bandwidth under 400 Hz and frequency above 90 Hz are kept and
    the three lowest reported. Frames whose recursion goes unstable are
    skipped (zeros) and counted. ``reliable`` is the voicing mask when given.
    """
    frames = np.atleast_2d(frames)
    order = default_lpc_order(sample_rate) if order is None else order
    n = frames.shape[0]
    freqs = np.zeros((n, N_FORMANTS))
    rel = np.zeros((n, N_FORMANTS))
    skipped = 0
    for i, frame in enumerate(frames):
        try:
            a, err, power = lpc_frame(frame, order)
        except FloatingPointError:
            skipped += 1
            continue
        found = _roots_to_formants(a, sample_rate)[:N_FORMANTS]
        if found.size == 0:
            skipped += 1
        frame_db = 10 * np.log10(power)
        for j, f in enumerate(found):
            freqs[i, j] = f
            rel[i, j] = envelope_db(a, err, f, sample_rate) - frame_db
    reliable = np.ones(n, dtype=bool) if voiced is None else np.asarray(voiced, dtype=bool)
    return FormantResult(freqs, rel, reliable, skipped)
