from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..dataio import Matrix
from ..errors import InputError

GROUP_SIZE = 5
LEVELS = ("phone", "word")


def group_mean(values: np.ndarray, size: int = GROUP_SIZE) -> np.ndarray:
    """Average non-overlapping groups of ``size`` rows; the last group may be short."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n = values.shape[0]
    if n == 0:
        raise InputError("cannot aggregate an empty matrix")
    out = np.empty((math.ceil(n / size), values.shape[1]))
    for g, start in enumerate(range(0, n, size)):
        out[g] = values[start:start + size].mean(axis=0)
    return out


def hierarchical_aggregate(features: Matrix, level: str) -> Matrix:
    """One step up the frame -> phone -> word hierarchy.

    ``phone`` expects frame-level rows and ``word`` phone-level rows; both
    average groups of five consecutive rows without overlap.
    """
    if level not in LEVELS:
        raise InputError(f"unknown level {level!r}; expected one of {LEVELS}")
    return Matrix(group_mean(features.values), features.columns)


def hierarchy(frame_features: Matrix) -> tuple[Matrix, Matrix, Matrix]:
    phone = hierarchical_aggregate(frame_features, "phone")
    return frame_features, phone, hierarchical_aggregate(phone, "word")


def bucketize_by_percentile(
    values: Sequence[float], low_pct: float = 30.0, high_pct: float = 30.0
) -> list[str]:
    """Label each value low / mid / high against nearest-rank cut points.

    The low cut is the value at rank ceil(low_pct% * n) from the bottom, the
    high cut the value at rank ceil(high_pct% * n) from the top. A value that
    reaches both cuts (coinciding boundaries) is labelled mid.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise InputError("cannot bucketize an empty list")
    if not np.all(np.isfinite(arr)):
        raise InputError("values must be finite")
    ordered = np.sort(arr)
    n = ordered.size
    low_cut = ordered[max(1, math.ceil(low_pct / 100.0 * n)) - 1]
    high_cut = ordered[n - max(1, math.ceil(high_pct / 100.0 * n))]
    labels = []
    for v in arr:
        is_low, is_high = v <= low_cut, v >= high_cut
        if is_low and not is_high:
            labels.append("low")
        elif is_high and not is_low:
            labels.append("high")
        else:
            labels.append("mid")
    return labels
