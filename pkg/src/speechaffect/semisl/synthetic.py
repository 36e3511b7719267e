"""Synthetic Gaussian-blob task with two noisy pseudo-label views."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from .pool import DataPool, PseudoLabelRecord


@dataclass(frozen=True)
class SyntheticConfig:
    n_points: int = 1000
    dim: int = 64
    n_classes: int = 4
    valid_frac: float = 0.2
    labeled_frac: float = 0.3
    acoustic_noise: float = 0.1
    linguistic_noise: float = 0.2
    separation: float = 0.35
    seed: int = 0


@dataclass
class SyntheticTask:
    pool: DataPool
    records: list[PseudoLabelRecord]
    gold: dict[str, str]


def _corrupt(labels: np.ndarray, rate: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """Replace a ``rate`` fraction of labels by a uniformly drawn different class."""
    flip = rng.random(labels.size) < rate
    shift = rng.integers(1, k, size=labels.size)
    return np.where(flip, (labels + shift) % k, labels)


def make_blob_task(cfg: SyntheticConfig = SyntheticConfig()) -> SyntheticTask:
    """Isotropic unit-variance blobs around class means drawn as N(0, separation^2 I).

    The first and second halves of the feature vector serve as the two views
    for the two-view baselines.
    """
    if cfg.n_classes < 2 or cfg.dim < 2 or cfg.n_points < 4 * cfg.n_classes:
        raise InputError("synthetic task too small")
    rng = np.random.default_rng(cfg.seed)
    k = cfg.n_classes
    classes = tuple(f"c{i}" for i in range(k))
    means = rng.normal(0.0, cfg.separation, size=(k, cfg.dim))
    y = np.arange(cfg.n_points) % k
    rng.shuffle(y)
    x = means[y] + rng.normal(size=(cfg.n_points, cfg.dim))
    ids = [f"u{i:05d}" for i in range(cfg.n_points)]

    order = rng.permutation(cfg.n_points)
    n_val = int(round(cfg.valid_frac * cfg.n_points))
    n_lab = int(round(cfg.labeled_frac * (cfg.n_points - n_val)))
    val_idx, lab_idx, unl_idx = order[:n_val], order[n_val:n_val + n_lab], order[n_val + n_lab:]

    acoustic = _corrupt(y, cfg.acoustic_noise, k, rng)
    linguistic = _corrupt(y, cfg.linguistic_noise, k, rng)
    records = [PseudoLabelRecord(ids[i], classes[acoustic[i]], classes[linguistic[i]]) for i in unl_idx]
    gold = {ids[i]: classes[y[i]] for i in range(cfg.n_points)}
    half = cfg.dim // 2
    pool = DataPool.from_records(
        ids, x,
        labeled={ids[i]: gold[ids[i]] for i in lab_idx},
        validation={ids[i]: gold[ids[i]] for i in val_idx},
        records=records,
        classes=classes,
        gold={ids[i]: gold[ids[i]] for i in unl_idx},
        views=(x[:, :half], x[:, half:]),
    )
    return SyntheticTask(pool, records, gold)
