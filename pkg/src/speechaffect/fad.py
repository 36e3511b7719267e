"""Frechet audio distance between Gaussian fits of embedding sets, and FAD pseudo-labels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .dataio import Matrix
from .errors import InputError

EIG_CLIP = 1e-10
CORRUPT_EIG = -1e-6


@dataclass(frozen=True)
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mu.size, mu.size):
            raise InputError(f"covariance shape {cov.shape} does not match mean of size {mu.size}")
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @property
    def dim(self) -> int:
        return self.mean.size


def fit_gaussian(X, shrinkage: float = 0.0) -> GaussianStats:
    """Column means and population covariance, optionally shrunk toward its diagonal."""
    x = X.values if isinstance(X, Matrix) else np.asarray(X, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.shape[0] < 2:
        raise InputError(f"need at least 2 rows to fit a Gaussian, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise InputError("embedding matrix has non-finite entries")
    if not 0.0 <= shrinkage <= 1.0:
        raise InputError("shrinkage must lie in [0, 1]")
    mu = x.mean(axis=0)
    xc = x - mu
    cov = xc.T @ xc / x.shape[0]
    if shrinkage:
        cov = (1.0 - shrinkage) * cov + shrinkage * np.diag(np.diag(cov))
    return GaussianStats(mu, cov, x.shape[0])


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
    if vals.min() < CORRUPT_EIG * max(1.0, abs(vals).max()):
        raise InputError(f"covariance has eigenvalue {vals.min():.3g}; not PSD")
    vals = np.where(vals < EIG_CLIP, 0.0, vals)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _trace_sqrt_product(a: np.ndarray, b: np.ndarray) -> float:
    """tr sqrt(A B) via the symmetric product sqrt(A) B sqrt(A).

    The product's eigenvalues scale like squared variances, so a fixed clip
    here would drop up to sqrt(EIG_CLIP) of trace; only negatives are zeroed.
    """
    ra = _psd_sqrt(a)
    prod = ra @ b @ ra
    vals = np.linalg.eigvalsh(0.5 * (prod + prod.T))
    vals = np.clip(vals, 0.0, None)
    return float(np.sum(np.sqrt(vals)))


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    if a.dim != b.dim:
        raise InputError(f"dimension mismatch: {a.dim} vs {b.dim}")
    _psd_sqrt(b.cov)  # reject corrupt input symmetrically
    diff = a.mean - b.mean
    value = (
        float(diff @ diff)
        + float(np.trace(a.cov) + np.trace(b.cov))
        - 2.0 * _trace_sqrt_product(a.cov, b.cov)
    )
    return max(0.0, value)


@dataclass(frozen=True)
class FadScoreTable:
    encoders: tuple[str, ...]
    classes: tuple[str, ...]
    scores: np.ndarray  # encoders x classes

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float)
        if s.shape != (len(self.encoders), len(self.classes)):
            raise InputError(f"score grid {s.shape} does not match encoders x classes")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "encoders", tuple(self.encoders))
        object.__setattr__(self, "classes", tuple(self.classes))

    @classmethod
    def from_grid(cls, grid: Mapping[str, Mapping[str, float]]) -> "FadScoreTable":
        """Build from ``{encoder: {class: score}}``."""
        encoders = tuple(grid)
        if not encoders:
            raise InputError("empty score grid")
        classes = tuple(grid[encoders[0]])
        for enc in encoders:
            if set(grid[enc]) != set(classes):
                raise InputError(f"encoder {enc!r} scores a different class set")
        return cls(encoders, classes, [[grid[e][c] for c in classes] for e in encoders])

    @property
    def average(self) -> np.ndarray:
        return self.scores.mean(axis=0)

    def normalized_average(self) -> np.ndarray:
        """Mean over encoders after min-max scaling each encoder's row to [0, 1]."""
        lo = self.scores.min(axis=1, keepdims=True)
        span = self.scores.max(axis=1, keepdims=True) - lo
        scaled = np.divide(self.scores - lo, span, out=np.zeros_like(self.scores), where=span > 0)
        return scaled.mean(axis=0)

    def as_dict(self) -> dict:
        return {
            "encoders": list(self.encoders),
            "classes": list(self.classes),
            "table": {
                e: {c: float(v) for c, v in zip(self.classes, row)}
                for e, row in zip(self.encoders, self.scores)
            },
            "averages": {c: float(v) for c, v in zip(self.classes, self.average)},
        }


def score_table(
    labeled: Mapping[str, Mapping[str, GaussianStats]],
    unlabeled: Mapping[str, GaussianStats],
) -> FadScoreTable:
    """FAD of the unlabeled stats against every (class, encoder) labeled fit."""
    if not labeled:
        raise InputError("no labeled classes")
    encoders = tuple(unlabeled)
    classes = tuple(labeled)
    for cls in classes:
        if set(labeled[cls]) != set(encoders):
            raise InputError(
                f"class {cls!r} has encoders {sorted(labeled[cls])}, unlabeled has {sorted(encoders)}"
            )
    grid = np.array(
        [[frechet_distance(labeled[c][e], unlabeled[e]) for c in classes] for e in encoders]
    )
    return FadScoreTable(encoders, classes, grid)


@dataclass(frozen=True)
class PseudoLabel:
    label: str
    tie: bool
    score: float


def assign_pseudo_label(table: FadScoreTable, normalized: bool = False) -> PseudoLabel:
    """Class with the smallest average FAD; ties go to the lexicographically first class."""
    if not table.classes or not table.encoders:
        raise InputError("empty score table")
    avg = table.normalized_average() if normalized else table.average
    best = float(avg.min())
    winners = sorted(c for c, v in zip(table.classes, avg) if v == best)
    return PseudoLabel(winners[0], len(winners) > 1, best)


def label_utterances(
    labeled: Mapping[str, Mapping[str, GaussianStats]],
    unlabeled_by_id: Mapping[str, Mapping[str, GaussianStats]],
    normalized: bool = False,
) -> dict[str, PseudoLabel]:
    return {
        uid: assign_pseudo_label(score_table(labeled, stats), normalized)
        for uid, stats in unlabeled_by_id.items()
    }
