"""CCA similarity between representation sequences and feature sets.

Covariances are ridge-regularised (``Sigma + reg * I``) before whitening; the
regularised problem gives the canonical directions, and the reported
correlations are the plain sample correlations of the projected variables
along those directions. With ``reg = 0`` both coincide with the textbook
singular values.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dataio import Matrix
from .errors import InputError

log = logging.getLogger(__name__)

REDUCTIONS = ("mean", "top1")


@dataclass(frozen=True)
class CcaResult:
    correlations: np.ndarray
    singular_values: np.ndarray
    k: int
    reduction: str = "mean"

    @property
    def mean_corr(self) -> float:
        return float(np.mean(self.correlations)) if self.k else 0.0

    @property
    def similarity(self) -> float:
        if self.reduction == "top1":
            return float(self.correlations[0]) if self.k else 0.0
        return self.mean_corr


@dataclass(frozen=True)
class LayerSweep:
    scores: dict[int, float]
    reduction: str = "mean"

    @property
    def layer_count(self) -> int:
        return len(self.scores)

    def as_rows(self) -> list[tuple[int, float]]:
        return sorted(self.scores.items())


def _as_array(x) -> np.ndarray:
    if isinstance(x, Matrix):
        return x.values
    arr = np.asarray(x, dtype=float)
    return arr.reshape(-1, 1) if arr.ndim == 1 else arr


def _inv_sqrt(cov: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(cov)
    if vals.min() <= 0:
        raise InputError("covariance is singular; use reg > 0 or drop constant columns")
    return (vecs / np.sqrt(vals)) @ vecs.T


def _covariances(x: np.ndarray, y: np.ndarray):
    xc = x - x.mean(axis=0)
    yc = y - y.mean(axis=0)
    n = x.shape[0]
    return xc.T @ xc / n, yc.T @ yc / n, xc.T @ yc / n


def cca(X, Y, reg: float = 1e-6, reduction: str = "mean") -> CcaResult:
    """Canonical correlations of row-aligned ``X`` (n x p) and ``Y`` (n x q), descending."""
    x, y = _as_array(X), _as_array(Y)
    if reduction not in REDUCTIONS:
        raise InputError(f"unknown reduction {reduction!r}")
    if x.shape[0] != y.shape[0]:
        raise InputError(f"row mismatch: {x.shape[0]} vs {y.shape[0]}")
    n, p = x.shape
    q = y.shape[1]
    if n < 2:
        raise InputError("CCA needs at least two rows")
    if n <= max(p, q):
        warnings.warn(f"CCA with n={n} rows <= max dim {max(p, q)}; estimates are degenerate")
    sxx, syy, sxy = _covariances(x, y)
    wx = _inv_sqrt(sxx + reg * np.eye(p))
    wy = _inv_sqrt(syy + reg * np.eye(q))
    u, s, vt = np.linalg.svd(wx @ sxy @ wy, full_matrices=False)
    k = min(p, q)
    a = wx @ u[:, :k]
    b = wy @ vt[:k].T
    cov_ab = np.einsum("ik,ij,jk->k", a, sxy, b)
    var_a = np.einsum("ik,ij,jk->k", a, sxx, a)
    var_b = np.einsum("ik,ij,jk->k", b, syy, b)
    denom = np.sqrt(np.maximum(var_a, 0) * np.maximum(var_b, 0))
    corr = np.divide(cov_ab, denom, out=np.zeros(k), where=denom > 1e-300)
    corr = np.clip(np.abs(corr), 0.0, 1.0)
    corr = np.sort(corr)[::-1]
    return CcaResult(corr, np.clip(s[:k], 0.0, 1.0), k, reduction)


def cca_generalized_eig(X, Y, reg: float = 1e-6) -> np.ndarray:
    """Reference route: the symmetric-definite pencil [[0, Sxy], [Syx, 0]] v = rho [[Kxx, 0], [0, Kyy]] v.

    Returns the top ``min(p, q)`` generalized eigenvalues, i.e. the
    regularised canonical correlations, in descending order.
    """
    from scipy.linalg import eigh

    x, y = _as_array(X), _as_array(Y)
    p, q = x.shape[1], y.shape[1]
    sxx, syy, sxy = _covariances(x, y)
    a = np.zeros((p + q, p + q))
    a[:p, p:] = sxy
    a[p:, :p] = sxy.T
    b = np.zeros_like(a)
    b[:p, :p] = sxx + reg * np.eye(p)
    b[p:, p:] = syy + reg * np.eye(q)
    vals = eigh(a, b, eigvals_only=True)
    return np.sort(vals)[::-1][: min(p, q)]


def downsample_rows(X, target_len: int) -> np.ndarray:
    """Average contiguous near-equal bins so the result has ``target_len`` rows.

    Bin sizes follow ``numpy.array_split``: the first ``rows % target_len``
    bins hold one extra row (7 -> 3 gives 3/2/2).
    """
    x = _as_array(X)
    if target_len < 1:
        raise InputError("target_len must be >= 1")
    if target_len > x.shape[0]:
        raise InputError(f"cannot upsample {x.shape[0]} rows to {target_len}")
    if target_len == x.shape[0]:
        return x.copy()
    return np.vstack([chunk.mean(axis=0) for chunk in np.array_split(x, target_len)])


def align_rows(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Downsample whichever sequence is longer to the other's length."""
    x, y = _as_array(a), _as_array(b)
    n = min(x.shape[0], y.shape[0])
    return downsample_rows(x, n), downsample_rows(y, n)


def similarity(a, b, reg: float = 1e-6, reduction: str = "mean") -> float:
    x, y = align_rows(a, b)
    return cca(x, y, reg, reduction).similarity


def layer_similarity_sweep(
    layers: Sequence, features, reg: float = 1e-6, reduction: str = "mean"
) -> LayerSweep:
    if not layers:
        raise InputError("layer list is empty")
    return LayerSweep(
        {i: similarity(layer, features, reg, reduction) for i, layer in enumerate(layers)},
        reduction,
    )


def pairwise_layer_correlation(
    layers: Sequence, reg: float = 1e-6, reduction: str = "mean"
) -> np.ndarray:
    if len(layers) < 2:
        raise InputError("pairwise correlation needs at least two layers")
    n = len(layers)
    out = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = similarity(layers[i], layers[j], reg, reduction)
    return out


def hierarchical_cca_diff(
    reps, feats_frame, feats_phone, feats_word, reg: float = 1e-6, reduction: str = "mean"
) -> tuple[float, float]:
    """(phone - frame, word - phone) differences of representation/feature similarity."""
    s_frame = similarity(reps, feats_frame, reg, reduction)
    s_phone = similarity(reps, feats_phone, reg, reduction)
    s_word = similarity(reps, feats_word, reg, reduction)
    return s_phone - s_frame, s_word - s_phone


@dataclass
class EmotionCcaResult:
    scores: dict[str, float]
    absent: dict[str, int] = field(default_factory=dict)


def emotion_conditioned_cca(
    reps_by_class: Mapping[str, object],
    features_by_class: Mapping[str, object],
    min_rows: int = 50,
    reg: float = 1e-6,
    reduction: str = "mean",
) -> EmotionCcaResult:
    """Per-class similarity on pooled rows; classes under ``min_rows`` are reported absent."""
    if not reps_by_class:
        raise InputError("empty class map")
    scores, absent = {}, {}
    for cls in sorted(reps_by_class):
        if cls not in features_by_class:
            raise InputError(f"no features for class {cls!r}")
        x, y = align_rows(reps_by_class[cls], features_by_class[cls])
        if x.shape[0] < min_rows:
            log.warning("class %s has %d rows (< %d); skipped", cls, x.shape[0], min_rows)
            absent[cls] = int(x.shape[0])
            continue
        scores[cls] = cca(x, y, reg, reduction).similarity
    return EmotionCcaResult(scores, absent)


def pool_rows(matrices: Sequence) -> np.ndarray:
    return np.vstack([_as_array(m) for m in matrices])
