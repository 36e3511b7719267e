"""Classification and regression metrics for emotion recognition."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Sequence

import numpy as np

from .errors import InputError, UndefinedResultError


@dataclass(frozen=True)
class ConfusionCounts:
    """Confusion matrix with rows = true class, columns = predicted class."""

    labels: tuple
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.int64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(self.labels):
            raise InputError("confusion matrix must be square and match the label list")
        if (m < 0).any():
            raise InputError("confusion counts must be non-negative")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", tuple(self.labels))

    @classmethod
    def from_labels(
        cls, targets: Sequence[Hashable], preds: Sequence[Hashable], labels: Sequence | None = None
    ) -> "ConfusionCounts":
        if len(targets) != len(preds):
            raise InputError(f"length mismatch: {len(targets)} targets vs {len(preds)} preds")
        if labels is None:
            labels = sorted(set(targets) | set(preds), key=str)
        index = {lab: i for i, lab in enumerate(labels)}
        m = np.zeros((len(labels), len(labels)), dtype=np.int64)
        for t, p in zip(targets, preds):
            if t not in index or p not in index:
                raise InputError(f"label outside declared set: {t!r} / {p!r}")
            m[index[t], index[p]] += 1
        return cls(tuple(labels), m)

    @property
    def tp(self) -> np.ndarray:
        return np.diag(self.matrix)

    @property
    def support(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    @property
    def n(self) -> int:
        return int(self.matrix.sum())


def unweighted_accuracy(cm: ConfusionCounts) -> float:
    if cm.n == 0:
        raise UndefinedResultError("accuracy of an empty confusion matrix")
    return int(cm.tp.sum()) / cm.n


def weighted_accuracy(cm: ConfusionCounts) -> float:
    """Support-weighted per-class accuracy, sum_c (n_c / n)(TP_c / n_c).

    Classes with no samples contribute nothing. By algebra this equals
    :func:`unweighted_accuracy`; the terms are summed as exact rationals so
    the two agree bit for bit.
    """
    if cm.n == 0:
        raise UndefinedResultError("accuracy of an empty confusion matrix")
    total = sum(
        (Fraction(int(nc), cm.n) * Fraction(int(tp), int(nc))
         for tp, nc in zip(cm.tp, cm.support) if nc > 0),
        Fraction(0),
    )
    return float(total)


def balanced_accuracy(cm: ConfusionCounts) -> float:
    support = cm.support
    if (support == 0).any():
        missing = [lab for lab, s in zip(cm.labels, support) if s == 0]
        raise UndefinedResultError(f"classes without samples: {missing}")
    return float(np.mean(cm.tp / support))


@dataclass(frozen=True)
class PRF:
    labels: tuple
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    averaging: str

    @property
    def aggregate(self) -> dict[str, float]:
        if self.averaging == "macro":
            w = np.full(len(self.labels), 1.0 / len(self.labels))
        else:
            total = self.support.sum()
            w = self.support / total if total else np.zeros(len(self.labels))
        return {
            "precision": float(w @ self.precision),
            "recall": float(w @ self.recall),
            "f1": float(w @ self.f1),
        }


def precision_recall_f1(cm: ConfusionCounts, averaging: str = "macro") -> PRF:
    """One-vs-rest P/R/F1; any 0/0 is reported as 0."""
    if averaging not in ("macro", "weighted"):
        raise InputError(f"unknown averaging {averaging!r}")
    if cm.n == 0:
        raise UndefinedResultError("empty confusion matrix")
    tp = cm.tp.astype(float)
    predicted = cm.matrix.sum(axis=0).astype(float)
    actual = cm.support.astype(float)
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, actual, out=np.zeros_like(tp), where=actual > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return PRF(cm.labels, precision, recall, f1, cm.support, averaging)


def _pair(preds, targets, min_len: int = 1) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(preds, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape or p.ndim != 1:
        raise InputError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size < min_len:
        raise InputError(f"need at least {min_len} pairs")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(t))):
        raise InputError("non-finite values")
    return p, t


def mse(preds, targets) -> float:
    p, t = _pair(preds, targets)
    return float(np.mean((t - p) ** 2))


def mae(preds, targets) -> float:
    p, t = _pair(preds, targets)
    return float(np.mean(np.abs(t - p)))


def _moments(p, t, ddof):
    mp, mt = p.mean(), t.mean()
    vp = float(np.sum((p - mp) ** 2)) / (p.size - ddof)
    vt = float(np.sum((t - mt) ** 2)) / (t.size - ddof)
    cov = float(np.sum((p - mp) * (t - mt))) / (p.size - ddof)
    return mp, mt, vp, vt, cov


def pcc(preds, targets, ddof: int = 0) -> float:
    p, t = _pair(preds, targets, min_len=2)
    _, _, vp, vt, cov = _moments(p, t, ddof)
    if vp == 0 or vt == 0:
        raise UndefinedResultError("PCC undefined for zero-variance input")
    return cov / math.sqrt(vp * vt)


def ccc(preds, targets, ddof: int = 0) -> float:
    """Concordance correlation; population variances by default (``ddof=1`` for sample)."""
    p, t = _pair(preds, targets, min_len=2)
    mp, mt, vp, vt, cov = _moments(p, t, ddof)
    if vp == 0 or vt == 0:
        raise UndefinedResultError("CCC undefined for zero-variance input")
    # 2 * rho * sd_t * sd_p == 2 * cov
    return 2.0 * cov / (vt + vp + (mt - mp) ** 2)


def round_half_away(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def acc_from_scores(pred_scores, target_scores, mode: str = "acc7", exclude_zero: bool = True) -> float:
    """Accuracy of regression scores turned into classes.

    acc7: both sides rounded half away from zero and clipped to [-3, 3].
    acc2: sign agreement; pairs where either side is 0 are dropped unless
    ``exclude_zero`` is False (then 0 counts as non-negative).
    """
    p, t = _pair(pred_scores, target_scores)
    if mode == "acc7":
        if np.any(np.abs(t) > 3):
            raise InputError("acc7 targets must lie in [-3, 3]")
        pc = np.clip(round_half_away(p), -3, 3)
        tc = np.clip(round_half_away(t), -3, 3)
        return float(np.mean(pc == tc))
    if mode == "acc2":
        if exclude_zero:
            keep = (p != 0) & (t != 0)
            if not keep.any():
                raise UndefinedResultError("no non-zero pairs left for acc2")
            return float(np.mean((p[keep] > 0) == (t[keep] > 0)))
        return float(np.mean((p >= 0) == (t >= 0)))
    raise InputError(f"unknown mode {mode!r}")


def classification_report(targets: Sequence, preds: Sequence, labels: Sequence | None = None) -> dict:
    cm = ConfusionCounts.from_labels(targets, preds, labels)
    report = {
        "n": cm.n,
        "labels": [str(l) for l in cm.labels],
        "confusion": cm.matrix.tolist(),
        "unweighted_accuracy": unweighted_accuracy(cm),
        "weighted_accuracy": weighted_accuracy(cm),
    }
    try:
        report["balanced_accuracy"] = balanced_accuracy(cm)
    except UndefinedResultError:
        report["balanced_accuracy"] = None
    for avg in ("macro", "weighted"):
        prf = precision_recall_f1(cm, avg)
        report[f"{avg}_avg"] = prf.aggregate
    prf = precision_recall_f1(cm, "macro")
    report["per_class"] = {
        str(lab): {"precision": float(pr), "recall": float(rc), "f1": float(f), "support": int(s)}
        for lab, pr, rc, f, s in zip(prf.labels, prf.precision, prf.recall, prf.f1, prf.support)
    }
    return report


def regression_report(preds: Sequence[float], targets: Sequence[float]) -> dict:
    report = {"n": len(preds), "mse": mse(preds, targets), "mae": mae(preds, targets)}
    for name, fn in (("pcc", pcc), ("ccc", ccc)):
        try:
            report[name] = fn(preds, targets)
        except (UndefinedResultError, InputError):
            report[name] = None
    return report
