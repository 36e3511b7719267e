"""Iterative pseudo-labelling loop and the comparison baselines."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import InputError, InvariantError
from ..metrics import ConfusionCounts, unweighted_accuracy
from .classifier import BuiltinClassifier, Classifier, TrainConfig
from .pool import DataPool, PseudoLabelRecord

ClassifierFactory = Callable[[Sequence[str]], Classifier]
BASELINES = ("supervised_full", "supervised_limited", "decision_merging", "co_training")


@dataclass(frozen=True)
class LoopConfig:
    max_iters: int = 40
    patience: int = 2
    removal_rate: float = 0.2
    threshold: float = 0.5
    seed: int = 0
    train: TrainConfig = TrainConfig()

    def __post_init__(self):
        if self.max_iters < 1 or self.patience < 1:
            raise InputError("max_iters and patience must be positive")
        if not 0.0 <= self.removal_rate < 1.0:
            raise InputError("removal_rate must lie in [0, 1)")


def builtin_factory(cfg: LoopConfig) -> ClassifierFactory:
    return lambda classes: BuiltinClassifier(cfg.train, classes)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    val_ua: float
    train_size: int
    high_conf: int
    low_conf: int
    promoted: int
    removed: int


@dataclass
class IterationHistory:
    records: list[IterationRecord] = field(default_factory=list)
    stop_reason: str = ""

    CSV_HEADER = ("iteration", "val_ua", "train_size", "high_conf", "low_conf", "promoted", "removed")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def best_index(self) -> int:
        # first occurrence of the maximum, matching the strict-improvement rule
        uas = [r.val_ua for r in self.records]
        return int(np.argmax(uas))

    @property
    def best_ua(self) -> float:
        return self.records[self.best_index].val_ua

    @property
    def last_ua(self) -> float:
        return self.records[-1].val_ua

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.CSV_HEADER) + "\n")
        for r in self.records:
            buf.write(f"{r.iteration},{r.val_ua!r},{r.train_size},{r.high_conf},"
                      f"{r.low_conf},{r.promoted},{r.removed}\n")
        return buf.getvalue()


@dataclass
class LoopResult:
    history: IterationHistory
    pool: DataPool
    promoted_labels: dict[str, str]

    @property
    def final_ua(self) -> float:
        """Validation UA of the model kept by early stopping."""
        return self.history.best_ua


def _validation_ua(pool: DataPool, proba: np.ndarray, classes: Sequence[str]) -> float:
    val_ids = sorted(pool.validation)
    preds = [classes[i] for i in proba.argmax(axis=1)]
    cm = ConfusionCounts.from_labels([pool.validation[i] for i in val_ids], preds, pool.classes)
    return unweighted_accuracy(cm)


def _check_classes(pool: DataPool, train_labels: Sequence[str]) -> None:
    missing = sorted(set(pool.validation.values()) - set(train_labels))
    if missing:
        raise InputError(f"validation classes {missing} absent from training data")


def _fit(factory, classes, x, labels):
    return factory(classes).fit(x, labels)


class _Stopper:
    def __init__(self, patience: int):
        self.patience = patience
        self.best = -np.inf
        self.stale = 0

    def update(self, ua: float) -> bool:
        """Record a score; True when training should stop."""
        if ua > self.best:
            self.best, self.stale = ua, 0
        else:
            self.stale += 1
        return self.stale >= self.patience


def run_loop(
    pool: DataPool,
    records: Sequence[PseudoLabelRecord],
    cfg: LoopConfig = LoopConfig(),
    factory: ClassifierFactory | None = None,
) -> LoopResult:
    """Self-training with multi-view pseudo labels.

    Each iteration trains a fresh model on labeled plus high-confidence data
    minus this iteration's removal sample, scores validation UA, then promotes
    low-confidence items whose predicted label matches either view. The input
    pool is not modified.
    """
    if not pool.labeled:
        raise InputError("empty labeled set")
    if not pool.validation:
        raise InputError("empty validation set")
    factory = factory or builtin_factory(cfg)
    views = {r.id: r for r in records}
    missing = [i for i in pool.low_conf if i not in views]
    if missing:
        raise InputError(f"low-confidence ids without pseudo-label records: {missing[:5]}")

    high = dict(pool.high_conf)
    low = list(pool.low_conf)
    universe = len(high) + len(low)
    initial = sorted(pool.initial_high_conf_ids & set(high))
    n_remove = int(round(cfg.removal_rate * len(initial)))
    rng = np.random.default_rng(cfg.seed)
    removed: set[str] = set()
    promoted_labels: dict[str, str] = {}
    history = IterationHistory()
    stopper = _Stopper(cfg.patience)
    val_x = pool.rows(sorted(pool.validation))

    for it in range(cfg.max_iters):
        train_ids = sorted(pool.labeled) + sorted(i for i in high if i not in removed)
        labels = [pool.labeled.get(i) or high[i] for i in train_ids]
        _check_classes(pool, labels)
        model = _fit(factory, pool.classes, pool.rows(train_ids), labels)
        ua = _validation_ua(pool, model.predict_proba(val_x), model.classes_)
        n_high = len(high) - len(removed)
        if n_high + len(low) + len(removed) != universe:
            raise InvariantError("pool accounting drifted")
        stop = stopper.update(ua)

        promoted = 0
        if not stop and low:
            proba = model.predict_proba(pool.rows(low))
            keep = []
            for uid, k in zip(low, proba.argmax(axis=1)):
                label = model.classes_[k]
                rec = views[uid]
                if label == rec.acoustic or label == rec.linguistic:
                    high[uid] = label
                    promoted_labels[uid] = label
                    promoted += 1
                else:
                    keep.append(uid)
            low = keep
        history.records.append(
            IterationRecord(it, ua, len(train_ids), n_high, len(low) + promoted, promoted, len(removed))
        )
        if stop:
            history.stop_reason = "patience"
            break
        removed = set(rng.choice(initial, size=n_remove, replace=False)) if n_remove else set()
    else:
        history.stop_reason = "max_iters"

    final = DataPool(pool.ids, pool.features, dict(pool.labeled), high, low, dict(pool.validation),
                     pool.classes, pool.initial_high_conf_ids, dict(pool.gold), pool.views)
    return LoopResult(history, final, promoted_labels)


def merged_confident(
    proba_a: np.ndarray, proba_b: np.ndarray, threshold: float
) -> tuple[np.ndarray, np.ndarray]:
    """Average two probability matrices; return (argmax index, promote mask)."""
    a = np.atleast_2d(np.asarray(proba_a, dtype=float))
    b = np.atleast_2d(np.asarray(proba_b, dtype=float))
    if a.shape != b.shape:
        raise InputError(f"probability shapes differ: {a.shape} vs {b.shape}")
    merged = 0.5 * (a + b)
    return merged.argmax(axis=1), merged.max(axis=1) >= threshold


def _confident(proba: np.ndarray, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    return proba.argmax(axis=1), proba.max(axis=1) >= threshold


@dataclass
class BaselineReport:
    kind: str
    val_ua: float
    history: list[float]
    promoted: int

    def as_dict(self) -> dict:
        return {"kind": self.kind, "val_ua": self.val_ua, "iterations": len(self.history),
                "history": list(self.history), "promoted": self.promoted}


def run_baselines(
    pool: DataPool,
    cfg: LoopConfig = LoopConfig(),
    kind: str = "supervised_limited",
    factory: ClassifierFactory | None = None,
) -> BaselineReport:
    if kind not in BASELINES:
        raise InputError(f"unknown baseline {kind!r}; expected one of {BASELINES}")
    if not pool.labeled or not pool.validation:
        raise InputError("baselines need labeled and validation data")
    factory = factory or builtin_factory(cfg)
    val_ids = sorted(pool.validation)

    if kind in ("supervised_full", "supervised_limited"):
        ids = sorted(pool.labeled)
        labels = [pool.labeled[i] for i in ids]
        if kind == "supervised_full":
            extra = pool.unlabeled_ids
            absent = [i for i in extra if i not in pool.gold]
            if absent:
                raise InputError(f"supervised_full needs gold labels for {len(absent)} unlabeled ids")
            ids += extra
            labels += [pool.gold[i] for i in extra]
        _check_classes(pool, labels)
        model = _fit(factory, pool.classes, pool.rows(ids), labels)
        ua = _validation_ua(pool, model.predict_proba(pool.rows(val_ids)), model.classes_)
        return BaselineReport(kind, ua, [ua], 0)

    if pool.views is None:
        raise InputError(f"{kind} needs two feature views")
    train = [dict(pool.labeled), dict(pool.labeled)]
    unlabeled = pool.unlabeled_ids
    stopper = _Stopper(cfg.patience)
    history: list[float] = []
    promoted_total = 0
    for _ in range(cfg.max_iters):
        models = []
        for v in (0, 1):
            ids = sorted(train[v])
            labels = [train[v][i] for i in ids]
            _check_classes(pool, labels)
            models.append(_fit(factory, pool.classes, pool.rows(ids, v), labels))
        classes = models[0].classes_
        val_p = [m.predict_proba(pool.rows(val_ids, v)) for v, m in enumerate(models)]
        ua = _validation_ua(pool, 0.5 * (val_p[0] + val_p[1]), classes)
        history.append(ua)
        if stopper.update(ua):
            break
        if kind == "decision_merging":
            cand = [i for i in unlabeled if i not in train[0]]
            if not cand:
                continue
            idx, mask = merged_confident(models[0].predict_proba(pool.rows(cand, 0)),
                                         models[1].predict_proba(pool.rows(cand, 1)), cfg.threshold)
            for uid, k, ok in zip(cand, idx, mask):
                if ok:
                    train[0][uid] = train[1][uid] = classes[k]
                    promoted_total += 1
        else:
            # each view labels data for the other view's training set
            additions = ({}, {})
            for src, dst in ((0, 1), (1, 0)):
                cand = [i for i in unlabeled if i not in train[dst]]
                if not cand:
                    continue
                idx, mask = _confident(models[src].predict_proba(pool.rows(cand, src)), cfg.threshold)
                for uid, k, ok in zip(cand, idx, mask):
                    if ok:
                        additions[dst][uid] = classes[k]
            for dst in (0, 1):
                train[dst].update(additions[dst])
                promoted_total += len(additions[dst])
    return BaselineReport(kind, max(history), history, promoted_total)
