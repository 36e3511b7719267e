"""Multinomial logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from ..errors import InputError, InvariantError


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 300
    l2: float = 1e-4
    batch_size: int | None = None
    seed: int = 0


@dataclass
class ClassifierModel:
    weights: np.ndarray  # (features + 1) x classes, bias in the last row
    classes: tuple[str, ...]
    mean: np.ndarray
    scale: np.ndarray
    config: TrainConfig = field(default_factory=TrainConfig)
    loss_history: list[float] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0] - 1


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def with_bias(x: np.ndarray) -> np.ndarray:
    return np.hstack([x, np.ones((x.shape[0], 1))])


def loss_and_grad(w: np.ndarray, xb: np.ndarray, y: np.ndarray, l2: float) -> tuple[float, np.ndarray]:
    """Mean cross-entropy plus ``l2/2 * ||W||^2`` (bias row excluded) and its gradient.

    ``xb`` carries a trailing ones column; ``y`` is one-hot.
    """
    p = softmax(xb @ w)
    n = xb.shape[0]
    ce = -float(np.sum(y * np.log(np.clip(p, 1e-300, None)))) / n
    reg = 0.5 * l2 * float(np.sum(w[:-1] ** 2))
    grad = xb.T @ (p - y) / n
    grad[:-1] += l2 * w[:-1]
    return ce + reg, grad


def train_builtin(
    features: np.ndarray,
    labels: Sequence[str],
    cfg: TrainConfig = TrainConfig(),
    classes: Sequence[str] | None = None,
) -> ClassifierModel:
    """Fit on z-scored features starting from all-zero weights.

    ``classes`` fixes the output order; by default the sorted distinct labels.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[0] != len(labels):
        raise InputError(f"{x.shape} feature matrix for {len(labels)} labels")
    if not np.all(np.isfinite(x)):
        raise InputError("non-finite features")
    present = sorted(set(labels))
    if len(present) < 2:
        raise InputError(f"need at least two classes, got {present}")
    classes = tuple(sorted(present) if classes is None else classes)
    index = {c: i for i, c in enumerate(classes)}
    if not set(present) <= set(classes):
        raise InputError(f"labels {sorted(set(present) - set(classes))} outside class set")

    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    xb = with_bias((x - mean) / scale)
    y = np.zeros((x.shape[0], len(classes)))
    y[np.arange(x.shape[0]), [index[l] for l in labels]] = 1.0

    w = np.zeros((xb.shape[1], len(classes)))
    rng = np.random.default_rng(cfg.seed)
    history = []
    for _ in range(cfg.epochs):
        if cfg.batch_size is None or cfg.batch_size >= x.shape[0]:
            loss, grad = loss_and_grad(w, xb, y, cfg.l2)
            w -= cfg.learning_rate * grad
        else:
            order = rng.permutation(x.shape[0])
            losses = []
            for start in range(0, x.shape[0], cfg.batch_size):
                batch = order[start:start + cfg.batch_size]
                loss, grad = loss_and_grad(w, xb[batch], y[batch], cfg.l2)
                w -= cfg.learning_rate * grad
                losses.append(loss)
            loss = float(np.mean(losses))
        if not np.isfinite(loss):
            raise InvariantError("training loss became non-finite")
        history.append(loss)
    return ClassifierModel(w, classes, mean, scale, cfg, history)


def predict_proba(model: ClassifierModel, features: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if x.shape[1] != model.n_features:
        raise InputError(f"model expects {model.n_features} features, got {x.shape[1]}")
    return softmax(with_bias((x - model.mean) / model.scale) @ model.weights)


def predict(model: ClassifierModel, features: np.ndarray) -> tuple[list[str], np.ndarray]:
    proba = predict_proba(model, features)
    return [model.classes[i] for i in proba.argmax(axis=1)], proba


class Classifier(Protocol):
    """What the training loop needs from a model. A fresh instance is built every iteration."""

    classes_: tuple[str, ...]

    def fit(self, features: np.ndarray, labels: Sequence[str]) -> "Classifier": ...

    def predict_proba(self, features: np.ndarray) -> np.ndarray: ...


class BuiltinClassifier:
    def __init__(self, cfg: TrainConfig = TrainConfig(), classes: Sequence[str] | None = None):
        self.cfg = cfg
        self.declared = None if classes is None else tuple(classes)
        self.model: ClassifierModel | None = None

    @property
    def classes_(self) -> tuple[str, ...]:
        return self.model.classes

    def fit(self, features, labels):
        self.model = train_builtin(features, labels, self.cfg, self.declared)
        return self

    def predict_proba(self, features):
        return predict_proba(self.model, features)
