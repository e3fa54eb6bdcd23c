"""Expandable linear softmax head with SGD-momentum training.

The head maps feature vectors to category scores through a single linear
layer (one weight row and bias per learned category, in append-only row
order). Each increment it is expanded with zero-initialized rows for any new
categories and then trained on the increment's labeled views plus
pseudo-rehearsal samples, warm-starting from the incoming weights.

Training minimizes mean softmax cross-entropy with minibatch SGD plus
classic momentum (velocity = momentum * velocity + gradient, then
weights -= lr * velocity). The shuffle order is fully determined by
``TrainConfig.shuffle_seed``, the last partial minibatch is used, and the
momentum velocity starts at zero on every call, so training is a pure
function of (head, data order, config).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 25
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 64
    shuffle_seed: int = 0

    def __post_init__(self):
        # epochs = 0 is allowed and means "return the head unchanged"
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")


@dataclass
class ClassifierHead:
    """Weights (rows = categories), biases, and the row -> label mapping."""

    weights: np.ndarray
    biases: np.ndarray
    label_order: list[str] = field(default_factory=list)

    @classmethod
    def empty(cls, feature_dim: int) -> "ClassifierHead":
        return cls(np.zeros((0, feature_dim)), np.zeros(0), [])

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def num_labels(self) -> int:
        return self.weights.shape[0]

    def row(self, label: str) -> int:
        return self.label_order.index(label)


def expand(head: ClassifierHead, new_labels) -> ClassifierHead:
    """Append one zero row (and zero bias) per new label.

    Existing rows are copied bit-for-bit; appending never reindexes them.
    """
    new_labels = list(new_labels)
    known = set(head.label_order)
    for label in new_labels:
        if label in known:
            raise ValueError(f"label already known: {label!r}")
        known.add(label)
    if len(set(new_labels)) != len(new_labels):
        raise ValueError("duplicate labels in expansion")
    extra = len(new_labels)
    weights = np.vstack([head.weights, np.zeros((extra, head.feature_dim))])
    biases = np.concatenate([head.biases, np.zeros(extra)])
    return ClassifierHead(weights, biases, head.label_order + new_labels)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(weights: np.ndarray, biases: np.ndarray, x: np.ndarray,
                  targets: np.ndarray) -> float:
    """Mean softmax cross-entropy over a batch (targets are row indices)."""
    logits = x @ weights.T + biases
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(len(targets)), targets]
    return float((log_norm - picked).mean())


def cross_entropy_gradients(weights: np.ndarray, biases: np.ndarray,
                            x: np.ndarray, targets: np.ndarray
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the batch-mean cross-entropy w.r.t. (W, b)."""
    probs = _softmax(x @ weights.T + biases)
    probs[np.arange(len(targets)), targets] -= 1.0
    probs /= len(targets)
    return probs.T @ x, probs.sum(axis=0)


def _encode_labels(head: ClassifierHead, labels) -> np.ndarray:
    rows = {label: i for i, label in enumerate(head.label_order)}
    try:
        return np.array([rows[label] for label in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"unknown label in training data: {exc.args[0]!r}") from None


def train(head: ClassifierHead, features, labels, cfg: TrainConfig) -> ClassifierHead:
    """SGD-with-momentum training pass; returns the updated head.

    Runs epochs * ceil(n / batch_size) steps, reshuffling each epoch from a
    generator seeded with cfg.shuffle_seed. Momentum velocity starts at zero.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != head.feature_dim:
        raise ValueError(
            f"features must be (n, {head.feature_dim}), got {x.shape}"
        )
    if x.shape[0] == 0:
        raise ValueError("training data is empty")
    y = _encode_labels(head, labels)
    if len(y) != x.shape[0]:
        raise ValueError("features and labels disagree in length")
    if cfg.epochs == 0:
        return head

    w = head.weights.copy()
    b = head.biases.copy()
    vel_w = np.zeros_like(w)
    vel_b = np.zeros_like(b)
    rng = np.random.default_rng(cfg.shuffle_seed)
    n = x.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            grad_w, grad_b = cross_entropy_gradients(w, b, x[idx], y[idx])
            vel_w = cfg.momentum * vel_w + grad_w
            vel_b = cfg.momentum * vel_b + grad_b
            w -= cfg.learning_rate * vel_w
            b -= cfg.learning_rate * vel_b
    return replace(head, weights=w, biases=b, label_order=list(head.label_order))


def predict(head: ClassifierHead, x) -> tuple[str, np.ndarray]:
    """Most probable label (ties to the lowest row) and the full softmax."""
    if head.num_labels == 0:
        raise ValueError("cannot predict with an empty head")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (head.feature_dim,):
        raise ValueError(
            f"dimension mismatch: expected ({head.feature_dim},), got {x.shape}"
        )
    probs = _softmax(x @ head.weights.T + head.biases)
    return head.label_order[int(np.argmax(probs))], probs


def predict_batch(head: ClassifierHead, features) -> list[str]:
    if head.num_labels == 0:
        raise ValueError("cannot predict with an empty head")
    x = np.asarray(features, dtype=np.float64)
    logits = x @ head.weights.T + head.biases
    return [head.label_order[i] for i in np.argmax(logits, axis=1)]


def evaluate(head: ClassifierHead, features, labels) -> float:
    """Fraction of view vectors whose predicted label matches the truth."""
    labels = list(labels)
    if not labels:
        raise ValueError("evaluation set is empty")
    predicted = predict_batch(head, features)
    hits = sum(p == t for p, t in zip(predicted, labels))
    return hits / len(labels)
