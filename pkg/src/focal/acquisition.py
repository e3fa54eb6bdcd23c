"""Uncertainty scoring and label-budget selection for multi-view objects.

An unlabeled object is scored by two signals read off the memory bank:

* mean predictive entropy: the per-view posterior entropy (natural log,
  0 ln 0 = 0), averaged over the object's viewpoints;
* viewpoint inconsistency: each view predicts a category by argmax over the
  per-category scores; with S_j the fraction of views voting for category j,
  the score is 1 / max_j S_j (1.0 when every view agrees, up to the view
  count when every view disagrees).

The combined score is delta * mean_entropy + (1 - delta) * inconsistency,
taken exactly as written with no range rescaling (entropy lives in
[0, ln N], inconsistency in [1, l]); an off-by-default `normalize` toggle
maps both terms to [0, 1] first for experimentation. Selection takes the
top-k combined scores with ties broken by pool order. While no category has
been learned yet the scores are undefined, so selection falls back to a
uniform random draw from the selection seed regardless of mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .memory import MemoryBank, normalize_scores

ACQUISITION_MODES = ("combined", "entropy_only", "consistency_only", "random")
PREDICTION_SOURCES = ("memory", "classifier")


@dataclass(frozen=True)
class AcquisitionConfig:
    delta: float = 0.7
    mode: str = "combined"
    k: int = 1
    selection_seed: int = 0
    normalize: bool = False
    predictions_from: str = "memory"

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must be in [0, 1], got {self.delta}")
        if self.mode not in ACQUISITION_MODES:
            raise ValueError(f"mode must be one of {ACQUISITION_MODES}, got {self.mode!r}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.predictions_from not in PREDICTION_SOURCES:
            raise ValueError(
                f"predictions_from must be one of {PREDICTION_SOURCES}, "
                f"got {self.predictions_from!r}"
            )


@dataclass(frozen=True)
class PoolObject:
    """An unlabeled candidate: id plus its stacked view features. The true
    label stays with the oracle."""

    object_id: str
    views: np.ndarray


@dataclass(frozen=True)
class ObjectScore:
    object_id: str
    mean_entropy: float
    inconsistency: float
    combined: float
    per_view_predictions: tuple[str, ...]


def entropy(probs) -> float:
    """Shannon entropy in nats; zero-probability terms contribute nothing."""
    p = np.asarray(probs, dtype=np.float64)
    nz = p[p > 0.0]
    return float(-(nz * np.log(nz)).sum())


def _views_of(obj) -> np.ndarray:
    views = obj.views if isinstance(obj, PoolObject) else obj
    views = np.asarray(views, dtype=np.float64)
    if views.ndim != 2 or views.shape[0] == 0:
        raise ValueError(f"views must be a non-empty (l, dim) stack, got {views.shape}")
    return views


def view_entropy(bank: MemoryBank, x) -> float:
    """Entropy of the posterior over learned categories for one view."""
    return entropy(bank.class_posterior(x))


def object_entropy(bank: MemoryBank, obj) -> float:
    """Mean view entropy over an object's viewpoints."""
    views = _views_of(obj)
    scores = bank.scores_for_views(views)
    return float(np.mean([entropy(normalize_scores(row)) for row in scores]))


def _per_view_predictions(bank: MemoryBank, views: np.ndarray,
                          head=None) -> list[str]:
    if head is not None:
        from .classifier import predict_batch

        return predict_batch(head, views)
    labels = bank.labels
    scores = bank.scores_for_views(views)
    return [labels[i] for i in np.argmax(scores, axis=1)]


def viewpoint_inconsistency(bank: MemoryBank, obj, *, head=None) -> float:
    """1 / max_j S_j where S_j is the fraction of views predicting category j.

    1.0 when all views agree; equal to the view count when they all differ.
    Per-view argmax ties go to the lowest category index. With `head` given,
    predictions come from the classifier instead of the memory scores.
    """
    views = _views_of(obj)
    predicted = _per_view_predictions(bank, views, head)
    counts: dict[str, int] = {}
    for label in predicted:
        counts[label] = counts.get(label, 0) + 1
    return len(predicted) / max(counts.values())


def combined_score(cfg: AcquisitionConfig, mean_entropy: float,
                   inconsistency: float) -> float:
    """Blend the two signals per the configured mode. Random mode returns the
    first uniform draw of the selection seed's stream."""
    if cfg.mode == "combined":
        return cfg.delta * mean_entropy + (1.0 - cfg.delta) * inconsistency
    if cfg.mode == "entropy_only":
        return mean_entropy
    if cfg.mode == "consistency_only":
        return inconsistency
    return float(np.random.default_rng(cfg.selection_seed).random())


def _top_k(pool_ids: list[str], combined: np.ndarray, k: int) -> list[str]:
    order = np.argsort(-combined, kind="stable")  # ties keep pool order
    return [pool_ids[i] for i in order[:k]]


def select(bank: MemoryBank, pool, cfg: AcquisitionConfig,
           head=None) -> tuple[list[str], list[ObjectScore]]:
    """Pick the k most informative objects; returns (ids, full score table).

    The score table covers every pool object, in pool order, for logging.
    """
    pool = list(pool)
    if len(pool) < cfg.k:
        raise ValueError(f"pool of {len(pool)} is smaller than k={cfg.k}")

    if len(bank) == 0:
        draws = np.random.default_rng(cfg.selection_seed).random(len(pool))
        table = [
            ObjectScore(obj.object_id, 0.0, 1.0, float(d), ())
            for obj, d in zip(pool, draws)
        ]
        ids = _top_k([o.object_id for o in pool], draws, cfg.k)
        return ids, table

    use_head = head if cfg.predictions_from == "classifier" else None
    n_classes = len(bank)
    log_n = np.log(n_classes) if n_classes > 1 else 1.0
    table: list[ObjectScore] = []
    for obj in pool:
        views = _views_of(obj)
        score_block = bank.scores_for_views(views)
        mean_ent = float(
            np.mean([entropy(normalize_scores(row)) for row in score_block])
        )
        if use_head is not None:
            predicted = _per_view_predictions(bank, views, use_head)
        else:
            labels = bank.labels
            predicted = [labels[i] for i in np.argmax(score_block, axis=1)]
        counts: dict[str, int] = {}
        for label in predicted:
            counts[label] = counts.get(label, 0) + 1
        inconsistency = len(predicted) / max(counts.values())
        if cfg.normalize:
            mean_ent = mean_ent / log_n
            l = len(predicted)
            inconsistency = (inconsistency - 1.0) / (l - 1.0) if l > 1 else 0.0
        table.append(
            ObjectScore(
                object_id=obj.object_id,
                mean_entropy=mean_ent,
                inconsistency=inconsistency,
                combined=0.0,  # filled below once mode is applied
                per_view_predictions=tuple(predicted),
            )
        )

    if cfg.mode == "random":
        combined = np.random.default_rng(cfg.selection_seed).random(len(pool))
    elif cfg.mode == "entropy_only":
        combined = np.array([s.mean_entropy for s in table])
    elif cfg.mode == "consistency_only":
        combined = np.array([s.inconsistency for s in table])
    else:
        combined = np.array(
            [cfg.delta * s.mean_entropy + (1.0 - cfg.delta) * s.inconsistency
             for s in table]
        )
    table = [
        ObjectScore(s.object_id, s.mean_entropy, s.inconsistency,
                    float(c), s.per_view_predictions)
        for s, c in zip(table, combined)
    ]
    ids = _top_k([o.object_id for o in pool], combined, cfg.k)
    return ids, table
