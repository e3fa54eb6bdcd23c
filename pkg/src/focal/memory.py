"""Per-category incremental Gaussian mixture memories.

Each learned category is represented by a uniform mixture of diagonal
Gaussians. A labeled feature vector either merges into the most similar
existing component (when that similarity clears the probability threshold)
or spawns a fresh zero-variance component centered on itself. Merging moves
the centroid to the count-weighted mean

    c_new = (w * c + x) / (w + 1)

and then updates the diagonal variance using the pre-merge count w and the
updated centroid:

    v_new = ((w - 1) / w) * v + ((w - 1) / w^2) * (x - c_new)^2

so a component's second member leaves the variance at zero (both
coefficients vanish at w = 1). An optional Welford-style update is kept
behind a flag for comparison.

"Probability" throughout is the normalization-free Gaussian kernel

    exp(-0.5 * sum_d (x_d - c_d)^2 / max(v_d, floor))

which lives in (0, 1], equals 1 exactly at the centroid, and makes a
[0, 1] threshold meaningful. The variance floor applies inside the kernel
only; stored variances keep their true zeros.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

DEFAULT_PROB_THRESHOLD = 0.2
DEFAULT_VARIANCE_FLOOR = 1e-4

VARIANCE_UPDATE_MODES = ("literal", "welford")


@dataclass
class GaussianComponent:
    """One mixture component: centroid, diagonal variance, member count."""

    centroid: np.ndarray
    variance: np.ndarray
    count: int


class IngestKind(Enum):
    NEW_CLASS = "new_class"
    MERGED = "merged"
    NEW_COMPONENT = "new_component"


@dataclass(frozen=True)
class IngestOutcome:
    kind: IngestKind
    label: str
    component_index: int


@dataclass(frozen=True)
class MemoryFootprint:
    component_count: int
    stored_vectors: int
    bytes: int

    @property
    def megabytes(self) -> float:
        return self.bytes / 1e6


def gaussian_kernel(x: np.ndarray, centroids: np.ndarray, variances: np.ndarray,
                    variance_floor: float) -> np.ndarray:
    """Similarity of `x` to each component row: exp(-0.5 * Mahalanobis^2)
    with per-dimension variances floored at `variance_floor`.

    `centroids`/`variances` are (n, dim); returns (n,). May underflow to 0.0
    for very distant points; mathematically the kernel lies in (0, 1].
    """
    d2 = (x - centroids) ** 2 / np.maximum(variances, variance_floor)
    return np.exp(-0.5 * d2.sum(axis=1))


def component_similarity(x: np.ndarray, comp: GaussianComponent,
                         variance_floor: float = DEFAULT_VARIANCE_FLOOR) -> float:
    """Kernel similarity of a vector to one component. 1.0 iff x == centroid."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != comp.centroid.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {comp.centroid.shape}")
    return float(gaussian_kernel(x, comp.centroid[None, :], comp.variance[None, :],
                                 variance_floor)[0])


def update_centroid(comp: GaussianComponent, x: np.ndarray) -> np.ndarray:
    """Count-weighted mean of the old centroid and the new vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != comp.centroid.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {comp.centroid.shape}")
    return (comp.count * comp.centroid + x) / (comp.count + 1)


def update_variance(comp: GaussianComponent, x: np.ndarray,
                    new_centroid: np.ndarray) -> np.ndarray:
    """Diagonal variance update, using the pre-merge count and the already
    updated centroid. With count 1 both coefficients are zero."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != comp.variance.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {comp.variance.shape}")
    w = comp.count
    return ((w - 1) / w) * comp.variance + ((w - 1) / w**2) * (x - new_centroid) ** 2


def welford_variance(comp: GaussianComponent, x: np.ndarray,
                     new_centroid: np.ndarray) -> np.ndarray:
    """Alternative exact streaming population variance (comparison flag)."""
    w = comp.count
    return (w * comp.variance + (x - comp.centroid) * (x - new_centroid)) / (w + 1)


class ClassMemory:
    """The uniform GMM of one category, stored as growable row arrays."""

    def __init__(self, label: str, feature_dim: int):
        self.label = label
        self.feature_dim = feature_dim
        self._centroids = np.empty((4, feature_dim))
        self._variances = np.empty((4, feature_dim))
        self._counts = np.empty(4, dtype=np.int64)
        self._n = 0

    def __len__(self) -> int:
        return self._n

    @property
    def centroids(self) -> np.ndarray:
        return self._centroids[: self._n]

    @property
    def variances(self) -> np.ndarray:
        return self._variances[: self._n]

    @property
    def counts(self) -> np.ndarray:
        return self._counts[: self._n]

    @property
    def total_count(self) -> int:
        return int(self.counts.sum())

    def component(self, index: int) -> GaussianComponent:
        if not 0 <= index < self._n:
            raise IndexError(index)
        return GaussianComponent(
            centroid=self._centroids[index].copy(),
            variance=self._variances[index].copy(),
            count=int(self._counts[index]),
        )

    def components(self) -> list[GaussianComponent]:
        return [self.component(i) for i in range(self._n)]

    def _grow(self):
        cap = self._centroids.shape[0]
        if self._n < cap:
            return
        self._centroids = np.vstack([self._centroids, np.empty_like(self._centroids)])
        self._variances = np.vstack([self._variances, np.empty_like(self._variances)])
        self._counts = np.concatenate([self._counts, np.empty_like(self._counts)])

    def append(self, centroid: np.ndarray, variance: np.ndarray, count: int) -> int:
        self._grow()
        i = self._n
        self._centroids[i] = centroid
        self._variances[i] = variance
        self._counts[i] = count
        self._n += 1
        return i

    def replace(self, index: int, centroid: np.ndarray, variance: np.ndarray,
                count: int) -> None:
        self._centroids[index] = centroid
        self._variances[index] = variance
        self._counts[index] = count


class MemoryBank:
    """All per-category mixtures plus the threshold and kernel floor.

    Single-writer: `ingest` calls must be serialized. Queries are read-only
    and safe to run concurrently between writes.
    """

    def __init__(self, feature_dim: int,
                 prob_threshold: float = DEFAULT_PROB_THRESHOLD,
                 variance_floor: float = DEFAULT_VARIANCE_FLOOR,
                 variance_update: str = "literal"):
        if not 0.0 <= prob_threshold <= 1.0:
            raise ValueError(f"prob_threshold must be in [0, 1], got {prob_threshold}")
        if not variance_floor > 0.0:
            raise ValueError(f"variance_floor must be positive, got {variance_floor}")
        if variance_update not in VARIANCE_UPDATE_MODES:
            raise ValueError(f"variance_update must be one of {VARIANCE_UPDATE_MODES}")
        self.feature_dim = feature_dim
        self.prob_threshold = prob_threshold
        self.variance_floor = variance_floor
        self.variance_update = variance_update
        self._classes: dict[str, ClassMemory] = {}

    def __len__(self) -> int:
        return len(self._classes)

    @property
    def labels(self) -> list[str]:
        return list(self._classes)

    def __contains__(self, label: str) -> bool:
        return label in self._classes

    def class_memory(self, label: str) -> ClassMemory:
        return self._classes[label]

    def class_memories(self) -> list[ClassMemory]:
        return list(self._classes.values())

    def _check_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.feature_dim,):
            raise ValueError(
                f"dimension mismatch: expected ({self.feature_dim},), got {x.shape}"
            )
        if not np.isfinite(x).all():
            raise ValueError("non-finite input vector")
        return x

    def ingest(self, x, label: str) -> IngestOutcome:
        """Absorb one labeled vector.

        Unseen label: start that category with a single zero-variance
        component. Seen label: merge into the most similar component when the
        max similarity clears the threshold (ties to the lowest index),
        otherwise spawn a new component. Exactly one component is created or
        modified per call.
        """
        x = self._check_vector(x)
        mem = self._classes.get(label)
        if mem is None:
            mem = ClassMemory(label, self.feature_dim)
            mem.append(x, np.zeros(self.feature_dim), 1)
            self._classes[label] = mem
            return IngestOutcome(IngestKind.NEW_CLASS, label, 0)

        sims = gaussian_kernel(x, mem.centroids, mem.variances, self.variance_floor)
        best = int(np.argmax(sims))  # first max: ties to the lowest index
        if sims[best] >= self.prob_threshold:
            comp = mem.component(best)
            c_new = update_centroid(comp, x)
            if self.variance_update == "welford":
                v_new = welford_variance(comp, x, c_new)
            else:
                v_new = update_variance(comp, x, c_new)
            mem.replace(best, c_new, v_new, comp.count + 1)
            return IngestOutcome(IngestKind.MERGED, label, best)

        index = mem.append(x, np.zeros(self.feature_dim), 1)
        return IngestOutcome(IngestKind.NEW_COMPONENT, label, index)

    def class_score(self, x, label: str) -> float:
        """Mean kernel similarity of x over the category's components."""
        x = self._check_vector(x)
        mem = self._classes[label]
        sims = gaussian_kernel(x, mem.centroids, mem.variances, self.variance_floor)
        return float(sims.mean())

    def scores(self, x) -> np.ndarray:
        """Class scores for all learned categories, in label order."""
        x = self._check_vector(x)
        return self._scores_checked(x)

    def _scores_checked(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(len(self._classes))
        for i, mem in enumerate(self._classes.values()):
            sims = gaussian_kernel(x, mem.centroids, mem.variances, self.variance_floor)
            out[i] = sims.mean()
        return out

    def scores_for_views(self, views: np.ndarray) -> np.ndarray:
        """Class scores for a stack of views: (l, dim) -> (l, n_classes)."""
        views = np.asarray(views, dtype=np.float64)
        out = np.empty((views.shape[0], len(self._classes)))
        floor = self.variance_floor
        for i, mem in enumerate(self._classes.values()):
            inv = 1.0 / np.maximum(mem.variances, floor)  # (n, dim)
            d2 = ((views[:, None, :] - mem.centroids[None, :, :]) ** 2 * inv).sum(axis=2)
            out[:, i] = np.exp(-0.5 * d2).mean(axis=1)
        return out

    def class_posterior(self, x) -> np.ndarray:
        """Class scores normalized to a distribution over learned categories.

        If every score underflows to zero the posterior falls back to
        uniform, which keeps the entropy defined (and maximal, correctly
        flagging total novelty).
        """
        if not self._classes:
            raise ValueError("posterior undefined for an empty bank")
        scores = self.scores(x)
        return normalize_scores(scores)

    def sample_pseudo(self, rng_seed: int) -> tuple[np.ndarray, list[str]]:
        """Draw pseudo-feature vectors from every component.

        Each component contributes exactly `count` draws from
        N(centroid, diag(variance)), so per category the pseudo-sample total
        equals the number of vectors ever ingested for it. Zero-variance
        dimensions reproduce the centroid coordinate exactly. Deterministic
        under `rng_seed`.
        """
        if not self._classes:
            raise ValueError("cannot sample from an empty bank")
        rng = np.random.default_rng(rng_seed)
        blocks: list[np.ndarray] = []
        labels: list[str] = []
        for label, mem in self._classes.items():
            counts = mem.counts
            total = int(counts.sum())
            scale = np.repeat(np.sqrt(mem.variances), counts, axis=0)
            center = np.repeat(mem.centroids, counts, axis=0)
            draws = center + scale * rng.standard_normal((total, self.feature_dim))
            blocks.append(draws)
            labels.extend([label] * total)
        return np.vstack(blocks), labels

    def restore_class(self, label: str, centroids: np.ndarray,
                      variances: np.ndarray, counts) -> None:
        """Install a category's components wholesale (checkpoint loading)."""
        if label in self._classes:
            raise ValueError(f"category already present: {label!r}")
        mem = ClassMemory(label, self.feature_dim)
        for centroid, variance, count in zip(centroids, variances, counts):
            mem.append(np.asarray(centroid, dtype=np.float64),
                       np.asarray(variance, dtype=np.float64), int(count))
        self._classes[label] = mem

    def footprint(self) -> MemoryFootprint:
        """Storage accounting: 2 vectors per component (centroid + variance
        diagonal), 4 bytes per value."""
        components = sum(len(mem) for mem in self._classes.values())
        stored = 2 * components
        return MemoryFootprint(components, stored, stored * self.feature_dim * 4)

    @property
    def component_count(self) -> int:
        return sum(len(mem) for mem in self._classes.values())

    @property
    def total_ingested(self) -> int:
        return sum(mem.total_count for mem in self._classes.values())


def normalize_scores(scores: np.ndarray) -> np.ndarray:
    total = scores.sum()
    if total <= 0.0:
        return np.full(scores.shape, 1.0 / scores.size)
    return scores / total


# Free-function aliases over the bank methods.

def ingest(bank: MemoryBank, x, label: str) -> IngestOutcome:
    return bank.ingest(x, label)


def class_score(x, mem: ClassMemory,
                variance_floor: float = DEFAULT_VARIANCE_FLOOR) -> float:
    if len(mem) == 0:
        raise ValueError("class memory is empty")
    x = np.asarray(x, dtype=np.float64)
    sims = gaussian_kernel(x, mem.centroids, mem.variances, variance_floor)
    return float(sims.mean())


def class_posterior(bank: MemoryBank, x) -> np.ndarray:
    return bank.class_posterior(x)


def sample_pseudo(bank: MemoryBank, rng_seed: int) -> tuple[np.ndarray, list[str]]:
    return bank.sample_pseudo(rng_seed)


def memory_footprint(bank: MemoryBank) -> MemoryFootprint:
    return bank.footprint()
