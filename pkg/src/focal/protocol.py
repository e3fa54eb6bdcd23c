"""The continual active-learning loop, metrics, and parameter sweeps.

Each increment draws a small pool of unlabeled objects from what remains of
the train split, scores them with the acquisition function, asks the oracle
for the labels of the k selected objects, folds every view of those objects
into the memory bank, and retrains the classifier head on the new views plus
pseudo-samples of everything learned in earlier increments (the bank is
sampled before the new objects are ingested, so rehearsal covers exactly the
old categories). Selected objects leave the experiment permanently; the
unselected pool members return. The test split is evaluated every
`eval_every` increments.

All randomness is derived, not shared: stage seeds are spawned from
(master_seed, increment, stage) so that, for example, changing how often
evaluation runs cannot change which objects get drawn or selected.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .acquisition import (
    ACQUISITION_MODES,
    AcquisitionConfig,
    ObjectScore,
    PoolObject,
    select,
)
from .classifier import ClassifierHead, TrainConfig, expand, predict_batch, train
from .datasets import Dataset, ObjectRecord
from .errors import InteractiveAbort
from .memory import (
    DEFAULT_PROB_THRESHOLD,
    DEFAULT_VARIANCE_FLOOR,
    IngestOutcome,
    MemoryBank,
)

ORACLE_MODES = ("simulated", "interactive")

# stage tags for per-increment seed derivation
SEED_POOL = 0
SEED_SELECT = 1
SEED_PSEUDO = 2
SEED_TRAIN = 3

METRICS_HEADER = [
    "increment",
    "selected_ids",
    "selected_labels",
    "learned_objects",
    "learned_classes",
    "test_accuracy",
    "object_majority_accuracy",
    "avg_incremental_accuracy",
    "component_count",
    "memory_bytes",
    "wall_time_ms",
]


def derive_seed(master_seed: int, increment: int, stage: int) -> int:
    """Stable per-(increment, stage) seed: each stage of each increment gets
    an independent stream regardless of what ran before it."""
    ss = np.random.SeedSequence((master_seed, increment, stage))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ProtocolConfig:
    pool_size: int = 5
    label_budget: int = 1
    prob_threshold: float = DEFAULT_PROB_THRESHOLD
    variance_floor: float = DEFAULT_VARIANCE_FLOOR
    delta: float = 0.7
    acquisition: str = "combined"
    train: TrainConfig = TrainConfig()
    max_increments: int = 100
    eval_every: int = 1
    master_seed: int = 0
    oracle: str = "simulated"
    deterministic: bool = False
    workers: int | None = None

    def __post_init__(self):
        if self.label_budget < 1 or self.label_budget > self.pool_size:
            raise ValueError(
                f"need 1 <= label_budget <= pool_size, got "
                f"{self.label_budget} and {self.pool_size}"
            )
        # max_increments = 0 is allowed and yields an empty run
        if self.max_increments < 0:
            raise ValueError(f"max_increments must be >= 0, got {self.max_increments}")
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be >= 1, got {self.eval_every}")
        if not 0.0 <= self.prob_threshold <= 1.0:
            raise ValueError(f"prob_threshold must be in [0, 1], got {self.prob_threshold}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must be in [0, 1], got {self.delta}")
        if self.acquisition not in ACQUISITION_MODES:
            raise ValueError(
                f"acquisition must be one of {ACQUISITION_MODES}, got {self.acquisition!r}"
            )
        if self.oracle not in ORACLE_MODES:
            raise ValueError(f"oracle must be one of {ORACLE_MODES}, got {self.oracle!r}")
        if self.workers is not None and self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def resolved_workers(self) -> int:
        if self.deterministic:
            return 1
        if self.workers is not None:
            return self.workers
        import os

        cap = os.environ.get("FOCAL_THREADS")
        hardware = os.cpu_count() or 1
        return min(hardware, int(cap)) if cap else hardware


@dataclass(frozen=True)
class IncrementRecord:
    increment: int
    selected_ids: tuple[str, ...]
    selected_labels: tuple[str, ...]
    ingest_outcomes: tuple[IngestOutcome, ...]
    learned_objects: int
    learned_classes: int
    test_accuracy: float | None
    object_majority_accuracy: float | None
    avg_incremental_accuracy: float | None
    component_count: int
    memory_bytes: int
    wall_time_ms: int
    scores: tuple[ObjectScore, ...] = ()


@dataclass
class RunResult:
    records: list[IncrementRecord]
    bank: MemoryBank
    head: ClassifierHead
    config: ProtocolConfig
    dataset_name: str


class MetricsWriter:
    """Streams increment rows to CSV, one flush per increment.

    UTF-8, LF line endings, `;`-joined multi-value cells, empty cell for
    not-evaluated increments.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = open(self.path, "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(METRICS_HEADER)
        self._fh.flush()

    @staticmethod
    def _cell(value) -> str:
        if value is None:
            return ""
        return repr(value) if isinstance(value, float) else str(value)

    def write(self, record: IncrementRecord) -> None:
        self._writer.writerow([
            record.increment,
            ";".join(record.selected_ids),
            ";".join(record.selected_labels),
            record.learned_objects,
            record.learned_classes,
            self._cell(record.test_accuracy),
            self._cell(record.object_majority_accuracy),
            self._cell(record.avg_incremental_accuracy),
            record.component_count,
            record.memory_bytes,
            record.wall_time_ms,
        ])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_run_manifest(metrics_path: str | Path, cfg: ProtocolConfig,
                       dataset_name: str) -> Path:
    """Record the fully resolved config next to the metrics file."""
    path = Path(str(metrics_path) + ".manifest.json")
    payload = {
        "dataset": dataset_name,
        "version": __version__,
        "config": asdict(cfg),
    }
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    return path


def oracle_label(obj: ObjectRecord, mode: str) -> str:
    """Ground truth for one selected object.

    Simulated mode reads the dataset label. Interactive mode prompts on the
    console until a non-empty label is typed; end-of-input raises EOFError
    for the caller to turn into a clean abort.
    """
    if mode == "simulated":
        return obj.label
    while True:
        answer = input(f"label for {obj.object_id} ({obj.count} views)? ").strip()
        if answer:
            return answer


def _evaluate_views(head: ClassifierHead, views: np.ndarray, workers: int) -> list[str]:
    if workers <= 1 or views.shape[0] < 2 * workers:
        return predict_batch(head, views)
    chunks = np.array_split(views, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda chunk: predict_batch(head, chunk), chunks))
    return [label for part in parts for label in part]


def _majority(labels: list[str]) -> str:
    counts: dict[str, int] = {}
    for label in labels:
        counts[label] = counts.get(label, 0) + 1
    best = max(counts.values())
    for label in labels:  # tie goes to the earliest view's label
        if counts[label] == best:
            return label
    raise AssertionError("unreachable")


def evaluate_split(head: ClassifierHead, dataset: Dataset, split: str = "test",
                   workers: int = 1) -> tuple[float, float]:
    """(view-level accuracy, object-majority accuracy) over a split."""
    objects = dataset.split(split)
    if not objects:
        raise ValueError(f"split {split!r} is empty")
    stacked = np.vstack([dataset.views(o) for o in objects])
    predicted = _evaluate_views(head, stacked, workers)
    hits = 0
    majority_hits = 0
    cursor = 0
    for obj in objects:
        block = predicted[cursor : cursor + obj.count]
        cursor += obj.count
        hits += sum(p == obj.label for p in block)
        majority_hits += _majority(block) == obj.label
    return hits / len(stacked), majority_hits / len(objects)


def run(dataset: Dataset, cfg: ProtocolConfig,
        metrics: MetricsWriter | None = None,
        on_increment=None, should_stop=None) -> RunResult:
    """Execute the full increment loop; returns records plus final state.

    Stops at max_increments, or when the remaining pool cannot fill the
    label budget. With an interactive oracle, end-of-input aborts cleanly:
    the records written so far stay flushed and InteractiveAbort carries
    them. `on_increment(record)` fires after each increment is committed;
    `should_stop()` is polled before each increment so a supervisor can end
    the run early with a consistent partial result.
    """
    train_objects = dataset.train_objects
    if len(train_objects) < cfg.pool_size:
        raise ValueError(
            f"train split has {len(train_objects)} objects, "
            f"need at least pool_size={cfg.pool_size}"
        )
    workers = cfg.resolved_workers()
    bank = MemoryBank(
        feature_dim=dataset.feature_dim,
        prob_threshold=cfg.prob_threshold,
        variance_floor=cfg.variance_floor,
    )
    head = ClassifierHead.empty(dataset.feature_dim)
    remaining = list(train_objects)
    records: list[IncrementRecord] = []
    learned_objects = 0
    accuracies: list[float] = []

    for t in range(1, cfg.max_increments + 1):
        if len(remaining) < cfg.label_budget:
            break
        if should_stop is not None and should_stop():
            break
        started = time.perf_counter()

        m_t = min(cfg.pool_size, len(remaining))
        pool_rng = np.random.default_rng(derive_seed(cfg.master_seed, t, SEED_POOL))
        drawn = pool_rng.choice(len(remaining), size=m_t, replace=False)
        pool_records = [remaining[i] for i in drawn]
        pool_objects = [
            PoolObject(rec.object_id, dataset.views(rec)) for rec in pool_records
        ]

        acq = AcquisitionConfig(
            delta=cfg.delta,
            mode=cfg.acquisition,
            k=cfg.label_budget,
            selection_seed=derive_seed(cfg.master_seed, t, SEED_SELECT),
        )
        selected_ids, score_table = select(bank, pool_objects, acq, head)
        by_id = {rec.object_id: rec for rec in pool_records}
        selected = [by_id[oid] for oid in selected_ids]

        try:
            labels = [oracle_label(rec, cfg.oracle) for rec in selected]
        except EOFError:
            raise InteractiveAbort(
                f"labeling aborted at increment {t}", records=records
            ) from None

        # rehearsal reflects the bank as of the previous increment
        if len(bank) > 0:
            pseudo_x, pseudo_labels = bank.sample_pseudo(
                derive_seed(cfg.master_seed, t, SEED_PSEUDO)
            )
        else:
            pseudo_x = np.empty((0, dataset.feature_dim))
            pseudo_labels = []

        outcomes = []
        real_blocks = []
        real_labels: list[str] = []
        for rec, label in zip(selected, labels):
            views = dataset.views(rec)
            real_blocks.append(views)
            real_labels.extend([label] * rec.count)
            for view in views:
                outcomes.append(bank.ingest(view, label))

        new_labels = [l for l in dict.fromkeys(labels) if l not in head.label_order]
        if new_labels:
            head = expand(head, new_labels)
        train_x = np.vstack([*real_blocks, pseudo_x])
        train_labels = real_labels + pseudo_labels
        head = train(
            head, train_x, train_labels,
            replace(cfg.train, shuffle_seed=derive_seed(cfg.master_seed, t, SEED_TRAIN)),
        )

        selected_set = set(selected_ids)
        remaining = [rec for rec in remaining if rec.object_id not in selected_set]
        learned_objects += len(selected)

        if t % cfg.eval_every == 0:
            accuracy, majority = evaluate_split(head, dataset, "test", workers)
            accuracies.append(accuracy)
        else:
            accuracy = majority = None
        avg_incremental = sum(accuracies) / len(accuracies) if accuracies else None

        footprint = bank.footprint()
        elapsed_ms = 0 if cfg.deterministic else int(
            round((time.perf_counter() - started) * 1000)
        )
        record = IncrementRecord(
            increment=t,
            selected_ids=tuple(selected_ids),
            selected_labels=tuple(labels),
            ingest_outcomes=tuple(outcomes),
            learned_objects=learned_objects,
            learned_classes=len(bank),
            test_accuracy=accuracy,
            object_majority_accuracy=majority,
            avg_incremental_accuracy=avg_incremental,
            component_count=footprint.component_count,
            memory_bytes=footprint.bytes,
            wall_time_ms=elapsed_ms,
            scores=tuple(score_table),
        )
        records.append(record)
        if metrics is not None:
            metrics.write(record)
        if on_increment is not None:
            on_increment(record)

    return RunResult(records, bank, head, cfg, dataset.name)


def increments_to_all_classes(records, total_classes: int) -> int | None:
    """Smallest increment index whose learned-class count reaches the target;
    None when the run never gets there."""
    for record in records:
        if record.learned_classes >= total_classes:
            return record.increment
    return None


SWEEP_PARAMETERS = ("delta", "P")


@dataclass(frozen=True)
class SweepPoint:
    parameter: str
    value: float
    increments: int
    final_accuracy: float | None
    avg_incremental_accuracy: float | None
    component_count: int
    learned_classes: int


def sweep(dataset: Dataset, cfg: ProtocolConfig, parameter: str,
          values) -> list[SweepPoint]:
    """Run the protocol once per parameter value under the same master seed.

    `parameter` is "delta" (acquisition blend) or "P" (merge threshold).
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"parameter must be one of {SWEEP_PARAMETERS}, got {parameter!r}")
    values = [float(v) for v in values]
    if not values:
        raise ValueError("no sweep values given")
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{parameter} value out of range [0, 1]: {v}")

    points = []
    for v in values:
        if parameter == "delta":
            point_cfg = replace(cfg, delta=v)
        else:
            point_cfg = replace(cfg, prob_threshold=v)
        result = run(dataset, point_cfg)
        evaluated = [r.test_accuracy for r in result.records
                     if r.test_accuracy is not None]
        last = result.records[-1] if result.records else None
        points.append(SweepPoint(
            parameter=parameter,
            value=v,
            increments=len(result.records),
            final_accuracy=evaluated[-1] if evaluated else None,
            avg_incremental_accuracy=(
                last.avg_incremental_accuracy if last else None
            ),
            component_count=result.bank.component_count,
            learned_classes=len(result.bank),
        ))
    return points
