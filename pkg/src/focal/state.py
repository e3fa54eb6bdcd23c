"""Checkpointing for the memory bank and classifier head.

A checkpoint is a JSON header next to a FOCALFT1 blob. The blob holds, per
category in bank order, each component's centroid row followed by its
variance row, then the classifier weight rows; being float32 it is readable
by any FOCALFT1 consumer. Since the engine computes in float64, the header
additionally embeds the exact state (base64 of the little-endian float64
bytes), and loading prefers it, giving bit-identical restores; a header
whose exact block was stripped still loads from the float32 blob.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import ClassifierHead
from .datasets import read_blob, write_blob
from .errors import DataError
from .memory import MemoryBank

CHECKPOINT_KIND = "focal-checkpoint"


def _encode(array: np.ndarray) -> str:
    return base64.b64encode(
        np.ascontiguousarray(array, dtype="<f8").tobytes()
    ).decode("ascii")


def _decode(text: str, rows: int, dim: int) -> np.ndarray:
    raw = base64.b64decode(text.encode("ascii"))
    expected = rows * dim * 8
    if len(raw) != expected:
        raise DataError(
            f"exact state block holds {len(raw)} bytes, expected {expected}"
        )
    return np.frombuffer(raw, dtype="<f8").reshape(rows, dim).astype(np.float64)


def save_checkpoint(path: str | Path, bank: MemoryBank,
                    head: ClassifierHead | None = None) -> tuple[Path, Path]:
    """Write `<path>` (JSON header) and a sibling float32 blob."""
    path = Path(path)
    blob_name = path.stem + ".bin"

    centroid_rows = []
    variance_rows = []
    classes = []
    for mem in bank.class_memories():
        centroid_rows.append(mem.centroids)
        variance_rows.append(mem.variances)
        classes.append({
            "label": mem.label,
            "counts": [int(c) for c in mem.counts],
        })
    centroids = (
        np.vstack(centroid_rows) if centroid_rows
        else np.empty((0, bank.feature_dim))
    )
    variances = (
        np.vstack(variance_rows) if variance_rows
        else np.empty((0, bank.feature_dim))
    )

    blob_rows = [
        np.empty((0, bank.feature_dim), dtype=np.float64)
    ]
    for mem in bank.class_memories():
        for i in range(len(mem)):
            blob_rows.append(mem.centroids[i][None, :])
            blob_rows.append(mem.variances[i][None, :])

    header: dict = {
        "kind": CHECKPOINT_KIND,
        "version": __version__,
        "feature_dim": bank.feature_dim,
        "prob_threshold": bank.prob_threshold,
        "variance_floor": bank.variance_floor,
        "variance_update": bank.variance_update,
        "blob": blob_name,
        "classes": classes,
        "exact": {
            "centroids": _encode(centroids),
            "variances": _encode(variances),
        },
        "classifier": None,
    }
    if head is not None:
        if head.feature_dim != bank.feature_dim:
            raise ValueError(
                f"head dim {head.feature_dim} != bank dim {bank.feature_dim}"
            )
        blob_rows.append(head.weights)
        header["classifier"] = {
            "label_order": list(head.label_order),
            "biases": [float(b) for b in head.biases],
        }
        header["exact"]["weights"] = _encode(head.weights)

    write_blob(path.parent / blob_name, np.vstack(blob_rows))
    path.write_text(json.dumps(header, indent=1) + "\n", encoding="utf-8")
    return path, path.parent / blob_name


def _parse_header(path: Path) -> dict:
    try:
        header = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: malformed checkpoint: {exc}") from exc
    if not isinstance(header, dict) or header.get("kind") != CHECKPOINT_KIND:
        raise DataError(f"{path}: not a checkpoint header")
    return header


def load_checkpoint(path: str | Path) -> tuple[MemoryBank, ClassifierHead | None]:
    """Rebuild (bank, head) from a checkpoint; head is None if absent.

    Restores from the exact float64 block when present (bit-identical),
    otherwise from the float32 blob.
    """
    path = Path(path)
    header = _parse_header(path)
    try:
        feature_dim = int(header["feature_dim"])
        classes = header["classes"]
        counts_per_class = [[int(c) for c in e["counts"]] for e in classes]
        labels = [str(e["label"]) for e in classes]
        head_info = header["classifier"]
        bank = MemoryBank(
            feature_dim=feature_dim,
            prob_threshold=float(header["prob_threshold"]),
            variance_floor=float(header["variance_floor"]),
            variance_update=str(header.get("variance_update", "literal")),
        )
        blob_name = str(header["blob"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed checkpoint: {exc!r}") from exc

    total_components = sum(len(c) for c in counts_per_class)
    head_rows = len(head_info["label_order"]) if head_info else 0

    rows = read_blob(path.parent / blob_name)
    if rows.shape != (2 * total_components + head_rows, feature_dim):
        raise DataError(
            f"{path}: blob shape {rows.shape} does not match header "
            f"({2 * total_components + head_rows} x {feature_dim})"
        )

    exact = header.get("exact") or {}
    if "centroids" in exact and "variances" in exact:
        centroids = _decode(exact["centroids"], total_components, feature_dim)
        variances = _decode(exact["variances"], total_components, feature_dim)
    else:
        interleaved = rows[: 2 * total_components].astype(np.float64)
        centroids = interleaved[0::2]
        variances = interleaved[1::2]

    if (variances < 0).any():
        raise DataError(f"{path}: negative variance in checkpoint")

    offset = 0
    for label, counts in zip(labels, counts_per_class):
        n = len(counts)
        bank.restore_class(
            label, centroids[offset : offset + n],
            variances[offset : offset + n], counts,
        )
        offset += n

    head = None
    if head_info:
        if "weights" in exact:
            weights = _decode(exact["weights"], head_rows, feature_dim)
        else:
            weights = rows[2 * total_components :].astype(np.float64)
        biases = np.array([float(b) for b in head_info["biases"]], dtype=np.float64)
        if biases.shape[0] != head_rows:
            raise DataError(f"{path}: bias count does not match label_order")
        head = ClassifierHead(weights, biases, [str(l) for l in head_info["label_order"]])
    return bank, head


def checkpoint_summary(path: str | Path) -> dict:
    """Category/component/count/memory accounting for `inspect`."""
    bank, head = load_checkpoint(path)
    footprint = bank.footprint()
    return {
        "feature_dim": bank.feature_dim,
        "prob_threshold": bank.prob_threshold,
        "variance_floor": bank.variance_floor,
        "classes": len(bank),
        "components": footprint.component_count,
        "per_class": {
            mem.label: len(mem) for mem in bank.class_memories()
        },
        "ingested_vectors": bank.total_ingested,
        "stored_vectors": footprint.stored_vectors,
        "memory_bytes": footprint.bytes,
        "memory_mb": footprint.megabytes,
        "classifier_labels": head.num_labels if head else 0,
    }
