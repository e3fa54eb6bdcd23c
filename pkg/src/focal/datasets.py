"""Dataset model and on-disk feature format.

A dataset is a pair of files:

* a binary feature blob -- magic ``FOCALFT1``, then the vector dimension as a
  32-bit little-endian unsigned int, the vector count as a 64-bit
  little-endian unsigned int, then ``count x dim`` IEEE-754 single-precision
  little-endian values in row-major order;
* a UTF-8 JSON manifest ``{name, feature_dim, blob, objects: [{id, label,
  split, offset, count}]}`` where ``blob`` is the blob filename relative to
  the manifest and each object references a contiguous row range.

Objects are multi-view: each object owns ``count`` consecutive feature rows,
one per viewpoint. Splits are ``train`` and ``test`` and must be disjoint by
object id.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

BLOB_MAGIC = b"FOCALFT1"
_HEADER = struct.Struct("<8sIQ")

SPLITS = ("train", "test")


@dataclass(frozen=True)
class ObjectRecord:
    """One identified object: a label, a split, and a row range in the blob."""

    object_id: str
    label: str
    split: str
    offset: int
    count: int


@dataclass
class Dataset:
    """A loaded dataset: manifest metadata plus the in-memory feature table.

    Immutable after load; safe for concurrent readers.
    """

    name: str
    feature_dim: int
    objects: list[ObjectRecord]
    features: np.ndarray  # (total_rows, feature_dim) float64
    blob_name: str = "features.bin"
    _by_id: dict[str, ObjectRecord] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._by_id = {o.object_id: o for o in self.objects}

    def views(self, obj: ObjectRecord | str) -> np.ndarray:
        if isinstance(obj, str):
            obj = self._by_id[obj]
        return self.features[obj.offset : obj.offset + obj.count]

    def split(self, name: str) -> list[ObjectRecord]:
        return [o for o in self.objects if o.split == name]

    @property
    def train_objects(self) -> list[ObjectRecord]:
        return self.split("train")

    @property
    def test_objects(self) -> list[ObjectRecord]:
        return self.split("test")

    @property
    def labels(self) -> list[str]:
        seen: dict[str, None] = {}
        for o in self.objects:
            seen.setdefault(o.label, None)
        return list(seen)


def write_blob(path: str | Path, rows: np.ndarray) -> None:
    """Write a feature matrix as a FOCALFT1 blob (float32, little-endian)."""
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2:
        raise ValueError(f"blob rows must be 2-D, got shape {rows.shape}")
    count, dim = rows.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(BLOB_MAGIC, dim, count))
        fh.write(rows.tobytes())


def read_blob(path: str | Path) -> np.ndarray:
    """Read a FOCALFT1 blob into a float32 matrix, verifying the exact size."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise DataError(f"{path}: blob too short for header")
        magic, dim, count = _HEADER.unpack(header)
        if magic != BLOB_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}, expected {BLOB_MAGIC!r}")
        payload = fh.read()
    expected = 4 * dim * count
    if len(payload) != expected:
        raise DataError(
            f"{path}: blob size mismatch: expected {expected} payload bytes "
            f"for {count} x {dim} float32, found {len(payload)}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(count, dim)


def write_dataset(dataset: Dataset, manifest_path: str | Path) -> tuple[Path, Path]:
    """Write manifest + blob. The blob lands next to the manifest."""
    manifest_path = Path(manifest_path)
    blob_path = manifest_path.parent / dataset.blob_name
    write_blob(blob_path, dataset.features)
    manifest = {
        "name": dataset.name,
        "feature_dim": dataset.feature_dim,
        "blob": dataset.blob_name,
        "objects": [
            {
                "id": o.object_id,
                "label": o.label,
                "split": o.split,
                "offset": o.offset,
                "count": o.count,
            }
            for o in dataset.objects
        ],
    }
    manifest_path.write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    return manifest_path, blob_path


def _parse_manifest(manifest_path: Path) -> tuple[str, int, str, list[ObjectRecord]]:
    try:
        raw = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{manifest_path}: malformed manifest: {exc}") from exc
    try:
        name = raw["name"]
        feature_dim = int(raw["feature_dim"])
        blob_name = raw["blob"]
        entries = raw["objects"]
        objects = [
            ObjectRecord(
                object_id=str(e["id"]),
                label=str(e["label"]),
                split=str(e["split"]),
                offset=int(e["offset"]),
                count=int(e["count"]),
            )
            for e in entries
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{manifest_path}: malformed manifest: {exc!r}") from exc
    if feature_dim < 1:
        raise DataError(f"{manifest_path}: malformed manifest: feature_dim must be positive")
    return name, feature_dim, blob_name, objects


def load_dataset(manifest_path: str | Path) -> Dataset:
    """Load and fully validate a dataset (manifest + blob).

    Raises DataError on: malformed manifest, magic/size mismatch, dimension
    inconsistency, empty or out-of-range view ranges, overlapping ranges,
    duplicate object ids, train/test overlap, and non-finite feature values
    (reported with object id and view index).
    """
    manifest_path = Path(manifest_path)
    name, feature_dim, blob_name, objects = _parse_manifest(manifest_path)
    rows = read_blob(manifest_path.parent / blob_name)
    total, dim = rows.shape
    if dim != feature_dim:
        raise DataError(
            f"{manifest_path}: manifest feature_dim {feature_dim} != blob dim {dim}"
        )

    seen_ids: set[str] = set()
    ranges: list[tuple[int, int, str]] = []
    for o in objects:
        if o.object_id in seen_ids:
            raise DataError(f"duplicate object id {o.object_id!r}")
        seen_ids.add(o.object_id)
        if o.split not in SPLITS:
            raise DataError(f"object {o.object_id!r}: unknown split {o.split!r}")
        if o.count < 1:
            raise DataError(f"object {o.object_id!r}: must have at least one view")
        if o.offset < 0 or o.offset + o.count > total:
            raise DataError(
                f"object {o.object_id!r}: range [{o.offset}, {o.offset + o.count}) "
                f"outside blob of {total} rows"
            )
        ranges.append((o.offset, o.offset + o.count, o.object_id))
    ranges.sort()
    for (s0, e0, id0), (s1, e1, id1) in zip(ranges, ranges[1:]):
        if s1 < e0:
            raise DataError(f"objects {id0!r} and {id1!r} reference overlapping rows")

    features = rows.astype(np.float64)
    for o in objects:
        block = features[o.offset : o.offset + o.count]
        finite = np.isfinite(block).all(axis=1)
        if not finite.all():
            view = int(np.argmin(finite))
            raise DataError(
                f"object {o.object_id!r}: non-finite value in view {view}"
            )

    return Dataset(
        name=name,
        feature_dim=feature_dim,
        objects=objects,
        features=features,
        blob_name=blob_name,
    )


def validate_dataset(manifest_path: str | Path) -> dict:
    """Run full load-time validation and return a summary (for `validate`)."""
    ds = load_dataset(manifest_path)
    return {
        "valid": True,
        "name": ds.name,
        "feature_dim": ds.feature_dim,
        "objects": len(ds.objects),
        "train_objects": len(ds.train_objects),
        "test_objects": len(ds.test_objects),
        "total_vectors": int(ds.features.shape[0]),
        "labels": len(ds.labels),
    }


def generate_synthetic(
    num_classes: int,
    objects_per_class: int,
    views_per_object: int,
    dim: int,
    class_spread: float,
    view_jitter: float,
    seed: int,
    test_objects_per_class: int | None = None,
    name: str = "synthetic",
) -> Dataset:
    """Generate a synthetic multi-view dataset with a category/object/view
    Gaussian hierarchy.

    Per category, a center is drawn uniformly in [-1, 1]^dim; per object, a
    center from N(category_center, class_spread^2 I); per view, a vector from
    N(object_center, view_jitter^2 I). `objects_per_class` counts train
    objects; the test split gets `test_objects_per_class` extra objects per
    category (default: objects_per_class // 4, at least 1), disjoint by id.

    Deterministic under `seed`. Features are quantized to float32 so the
    in-memory dataset is bit-identical to a write/load round trip.
    """
    if min(num_classes, objects_per_class, views_per_object, dim) < 1:
        raise ValueError("all counts must be positive")
    if class_spread < 0 or view_jitter < 0:
        raise ValueError("class_spread and view_jitter must be >= 0")
    if test_objects_per_class is None:
        test_objects_per_class = max(1, objects_per_class // 4)

    rng = np.random.default_rng(seed)
    objects: list[ObjectRecord] = []
    blocks: list[np.ndarray] = []
    offset = 0
    for ci in range(num_classes):
        label = f"class{ci:02d}"
        center = rng.uniform(-1.0, 1.0, size=dim)
        for split, n_objects in (("train", objects_per_class), ("test", test_objects_per_class)):
            for oi in range(n_objects):
                obj_center = center + class_spread * rng.standard_normal(dim)
                views = obj_center + view_jitter * rng.standard_normal((views_per_object, dim))
                blocks.append(views)
                objects.append(
                    ObjectRecord(
                        object_id=f"{label}-{split}-{oi:03d}",
                        label=label,
                        split=split,
                        offset=offset,
                        count=views_per_object,
                    )
                )
                offset += views_per_object
    features = np.vstack(blocks).astype(np.float32).astype(np.float64)
    return Dataset(name=name, feature_dim=dim, objects=objects, features=features)
