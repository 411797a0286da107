"""Manifests, raster loading and the feature-table CSV format."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DuplicateId, MissingFile, ParseError, ValidationError
from .features import CATALOG_VERSION, SegmentedCellImage

RECORD_FIELDS = ("sample_id", "image_path", "nucleus_mask_path", "cell_mask_path", "label")
FEATURE_COLUMNS = tuple(f"f{i:02d}" for i in range(1, 21))

HERLEV_CLASSES = (
    "superficial squamous",
    "intermediate squamous",
    "columnar",
    "mild dysplasia",
    "moderate dysplasia",
    "severe dysplasia",
    "carcinoma in situ",
)
HERLEV_NORMAL = HERLEV_CLASSES[:3]


@dataclass(frozen=True)
class ManifestRecord:
    sample_id: str
    image_path: Path
    nucleus_mask_path: Path
    cell_mask_path: Path
    label: str


@dataclass
class DatasetManifest:
    records: list
    class_list: list
    normal_class_set: list | None = None
    path: Path | None = None


def ingest_manifest(path):
    """Read a JSON-lines manifest.

    One record object per line.  An optional object without ``sample_id``
    (any line) declares ``class_list`` and/or ``normal_class_set``;
    otherwise classes are ordered by first appearance.  Relative paths
    resolve against the manifest's directory.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    base = path.parent
    records, seen = [], set()
    class_list = normal = None
    label_lines = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise ParseError(lineno, "expected a JSON object")
            if "sample_id" not in obj:
                if "class_list" in obj:
                    class_list = [str(c) for c in obj["class_list"]]
                if "normal_class_set" in obj:
                    normal = [str(c) for c in obj["normal_class_set"]]
                if "class_list" not in obj and "normal_class_set" not in obj:
                    raise ParseError(lineno, "record lacks sample_id")
                continue
            missing = [f for f in RECORD_FIELDS if f not in obj]
            if missing:
                raise ParseError(lineno, f"missing field(s): {', '.join(missing)}")
            sid = str(obj["sample_id"])
            if sid in seen:
                raise DuplicateId(sid)
            seen.add(sid)
            paths = []
            for key in RECORD_FIELDS[1:4]:
                p = Path(obj[key])
                p = p if p.is_absolute() else base / p
                if not p.is_file():
                    raise MissingFile(p)
                paths.append(p)
            records.append(ManifestRecord(sid, *paths, str(obj["label"])))
            label_lines.append(lineno)
    if class_list is None:
        class_list = list(dict.fromkeys(r.label for r in records))
    for rec, lineno in zip(records, label_lines):
        if rec.label not in class_list:
            raise ParseError(lineno, f"label {rec.label!r} not in class_list")
    if normal is not None and not set(normal) <= set(class_list):
        raise ValidationError("normal_class_set contains unknown classes")
    return DatasetManifest(records, class_list, normal, path)


def write_manifest(path, records, class_list=None, normal_class_set=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if class_list is not None or normal_class_set is not None:
            header = {}
            if class_list is not None:
                header["class_list"] = list(class_list)
            if normal_class_set is not None:
                header["normal_class_set"] = list(normal_class_set)
            fh.write(json.dumps(header) + "\n")
        for r in records:
            fh.write(json.dumps({k: str(r[k]) for k in RECORD_FIELDS}) + "\n")


def load_raster(path):
    with Image.open(path) as im:
        if im.mode in ("L", "RGB"):
            return np.asarray(im).copy()
        if im.mode in ("1", "I", "I;16", "F"):
            return np.clip(np.asarray(im.convert("I")), 0, 255).astype(np.uint8)
        return np.asarray(im.convert("RGB")).copy()


def load_mask(path):
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.ndim == 3:
        arr = arr.any(axis=2)
    return arr != 0


def load_cell(record):
    return SegmentedCellImage(
        load_raster(record.image_path),
        load_mask(record.nucleus_mask_path),
        load_mask(record.cell_mask_path),
    )


@dataclass
class FeatureTable:
    sample_ids: list
    labels: list
    X: np.ndarray
    catalog_version: str = CATALOG_VERSION
    class_list: list | None = field(default=None)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[1] != 20:
            raise ValidationError(f"feature table needs 20 columns, got {self.X.shape}")
        if not len(self.sample_ids) == len(self.labels) == len(self.X):
            raise ValidationError("feature table columns have different lengths")
        if not np.isfinite(self.X).all():
            raise ValidationError("feature table contains non-finite values")

    def __len__(self):
        return len(self.sample_ids)

    @property
    def classes(self):
        if self.class_list is not None:
            return list(self.class_list)
        return sorted_labels(set(self.labels))

    def subset(self, idx):
        idx = list(idx)
        return FeatureTable(
            [self.sample_ids[i] for i in idx],
            [self.labels[i] for i in idx],
            self.X[idx],
            self.catalog_version,
            self.class_list,
        )

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("sample_id", "label") + FEATURE_COLUMNS)
        for sid, lab, row in zip(self.sample_ids, self.labels, self.X):
            w.writerow([sid, lab] + [repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, class_list=None):
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(header) != ("sample_id", "label") + FEATURE_COLUMNS:
            raise ParseError(1, "bad feature table header")
        ids, labels, rows = [], [], []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 22:
                raise ParseError(lineno, f"expected 22 columns, got {len(row)}")
            try:
                vals = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from exc
            if not all(math.isfinite(v) for v in vals):
                raise ParseError(lineno, "non-finite feature value")
            ids.append(row[0])
            labels.append(row[1])
            rows.append(vals)
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise DuplicateId(dup)
        return cls(ids, labels, np.array(rows).reshape(-1, 20), class_list=class_list)

    def write(self, path):
        Path(path).write_text(self.to_csv(), encoding="utf-8", newline="")

    @classmethod
    def read(cls, path, class_list=None):
        path = Path(path)
        if not path.is_file():
            raise MissingFile(path)
        return cls.from_csv(path.read_text(encoding="utf-8"), class_list)


def sorted_labels(labels):
    """Herlev names in canonical order, numeric labels numerically, anything
    else lexicographically."""
    labels = list(labels)
    if set(labels) <= set(HERLEV_CLASSES):
        return [c for c in HERLEV_CLASSES if c in labels]
    try:
        return sorted(labels, key=lambda s: (float(s), s))
    except (TypeError, ValueError):
        return sorted(labels, key=str)
