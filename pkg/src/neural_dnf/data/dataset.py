"""Binary-attribute datasets and their CSV + JSON sidecar file format.

CSV layout: attribute columns ``a_<name>``, then either a single ``class``
column (multi-class, integer index) or ``l_<name>`` label columns
(multi-label). Cells are 0/1. The sidecar ``<stem>.json`` next to the CSV
carries names, task kind and provenance.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

MULTICLASS = "multiclass"
MULTILABEL = "multilabel"


class DatasetFormatError(ValueError):
    def __init__(self, message: str, row: Optional[int] = None, col: Optional[int] = None):
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", col {col})" if col is not None else ")")
        super().__init__(message + where)
        self.row = row
        self.col = col


@dataclass
class Dataset:
    attribute_names: list[str]
    X: np.ndarray  # (n, n_attr) uint8 bits
    task: str
    y: np.ndarray  # (n,) class index or (n, n_labels) uint8 bits
    target_names: list[str]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.uint8).reshape(-1, len(self.attribute_names))
        if self.task == MULTICLASS:
            self.y = np.asarray(self.y, dtype=np.int64).reshape(-1)
            if self.y.size and (self.y.min() < 0 or self.y.max() >= len(self.target_names)):
                raise DatasetFormatError("class index out of range")
        elif self.task == MULTILABEL:
            self.y = np.asarray(self.y, dtype=np.uint8).reshape(-1, len(self.target_names))
        else:
            raise ValueError(f"unknown task kind {self.task!r}")
        if self.X.shape[0] != self.y.shape[0]:
            raise DatasetFormatError("attribute rows and target rows differ in count")
        if self.X.size and self.X.max() > 1:
            raise DatasetFormatError("attribute values must be 0 or 1")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def n_attributes(self) -> int:
        return len(self.attribute_names)

    @property
    def n_targets(self) -> int:
        return len(self.target_names)

    def bipolar(self) -> np.ndarray:
        return 2.0 * self.X - 1.0

    def target_matrix(self) -> np.ndarray:
        """Boolean (n, n_targets) indicator; one-hot for multi-class."""
        if self.task == MULTILABEL:
            return self.y.astype(bool)
        out = np.zeros((len(self), self.n_targets), dtype=bool)
        out[np.arange(len(self)), self.y] = True
        return out

    def subset(self, index) -> "Dataset":
        return Dataset(
            list(self.attribute_names),
            self.X[index],
            self.task,
            self.y[index],
            list(self.target_names),
            dict(self.metadata),
        )

    def select_attributes(self, keep) -> "Dataset":
        keep = np.asarray(keep)
        if keep.dtype == bool:
            keep = np.flatnonzero(keep)
        return Dataset(
            [self.attribute_names[i] for i in keep],
            self.X[:, keep],
            self.task,
            self.y,
            list(self.target_names),
            dict(self.metadata),
        )

    def same_as(self, other: "Dataset") -> bool:
        return (
            self.attribute_names == other.attribute_names
            and self.task == other.task
            and self.target_names == other.target_names
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def save_dataset_csv(dataset: Dataset, path) -> None:
    path = Path(path)
    header = [f"a_{n}" for n in dataset.attribute_names]
    if dataset.task == MULTICLASS:
        header.append("class")
    else:
        header += [f"l_{n}" for n in dataset.target_names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        ys = dataset.y.reshape(len(dataset), -1 if len(dataset) else 1)
        for xrow, yrow in zip(dataset.X, ys):
            writer.writerow([int(v) for v in xrow] + [int(v) for v in yrow])
    meta = {
        "attribute_names": dataset.attribute_names,
        "task": dataset.task,
        "target_names": dataset.target_names,
        "provenance": dataset.metadata,
    }
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_bit(cell: str, row: int, col: int) -> int:
    if cell not in ("0", "1"):
        raise DatasetFormatError(f"expected 0 or 1, found {cell!r}", row, col)
    return int(cell)


def load_dataset_csv(path) -> Dataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetFormatError(f"{path}: missing header row")
    header = rows[0]
    attr_cols = [i for i, h in enumerate(header) if h.startswith("a_")]
    label_cols = [i for i, h in enumerate(header) if h.startswith("l_")]
    class_cols = [i for i, h in enumerate(header) if h == "class"]
    if len(attr_cols) + len(label_cols) + len(class_cols) != len(header):
        raise DatasetFormatError(f"{path}: unrecognised column in header", 1)
    if bool(class_cols) == bool(label_cols) or len(class_cols) > 1:
        raise DatasetFormatError(f"{path}: need exactly one 'class' column or some 'l_' columns", 1)
    task = MULTICLASS if class_cols else MULTILABEL

    X = np.zeros((len(rows) - 1, len(attr_cols)), dtype=np.uint8)
    y = np.zeros((len(rows) - 1, max(1, len(label_cols))), dtype=np.int64)
    for r, row in enumerate(rows[1:]):
        line = r + 2
        if len(row) != len(header):
            raise DatasetFormatError(f"{path}: expected {len(header)} cells, found {len(row)}", line)
        for j, c in enumerate(attr_cols):
            X[r, j] = _parse_bit(row[c], line, c + 1)
        if task == MULTICLASS:
            cell = row[class_cols[0]]
            if not cell.isdigit():
                raise DatasetFormatError(f"class must be a nonnegative integer, found {cell!r}", line, class_cols[0] + 1)
            y[r, 0] = int(cell)
        else:
            for j, c in enumerate(label_cols):
                y[r, j] = _parse_bit(row[c], line, c + 1)

    meta = {}
    if sidecar_path(path).exists():
        meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    attribute_names = meta.get("attribute_names") or [header[c][2:] for c in attr_cols]
    if len(attribute_names) != len(attr_cols):
        raise DatasetFormatError(f"{path}: sidecar lists {len(attribute_names)} attributes, CSV has {len(attr_cols)}")
    if task == MULTICLASS:
        y = y[:, 0]
        n_classes = int(y.max()) + 1 if y.size else 0
        target_names = meta.get("target_names") or [f"class_{i}" for i in range(n_classes)]
    else:
        target_names = meta.get("target_names") or [header[c][2:] for c in label_cols]
        if len(target_names) != len(label_cols):
            raise DatasetFormatError(f"{path}: sidecar lists {len(target_names)} labels, CSV has {len(label_cols)}")
    if meta.get("task", task) != task:
        raise DatasetFormatError(f"{path}: sidecar task {meta['task']!r} disagrees with CSV columns")
    return Dataset(list(attribute_names), X, task, y, list(target_names), meta.get("provenance", {}))


def split_counts(n: int, train: float = 0.64, val: float = 0.16) -> tuple[int, int, int]:
    """Round the train/val fractions of ``n``; test takes the rest."""
    if n < 0 or train < 0 or val < 0 or train + val > 1:
        raise ValueError(f"bad split fractions {train}/{val} for {n} samples")
    a, b = round(train * n), round(val * n)
    return a, b, n - a - b


def split(dataset: Dataset, train: int = 6400, val: int = 1600, test: int = 2000, seed: int = 73):
    """Seeded disjoint train/val/test partition by counts."""
    if min(train, val, test) < 0 or train + val + test > len(dataset):
        raise ValueError(f"split counts {train}/{val}/{test} exceed dataset size {len(dataset)}")
    perm = np.random.default_rng(seed).permutation(len(dataset))
    a, b = train, train + val
    return (
        dataset.subset(np.sort(perm[:a])),
        dataset.subset(np.sort(perm[a:b])),
        dataset.subset(np.sort(perm[b : b + test])),
    )


SPLITS = ("train", "val", "test")


def save_splits(splits: dict, out_dir) -> None:
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {out_dir}")
    for name, ds in splits.items():
        save_dataset_csv(ds, out_dir / f"{name}.csv")


def load_splits(data_dir) -> dict[str, Dataset]:
    data_dir = Path(data_dir)
    out = {}
    for name in SPLITS:
        p = data_dir / f"{name}.csv"
        if not p.exists():
            raise FileNotFoundError(f"missing dataset file: {p}")
        out[name] = load_dataset_csv(p)
    return out
