"""CUB-200-2011 attribute annotations: raw-file ingestion and the
class-level majority encoding used to de-noise them."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..rules import sanitize_atom
from .dataset import MULTICLASS, Dataset

NOT_VISIBLE = 1
CERTAINTIES = (1, 2, 3, 4)  # not visible, guessing, probably, definitely


class CubFormatError(ValueError):
    pass


@dataclass
class CubRawAnnotations:
    image_ids: np.ndarray  # (n,) sorted, as in the files
    labels: np.ndarray  # (n,) 0-based class index
    present: np.ndarray  # (n, n_attr) 0/1
    certainty: np.ndarray  # (n, n_attr) 1..4
    attribute_names: list[str]
    class_names: list[str]
    is_train: Optional[np.ndarray] = None

    def first_classes(self, k: int) -> "CubRawAnnotations":
        keep = self.labels < k
        return CubRawAnnotations(
            self.image_ids[keep],
            self.labels[keep],
            self.present[keep],
            self.certainty[keep],
            list(self.attribute_names),
            self.class_names[:k],
            None if self.is_train is None else self.is_train[keep],
        )


def _find(directory: Path, *candidates: str) -> Path:
    for c in candidates:
        p = directory / c
        if p.exists():
            return p
    raise FileNotFoundError(f"none of {', '.join(candidates)} found under {directory}")


def _read_table(path: Path, min_cols: int) -> list[list[str]]:
    rows = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) < min_cols:
            raise CubFormatError(f"{path}:{lineno}: expected at least {min_cols} fields")
        rows.append(parts)
    return rows


def _read_names(path: Path) -> list[str]:
    rows = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        idx, _, name = line.strip().partition(" ")
        if int(idx) != len(rows) + 1:
            raise CubFormatError(f"{path}:{lineno}: ids must run 1..n in order")
        rows.append(name.strip())
    return rows


def class_display_name(raw: str) -> str:
    """'001.Black_footed_Albatross' -> 'black_footed_albatross'."""
    head, dot, rest = raw.partition(".")
    return sanitize_atom(rest if dot and head.isdigit() else raw)


def ingest_cub(directory) -> CubRawAnnotations:
    """Read the published CUB-200-2011 text layout.

    Pairs missing from the attribute-label file count as (absent, not
    visible); the trailing time column is ignored.
    """
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"CUB directory not found: {d}")
    class_names = _read_names(_find(d, "classes.txt"))
    attribute_names = _read_names(_find(d, "attributes.txt", "attributes/attributes.txt", "../attributes.txt"))
    image_rows = _read_table(_find(d, "image_class_labels.txt"), 2)
    image_ids = np.array([int(r[0]) for r in image_rows])
    labels = np.array([int(r[1]) - 1 for r in image_rows])
    if len(set(image_ids.tolist())) != len(image_ids):
        raise CubFormatError("duplicate image id in image_class_labels.txt")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= len(class_names):
        raise CubFormatError("class id out of range in image_class_labels.txt")
    order = np.argsort(image_ids)
    image_ids, labels = image_ids[order], labels[order]
    row_of = {int(i): r for r, i in enumerate(image_ids)}

    n, m = len(image_ids), len(attribute_names)
    present = np.zeros((n, m), dtype=np.uint8)
    certainty = np.full((n, m), NOT_VISIBLE, dtype=np.uint8)
    label_file = _find(d, "attributes/image_attribute_labels.txt", "image_attribute_labels.txt")
    for parts in _read_table(label_file, 4):
        img, attr, is_present, cert = (int(v) for v in parts[:4])
        if img not in row_of:
            raise CubFormatError(f"{label_file}: unknown image id {img}")
        if not 1 <= attr <= m:
            raise CubFormatError(f"{label_file}: attribute id {attr} out of range 1..{m}")
        if is_present not in (0, 1):
            raise CubFormatError(f"{label_file}: is_present must be 0 or 1, got {is_present}")
        if cert not in CERTAINTIES:
            raise CubFormatError(f"{label_file}: certainty must be 1..4, got {cert}")
        present[row_of[img], attr - 1] = is_present
        certainty[row_of[img], attr - 1] = cert

    is_train = None
    split_file = d / "train_test_split.txt"
    if split_file.exists():
        is_train = np.zeros(n, dtype=bool)
        for parts in _read_table(split_file, 2):
            img = int(parts[0])
            if img not in row_of:
                raise CubFormatError(f"{split_file}: unknown image id {img}")
            is_train[row_of[img]] = parts[1] == "1"
    return CubRawAnnotations(image_ids, labels, present, certainty, attribute_names, class_names, is_train)


def class_attribute_encoding(raw: CubRawAnnotations, rows: np.ndarray) -> np.ndarray:
    """Per class, per attribute: 1 if presence is at least as frequent as
    absence among the counted annotations of ``rows``, else 0."""
    n_classes, n_attr = len(raw.class_names), len(raw.attribute_names)
    counts = np.zeros((n_classes, n_attr, 2), dtype=np.int64)
    present = raw.present[rows]
    counted = ~((present == 0) & (raw.certainty[rows] == NOT_VISIBLE))
    labels = raw.labels[rows]
    for value in (0, 1):
        hits = (counted & (present == value)).astype(np.int64)
        np.add.at(counts[:, :, value], labels, hits)
    return (counts[:, :, 1] >= counts[:, :, 0]).astype(np.uint8)


def preprocess_cub(raw: CubRawAnnotations, n_min_classes: int, train_ids: Iterable[int]):
    """Class-majority encoding computed on the training images, applied to
    every image; keep attributes that are mostly present in at least
    ``n_min_classes`` classes.

    Returns (dataset over ``raw.image_ids`` in order, boolean kept mask).
    """
    if n_min_classes < 1:
        raise ValueError("N must be >= 1")
    train = np.isin(raw.image_ids, np.fromiter(train_ids, dtype=np.int64))
    encoding = class_attribute_encoding(raw, np.flatnonzero(train))
    mask = encoding.sum(axis=0) >= n_min_classes
    if not mask.any():
        raise ValueError(
            f"no attribute is mostly present in >= {n_min_classes} of {len(raw.class_names)} classes"
        )
    median = encoding[:, mask]
    names = [sanitize_atom(raw.attribute_names[i]) for i in np.flatnonzero(mask)]
    ds = Dataset(
        names,
        median[raw.labels],
        MULTICLASS,
        raw.labels,
        [class_display_name(c) for c in raw.class_names],
        {"preprocess": "cub", "N": n_min_classes, "n_classes": len(raw.class_names)},
    )
    return ds, mask
