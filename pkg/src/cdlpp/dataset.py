"""Labeled sample collections and deterministic train/test partitions.

Samples are stored column-wise: ``data`` has shape ``(l, n)`` with one
column per sample, and ``labels`` holds contiguous class ids ``1..p``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

IMAGE_SUFFIXES = {".pgm", ".pnm", ".ppm", ".png", ".bmp", ".tif", ".tiff", ".gif"}


class DatasetError(ValueError):
    """Raised for malformed inputs and unsatisfiable split requests."""


@dataclass(frozen=True)
class SampleMatrix:
    """Column-major sample collection.

    Attributes
    ----------
    data : ndarray, shape (l, n)
        One column per sample, raw feature values.
    labels : ndarray of int, shape (n,)
        Contiguous class ids in ``1..p``.
    label_map : dict
        Contiguous id -> original label (or class directory name).
    image_shape : tuple or None
        ``(height, width)`` when columns are flattened images.
    names : tuple of str
        Optional per-sample source names (file paths for image data).
    """

    data: np.ndarray
    labels: np.ndarray
    label_map: dict = field(default_factory=dict)
    image_shape: tuple[int, int] | None = None
    names: tuple[str, ...] = ()

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if data.ndim != 2:
            raise DatasetError(f"data must be 2-D (l x n), got shape {data.shape}")
        if labels.shape != (data.shape[1],):
            raise DatasetError(
                f"labels length {labels.size} does not match sample count {data.shape[1]}")
        if not np.all(np.isfinite(data)):
            bad = np.argwhere(~np.isfinite(data))[0]
            raise DatasetError(f"non-finite value at feature {bad[0]}, sample {bad[1]}")
        if labels.size:
            p = labels.max()
            present = np.unique(labels)
            if labels.min() < 1 or present.size != p:
                raise DatasetError("labels must cover 1..p contiguously")
        data.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels)

    @property
    def l(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def p(self) -> int:
        return int(self.labels.max()) if self.labels.size else 0

    def class_indices(self) -> list[np.ndarray]:
        """Sample indices of each class in load order, for classes 1..p."""
        return [np.flatnonzero(self.labels == c) for c in range(1, self.p + 1)]

    def with_data(self, data: np.ndarray) -> SampleMatrix:
        """Same labels and metadata, new feature matrix (e.g. LBP features)."""
        return SampleMatrix(data, self.labels, dict(self.label_map), None, self.names)


def remap_labels(raw) -> tuple[np.ndarray, dict]:
    """Map arbitrary labels to 1..p in order of first appearance."""
    mapping: dict = {}
    out = np.empty(len(raw), dtype=int)
    for i, lab in enumerate(raw):
        if lab not in mapping:
            mapping[lab] = len(mapping) + 1
        out[i] = mapping[lab]
    return out, {v: k for k, v in mapping.items()}


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_matrix_file(path) -> SampleMatrix:
    """Load a CSV with one sample per row and the integer label last.

    A non-numeric first row is treated as a header. Rows become columns of
    the returned matrix.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: no such file")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DatasetError(f"{path}: empty file")

    first = 0
    if not all(_is_number(c) for c in rows[0]):
        first = 1
    width = None
    feats, raw_labels = [], []
    for r_i in range(first, len(rows)):
        row = rows[r_i]
        lineno = r_i + 1
        if width is None:
            width = len(row)
            if width < 2:
                raise DatasetError(f"{path}: row {lineno} needs at least one feature and a label")
        elif len(row) != width:
            raise DatasetError(
                f"{path}: row {lineno} has {len(row)} columns, expected {width}")
        vals = []
        for c_i, cell in enumerate(row[:-1]):
            try:
                vals.append(float(cell))
            except ValueError:
                raise DatasetError(
                    f"{path}: non-numeric cell {cell!r} at row {lineno}, column {c_i + 1}") from None
        lab = row[-1].strip()
        try:
            lab_f = float(lab)
        except ValueError:
            raise DatasetError(
                f"{path}: non-numeric label {lab!r} at row {lineno}, column {width}") from None
        if lab_f != int(lab_f):
            raise DatasetError(f"{path}: non-integer label {lab!r} at row {lineno}, column {width}")
        feats.append(vals)
        raw_labels.append(int(lab_f))

    if not feats:
        raise DatasetError(f"{path}: no data rows")
    labels, label_map = remap_labels(raw_labels)
    if len(label_map) < 2:
        raise DatasetError(f"{path}: fewer than 2 classes (found {len(label_map)})")
    return SampleMatrix(np.array(feats, dtype=float).T, labels, label_map)


def read_gray(path) -> np.ndarray:
    """Read an image as a 2-D grayscale array.

    Multi-channel images are reduced by the rounded average of their color
    channels (alpha is dropped).
    """
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("L", "I", "F", "I;16", "1"):
                arr = np.asarray(im, dtype=float)
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=float)
                arr = np.rint(rgb.mean(axis=2))
    except (OSError, ValueError) as exc:
        raise DatasetError(f"{path}: unreadable image ({exc})") from exc
    return arr


def load_image_dir(root) -> SampleMatrix:
    """Load ``root/<class>/<image>`` into a SampleMatrix.

    Class ids follow lexicographic directory order, samples within a class
    lexicographic filename order. Each image is flattened row-major.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"{root}: not a directory")
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir() and not d.name.startswith("."))
    if not class_dirs:
        raise DatasetError(f"{root}: no class subdirectories")

    cols, labels, names = [], [], []
    label_map = {}
    shape = None
    shape_src = None
    for cid, cdir in enumerate(class_dirs, start=1):
        files = sorted(f for f in cdir.iterdir()
                       if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES)
        if not files:
            raise DatasetError(f"{cdir}: empty class directory")
        label_map[cid] = cdir.name
        for f in files:
            img = read_gray(f)
            if shape is None:
                shape, shape_src = img.shape, f
            elif img.shape != shape:
                raise DatasetError(
                    f"{f}: image size {img.shape[1]}x{img.shape[0]} differs from "
                    f"{shape[1]}x{shape[0]} ({shape_src})")
            cols.append(img.reshape(-1))
            labels.append(cid)
            names.append(str(f))
    return SampleMatrix(np.stack(cols, axis=1), np.array(labels), label_map,
                        tuple(int(s) for s in shape), tuple(names))


@dataclass(frozen=True)
class SplitPlan:
    """Ordered list of ``(train_idx, test_idx)`` folds over sample indices."""

    folds: tuple[tuple[np.ndarray, np.ndarray], ...]
    protocol: str = ""

    def __len__(self):
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)


def _check_sizes(ds: SampleMatrix, minimum: int, what: str):
    for c, idx in enumerate(ds.class_indices(), start=1):
        if idx.size < minimum:
            raise DatasetError(
                f"class {ds.label_map.get(c, c)} has {idx.size} samples; {what}")


def kfold_split(ds: SampleMatrix, k: int) -> SplitPlan:
    """Per-class contiguous k-fold split (no shuffling).

    Each class is cut into ``k`` blocks of near-equal size, earlier blocks
    taking the remainder; fold ``i`` tests block ``i`` of every class.
    """
    if k < 2:
        raise DatasetError(f"k must be >= 2, got {k}")
    _check_sizes(ds, k, f"k-fold with k={k} needs at least {k}")
    blocks = [np.array_split(idx, k) for idx in ds.class_indices()]
    folds = []
    for i in range(k):
        test = np.sort(np.concatenate([b[i] for b in blocks]))
        train = np.setdiff1d(np.arange(ds.n), test)
        folds.append((train, test))
    return SplitPlan(tuple(folds), f"kfold({k})")


def leave_one_out_split(ds: SampleMatrix) -> SplitPlan:
    _check_sizes(ds, 2, "leave-one-out needs at least 2 per class")
    allidx = np.arange(ds.n)
    folds = tuple((np.delete(allidx, i), np.array([i])) for i in range(ds.n))
    return SplitPlan(folds, "leave-one-out")


def first_n_per_class_split(ds: SampleMatrix, n_train: int) -> SplitPlan:
    """Single fold: the first ``n_train`` samples of each class train."""
    if n_train < 1:
        raise DatasetError(f"n_train must be positive, got {n_train}")
    _check_sizes(ds, n_train + 1, f"first-{n_train} split needs more than {n_train}")
    train = np.sort(np.concatenate([idx[:n_train] for idx in ds.class_indices()]))
    test = np.setdiff1d(np.arange(ds.n), train)
    return SplitPlan(((train, test),), f"first-n({n_train})")
