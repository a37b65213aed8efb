"""Datasets: CSV ingestion, standardization, noise, folds, synthetic blobs."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .classify import KnnModel, knn_predict
from .embedding import EmbeddingModel, project
from .errors import (
    ClassTooSmall,
    MissingLabelColumn,
    NonNumericFeature,
    NotTwoDimensional,
    ParseError,
    ShapeMismatch,
)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple | None = None
    class_names: dict | None = None

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels)
        if x.ndim != 2:
            raise ShapeMismatch(f"features must be 2-D, got {x.shape}")
        if y.shape != (x.shape[0],):
            raise ShapeMismatch(f"{y.size} labels for {x.shape[0]} samples")
        if not np.all(np.isfinite(x)):
            raise ParseError("features contain non-finite values")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return np.unique(self.labels).size

    def subset(self, index) -> "Dataset":
        return replace(self, features=self.features[index], labels=self.labels[index])

    def with_features(self, features) -> "Dataset":
        return replace(self, features=features)


@dataclass(frozen=True)
class FoldSplit:
    fold_assignments: np.ndarray
    seed: int

    @property
    def n_folds(self) -> int:
        return int(self.fold_assignments.max()) + 1

    def train_test(self, fold: int):
        test = self.fold_assignments == fold
        return np.flatnonzero(~test), np.flatnonzero(test)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample_index", "fold"])
            w.writerows(enumerate(self.fold_assignments.tolist()))


# --- CSV ----------------------------------------------------------------

def _resolve_column(spec, header, width, what):
    if isinstance(spec, str) and not spec.lstrip("-").isdigit():
        if header is None or spec not in header:
            raise MissingLabelColumn(f"{what} column {spec!r} not found")
        return header.index(spec)
    idx = int(spec)
    if idx < 0:
        idx += width
    if not 0 <= idx < width:
        raise MissingLabelColumn(f"{what} column index {spec} out of range for {width} columns")
    return idx


def _label_key(value):
    try:
        return (0, float(value), value)
    except ValueError:
        return (1, 0.0, value)


def load_csv(path, label_column=-1, delimiter: str = ",", header: bool = True,
             drop_columns=()) -> Dataset:
    """Read a delimited file into a :class:`Dataset`.

    Labels are remapped to ``0..C-1`` in sorted order of the raw values
    (numerically when they parse as numbers); ``class_names`` keeps the
    original strings. Rows with empty or non-numeric cells are rejected with
    the offending line number.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    first_line = 1
    names = None
    if header:
        if not rows:
            raise ParseError("empty file", 1)
        names = [h.strip() for h in rows[0]]
        rows = rows[1:]
        first_line = 2
    # skip blank trailing lines but keep numbering
    numbered = [(first_line + i, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if len(numbered) < 2:
        raise ParseError("need at least two data rows")
    width = len(names) if names is not None else len(numbered[0][1])
    label_idx = _resolve_column(label_column, names, width, "label")
    drop = {_resolve_column(c, names, width, "drop") for c in drop_columns}
    drop.discard(label_idx)
    feat_idx = [j for j in range(width) if j != label_idx and j not in drop]
    if not feat_idx:
        raise ParseError("no feature columns left")

    feats = np.empty((len(numbered), len(feat_idx)))
    raw_labels = []
    for r, (line, row) in enumerate(numbered):
        if len(row) != width:
            raise ParseError(f"expected {width} fields, found {len(row)}", line)
        label = row[label_idx].strip()
        if not label:
            raise ParseError("missing label", line)
        raw_labels.append(label)
        for c, j in enumerate(feat_idx):
            cell = row[j].strip()
            if not cell:
                raise ParseError(f"missing value in column {j if names is None else names[j]!r}", line)
            try:
                feats[r, c] = float(cell)
            except ValueError:
                raise NonNumericFeature(line, j if names is None else names[j], cell) from None
            if not np.isfinite(feats[r, c]):
                raise NonNumericFeature(line, j if names is None else names[j], cell)

    uniq = sorted(set(raw_labels), key=_label_key)
    code = {v: i for i, v in enumerate(uniq)}
    labels = np.array([code[v] for v in raw_labels], dtype=np.int64)
    fnames = tuple(names[j] for j in feat_idx) if names is not None else None
    return Dataset(feats, labels, fnames, dict(enumerate(uniq)))


def save_csv(ds: Dataset, path, delimiter: str = ",") -> None:
    """Write features plus a trailing ``label`` column (original names if known)."""
    names = ds.feature_names or tuple(f"f{j}" for j in range(ds.n_features))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow([*names, "label"])
        for row, lab in zip(ds.features, ds.labels):
            name = ds.class_names[int(lab)] if ds.class_names else int(lab)
            w.writerow([repr(float(v)) for v in row] + [name])


# --- preprocessing ------------------------------------------------------

def zscore_fit_apply(train: Dataset, others=()):
    """Standardize ``train`` and ``others`` with the training mean and std.

    Features with zero spread are divided by 1.
    """
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    out = [ds.with_features((ds.features - mean) / scale) for ds in (train, *others)]
    return out, (mean, std)


def add_noise(ds: Dataset, level: float, seed) -> Dataset:
    """Add ``N(0, (level * std_j)^2)`` noise to feature ``j`` of every sample."""
    if level < 0:
        raise ValueError("noise level must be non-negative")
    if level == 0:
        return ds.with_features(ds.features.copy())
    rng = np.random.default_rng(seed)
    std = ds.features.std(axis=0)
    noise = rng.standard_normal(ds.features.shape) * (level * std)
    return ds.with_features(ds.features + noise)


def kfold(labels, k: int, seed, stratified: bool = True) -> FoldSplit:
    """Random fold assignment; stratified splits deal each class round-robin."""
    labels = np.asarray(labels)
    n = labels.size
    if k < 2:
        raise ValueError("need at least two folds")
    if n < k:
        raise ClassTooSmall(f"{n} samples cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    if stratified:
        classes, counts = np.unique(labels, return_counts=True)
        if counts.min() < k:
            raise ClassTooSmall(
                f"class {classes[counts.argmin()]} has {counts.min()} members, fewer than {k} folds"
            )
        order = np.concatenate([rng.permutation(np.flatnonzero(labels == c)) for c in classes])
    else:
        order = rng.permutation(n)
    folds = np.empty(n, dtype=np.int64)
    folds[order] = np.arange(n) % k
    return FoldSplit(folds, seed if isinstance(seed, int) else -1)


def stratified_subsample(labels, size: int, seed) -> np.ndarray:
    """Sorted indices of a class-proportional subsample, at least one per class."""
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    share = counts * size / labels.size
    alloc = np.maximum(np.floor(share).astype(int), 1)
    remainder = share - np.floor(share)
    for c in np.argsort(-remainder, kind="stable"):
        if alloc.sum() >= size:
            break
        if alloc[c] < counts[c]:
            alloc[c] += 1
    while alloc.sum() > size:
        c = int(np.argmax(alloc))
        alloc[c] -= 1
    rng = np.random.default_rng(seed)
    picked = [rng.choice(np.flatnonzero(labels == c), a, replace=False)
              for c, a in zip(classes, alloc)]
    return np.sort(np.concatenate(picked))


def synthetic_two_class(n_per_class: int, separation: float, spread: float, seed) -> Dataset:
    """Two isotropic 2-D Gaussian blobs centred at ``(+-separation/2, 0)``."""
    if n_per_class < 2:
        raise ValueError("n_per_class must be at least 2")
    rng = np.random.default_rng(seed)
    centers = np.array([[-separation / 2, 0.0], [separation / 2, 0.0]])
    x = np.concatenate([c + spread * rng.standard_normal((n_per_class, 2)) for c in centers])
    y = np.repeat([0, 1], n_per_class)
    return Dataset(x, y, ("x", "y"), {0: "0", 1: "1"})


# --- decision grids -----------------------------------------------------

@dataclass(frozen=True)
class DecisionGrid:
    xs: np.ndarray
    ys: np.ndarray
    labels: np.ndarray  # (resolution_y, resolution_x)

    def to_csv(self, path) -> None:
        gx, gy = np.meshgrid(self.xs, self.ys)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "label"])
            for x, y, lab in zip(gx.ravel(), gy.ravel(), self.labels.ravel()):
                w.writerow([repr(float(x)), repr(float(y)), int(lab)])


def decision_grid(model: EmbeddingModel, knn: KnnModel, bounds, resolution: int) -> DecisionGrid:
    """k-NN labels over a regular lattice of the 2-D input space."""
    if model.n_features != 2:
        raise NotTwoDimensional(f"model input has {model.n_features} dimensions")
    xmin, xmax, ymin, ymax = bounds
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    labels = knn_predict(knn, project(model, pts)).reshape(gx.shape)
    return DecisionGrid(xs, ys, labels)
