"""
Data Processing
===============
Turns an Iris/Wine-shaped CSV file into training and test Datasets.

  load_csv          → RawTable (features + label strings)
  normalize_minmax  → features mapped to [0, 1], bounds kept for reuse
  encode_targets    → one-hot targets, classes in first-appearance order
  split             → seeded (optionally stratified) train/test partition
  classify          → argmax of a network output
  prepare           → the whole pipeline, test normalized with train bounds
"""

import csv
import io
import logging
import math
import os
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.datasets import load_iris, load_wine
from sklearn.model_selection import train_test_split

from app.errors import DataFileNotFound, EmptySplit, InvalidDataset, MissingLabels, ParseError
from app.network import Dataset

logger = logging.getLogger(__name__)

FeatureBounds = List[Tuple[float, float]]

IRIS_NAMES = ("Iris-setosa", "Iris-versicolor", "Iris-virginica")


@dataclass(frozen=True, eq=False)
class RawTable:
    features: np.ndarray          # rows x feature_count
    labels: Tuple[str, ...]

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] < 1:
            raise ValueError("a table needs at least one feature column")
        if features.shape[0] != len(self.labels):
            raise ValueError(f"{features.shape[0]} feature rows but {len(self.labels)} labels")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def feature_count(self) -> int:
        return self.features.shape[1]

    def distinct_labels(self) -> List[str]:
        return list(dict.fromkeys(self.labels))


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.30
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")


@dataclass(frozen=True, eq=False)
class PreparedData:
    train: Dataset
    test: Dataset
    bounds: FeatureBounds
    class_names: Tuple[str, ...]


# ── Loading ──────────────────────────────────────────────────────────────────

def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path: str, label_column: int = -1) -> RawTable:
    """
    Parse a comma-separated file; one column holds the class name.

    A first row with a non-numeric feature cell is treated as a header.
    Rows and columns in errors are 1-based file positions.
    """
    if not os.path.isfile(path):
        raise DataFileNotFound(f"dataset file not found: {path}")

    with open(path, "rb") as f:
        raw = f.read()
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        line = raw[:e.start].count(b"\n") + 1
        raise ParseError(line, 1, f"file is not valid UTF-8 (byte offset {e.start})") from None

    rows = [(line_no, row) for line_no, row in enumerate(csv.reader(io.StringIO(text, newline="")), start=1)
            if row and any(cell.strip() for cell in row)]

    if not rows:
        raise ParseError(1, 1, "file contains no data rows")

    width = len(rows[0][1])
    if width < 2:
        raise ParseError(rows[0][0], 1, "need at least one feature column and one label column")
    label_idx = label_column if label_column >= 0 else width + label_column
    if not 0 <= label_idx < width:
        raise ParseError(rows[0][0], label_column + 1, f"label column out of range for {width} columns")
    feature_idx = [c for c in range(width) if c != label_idx]

    first_line, first = rows[0]
    if any(not _is_number(first[c].strip()) for c in feature_idx):
        logger.debug("treating line %d of %s as a header", first_line, path)
        rows = rows[1:]

    features = []
    labels = []
    for line_no, row in rows:
        if len(row) != width:
            raise ParseError(line_no, min(len(row), width) + 1,
                             f"expected {width} columns, found {len(row)}")
        values = []
        for c in feature_idx:
            cell = row[c].strip()
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(line_no, c + 1, f"non-numeric feature value {cell!r}") from None
        features.append(values)
        labels.append(row[label_idx].strip())

    if not features:
        raise ParseError(first_line, 1, "file contains a header but no data rows")

    table = RawTable(features=np.array(features), labels=tuple(labels))
    logger.info("loaded %s: %d rows, %d features, %d classes",
                path, table.size, table.feature_count, len(table.distinct_labels()))
    return table


# ── Normalization ────────────────────────────────────────────────────────────

def minmax_bounds(features: np.ndarray) -> FeatureBounds:
    features = np.asarray(features, dtype=np.float64)
    return [(float(lo), float(hi)) for lo, hi in zip(features.min(axis=0), features.max(axis=0))]


def scale_features(features: np.ndarray, bounds: FeatureBounds) -> np.ndarray:
    """Affine map onto [0, 1] with stored bounds; constant features map to 0."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[1] != len(bounds):
        raise ValueError(f"{features.shape[1]} features but {len(bounds)} bounds")
    lo = np.array([b[0] for b in bounds])
    span = np.array([b[1] - b[0] for b in bounds])
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (features - lo) / safe, 0.0)


def normalize_minmax(table: RawTable) -> Tuple[RawTable, FeatureBounds]:
    bounds = minmax_bounds(table.features)
    return apply_minmax(table, bounds), bounds


def apply_minmax(table: RawTable, bounds: FeatureBounds) -> RawTable:
    return RawTable(features=scale_features(table.features, bounds), labels=table.labels)


# ── Encoding ─────────────────────────────────────────────────────────────────

def encode_targets(table: RawTable, class_names: Optional[Sequence[str]] = None) -> Dataset:
    """
    One-hot targets; class order is first appearance in the table unless an
    explicit order is given (so a test table shares the training order).
    """
    names = tuple(class_names) if class_names is not None else tuple(table.distinct_labels())
    if len(names) < 2:
        raise InvalidDataset(f"need at least 2 classes, found {len(names)}")
    index = {name: i for i, name in enumerate(names)}
    unknown = sorted(set(table.labels) - index.keys())
    if unknown:
        raise InvalidDataset(f"labels not in the class list: {unknown}")

    labels = np.array([index[label] for label in table.labels], dtype=np.int64)
    targets = np.eye(len(names))[labels]
    return Dataset(patterns=table.features, targets=targets, class_labels=labels, class_names=names)


def classify(output: np.ndarray) -> int:
    """Index of the largest output; ties go to the lowest index."""
    output = np.asarray(output)
    if output.size == 0:
        raise ValueError("cannot classify an empty output")
    return int(np.argmax(output))


# ── Splitting ────────────────────────────────────────────────────────────────

def split(dataset: Dataset, spec: SplitSpec) -> Tuple[Dataset, Dataset]:
    m = dataset.size
    n_test = math.ceil(spec.test_fraction * m)
    if n_test < 1 or m - n_test < 1:
        raise EmptySplit(f"test fraction {spec.test_fraction} leaves an empty side for {m} patterns")

    stratify = None
    if spec.stratified:
        if dataset.class_labels is None:
            raise MissingLabels("stratified split needs class labels")
        stratify = dataset.class_labels

    try:
        train_idx, test_idx = train_test_split(
            np.arange(m),
            test_size=spec.test_fraction,
            random_state=spec.seed,
            stratify=stratify,
        )
    except ValueError as e:
        raise EmptySplit(f"cannot split {m} patterns: {e}") from e

    return dataset.subset(np.sort(train_idx)), dataset.subset(np.sort(test_idx))


# ── Pipeline ─────────────────────────────────────────────────────────────────

def prepare(path: str, label_column: int, spec: SplitSpec) -> PreparedData:
    """load → encode → split → normalize with training bounds."""
    table = load_csv(path, label_column)
    dataset = encode_targets(table)
    train, test = split(dataset, spec)

    bounds = minmax_bounds(train.patterns)
    train = replace(train, patterns=scale_features(train.patterns, bounds))
    test = replace(test, patterns=scale_features(test.patterns, bounds))
    logger.info("split %d patterns into %d train / %d test", dataset.size, train.size, test.size)
    return PreparedData(train=train, test=test, bounds=bounds, class_names=dataset.class_names)


def export_builtin(name: str, path: str) -> str:
    """Write scikit-learn's bundled Iris or Wine data in its UCI column layout."""
    name = name.lower()
    if name == "iris":
        bunch = load_iris()
        rows = [[*map(repr, map(float, x)), IRIS_NAMES[y]] for x, y in zip(bunch.data, bunch.target)]
    elif name == "wine":
        bunch = load_wine()
        rows = [[str(int(y) + 1), *map(repr, map(float, x))] for x, y in zip(bunch.data, bunch.target)]
    else:
        raise ValueError(f"unknown builtin dataset '{name}' (choose iris or wine)")

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as f:
        csv.writer(f).writerows(rows)
    logger.info("wrote %d %s rows to %s", len(rows), name, path)
    return path
