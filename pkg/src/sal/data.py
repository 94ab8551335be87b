"""Small labeled datasets: the two-moons generator and a CSV loader."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class SyntheticDataset:
    inputs: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self) -> None:
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2 or self.inputs.shape[0] < 1:
            raise ValueError("inputs must be a non-empty (n, d) matrix")
        if self.labels.shape != (self.inputs.shape[0],):
            raise ValueError("labels must be a vector matching the input rows")
        if self.class_count < 1:
            raise ValueError("class_count must be >= 1")
        if self.labels.min() < 0 or self.labels.max() >= self.class_count:
            raise ValueError(f"labels must lie in [0, {self.class_count})")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


def gen_two_moons(n: int, noise_std: float, seed: int | np.random.Generator) -> SyntheticDataset:
    """Two interleaved half-circle arcs with Gaussian jitter, balanced labels.

    Geometry is fixed so goldens stay stable: the first arc is the upper unit
    half-circle, the second is its point reflection shifted right, bottoming
    out at (1, -0.5). Points come out ordered class 0 then class 1.
    """
    if n < 2 or n % 2 != 0:
        raise ValueError("n must be an even number >= 2")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    half = n // 2
    t = np.linspace(0.0, np.pi, half)
    arc0 = np.column_stack([np.cos(t), np.sin(t)])
    arc1 = np.column_stack([1.0 - np.cos(t), 0.5 - np.sin(t)])
    points = np.vstack([arc0, arc1])
    if noise_std > 0:
        points = points + noise_std * rng.standard_normal(points.shape)
    labels = np.concatenate([np.zeros(half, dtype=np.int64), np.ones(half, dtype=np.int64)])
    return SyntheticDataset(points, labels, class_count=2)


def load_csv_dataset(path, label_column: str, standardize: bool = True) -> SyntheticDataset:
    """Read a comma-separated file with a header row into a dataset.

    Features are parsed as floats and, when ``standardize`` is on, shifted to
    zero mean and unit variance per column (constant columns map to zeros).
    Labels must be non-negative integer literals. Malformed content is
    reported with its line number.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ValueError(f"{path}: no column named {label_column!r} in header {header}")
        label_idx = header.index(label_column)
        feature_idx = [i for i in range(len(header)) if i != label_idx]

        rows, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: line {line_no}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(row[i]) for i in feature_idx])
            except ValueError:
                raise ValueError(f"{path}: line {line_no}: non-numeric feature value") from None
            raw_label = row[label_idx].strip()
            try:
                label = int(raw_label)
            except ValueError:
                raise ValueError(f"{path}: line {line_no}: non-integer label {raw_label!r}") from None
            if label < 0:
                raise ValueError(f"{path}: line {line_no}: negative label {label}")
            labels.append(label)

    if not rows:
        raise ValueError(f"{path}: no data rows")
    inputs = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if standardize:
        mean = inputs.mean(axis=0)
        std = inputs.std(axis=0)
        safe = np.where(std > 0, std, 1.0)
        inputs = (inputs - mean) / safe
        inputs[:, std == 0] = 0.0
    return SyntheticDataset(inputs, labels, class_count=int(labels.max()) + 1)
