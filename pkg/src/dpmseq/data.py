"""Dataset container and delimited-text ingestion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class Dataset:
    """Ordered matrix of N observations by d dimensions, optional labels."""

    values: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        self.values = values
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if len(self.labels) != len(values):
                raise ValueError("labels length must match observations")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def univariate(self) -> np.ndarray:
        if self.dim != 1:
            raise ValueError(f"dataset is {self.dim}-dimensional")
        return self.values[:, 0]


def as_matrix(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.values
    arr = np.asarray(data, dtype=float)
    return arr[:, None] if arr.ndim == 1 else arr


def ingest(path, header: bool = False, has_labels: bool = False,
           delimiter: Optional[str] = None) -> Dataset:
    """Parse a delimited text file, one observation per row.

    The delimiter defaults to comma, falling back to whitespace when the
    first data line contains none.  A trailing integer label column is split
    off when ``has_labels`` is set.  Malformed rows are reported with their
    1-based line number.
    """
    rows = []
    labels = []
    ncols = None
    with open(path) as fh:
        lines = fh.readlines()
    start = 0
    # leading comment lines (artifact provenance) are always skipped
    while start < len(lines) and lines[start].lstrip().startswith("#"):
        start += 1
    if header:
        start += 1
    for lineno in range(start, len(lines)):
        line = lines[lineno].strip()
        if not line or line.startswith("#"):
            continue
        delim = delimiter
        if delim is None:
            delim = "," if "," in line else None  # None splits on whitespace
        fields = [f for f in line.split(delim) if f != ""]
        if ncols is None:
            ncols = len(fields)
            if ncols < 1 + (1 if has_labels else 0):
                raise ValueError(f"line {lineno + 1}: too few columns")
        elif len(fields) != ncols:
            raise ValueError(
                f"line {lineno + 1}: expected {ncols} columns, "
                f"got {len(fields)}")
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise ValueError(f"line {lineno + 1}: non-numeric field") from exc
        if has_labels:
            lab = vals[-1]
            if lab != int(lab):
                raise ValueError(
                    f"line {lineno + 1}: label column must be integer")
            labels.append(int(lab))
            vals = vals[:-1]
        rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return Dataset(np.array(rows),
                   np.array(labels, dtype=np.int64) if has_labels else None)
