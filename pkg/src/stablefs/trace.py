"""Trace ingestion and preprocessing.

A trace is a CSV time series: one header line, then one row of numeric
readings per time step (second granularity in the motivating deployments).
This module loads such files into an immutable :class:`DesignMatrix`,
applies the two standard preprocessing steps (min-max scaling to [0,1],
removal of low-variance columns), and provides prefix/tail accessors used
by the streaming selection engine.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyMatrix,
    MalformedRow,
    MissingFile,
    NonNumericCell,
    OutOfRange,
    UnknownTargetColumn,
)
from .util import format_float

DEFAULT_VARIANCE_THRESHOLD = 1e-4

MISSING_MARKERS = {""}  # plus anything float() parses as NaN ("nan", "NaN", ...)


@dataclass(frozen=True, order=True)
class FeatureId:
    """A feature's stable position in the original pre-filter column list."""

    index: int
    name: str


@dataclass(frozen=True)
class Sample:
    """One time step of the stream: readings for every retained feature."""

    values: np.ndarray
    target: float | None
    time_index: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.time_index < 1:
            raise OutOfRange(f"time_index must be positive, got {self.time_index}")


@dataclass(frozen=True)
class DesignMatrix:
    """m samples by n features, optionally with a target column split out.

    Immutable after construction; the backing arrays are locked so the
    matrix can be shared freely across concurrent readers.
    """

    values: np.ndarray
    feature_ids: tuple[FeatureId, ...]
    targets: np.ndarray | None = None
    target_name: str | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise EmptyMatrix(f"expected a 2-D value array, got ndim={v.ndim}")
        if v.shape[1] != len(self.feature_ids):
            raise DimensionMismatch(
                f"{v.shape[1]} columns but {len(self.feature_ids)} feature ids")
        ids = tuple(self.feature_ids)
        if len({f.index for f in ids}) != len(ids) or len({f.name for f in ids}) != len(ids):
            raise MalformedRow(1, "feature indices and names must be unique")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "feature_ids", ids)
        if self.targets is not None:
            # asanyarray keeps ndarray subclasses (tests wrap targets in a
            # read-counting array to assert the selection window is never read)
            t = np.asanyarray(self.targets)
            if t.dtype != np.float64:
                t = t.astype(np.float64)
            if t.shape != (v.shape[0],):
                raise DimensionMismatch(
                    f"targets shape {t.shape} does not match m={v.shape[0]}")
            t.flags.writeable = False
            object.__setattr__(self, "targets", t)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def row(self, i: int) -> np.ndarray:
        return self.values[i, :]

    def sample(self, i: int, with_target: bool = True) -> Sample:
        """Row i (0-based) as a Sample with 1-based time index."""
        target = None
        if with_target and self.targets is not None:
            target = float(self.targets[i])
        return Sample(values=self.values[i, :], target=target, time_index=i + 1)


@dataclass(frozen=True)
class PreprocessReport:
    """Bookkeeping of what preprocessing dropped and how columns were scaled."""

    dropped_low_variance: tuple[FeatureId, ...]
    dropped_non_numeric: tuple[FeatureId, ...]
    scale_min: dict[int, float] = field(default_factory=dict)
    scale_max: dict[int, float] = field(default_factory=dict)
    retained_count: int = 0


def load_trace(path: str | os.PathLike, target_column: str | None = None) -> DesignMatrix:
    """Parse a trace CSV into a raw (unscaled, unfiltered) DesignMatrix.

    The first line is a header of unique column names; every following
    line holds one numeric value per column. Empty cells and any spelling
    float() reads as NaN count as missing markers and are stored as NaN.
    If ``target_column`` is given, that column is split out of the feature
    set into the matrix's targets.
    """
    if not os.path.isfile(path):
        raise MissingFile(f"no such trace file: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "trace file is empty") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header) or any(h == "" for h in header):
            raise MalformedRow(1, "header names must be unique and non-empty")
        n_cols = len(header)

        rows: list[list[float]] = []
        for line_no, raw in enumerate(reader, start=2):
            if len(raw) != n_cols:
                raise MalformedRow(line_no, f"expected {n_cols} cells, got {len(raw)}")
            parsed = []
            for name, cell in zip(header, raw):
                text = cell.strip()
                if text in MISSING_MARKERS:
                    parsed.append(math.nan)
                    continue
                try:
                    parsed.append(float(text))
                except ValueError:
                    raise NonNumericCell(line_no, name) from None
            rows.append(parsed)

    data = np.asarray(rows, dtype=np.float64).reshape(len(rows), n_cols)

    targets = None
    target_name = None
    if target_column is not None:
        if target_column not in header:
            raise UnknownTargetColumn(f"no column named {target_column!r}")
        t_pos = header.index(target_column)
        targets = data[:, t_pos]
        target_name = target_column
        keep = [j for j in range(n_cols) if j != t_pos]
        data = data[:, keep]
        header = [header[j] for j in keep]

    feature_ids = tuple(FeatureId(index=j, name=name) for j, name in enumerate(header))
    return DesignMatrix(values=data, feature_ids=feature_ids,
                        targets=targets, target_name=target_name)


def write_trace(matrix: DesignMatrix, path: str | os.PathLike) -> None:
    """Write a matrix in the trace CSV format (17 significant digits).

    Values written by this function re-load bit-exactly through
    :func:`load_trace`. NaNs are emitted as the missing marker "NaN".
    """
    def render(v: float) -> str:
        return "NaN" if math.isnan(v) else format_float(v)

    header = [f.name for f in matrix.feature_ids]
    if matrix.targets is not None:
        header = header + [matrix.target_name or "y"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(matrix.m):
            row = [render(v) for v in matrix.values[i, :]]
            if matrix.targets is not None:
                row.append(render(matrix.targets[i]))
            writer.writerow(row)


def preprocess(
    matrix: DesignMatrix,
    variance_threshold: float = DEFAULT_VARIANCE_THRESHOLD,
) -> tuple[DesignMatrix, PreprocessReport]:
    """Scale every feature to [0,1] and drop low-variance columns.

    Columns containing any missing (non-finite) value are dropped first and
    listed as non-numeric. Each remaining column c is mapped to
    (c - min(c)) / (max(c) - min(c)); constant columns map to all-zeros.
    Columns whose post-scaling population variance falls below
    ``variance_threshold`` are dropped. Targets pass through untouched.
    """
    if matrix.n == 0 or matrix.m < 2:
        raise EmptyMatrix(f"need m >= 2 and n >= 1, got m={matrix.m}, n={matrix.n}")

    X = matrix.values
    finite = np.isfinite(X).all(axis=0)

    dropped_non_numeric = tuple(f for j, f in enumerate(matrix.feature_ids) if not finite[j])
    numeric_idx = np.flatnonzero(finite)

    scale_min: dict[int, float] = {}
    scale_max: dict[int, float] = {}
    scaled = np.empty((matrix.m, numeric_idx.size), dtype=np.float64)
    for out_j, j in enumerate(numeric_idx):
        col = X[:, j]
        lo, hi = float(col.min()), float(col.max())
        scale_min[matrix.feature_ids[j].index] = lo
        scale_max[matrix.feature_ids[j].index] = hi
        if hi == lo:
            scaled[:, out_j] = 0.0
        else:
            scaled[:, out_j] = (col - lo) / (hi - lo)

    variances = scaled.var(axis=0) if numeric_idx.size else np.empty(0)
    keep_mask = variances >= variance_threshold

    dropped_low_variance = tuple(
        matrix.feature_ids[j] for j, ok in zip(numeric_idx, keep_mask) if not ok
    )
    kept_ids = tuple(matrix.feature_ids[j] for j, ok in zip(numeric_idx, keep_mask) if ok)
    kept = scaled[:, keep_mask]

    report = PreprocessReport(
        dropped_low_variance=dropped_low_variance,
        dropped_non_numeric=dropped_non_numeric,
        scale_min=scale_min,
        scale_max=scale_max,
        retained_count=len(kept_ids),
    )
    out = DesignMatrix(values=kept, feature_ids=kept_ids,
                       targets=matrix.targets, target_name=matrix.target_name)
    return out, report


def prefix(matrix: DesignMatrix, t: int) -> DesignMatrix:
    """The sub-matrix of the first t rows (the samples with index 1..t)."""
    if not 1 <= t <= matrix.m:
        raise OutOfRange(f"prefix length {t} outside [1, {matrix.m}]")
    targets = matrix.targets[:t] if matrix.targets is not None else None
    return DesignMatrix(values=matrix.values[:t, :], feature_ids=matrix.feature_ids,
                        targets=targets, target_name=matrix.target_name)


def tail(matrix: DesignMatrix, start: int) -> DesignMatrix:
    """Rows start..m (1-based start): the stream as seen from a later start time."""
    if not 1 <= start <= matrix.m:
        raise OutOfRange(f"start {start} outside [1, {matrix.m}]")
    targets = matrix.targets[start - 1:] if matrix.targets is not None else None
    return DesignMatrix(values=matrix.values[start - 1:, :], feature_ids=matrix.feature_ids,
                        targets=targets, target_name=matrix.target_name)


def restrict(matrix: DesignMatrix, features: Iterable[FeatureId]) -> DesignMatrix:
    """Keep only the given features' columns, ordered by original index."""
    wanted = {f.index for f in features}
    cols = [j for j, f in enumerate(matrix.feature_ids) if f.index in wanted]
    if len(cols) != len(wanted):
        raise OutOfRange("feature set contains features absent from the matrix")
    ids = tuple(matrix.feature_ids[j] for j in cols)
    return DesignMatrix(values=matrix.values[:, cols], feature_ids=ids,
                        targets=matrix.targets, target_name=matrix.target_name)


def from_rows(rows: Sequence[np.ndarray], feature_ids: tuple[FeatureId, ...],
              targets: Sequence[float] | None = None) -> DesignMatrix:
    """Assemble a DesignMatrix from stored sample rows."""
    values = np.vstack([np.asarray(r, dtype=np.float64) for r in rows])
    t = None if targets is None else np.asarray(targets, dtype=np.float64)
    return DesignMatrix(values=values, feature_ids=feature_ids, targets=t)
