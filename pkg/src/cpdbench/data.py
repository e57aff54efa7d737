"""Core containers: time series, change point sets, partitions, annotations.

Conventions used throughout the package:

* all time indices are 1-based;
* a change point marks the first observation of a new segment;
* a partition is a list of inclusive index intervals ``[a, b]`` that tile
  ``1..T`` without gaps or overlap;
* missing observations are stored as NaN cells.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

ChangePoints = tuple[int, ...]
Segment = tuple[int, int]
Partition = tuple[Segment, ...]
AnnotationDB = dict[str, dict[str, ChangePoints]]


class DatasetError(ValueError):
    """A dataset or annotation file violates its schema."""


@dataclass(frozen=True)
class TimeSeries:
    """A named d-dimensional series of T observations, NaN = missing."""

    name: str
    values: np.ndarray
    time_index: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2:
            raise DatasetError(f"{self.name}: values must be 1- or 2-dimensional")
        t, d = values.shape
        if t < 1 or d < 1:
            raise DatasetError(f"{self.name}: empty series")
        if np.all(np.isnan(values), axis=0).any():
            raise DatasetError(f"{self.name}: a dimension has no observed values")
        index = self.time_index or tuple(range(1, t + 1))
        if len(index) != t:
            raise DatasetError(f"{self.name}: time index length {len(index)} != {t}")
        if any(b <= a for a, b in zip(index, index[1:])):
            raise DatasetError(f"{self.name}: time index not strictly increasing")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time_index", tuple(int(i) for i in index))

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_dim(self) -> int:
        return self.values.shape[1]

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.values).any())

    def dim(self, j: int) -> np.ndarray:
        """Return dimension ``j`` (0-based) as a 1-D array."""
        return self.values[:, j]


def load_dataset(path: str | Path) -> TimeSeries:
    """Read a series from a dataset JSON file.

    Schema: ``{"name": str, "n_obs": int, "n_dim": int,
    "time": {"index": [int...]}, "series": [{"label": str,
    "raw": [number|null, ...]}, ...]}``. Nulls become missing cells.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"{path}: cannot parse dataset file: {exc}") from exc
    try:
        name = doc["name"]
        n_obs = int(doc["n_obs"])
        n_dim = int(doc["n_dim"])
        dims = doc["series"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"{path}: malformed dataset document: {exc}") from exc
    if len(dims) != n_dim:
        raise DatasetError(f"{path}: declared n_dim {n_dim}, found {len(dims)} series")
    columns = []
    for dim in dims:
        raw = dim.get("raw", [])
        if len(raw) != n_obs:
            raise DatasetError(
                f"{path}: declared n_obs {n_obs}, dimension "
                f"{dim.get('label', '?')} has {len(raw)} values"
            )
        columns.append([math.nan if v is None else float(v) for v in raw])
    if n_obs < 1:
        raise DatasetError(f"{path}: empty series")
    index = doc.get("time", {}).get("index")
    if index is not None:
        if len(index) != n_obs:
            raise DatasetError(f"{path}: time index length {len(index)} != {n_obs}")
        if any(int(b) <= int(a) for a, b in zip(index, index[1:])):
            raise DatasetError(f"{path}: time index not strictly increasing")
    return TimeSeries(name=name, values=np.array(columns, dtype=float).T)


def save_dataset(series: TimeSeries, path: str | Path) -> None:
    """Write ``series`` in the dataset JSON schema (missing cells as null)."""
    dims = []
    for j in range(series.n_dim):
        col = series.dim(j)
        dims.append(
            {
                "label": f"V{j + 1}",
                "raw": [None if math.isnan(v) else v for v in col.tolist()],
            }
        )
    doc = {
        "name": series.name,
        "n_obs": series.n_obs,
        "n_dim": series.n_dim,
        "time": {"index": list(series.time_index)},
        "series": dims,
    }
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def standardize(series: TimeSeries) -> TimeSeries:
    """Rescale each dimension to zero mean and unit population variance.

    Statistics are computed over observed (non-NaN) cells only; missing
    cells are preserved. A constant dimension is centered but not scaled,
    so it maps to all zeros.
    """
    out = np.array(series.values, dtype=float)
    for j in range(series.n_dim):
        col = out[:, j]
        observed = col[~np.isnan(col)]
        mean = observed.mean()
        std = observed.std()  # population (1/n) convention
        col -= mean
        if std > 0:
            col /= std
    return TimeSeries(name=series.name, values=out, time_index=series.time_index)


def as_change_points(locations: Iterable[int], n_obs: int | None = None) -> ChangePoints:
    """Canonicalize locations into a sorted, unique, validated tuple."""
    cps = tuple(sorted({int(v) for v in locations}))
    for loc in cps:
        if loc < 1:
            raise ValueError(f"change point {loc} below 1")
        if n_obs is not None and loc > n_obs:
            raise ValueError(f"change point {loc} beyond series length {n_obs}")
    return cps


def to_partition(change_points: Iterable[int], n_obs: int) -> Partition:
    """Convert change point locations into the partition they imply.

    Each change point starts a new segment; the implicit boundaries 1 and
    T+1 frame the first and last segments. A change point at 1 coincides
    with the leading boundary and creates no extra segment.
    """
    cps = as_change_points(change_points, n_obs)
    starts = [1] + [c for c in cps if c != 1]
    ends = [s - 1 for s in starts[1:]] + [n_obs]
    return tuple((a, b) for a, b in zip(starts, ends))


def boundaries(partition: Partition) -> ChangePoints:
    """Return the interior segment starts, the inverse of ``to_partition``."""
    validate_partition(partition)
    return tuple(a for a, _ in partition[1:])


def validate_partition(partition: Partition) -> None:
    """Check the tiling invariants of a partition of ``1..T``."""
    if not partition:
        raise ValueError("empty partition")
    if partition[0][0] != 1:
        raise ValueError("first segment must start at 1")
    for (a, b), (a2, _) in zip(partition, partition[1:]):
        if b != a2 - 1:
            raise ValueError(f"segments [{a},{b}] and [{a2},...] do not abut")
    for a, b in partition:
        if b < a:
            raise ValueError(f"segment [{a},{b}] is empty")


def partition_length(partition: Partition) -> int:
    validate_partition(partition)
    return partition[-1][1]


def load_annotations(path: str | Path, index_base: int = 1) -> AnnotationDB:
    """Read an annotation JSON file mapping series -> annotator -> locations.

    ``index_base`` declares whether the file stores 0- or 1-based indices;
    locations are converted to the internal 1-based convention.
    """
    if index_base not in (0, 1):
        raise ValueError("index_base must be 0 or 1")
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"{path}: cannot parse annotation file: {exc}") from exc
    shift = 1 - index_base
    db: AnnotationDB = {}
    for name, annotators in doc.items():
        db[name] = {
            str(annotator): as_change_points(int(v) + shift for v in locations)
            for annotator, locations in annotators.items()
        }
    return db


def save_annotations(db: Mapping[str, Mapping[str, Iterable[int]]], path: str | Path) -> None:
    """Write annotations in the (1-based) annotation JSON schema."""
    doc = {
        name: {annotator: list(map(int, cps)) for annotator, cps in sorted(annotators.items())}
        for name, annotators in sorted(db.items())
    }
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def validate_annotations(db: AnnotationDB, lengths: Mapping[str, int]) -> None:
    """Check every annotated location against its series length."""
    for name, annotators in db.items():
        if name not in lengths:
            raise DatasetError(f"annotations reference unknown series {name!r}")
        for annotator, cps in annotators.items():
            for loc in cps:
                if not 1 <= loc <= lengths[name]:
                    raise DatasetError(
                        f"{name}/{annotator}: location {loc} outside [1, {lengths[name]}]"
                    )
