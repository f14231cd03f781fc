"""Dataset representation, CSV ingestion and missing-value repair.

Two CSV files describe a dataset:

* catalog: ``instance_id,partition,flare_class``
* values:  ``instance_id,step,<param1>,<param2>,...`` in long format, one row
  per time step; an empty cell, ``NaN`` or ``nan`` marks a missing value.
"""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DataError

DEFAULT_PARAMETERS = ("R_VALUE", "USFLUX")
_MISSING_TOKENS = ["", "NaN", "nan", "NAN"]


class FlareClass(str, Enum):
    X = "X"
    M = "M"
    C = "C"
    B = "B"
    FQ = "FQ"

    @classmethod
    def parse(cls, token) -> "FlareClass":
        if isinstance(token, cls):
            return token
        text = str(token).strip().upper()
        try:
            return cls(text)
        except ValueError:
            raise DataError(f"unknown flare class {token!r}; expected one of X, M, C, B, FQ") from None

    @property
    def intensity(self) -> int:
        """Categorical intensity rank, X highest; FQ ranks below every flare."""
        return _INTENSITY[self]


_INTENSITY = {FlareClass.X: 4, FlareClass.M: 3, FlareClass.C: 2, FlareClass.B: 1, FlareClass.FQ: 0}


class BinaryLabel(str, Enum):
    XM = "XM"
    CBN = "CBN"

    @classmethod
    def parse(cls, token) -> "BinaryLabel":
        if isinstance(token, cls):
            return token
        try:
            return cls(str(token).strip().upper())
        except ValueError:
            raise DataError(f"unknown binary label {token!r}; expected XM or CBN") from None

    @property
    def is_positive(self) -> bool:
        return self is BinaryLabel.XM


def binarize_label(flare_class: FlareClass) -> BinaryLabel:
    """X and M are the flaring (positive) class; C, B and flare-quiet are not."""
    flare_class = FlareClass.parse(flare_class)
    if flare_class in (FlareClass.X, FlareClass.M):
        return BinaryLabel.XM
    return BinaryLabel.CBN


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DataError("parameter values must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeriesInstance:
    """One multivariate observation window.

    ``values`` maps parameter name to a read-only float array; NaN marks a
    missing value until :func:`interpolate_missing` has been applied.
    """

    id: str
    partition: int
    flare_class: FlareClass
    values: Mapping[str, np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "partition", int(self.partition))
        object.__setattr__(self, "flare_class", FlareClass.parse(self.flare_class))
        if not self.values:
            raise DataError(f"instance {self.id!r} has no parameters")
        vals = {str(k): _frozen_array(v) for k, v in self.values.items()}
        lengths = {len(v) for v in vals.values()}
        if len(lengths) != 1:
            raise DataError(f"instance {self.id!r}: parameter sequences differ in length {sorted(lengths)}")
        if lengths.pop() < 1:
            raise DataError(f"instance {self.id!r}: empty series")
        object.__setattr__(self, "values", MappingProxyType(vals))

    @property
    def label(self) -> BinaryLabel:
        return binarize_label(self.flare_class)

    @property
    def length(self) -> int:
        return len(next(iter(self.values.values())))

    @property
    def parameters(self) -> tuple[str, ...]:
        return tuple(self.values)

    def has_missing(self) -> bool:
        return any(not np.isfinite(v).all() for v in self.values.values())

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesInstance):
            return NotImplemented
        return (
            self.id == other.id
            and self.partition == other.partition
            and self.flare_class is other.flare_class
            and self.values.keys() == other.values.keys()
            and all(np.array_equal(v, other.values[k], equal_nan=True) for k, v in self.values.items())
        )

    __hash__ = object.__hash__


def interpolate_missing(instance: TimeSeriesInstance) -> TimeSeriesInstance:
    """Fill missing values by linear interpolation between observed neighbours.

    Leading and trailing gaps take the nearest observed value. Observed
    values are never modified.
    """
    if not instance.has_missing():
        return instance
    repaired = {}
    for name, series in instance.values.items():
        ok = np.isfinite(series)
        if ok.all():
            repaired[name] = series
            continue
        if not ok.any():
            raise DataError(f"instance {instance.id!r}: parameter {name!r} has no observed values")
        idx = np.arange(len(series))
        filled = series.copy()
        filled[~ok] = np.interp(idx[~ok], idx[ok], series[ok])
        repaired[name] = filled
    return TimeSeriesInstance(instance.id, instance.partition, instance.flare_class, repaired)


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of instances sharing parameters and length."""

    parameters: tuple[str, ...]
    instances: tuple[TimeSeriesInstance, ...]
    cadence_minutes: int = 12
    _index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        params = tuple(str(p) for p in self.parameters)
        if not params:
            raise DataError("a dataset needs at least one parameter")
        if len(set(params)) != len(params):
            raise DataError(f"duplicate parameter names in {params}")
        if int(self.cadence_minutes) < 1:
            raise DataError("cadence_minutes must be a positive integer")
        object.__setattr__(self, "parameters", params)
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "cadence_minutes", int(self.cadence_minutes))
        index = {}
        lengths = set()
        for pos, inst in enumerate(self.instances):
            if inst.id in index:
                raise DataError(f"duplicate instance id {inst.id!r}")
            index[inst.id] = pos
            if set(inst.parameters) != set(params):
                raise DataError(
                    f"instance {inst.id!r} has parameters {sorted(inst.parameters)}, expected {sorted(params)}"
                )
            lengths.add(inst.length)
        if len(lengths) > 1:
            raise DataError(f"inconsistent series lengths across instances: {sorted(lengths)}")
        object.__setattr__(self, "_index", MappingProxyType(index))

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def __getitem__(self, instance_id: str) -> TimeSeriesInstance:
        return self.instances[self._index[instance_id]]

    @property
    def length(self) -> int:
        """Series length n (0 for an empty dataset)."""
        return self.instances[0].length if self.instances else 0

    @property
    def ids(self) -> list[str]:
        return [inst.id for inst in self.instances]

    @cached_property
    def is_xm(self) -> np.ndarray:
        out = np.array([inst.label is BinaryLabel.XM for inst in self.instances], dtype=bool)
        out.setflags(write=False)
        return out

    @property
    def labels(self) -> list[BinaryLabel]:
        return [inst.label for inst in self.instances]

    @cached_property
    def partition_ids(self) -> np.ndarray:
        out = np.array([inst.partition for inst in self.instances], dtype=np.int64)
        out.setflags(write=False)
        return out

    @property
    def partitions(self) -> list[int]:
        return sorted(set(self.partition_ids.tolist()))

    def array(self, parameters: Sequence[str] | None = None) -> np.ndarray:
        """Stack values into an array of shape (n_instances, n_parameters, n)."""
        parameters = self.parameters if parameters is None else tuple(parameters)
        missing = [p for p in parameters if p not in self.parameters]
        if missing:
            raise DataError(f"dataset has no parameter(s) {missing}")
        cube = self._cube
        if parameters == self.parameters:
            return cube
        cols = [self.parameters.index(p) for p in parameters]
        return cube[:, cols, :]

    @cached_property
    def _cube(self) -> np.ndarray:
        n = self.length
        cube = np.empty((len(self.instances), len(self.parameters), n), dtype=np.float64)
        for i, inst in enumerate(self.instances):
            for j, p in enumerate(self.parameters):
                cube[i, j] = inst.values[p]
        cube.setflags(write=False)
        return cube

    def select(self, partitions) -> "Dataset":
        """Instances whose partition is in ``partitions``, order preserved."""
        wanted = {int(p) for p in partitions}
        return self.filter(inst.partition in wanted for inst in self.instances)

    def filter(self, mask) -> "Dataset":
        keep = [inst for inst, k in zip(self.instances, mask) if k]
        return Dataset(self.parameters, keep, self.cadence_minutes)

    def repaired(self) -> "Dataset":
        """Copy with :func:`interpolate_missing` applied to every instance."""
        return Dataset(self.parameters, [interpolate_missing(i) for i in self.instances], self.cadence_minutes)

    def has_missing(self) -> bool:
        return bool(len(self)) and not np.isfinite(self._cube).all()

    def class_counts(self) -> dict[str, int]:
        n_xm = int(self.is_xm.sum())
        return {"XM": n_xm, "CBN": len(self) - n_xm}

    def digest(self) -> str:
        """SHA-256 over ids, partitions, classes and raw value bytes."""
        h = hashlib.sha256()
        h.update("\x1f".join(self.parameters).encode())
        for inst in self.instances:
            h.update(f"\x1e{inst.id}\x1f{inst.partition}\x1f{inst.flare_class.value}".encode())
        if len(self):
            h.update(np.ascontiguousarray(self._cube).tobytes())
        return h.hexdigest()


def _read_csv(path, **kwargs) -> pd.DataFrame:
    try:
        return pd.read_csv(path, **kwargs)
    except FileNotFoundError:
        raise
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: cannot parse CSV ({exc})") from exc


def load_dataset(catalog_path, values_path, cadence_minutes: int = 12) -> Dataset:
    """Read a catalog + values CSV pair into a :class:`Dataset`.

    Missing and non-finite cells are kept as NaN; call
    :meth:`Dataset.repaired` to interpolate them.
    """
    catalog = _read_csv(catalog_path, dtype=str, keep_default_na=False)
    for col in ("instance_id", "partition", "flare_class"):
        if col not in catalog.columns:
            raise DataError(f"{catalog_path}: missing column {col!r}")
    ids = catalog["instance_id"].str.strip()
    dup = ids[ids.duplicated()]
    if len(dup):
        raise DataError(f"{catalog_path}: duplicate instance id {dup.iloc[0]!r}")
    try:
        partitions = [int(p) for p in catalog["partition"]]
    except ValueError as exc:
        raise DataError(f"{catalog_path}: non-integer partition ({exc})") from None
    classes = [FlareClass.parse(c) for c in catalog["flare_class"]]

    header = _read_csv(values_path, nrows=0).columns.tolist()
    if header[:2] != ["instance_id", "step"] or len(header) < 3:
        raise DataError(f"{values_path}: header must be instance_id,step,<param>...")
    params = header[2:]
    values = _read_csv(
        values_path,
        dtype={"instance_id": str},
        na_values=_MISSING_TOKENS,
        keep_default_na=False,
        float_precision="round_trip",
    )
    values["instance_id"] = values["instance_id"].str.strip()
    try:
        steps = pd.to_numeric(values["step"], downcast=None, errors="raise")
    except (ValueError, TypeError) as exc:
        raise DataError(f"{values_path}: non-integer step ({exc})") from None
    if len(steps) and (steps.isna().any() or (steps != np.floor(steps)).any()):
        raise DataError(f"{values_path}: non-integer step")
    values["step"] = steps.astype(np.int64)
    for p in params:
        try:
            values[p] = pd.to_numeric(values[p], errors="raise").astype(np.float64)
        except (ValueError, TypeError) as exc:
            raise DataError(f"{values_path}: non-numeric value in column {p!r} ({exc})") from None
    num = values[params].to_numpy(dtype=np.float64)
    num[~np.isfinite(num)] = np.nan

    known = set(ids)
    unknown = set(values["instance_id"]) - known
    if unknown:
        raise DataError(f"{values_path}: values for ids not in catalog, e.g. {sorted(unknown)[0]!r}")

    order = np.lexsort((values["step"].to_numpy(), values["instance_id"].to_numpy()))
    vid = values["instance_id"].to_numpy()[order]
    vstep = values["step"].to_numpy()[order]
    num = num[order]
    bounds = {}
    if len(vid):
        cuts = np.flatnonzero(vid[1:] != vid[:-1]) + 1
        starts = np.concatenate([[0], cuts])
        ends = np.concatenate([cuts, [len(vid)]])
        for s, e in zip(starts, ends):
            expected = np.arange(e - s)
            if not np.array_equal(vstep[s:e], expected):
                raise DataError(f"instance {vid[s]!r}: steps must be exactly 0..{e - s - 1} (gap or duplicate)")
            bounds[vid[s]] = (s, e)

    instances = []
    for iid, part, fc in zip(ids, partitions, classes):
        if iid not in bounds:
            raise DataError(f"instance {iid!r} has no rows in {values_path}")
        s, e = bounds[iid]
        instances.append(TimeSeriesInstance(iid, part, fc, {p: num[s:e, j] for j, p in enumerate(params)}))
    return Dataset(tuple(params), instances, cadence_minutes)


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def save_dataset(dataset: Dataset, catalog_path, values_path) -> None:
    """Write ``dataset`` as catalog + values CSVs; floats use shortest round-trip text."""
    with open(catalog_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance_id", "partition", "flare_class"])
        for inst in dataset:
            w.writerow([inst.id, inst.partition, inst.flare_class.value])
    with open(values_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance_id", "step", *dataset.parameters])
        for inst in dataset:
            cols = [inst.values[p] for p in dataset.parameters]
            for step in range(inst.length):
                w.writerow([inst.id, step, *(_fmt(c[step]) for c in cols)])
