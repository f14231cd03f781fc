"""Window slicing, negative-class undersampling and synthetic datasets."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from datetime import datetime, timedelta, timezone
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .data import DEFAULT_PARAMETERS, Dataset, FlareClass, TimeSeriesInstance
from .errors import ConfigError, DataError
from .seeding import check_seed, mix, rng

N_SYNTHETIC_PARTITIONS = 5


def parse_time(text) -> datetime:
    """ISO-8601 timestamp as a naive UTC datetime."""
    if isinstance(text, datetime):
        t = text
    else:
        s = str(text).strip()
        if s.endswith("Z"):
            s = s[:-1] + "+00:00"
        try:
            t = datetime.fromisoformat(s)
        except ValueError:
            raise DataError(f"cannot parse timestamp {text!r}") from None
    if t.tzinfo is not None:
        t = t.astimezone(timezone.utc).replace(tzinfo=None)
    return t


@dataclass(frozen=True)
class RegionSeries:
    region_id: str
    values: Mapping[str, np.ndarray]
    start_time: datetime
    cadence_minutes: int = 12

    def __post_init__(self):
        vals = {str(k): np.asarray(v, dtype=np.float64) for k, v in self.values.items()}
        if not vals:
            raise DataError(f"region {self.region_id!r} has no parameters")
        if len({len(v) for v in vals.values()}) != 1:
            raise DataError(f"region {self.region_id!r}: parameter sequences differ in length")
        cad = int(self.cadence_minutes)
        if cad < 1 or 60 % cad:
            raise ConfigError(f"cadence_minutes must divide 60, got {self.cadence_minutes}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "cadence_minutes", cad)
        object.__setattr__(self, "start_time", parse_time(self.start_time))

    @property
    def length(self) -> int:
        return len(next(iter(self.values.values())))


@dataclass(frozen=True)
class FlareEvent:
    region_id: str
    peak_time: datetime
    flare_class: FlareClass

    def __post_init__(self):
        fc = FlareClass.parse(self.flare_class)
        if fc is FlareClass.FQ:
            raise DataError("a flare event cannot have class FQ")
        object.__setattr__(self, "flare_class", fc)
        object.__setattr__(self, "peak_time", parse_time(self.peak_time))


@dataclass(frozen=True)
class WindowConfig:
    observation_hours: float = 12.0
    step_hours: float = 1.0
    horizon_hours: float = 24.0

    def __post_init__(self):
        for name in ("observation_hours", "step_hours", "horizon_hours"):
            if not float(getattr(self, name)) > 0:
                raise ConfigError(f"{name} must be positive")

    def steps(self, cadence_minutes: int, hours: float) -> int:
        exact = hours * 60.0 / cadence_minutes
        k = round(exact)
        if k < 1 or abs(exact - k) > 1e-9:
            raise ConfigError(f"{hours} h is not a whole number of {cadence_minutes}-minute steps")
        return k


def slice_sliding_windows(region: RegionSeries, flares: Sequence[FlareEvent], config: WindowConfig | None = None,
                          partition: int = 1) -> list[TimeSeriesInstance]:
    """Cut a region into observation windows and label each one.

    A window is labelled with the most intense flare (X > M > C > B) peaking
    in ``(window_end, window_end + horizon]``, or FQ if there is none.
    Instance ids are ``<region_id>_t<k>`` for the k-th window.
    """
    config = config or WindowConfig()
    cad = region.cadence_minutes
    width = config.steps(cad, config.observation_hours)
    stride = config.steps(cad, config.step_hours)
    horizon = timedelta(hours=config.horizon_hours)
    n = region.length
    if n < width:
        raise DataError(f"region {region.region_id!r} ({n} steps) is shorter than one observation window ({width})")
    for fl in flares:
        if fl.region_id != region.region_id:
            raise DataError(f"flare for region {fl.region_id!r} passed with region {region.region_id!r}")
        if fl.peak_time < region.start_time:
            raise DataError(f"flare peaking at {fl.peak_time.isoformat()} precedes region start")
    out = []
    for k, start in enumerate(range(0, n - width + 1, stride)):
        end_time = region.start_time + timedelta(minutes=(start + width) * cad)
        best = FlareClass.FQ
        for fl in flares:
            if end_time < fl.peak_time <= end_time + horizon and fl.flare_class.intensity > best.intensity:
                best = fl.flare_class
        values = {p: v[start:start + width] for p, v in region.values.items()}
        out.append(TimeSeriesInstance(f"{region.region_id}_t{k}", partition, best, values))
    return out


def undersample_negatives(dataset: Dataset, target_ratio: float, seed: int) -> Dataset:
    """Drop CBN instances at random, per partition, down to ``round(target_ratio * n_xm)``.

    XM instances are all kept and nothing is ever added; surviving instances
    keep their original order. The sample for partition ``p`` is drawn with
    seed ``mix(seed, p)``.
    """
    seed = check_seed(seed)
    if not (target_ratio > 0 and math.isfinite(target_ratio)):
        raise ConfigError(f"target_ratio must be positive, got {target_ratio}")
    if not dataset.is_xm.any():
        raise DataError("cannot undersample a dataset without XM instances")
    keep = np.ones(len(dataset), dtype=bool)
    parts = dataset.partition_ids
    for p in dataset.partitions:
        in_p = parts == p
        n_xm = int((dataset.is_xm & in_p).sum())
        neg = np.flatnonzero(in_p & ~dataset.is_xm)
        target = min(len(neg), int(math.floor(target_ratio * n_xm + 0.5)))
        if target < len(neg):
            chosen = rng(mix(seed, p)).choice(len(neg), size=target, replace=False)
            drop = np.ones(len(neg), dtype=bool)
            drop[chosen] = False
            keep[neg[drop]] = False
    return dataset.filter(keep)


@dataclass(frozen=True)
class SyntheticConfig:
    n_instances: int = 500
    n_positive: int = 71
    length: int = 60
    parameters: tuple[str, ...] = DEFAULT_PARAMETERS
    class_separation: float = 10.0
    noise_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "parameters", tuple(self.parameters))
        if int(self.n_instances) < 1 or int(self.length) < 1:
            raise ConfigError("n_instances and length must be positive")
        if not 0 <= int(self.n_positive) <= int(self.n_instances):
            raise ConfigError(f"n_positive must lie in [0, n_instances], got {self.n_positive}")
        if not self.parameters:
            raise ConfigError("at least one parameter name is required")
        if not float(self.class_separation) >= 0:
            raise ConfigError("class_separation must be >= 0")
        if not float(self.noise_sigma) > 0:
            raise ConfigError("noise_sigma must be > 0")
        check_seed(self.seed)

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticConfig":
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown synthetic config field(s): {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["parameters"] = list(self.parameters)
        return d


def generate_synthetic(config: SyntheticConfig) -> Dataset:
    """Noise-only negatives; positives carry a ramp over a random half of each series.

    Each positive parameter series rises linearly by ``class_separation`` over
    a randomly placed contiguous half and stays at the raised level after it.
    Partitions are assigned round-robin 1..5 by instance index.
    """
    g = rng(config.seed)
    n, m = config.n_instances, config.length
    positive = np.zeros(n, dtype=bool)
    positive[g.permutation(n)[:config.n_positive]] = True
    seg = max(1, m // 2)
    ramp = config.class_separation * np.arange(1, seg + 1) / seg
    instances = []
    for i in range(n):
        if positive[i]:
            flare = FlareClass.X if g.random() < 0.2 else FlareClass.M
        else:
            flare = (FlareClass.C, FlareClass.B, FlareClass.FQ)[int(g.integers(0, 3))]
        values = {}
        for p in config.parameters:
            series = g.normal(0.0, config.noise_sigma, m)
            start = int(g.integers(0, m - seg + 1))
            if positive[i]:
                series[start:start + seg] += ramp
                series[start + seg:] += config.class_separation
            values[p] = series
        instances.append(TimeSeriesInstance(f"syn{i:05d}", i % N_SYNTHETIC_PARTITIONS + 1, flare, values))
    return Dataset(config.parameters, instances)


def load_regions(values_path, sidecar_path) -> list[RegionSeries]:
    """Read region series from ``region_id,step,<params...>`` CSV plus a JSON sidecar.

    The sidecar is one object ``{region_id, start_time, cadence_minutes}`` or a
    list of them.
    """
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    meta = meta if isinstance(meta, list) else [meta]
    df = pd.read_csv(values_path, dtype={"region_id": str}, float_precision="round_trip",
                     na_values=["", "NaN", "nan"], keep_default_na=False)
    if list(df.columns[:2]) != ["region_id", "step"] or len(df.columns) < 3:
        raise DataError(f"{values_path}: header must be region_id,step,<param>...")
    params = list(df.columns[2:])
    regions = []
    for entry in meta:
        try:
            rid = str(entry["region_id"])
            start = entry["start_time"]
            cadence = int(entry.get("cadence_minutes", 12))
        except (KeyError, TypeError):
            raise DataError(f"{sidecar_path}: entries need region_id and start_time") from None
        rows = df[df["region_id"] == rid].sort_values("step", kind="stable")
        if rows.empty:
            raise DataError(f"{values_path}: no rows for region {rid!r}")
        if not np.array_equal(rows["step"].to_numpy(), np.arange(len(rows))):
            raise DataError(f"region {rid!r}: steps must be exactly 0..{len(rows) - 1}")
        vals = {p: rows[p].to_numpy(dtype=np.float64) for p in params}
        for v in vals.values():
            v[~np.isfinite(v)] = np.nan
        regions.append(RegionSeries(rid, vals, start, cadence))
    return regions


def load_flares(path) -> list[FlareEvent]:
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    for col in ("region_id", "peak_time", "flare_class"):
        if col not in df.columns:
            raise DataError(f"{path}: missing column {col!r}")
    return [FlareEvent(r.region_id.strip(), r.peak_time, r.flare_class) for r in df.itertuples(index=False)]


def class_ratio(dataset: Dataset) -> float:
    """Negatives per positive (the ``r`` in 1:r)."""
    counts = dataset.class_counts()
    if counts["XM"] == 0:
        return math.inf
    return counts["CBN"] / counts["XM"]

