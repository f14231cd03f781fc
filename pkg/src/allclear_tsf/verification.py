"""Contingency table and forecast verification scores.

XM is the positive class. Every score is reduced to an integer numerator
and denominator before a single (correctly rounded) division. A zero
denominator gives ``None`` rather than a number.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .tree import as_is_xm

METRICS = ("tss", "hss", "gss", "pofd", "far", "precision_xm", "recall_xm", "precision_cbn", "recall_cbn")
SCORERS = ("tss", "hss", "gss", "precision_xm", "precision_cbn", "recall_xm", "recall_cbn")


@dataclass(frozen=True)
class ContingencyTable:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 0:
                raise DataError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def p(self) -> int:
        """Observed positives."""
        return self.tp + self.fn

    @property
    def n(self) -> int:
        """Observed negatives."""
        return self.fp + self.tn

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ContingencyTable":
        """Same forecasts with XM and CBN exchanged."""
        return ContingencyTable(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


def _ratio(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def tabulate(y_true, y_pred) -> ContingencyTable:
    t = as_is_xm(y_true)
    p = as_is_xm(y_pred)
    if len(t) != len(p):
        raise DataError(f"{len(t)} observed labels but {len(p)} predictions")
    if len(t) == 0:
        raise DataError("cannot tabulate an empty forecast")
    return ContingencyTable(
        tp=int(np.sum(t & p)), fp=int(np.sum(~t & p)), fn=int(np.sum(t & ~p)), tn=int(np.sum(~t & ~p))
    )


def pofd(ct: ContingencyTable) -> float | None:
    """Probability of false detection, FP / (FP + TN)."""
    return _ratio(ct.fp, ct.fp + ct.tn)


def tss(ct: ContingencyTable) -> float | None:
    """Probability of detection minus probability of false detection."""
    if ct.p == 0 or ct.n == 0:
        return None
    return (ct.tp * ct.n - ct.fp * ct.p) / (ct.p * ct.n)


def hss(ct: ContingencyTable) -> float | None:
    num = 2 * (ct.tp * ct.tn - ct.fn * ct.fp)
    den = ct.p * (ct.fn + ct.tn) + ct.n * (ct.tp + ct.fp)
    return _ratio(num, den)


def gss(ct: ContingencyTable) -> float | None:
    """Gilbert skill score; hits expected by chance are subtracted.

    Scaled through by the total count so that only integers appear before
    the final division.
    """
    total = ct.total
    if total == 0:
        return None
    chance_x_total = (ct.tp + ct.fp) * (ct.tp + ct.fn)
    return _ratio(ct.tp * total - chance_x_total, (ct.tp + ct.fp + ct.fn) * total - chance_x_total)


def precision_xm(ct: ContingencyTable) -> float | None:
    return _ratio(ct.tp, ct.tp + ct.fp)


def recall_xm(ct: ContingencyTable) -> float | None:
    return _ratio(ct.tp, ct.tp + ct.fn)


def precision_cbn(ct: ContingencyTable) -> float | None:
    return _ratio(ct.tn, ct.tn + ct.fn)


def recall_cbn(ct: ContingencyTable) -> float | None:
    return _ratio(ct.tn, ct.tn + ct.fp)


def far(ct: ContingencyTable) -> float | None:
    """False alarm ratio, FP over all XM forecasts."""
    return _ratio(ct.fp, ct.fp + ct.tp)


def baseline_precision_cbn(ct: ContingencyTable) -> float | None:
    """CBN precision of the always-CBN forecast on the observed class counts."""
    return _ratio(ct.n, ct.total)


METRIC_FUNCS = {
    "tss": tss,
    "hss": hss,
    "gss": gss,
    "pofd": pofd,
    "far": far,
    "precision_xm": precision_xm,
    "recall_xm": recall_xm,
    "precision_cbn": precision_cbn,
    "recall_cbn": recall_cbn,
}


def get_scorer(name: str):
    if name not in SCORERS:
        raise ConfigError(f"unknown scorer {name!r}; choose from {', '.join(SCORERS)}")
    return METRIC_FUNCS[name]


@dataclass(frozen=True)
class SkillReport:
    table: ContingencyTable
    tss: float | None
    hss: float | None
    gss: float | None
    pofd: float | None
    far: float | None
    precision_xm: float | None
    recall_xm: float | None
    precision_cbn: float | None
    recall_cbn: float | None

    @classmethod
    def from_table(cls, ct: ContingencyTable) -> "SkillReport":
        return cls(ct, **{m: METRIC_FUNCS[m](ct) for m in METRICS})

    @property
    def undefined(self) -> tuple[str, ...]:
        """Names of metrics whose denominator was zero."""
        return tuple(m for m in METRICS if getattr(self, m) is None)

    def metrics(self) -> dict[str, float | None]:
        return {m: getattr(self, m) for m in METRICS}

    def to_dict(self) -> dict:
        ct = self.table
        return {
            "metrics": self.metrics(),
            "undefined": list(self.undefined),
            "contingency": {"tp": ct.tp, "fp": ct.fp, "fn": ct.fn, "tn": ct.tn},
            "baseline_precision_cbn": baseline_precision_cbn(ct),
        }

    def to_json(self, **extra) -> str:
        return json.dumps({**extra, **self.to_dict()}, indent=2, sort_keys=False) + "\n"

    def to_csv(self) -> str:
        cols = ["tp", "fp", "fn", "tn", *METRICS]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        ct = self.table
        row = [ct.tp, ct.fp, ct.fn, ct.tn] + ["" if getattr(self, m) is None else repr(getattr(self, m)) for m in METRICS]
        w.writerow(row)
        return buf.getvalue()


def full_report(y_true, y_pred) -> SkillReport:
    return SkillReport.from_table(tabulate(y_true, y_pred))
