"""Absolute Percentage Difference reports against a census benchmark."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from .model import SEXES, AgeSexTable, ConfigurationError

TOTAL_RULES = {
    "cells": "unweighted mean over all defined age-sex cells",
    "sexes": "mean of the Male and Female averages",
}


@dataclass(frozen=True)
class MethodEstimates:
    label: str
    table: AgeSexTable


def apd(estimate: float, benchmark: float) -> float:
    """100 * |estimate - benchmark| / benchmark; NaN when undefined.

    A zero benchmark gives 0 for a zero estimate and NaN (undefined)
    otherwise.
    """
    if benchmark < 0:
        raise ValueError("benchmark must be nonnegative")
    if benchmark == 0:
        return 0.0 if estimate == 0 else math.nan
    return 100.0 * abs(estimate - benchmark) / benchmark


def apd_cells(estimate: AgeSexTable, census: AgeSexTable) -> np.ndarray:
    """Per-cell APD array shaped like the tables (NaN marks undefined cells)."""
    if not estimate.same_layout(census):
        raise ConfigurationError("estimate and census use different age schemes")
    est = np.asarray(estimate.counts, dtype=float)
    ben = np.asarray(census.counts, dtype=float)
    out = np.full(est.shape, np.nan)
    pos = ben > 0
    out[pos] = 100.0 * np.abs(est[pos] - ben[pos]) / ben[pos]
    out[(ben == 0) & (est == 0)] = 0.0
    return out


def _nanmean(a, axis=None):
    # all-NaN slices stay NaN (undefined); silence numpy's warning about them
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return np.nanmean(np.asarray(a, dtype=float), axis=axis)


@dataclass(frozen=True)
class ApdReport:
    methods: Sequence[str]
    age_labels: Sequence[str]
    cells: Dict[str, np.ndarray]  # method -> (L, 2)
    total_rule: str = "cells"

    def __post_init__(self):
        if self.total_rule not in TOTAL_RULES:
            raise ConfigurationError(f"unknown total rule {self.total_rule!r}")

    def undefined(self, method: str) -> int:
        return int(np.isnan(self.cells[method]).sum())

    def by_age(self) -> Dict[str, np.ndarray]:
        """Per age group: mean of the defined Male/Female APDs."""
        return {m: _nanmean(self.cells[m], axis=1) for m in self.methods}

    def by_sex(self) -> Dict[str, np.ndarray]:
        """[Male, Female, Total] per method."""
        out = {}
        for m in self.methods:
            c = self.cells[m]
            male, female = _nanmean(c[:, 0]), _nanmean(c[:, 1])
            if self.total_rule == "cells":
                total = _nanmean(c)
            else:
                total = _nanmean([male, female])
            out[m] = np.array([male, female, total], dtype=float)
        return out

    def age_rows(self) -> List[List[str]]:
        ba = self.by_age()
        rows = [["", "Age"] + list(self.methods)]
        for i, lab in enumerate(self.age_labels):
            rows.append([str(i + 1), lab] + [_fmt(ba[m][i]) for m in self.methods])
        return rows

    def sex_rows(self) -> List[List[str]]:
        bs = self.by_sex()
        rows = [["", "Sex"] + list(self.methods)]
        for i, lab in enumerate([s.value for s in SEXES] + ["Total"]):
            rows.append([str(i + 1), lab] + [_fmt(bs[m][i]) for m in self.methods])
        return rows

    def write_tables(self, by_age_path, by_sex_path) -> None:
        footer = ["# undefined cells excluded: " + "; ".join(
            f"{m}={self.undefined(m)}" for m in self.methods)]
        _write_csv(by_age_path, self.age_rows(), footer)
        _write_csv(by_sex_path, self.sex_rows(),
                   footer + [f"# Total rule: {self.total_rule} ({TOTAL_RULES[self.total_rule]})"])

    def to_dict(self) -> dict:
        ba, bs = self.by_age(), self.by_sex()
        return {
            "metric": "APD = 100*|estimate-census|/census",
            "total_rule": self.total_rule,
            "total_rule_description": TOTAL_RULES[self.total_rule],
            "age_groups": list(self.age_labels),
            "sexes": [s.value for s in SEXES],
            "methods": {
                m: {
                    "cells": [[_json_num(v) for v in row] for row in self.cells[m]],
                    "by_age": [_json_num(v) for v in ba[m]],
                    "by_sex": dict(zip(["Male", "Female", "Total"],
                                       (_json_num(v) for v in bs[m]))),
                    "undefined_cells": self.undefined(m),
                }
                for m in self.methods
            },
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def _fmt(v) -> str:
    return "NA" if np.isnan(v) else f"{v:.2f}"


def _json_num(v):
    v = float(v)
    return None if math.isnan(v) else round(v, 10)


def _write_csv(path, rows, footer=()):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerows(rows)
        for line in footer:
            fh.write(line + "\n")


def build_report(methods: Sequence[MethodEstimates], census: AgeSexTable,
                 total_rule: str = "cells") -> ApdReport:
    labels = [m.label for m in methods]
    if len(set(labels)) != len(labels):
        raise ConfigurationError(f"duplicate method labels {labels}")
    cells = {m.label: apd_cells(m.table, census) for m in methods}
    return ApdReport(labels, census.scheme.labels, cells, total_rule)


def apd_by_age(methods: Sequence[MethodEstimates], census: AgeSexTable) -> Dict[str, np.ndarray]:
    return build_report(methods, census).by_age()


def apd_by_sex(methods: Sequence[MethodEstimates], census: AgeSexTable,
               total_rule: str = "cells") -> Dict[str, np.ndarray]:
    return build_report(methods, census, total_rule).by_sex()
