"""Delimited-file readers and writers for age-sex tables and estimates."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List

import numpy as np

from .model import SEXES, AgeGroupScheme, AgeSexTable, ConfigurationError, Sex, DEFAULT_SCHEME
from .posterior import DirichletPosterior, IntervalEstimate

TABLE_COLUMNS = ("age_group", "sex", "count")

ESTIMATE_COLUMNS = (
    "sex", "age_group", "prior_alpha", "register_q", "alpha_star", "posterior_mean_share",
    "share_lower", "share_upper", "count_point", "count_lower", "count_upper", "level",
)


def fmt_num(v) -> str:
    """Shortest round-trip text for a number; integers without a decimal point."""
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def read_table(path, scheme: AgeGroupScheme = DEFAULT_SCHEME, **kw) -> AgeSexTable:
    """Read ``age_group,sex,count`` rows; missing cells are zero."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"table file not found: {path}")
    counts = np.zeros((scheme.size, len(SEXES)))
    seen = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in TABLE_COLUMNS):
            raise ConfigurationError(f"{path}: expected columns {TABLE_COLUMNS}")
        for row in reader:
            l = scheme.index_of(row["age_group"].strip())
            j = SEXES.index(Sex(row["sex"].strip()))
            if (l, j) in seen:
                raise ConfigurationError(f"{path}: duplicate cell {row['age_group']}/{row['sex']}")
            seen.add((l, j))
            counts[l, j] = float(row["count"])
    if np.all(counts == np.round(counts)):
        counts = counts.astype(np.int64)
    return AgeSexTable(counts, scheme, **kw)


def write_table(table: AgeSexTable, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for j, sex in enumerate(SEXES):
            for l, lab in enumerate(table.scheme.labels):
                w.writerow([lab, sex.value, fmt_num(table.counts[l, j])])


def write_estimates(path, scheme: AgeGroupScheme, prior: np.ndarray, q: np.ndarray,
                    posteriors: Dict[Sex, DirichletPosterior],
                    shares: Dict[Sex, IntervalEstimate],
                    counts: Dict[Sex, IntervalEstimate]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ESTIMATE_COLUMNS)
        for j, sex in enumerate(SEXES):
            post, s, c = posteriors[sex], shares[sex], counts[sex]
            for l, lab in enumerate(scheme.labels):
                w.writerow([
                    sex.value, lab, fmt_num(prior[l, j]), fmt_num(q[l, j]),
                    fmt_num(post.alpha_star[l]), fmt_num(s.point[l]), fmt_num(s.lower[l]),
                    fmt_num(s.upper[l]), fmt_num(c.point[l]), fmt_num(c.lower[l]),
                    fmt_num(c.upper[l]), fmt_num(c.level),
                ])


def read_estimates(path, scheme: AgeGroupScheme = DEFAULT_SCHEME) -> Dict[str, np.ndarray]:
    """Estimates table as a dict of (L, 2) arrays keyed by column name."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"estimates file not found: {path}")
    out: Dict[str, np.ndarray] = {c: np.zeros((scheme.size, len(SEXES)))
                                  for c in ESTIMATE_COLUMNS[2:]}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != ESTIMATE_COLUMNS:
            raise ConfigurationError(f"{path}: not an estimates table")
        rows: List[dict] = list(reader)
    for row in rows:
        l = scheme.index_of(row["age_group"])
        j = SEXES.index(Sex(row["sex"]))
        for c in ESTIMATE_COLUMNS[2:]:
            out[c][l, j] = float(row[c])
    return out
