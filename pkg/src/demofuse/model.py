"""Core domain types: sources, records, age groups and age-sex count tables."""

from __future__ import annotations

import bisect
import calendar
import datetime as dt
import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np


class InvalidRecordError(ValueError):
    """A record violates a domain invariant (e.g. born after the reference date)."""


class ConfigurationError(ValueError):
    """Inconsistent or invalid run configuration."""


class Sex(str, enum.Enum):
    MALE = "Male"
    FEMALE = "Female"


#: Column order of the sex axis in every AgeSexTable.
SEXES: Tuple[Sex, Sex] = (Sex.MALE, Sex.FEMALE)


class VitalFlag(str, enum.Enum):
    ALIVE = "Alive"
    DEAD = "Dead"


@dataclass(frozen=True)
class SourceId:
    code: str
    priority: int

    def __post_init__(self):
        if not self.code:
            raise ConfigurationError("source code must be non-empty")


@dataclass(frozen=True)
class SourceRecord:
    source: SourceId
    raw_id: str
    given_names: str
    surnames: str
    national_id: Optional[str]
    birth_date: Optional[dt.date]
    sex: Sex
    vital_flag: VitalFlag
    residence_code: str
    extract_date: dt.date
    row: int = 0

    def __post_init__(self):
        if not self.residence_code:
            raise InvalidRecordError("residence_code must be non-empty")
        if self.birth_date is not None and self.birth_date > self.extract_date:
            raise InvalidRecordError("birth_date after extract_date")


def check_priorities(sources: Sequence[SourceId]) -> None:
    """Raise ConfigurationError unless codes are unique and priorities strict."""
    codes = [s.code for s in sources]
    if len(set(codes)) != len(codes):
        raise ConfigurationError(f"duplicate source codes: {codes}")
    prios = [s.priority for s in sources]
    if len(set(prios)) != len(prios):
        raise ConfigurationError(f"source priorities are not strict: {prios}")


@dataclass(frozen=True)
class AgeGroupScheme:
    """Contiguous age intervals given by their lower bounds; the last is open."""

    lower_bounds: Tuple[int, ...] = tuple(range(0, 85, 5))

    def __post_init__(self):
        lb = tuple(int(b) for b in self.lower_bounds)
        object.__setattr__(self, "lower_bounds", lb)
        if not lb or lb[0] != 0:
            raise ConfigurationError("age scheme must start at 0")
        if any(b2 <= b1 for b1, b2 in zip(lb, lb[1:])):
            raise ConfigurationError("age scheme bounds must be strictly increasing")

    @property
    def size(self) -> int:
        return len(self.lower_bounds)

    @property
    def labels(self) -> Tuple[str, ...]:
        lb = self.lower_bounds
        out = [f"{lo}-{hi - 1}" for lo, hi in zip(lb, lb[1:])]
        out.append(f"{lb[-1]}+")
        return tuple(out)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ConfigurationError(f"unknown age group label {label!r}") from None


DEFAULT_SCHEME = AgeGroupScheme()


@dataclass(frozen=True)
class AgeSexTable:
    """Counts indexed by (age group, sex); columns follow ``SEXES``.

    Counts are usually integers; projections and estimates use real values.
    The array is made read-only on construction.
    """

    counts: np.ndarray
    scheme: AgeGroupScheme = DEFAULT_SCHEME
    reference_date: Optional[dt.date] = None
    area: str = ""

    def __post_init__(self):
        counts = np.array(self.counts)
        if counts.shape != (self.scheme.size, len(SEXES)):
            raise ConfigurationError(
                f"table shape {counts.shape} does not match scheme "
                f"({self.scheme.size}, {len(SEXES)})"
            )
        if np.any(counts < 0):
            raise ValueError("age-sex counts must be nonnegative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def zeros(cls, scheme=DEFAULT_SCHEME, dtype=np.int64, **kw) -> "AgeSexTable":
        return cls(np.zeros((scheme.size, len(SEXES)), dtype=dtype), scheme, **kw)

    def column(self, sex: Sex) -> np.ndarray:
        return self.counts[:, SEXES.index(Sex(sex))]

    def total(self, sex: Optional[Sex] = None) -> float:
        if sex is None:
            return self.counts.sum()
        return self.column(sex).sum()

    def same_layout(self, other: "AgeSexTable") -> bool:
        return self.scheme == other.scheme and self.counts.shape == other.counts.shape


def age_at(birth_date: dt.date, reference_date: dt.date) -> int:
    """Completed years between two dates.

    A Feb-29 birthday is taken to fall on Mar-1 in non-leap years.
    """
    if birth_date > reference_date:
        raise InvalidRecordError(f"birth date {birth_date} after reference date {reference_date}")
    years = reference_date.year - birth_date.year
    month, day = birth_date.month, birth_date.day
    if (month, day) == (2, 29) and not calendar.isleap(reference_date.year):
        month, day = 3, 1
    if (reference_date.month, reference_date.day) < (month, day):
        years -= 1
    return years


def classify_age(age: int, scheme: AgeGroupScheme = DEFAULT_SCHEME) -> int:
    """Zero-based index of the age group containing ``age``."""
    if age < 0:
        raise ValueError("age must be nonnegative")
    return bisect.bisect_right(scheme.lower_bounds, age) - 1
