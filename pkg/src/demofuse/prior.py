"""Dirichlet prior construction from cohort-component projections."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .model import SEXES, AgeSexTable, ConfigurationError, Sex

log = logging.getLogger(__name__)

PROJECTION = "projection"
FLOORED = "floored"
EXPERT = "expert-adjusted"


@dataclass(frozen=True)
class ProjectionInputs:
    """Base population at t-1 plus the flows over the period, per (age group, sex)."""

    base: AgeSexTable
    births: np.ndarray
    deaths: np.ndarray
    immigration: np.ndarray
    emigration: np.ndarray

    def __post_init__(self):
        shape = self.base.counts.shape
        for name in ("births", "deaths", "immigration", "emigration"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ConfigurationError(f"{name} has shape {arr.shape}, base has {shape}")
            if np.any(arr < 0):
                raise ConfigurationError(f"{name} must be nonnegative")
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class StepResult:
    table: AgeSexTable
    clamped: Tuple[Tuple[int, Sex], ...] = ()


def cohort_component_step(inputs: ProjectionInputs) -> StepResult:
    """Apply base + births - deaths + immigration - emigration per cell.

    Negative cells are set to zero and listed in ``clamped``.
    """
    raw = (inputs.base.counts + inputs.births - inputs.deaths
           + inputs.immigration - inputs.emigration)
    neg = np.argwhere(raw < 0)
    clamped = tuple((int(l), SEXES[int(s)]) for l, s in neg)
    for l, s in clamped:
        log.warning("cohort-component cell (%s, %s) negative (%g); clamped to 0",
                    inputs.base.scheme.labels[l], s.value, raw[l, SEXES.index(s)])
    table = AgeSexTable(np.maximum(raw, 0.0), inputs.base.scheme,
                        inputs.base.reference_date, inputs.base.area)
    return StepResult(table, clamped)


@dataclass(frozen=True)
class Adjustment:
    """Expert override or multiplier for one (age group, sex) cell."""

    age_index: int
    sex: Sex
    multiplier: Optional[float] = None
    override: Optional[float] = None

    def __post_init__(self):
        if (self.multiplier is None) == (self.override is None):
            raise ConfigurationError("an adjustment needs exactly one of multiplier / override")
        if self.multiplier is not None and self.multiplier < 0:
            raise ConfigurationError("negative multiplier")
        if self.override is not None and self.override < 0:
            raise ConfigurationError("negative override")


@dataclass(frozen=True)
class PriorAlpha:
    alpha: np.ndarray  # (L, 2), strictly positive
    provenance: np.ndarray  # (L, 2) of str
    table: AgeSexTable = field(repr=False, default=None)

    def column(self, sex: Sex) -> np.ndarray:
        return self.alpha[:, SEXES.index(Sex(sex))]


def build_prior(projection: AgeSexTable, adjustments=(), floor: float = 0.5,
                scale: float = 1.0) -> PriorAlpha:
    """Concentrations on the count scale: max(scale * adjusted projection, floor).

    ``scale`` below 1 down-weights the projection relative to the register.
    """
    if not floor > 0:
        raise ConfigurationError("floor must be positive")
    if not scale > 0:
        raise ConfigurationError("scale must be positive")
    values = np.array(projection.counts, dtype=float)
    prov = np.full(values.shape, PROJECTION, dtype=object)
    for adj in adjustments:
        j = SEXES.index(adj.sex)
        if adj.override is not None:
            values[adj.age_index, j] = adj.override
        else:
            values[adj.age_index, j] *= adj.multiplier
        prov[adj.age_index, j] = EXPERT
    values *= scale
    low = values < floor
    prov[low] = FLOORED
    alpha = np.maximum(values, floor)
    alpha.setflags(write=False)
    return PriorAlpha(alpha, prov, projection)
