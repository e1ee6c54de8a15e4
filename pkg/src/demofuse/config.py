"""Run configuration: one YAML file describing sources, prior, evaluation and synthesis.

Relative paths resolve against the configuration file's directory.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import yaml

from .ingest import IdRules, SourceSchema
from .model import SEXES, AgeGroupScheme, ConfigurationError, Sex, SourceId, check_priorities
from .prior import Adjustment
from .synth import SynthSource, SynthSpec

DEFAULTS = {
    "credible_level": 0.95,
    "count_total": "register",
    "output_dir": "out",
    "seed": 0,
    "age_scheme": list(range(0, 85, 5)),
    "prior.scale": 1.0,
    "prior.floor": 0.5,
    "evaluation.total_rule": "cells",
    "coverage.replicates": 1000,
    "coverage.level": 0.95,
    "source.delimiter": ",",
    "source.date_format": "%Y-%m-%d",
    "source.sex_map": {"1": "Male", "2": "Female"},
    "source.vital_map": {"0": "Alive", "1": "Dead"},
    "source.id_rules": {"strip_non_digits": True, "pad_width": 0},
    "source.default_vital": "Alive",
}


@dataclass(frozen=True)
class SourceConfig:
    schema: SourceSchema
    path: Path
    synth: Optional[dict] = None

    @property
    def code(self) -> str:
        return self.schema.source.code


@dataclass(frozen=True)
class PriorConfig:
    projection: Optional[Path] = None
    components: Dict[str, Path] = field(default_factory=dict)
    scale: float = 1.0
    floor: float = 0.5
    adjustments: Tuple[Adjustment, ...] = ()


@dataclass(frozen=True)
class EvaluationConfig:
    census: Optional[Path] = None
    methods: Dict[str, Path] = field(default_factory=dict)
    total_rule: str = "cells"


@dataclass(frozen=True)
class CoverageConfig:
    replicates: int = 1000
    level: float = 0.95
    totals: Optional[Tuple[int, int]] = None


@dataclass(frozen=True)
class RunConfig:
    path: Path
    area: str
    reference_date: dt.date
    sources: Tuple[SourceConfig, ...]
    scheme: AgeGroupScheme
    prior: PriorConfig
    evaluation: EvaluationConfig
    coverage: CoverageConfig
    credible_level: float = 0.95
    count_total: str = "register"
    output_dir: Path = Path("out")
    seed: int = 0
    synth: Optional[dict] = None
    applied_defaults: Tuple[Tuple[str, object], ...] = ()

    @property
    def base_dir(self) -> Path:
        return self.path.parent

    def synth_spec(self, seed: Optional[int] = None) -> SynthSpec:
        return build_synth_spec(self, seed)


def _date(v, what: str) -> dt.date:
    if isinstance(v, dt.datetime):
        return v.date()
    if isinstance(v, dt.date):
        return v
    try:
        return dt.date.fromisoformat(str(v))
    except ValueError:
        raise ConfigurationError(f"{what}: not an ISO date: {v!r}") from None


class _Reader:
    """Dict access that records every default it falls back to."""

    def __init__(self):
        self.applied: List[Tuple[str, object]] = []

    def get(self, d: dict, key: str, default_key: str):
        if key in d and d[key] is not None:
            return d[key]
        value = DEFAULTS[default_key]
        self.applied.append((default_key, value))
        return value


def load_config(path) -> RunConfig:
    path = Path(path).resolve()
    if not path.is_file():
        raise ConfigurationError(f"configuration file not found: {path}")
    raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    base = path.parent
    rd = _Reader()

    def p(v) -> Path:
        return (base / str(v)).resolve()

    for key in ("area", "reference_date"):
        if key not in raw:
            raise ConfigurationError(f"{path}: missing required key {key!r}")
    area = str(raw["area"])
    reference_date = _date(raw["reference_date"], "reference_date")
    scheme = AgeGroupScheme(tuple(rd.get(raw, "age_scheme", "age_scheme")))

    sources = []
    for i, s in enumerate(raw.get("sources") or []):
        if "code" not in s or "path" not in s or "columns" not in s:
            raise ConfigurationError(f"sources[{i}]: code, path and columns are required")
        ids = dict(rd.get(s, "id_rules", "source.id_rules"))
        schema = SourceSchema(
            source=SourceId(str(s["code"]), int(s.get("priority", i + 1))),
            columns={str(k): str(v) for k, v in s["columns"].items()},
            extract_date=_date(s.get("extract_date", reference_date), f"{s['code']}.extract_date"),
            date_format=rd.get(s, "date_format", "source.date_format"),
            sex_map={str(k): str(v) for k, v in rd.get(s, "sex_map", "source.sex_map").items()},
            vital_map={str(k): str(v) for k, v in rd.get(s, "vital_map", "source.vital_map").items()},
            id_rules=IdRules(bool(ids.get("strip_non_digits", True)), int(ids.get("pad_width", 0))),
            delimiter=rd.get(s, "delimiter", "source.delimiter"),
            default_vital=rd.get(s, "default_vital", "source.default_vital"),
            default_residence=s.get("default_residence"),
        )
        sources.append(SourceConfig(schema, p(s["path"]), s.get("synth")))
    check_priorities([s.schema.source for s in sources])

    pr = raw.get("prior") or {}
    adjustments = []
    for a in pr.get("adjustments") or []:
        adjustments.append(Adjustment(
            age_index=scheme.index_of(str(a["age_group"])),
            sex=Sex(a["sex"]),
            multiplier=a.get("multiplier"),
            override=a.get("override"),
        ))
    prior = PriorConfig(
        projection=p(pr["projection"]) if pr.get("projection") else None,
        components={k: p(v) for k, v in (pr.get("components") or {}).items()},
        scale=float(rd.get(pr, "scale", "prior.scale")),
        floor=float(rd.get(pr, "floor", "prior.floor")),
        adjustments=tuple(adjustments),
    )
    ev = raw.get("evaluation") or {}
    evaluation = EvaluationConfig(
        census=p(ev["census"]) if ev.get("census") else None,
        methods={str(k): p(v) for k, v in (ev.get("methods") or {}).items()},
        total_rule=rd.get(ev, "total_rule", "evaluation.total_rule"),
    )
    cv = raw.get("coverage") or {}
    coverage = CoverageConfig(
        replicates=int(rd.get(cv, "replicates", "coverage.replicates")),
        level=float(rd.get(cv, "level", "coverage.level")),
        totals=_totals(cv["totals"]) if cv.get("totals") else None,
    )
    level = float(rd.get(raw, "credible_level", "credible_level"))
    if not 0 < level < 1:
        raise ConfigurationError("credible_level must lie in (0, 1)")
    count_total = rd.get(raw, "count_total", "count_total")
    if count_total not in ("register", "projection"):
        raise ConfigurationError("count_total must be 'register' or 'projection'")
    return RunConfig(
        path=path,
        area=area,
        reference_date=reference_date,
        sources=tuple(sources),
        scheme=scheme,
        prior=prior,
        evaluation=evaluation,
        coverage=coverage,
        credible_level=level,
        count_total=count_total,
        output_dir=p(rd.get(raw, "output_dir", "output_dir")),
        seed=int(rd.get(raw, "seed", "seed")),
        synth=raw.get("synth"),
        applied_defaults=tuple(rd.applied),
    )


def _totals(v) -> Tuple[int, int]:
    if isinstance(v, dict):
        return tuple(int(v[s.value]) for s in SEXES)
    if isinstance(v, (list, tuple)):
        return int(v[0]), int(v[1])
    return int(v), int(v)


def _per_sex(v, L: int) -> np.ndarray:
    """Accept one list for both sexes or a {Male: [...], Female: [...]} mapping."""
    if isinstance(v, dict):
        arr = np.column_stack([np.asarray(v[s.value], dtype=float) for s in SEXES])
    else:
        col = np.asarray(v, dtype=float)
        arr = np.column_stack([col, col])
    if arr.shape != (L, len(SEXES)):
        raise ConfigurationError(f"expected {L} age-group values per sex, got {arr.shape}")
    return arr


def synth_prior_alpha(cfg: RunConfig) -> np.ndarray:
    """Prior concentrations implied by the synth section (shares times concentration)."""
    sy = cfg.synth or {}
    if "base_shares" not in sy:
        raise ConfigurationError("synth.base_shares is required")
    shares = _per_sex(sy["base_shares"], cfg.scheme.size)
    shares = shares / shares.sum(axis=0)
    return shares * float(sy.get("concentration", 1000.0))


def build_synth_spec(cfg: RunConfig, seed: Optional[int] = None) -> SynthSpec:
    sy = cfg.synth
    if not sy:
        raise ConfigurationError(f"{cfg.path}: no synth section")
    alpha = synth_prior_alpha(cfg)
    draw = bool(sy.get("draw_truth", True))
    sources = []
    for s in cfg.sources:
        opts = dict(s.synth or {})
        sources.append(SynthSource(
            schema=s.schema,
            kind=opts.get("kind", "registry"),
            coverage=float(opts.get("coverage", 1.0)),
            duplicate_rate=float(opts.get("duplicate_rate", 0.0)),
            death_rate=float(opts.get("death_rate", 0.0)),
            migration_rate=float(opts.get("migration_rate", 0.0)),
        ))
    return SynthSpec(
        totals=_totals(sy["totals"]),
        reference_date=cfg.reference_date,
        area=cfg.area,
        sources=tuple(sources),
        shares=None if draw else alpha / alpha.sum(axis=0),
        prior_alpha=alpha if draw else None,
        scheme=cfg.scheme,
        decedents=int(sy.get("decedents", 0)),
        emigrants=int(sy.get("emigrants", 0)),
        id_missing_rate=float(sy.get("id_missing_rate", 0.0)),
        key_noise=float(sy.get("key_noise", 0.0)),
        foreign_areas=tuple(str(a) for a in sy.get("foreign_areas", ("76001", "76520", "19001"))),
        seed=cfg.seed if seed is None else seed,
    )
