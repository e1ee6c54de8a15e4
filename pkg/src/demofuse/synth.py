"""Synthetic populations and administrative extracts with planted truth.

The generator knows every row's person, so the expected linkage state of
each row (the ledger) is derived from identities rather than from link keys.
Comparing the ledger with ``linkage_summary`` is then an independent check
of key normalization and state assignment.
"""

from __future__ import annotations

import csv
import datetime as dt
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .ingest import FOLD_TABLE, IdRules, SourceBatch, SourceSchema, batch_from_rows, fold_text
from .linkage import STATE_COLUMNS, RecordState
from .model import (
    DEFAULT_SCHEME,
    SEXES,
    AgeGroupScheme,
    AgeSexTable,
    ConfigurationError,
    Sex,
    SourceId,
    SourceRecord,
    VitalFlag,
    age_at,
)
from .special import betaincinv
from .wordlist import FEMALE_GIVEN, MALE_GIVEN, SURNAMES

#: Width of the open last age group when drawing ages.
OPEN_GROUP_SPAN = 20

RESIDENT, DECEDENT, EMIGRANT = "resident", "decedent", "emigrant"


@dataclass(frozen=True)
class SynthSource:
    schema: SourceSchema
    kind: str = "registry"  # or "deaths"
    coverage: float = 1.0
    duplicate_rate: float = 0.0
    death_rate: float = 0.0
    migration_rate: float = 0.0

    def __post_init__(self):
        if self.kind not in ("registry", "deaths"):
            raise ConfigurationError(f"unknown synthetic source kind {self.kind!r}")
        for name in ("coverage", "duplicate_rate", "death_rate", "migration_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{self.schema.source.code}: {name}={v} outside [0, 1]")

    @property
    def code(self) -> str:
        return self.schema.source.code


@dataclass(frozen=True)
class SynthSpec:
    """Everything needed to generate one synthetic area.

    Give either ``shares`` (fixed truth, shape (L, 2)) or ``prior_alpha``
    (truth drawn from a Dirichlet per sex).
    """

    totals: Tuple[int, int]
    reference_date: dt.date
    area: str
    sources: Tuple[SynthSource, ...] = ()
    shares: Optional[np.ndarray] = None
    prior_alpha: Optional[np.ndarray] = None
    scheme: AgeGroupScheme = DEFAULT_SCHEME
    decedents: int = 0
    emigrants: int = 0
    id_missing_rate: float = 0.0
    key_noise: float = 0.0
    foreign_areas: Tuple[str, ...] = ("76001", "76520", "19001")
    seed: int = 0

    def __post_init__(self):
        if (self.shares is None) == (self.prior_alpha is None):
            raise ConfigurationError("give exactly one of shares / prior_alpha")
        if any(t < 0 for t in self.totals):
            raise ConfigurationError("totals must be nonnegative")
        shape = (self.scheme.size, len(SEXES))
        if self.shares is not None:
            s = np.asarray(self.shares, dtype=float)
            if s.shape != shape or np.any(s < 0) or not np.allclose(s.sum(axis=0), 1.0):
                raise ConfigurationError("shares must be (L, 2) columns on the simplex")
        if self.prior_alpha is not None:
            a = np.asarray(self.prior_alpha, dtype=float)
            if a.shape != shape or np.any(a <= 0):
                raise ConfigurationError("prior_alpha must be (L, 2) and positive")
        for name in ("id_missing_rate", "key_noise"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} outside [0, 1]")
        if self.area in self.foreign_areas:
            raise ConfigurationError("foreign_areas must not contain the target area")

    def rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed).spawn(3)[stream])


@dataclass(frozen=True)
class RosterPerson:
    pid: int
    given_names: str
    surnames: str
    national_id: Optional[str]
    birth_date: dt.date
    sex: Sex
    residence_code: str
    kind: str = RESIDENT


@dataclass(frozen=True)
class Population:
    census: AgeSexTable
    truth: np.ndarray  # (L, 2) shares
    roster: Tuple[RosterPerson, ...]


class _Identities:
    """Draws unique names, ids and birth dates."""

    def __init__(self, rng: np.random.Generator, reference_date: dt.date, id_missing_rate: float):
        self.rng = rng
        self.ref = reference_date
        self.id_missing_rate = id_missing_rate
        self.ids = set()
        self.names = set()
        self.next_pid = 0

    def birth_date(self, lo: int, hi: int) -> dt.date:
        rng = self.rng
        while True:
            age = int(rng.integers(lo, hi + 1))
            latest = _years_before(self.ref, age)
            earliest = _years_before(self.ref, age + 1) + dt.timedelta(days=1)
            span = (latest - earliest).days
            bd = earliest + dt.timedelta(days=int(rng.integers(0, span + 1)))
            if age_at(bd, self.ref) == age:
                return bd

    def new(self, sex: Sex, lo: int, hi: int, residence: str, kind: str) -> RosterPerson:
        rng = self.rng
        given_pool = MALE_GIVEN if sex is Sex.MALE else FEMALE_GIVEN
        while True:
            n_given = 1 + int(rng.random() < 0.4)
            given = " ".join(given_pool[i] for i in rng.choice(len(given_pool), n_given, replace=False))
            surnames = " ".join(SURNAMES[i] for i in rng.integers(0, len(SURNAMES), 2))
            bd = self.birth_date(lo, hi)
            name_key = (fold_text(surnames), fold_text(given), bd, sex)
            if name_key not in self.names:
                break
        self.names.add(name_key)
        nid = None
        if rng.random() >= self.id_missing_rate:
            while True:
                nid = str(int(rng.integers(1_000_000, 1_200_000_000)))
                if nid not in self.ids:
                    break
            self.ids.add(nid)
        pid = self.next_pid
        self.next_pid += 1
        return RosterPerson(pid, given, surnames, nid, bd, sex, residence, kind)


def _years_before(d: dt.date, years: int) -> dt.date:
    try:
        return d.replace(year=d.year - years)
    except ValueError:  # Feb 29 -> Feb 28
        return d.replace(year=d.year - years, day=28)


def _group_bounds(scheme: AgeGroupScheme, l: int) -> Tuple[int, int]:
    lb = scheme.lower_bounds
    lo = lb[l]
    hi = lb[l + 1] - 1 if l + 1 < len(lb) else lo + OPEN_GROUP_SPAN
    return lo, hi


def generate_population(spec: SynthSpec) -> Population:
    """Multinomial draw of (age group, sex) cells plus one identity per person."""
    rng = spec.rng(0)
    L = spec.scheme.size
    if spec.shares is not None:
        truth = np.asarray(spec.shares, dtype=float)
        truth = truth / truth.sum(axis=0)
    else:
        alpha = np.asarray(spec.prior_alpha, dtype=float)
        truth = np.column_stack([rng.dirichlet(alpha[:, j]) for j in range(len(SEXES))])
    counts = np.column_stack(
        [rng.multinomial(int(spec.totals[j]), truth[:, j]) for j in range(len(SEXES))]
    ).astype(np.int64)
    ids = _Identities(rng, spec.reference_date, spec.id_missing_rate)
    roster = []
    for l in range(L):
        lo, hi = _group_bounds(spec.scheme, l)
        for j, sex in enumerate(SEXES):
            for _ in range(counts[l, j]):
                roster.append(ids.new(sex, lo, hi, spec.area, RESIDENT))
    census = AgeSexTable(counts, spec.scheme, spec.reference_date, spec.area)
    return Population(census, truth, tuple(roster))


@dataclass
class SourceEvents:
    covered: int = 0
    duplicates_injected: int = 0
    death_rows: int = 0
    migration_rows: int = 0


@dataclass
class SynthLedger:
    """Planted truth: the person and expected state of every generated row."""

    rows: Dict[str, List[Tuple[int, int, RecordState]]] = field(default_factory=OrderedDict)
    events: Dict[str, SourceEvents] = field(default_factory=OrderedDict)
    decedents: Tuple[RosterPerson, ...] = ()
    emigrants: Tuple[RosterPerson, ...] = ()

    def expected_counts(self) -> Dict[str, Dict[RecordState, int]]:
        out = OrderedDict()
        for code, rows in self.rows.items():
            c = Counter(st for _, _, st in rows)
            out[code] = {st: c.get(st, 0) for st in STATE_COLUMNS}
        return out

    def expected_contributors(self) -> List[int]:
        return [pid for rows in self.rows.values() for _, pid, st in rows
                if st is RecordState.CONTRIBUTION]

    def to_dict(self) -> dict:
        return {
            "expected": {c: {s.value: n for s, n in d.items()}
                         for c, d in self.expected_counts().items()},
            "events": {c: vars(e) for c, e in self.events.items()},
            "decedents": len(self.decedents),
            "emigrants": len(self.emigrants),
        }


@dataclass(frozen=True)
class SynthRecords:
    rows: Dict[str, List[Dict[str, str]]]
    batches: Tuple[SourceBatch, ...]
    ledger: SynthLedger


class _Renderer:
    """Formats a person as a source row, optionally with key noise."""

    def __init__(self, rng: np.random.Generator, noise: float):
        self.rng = rng
        self.noise = noise

    def name(self, text: str) -> str:
        if self.noise == 0 or self.rng.random() >= self.noise:
            return text
        k = int(self.rng.integers(0, 4))
        if k == 0:  # drop diacritics, keep case
            return "".join(
                (FOLD_TABLE[c].lower() if c.islower() else FOLD_TABLE[c]) if c in FOLD_TABLE else c
                for c in text
            )
        if k == 1:
            return text.upper()
        if k == 2:
            return text.lower()
        return "  " + "   ".join(text.split()) + " "

    def national_id(self, nid: Optional[str]) -> str:
        if nid is None:
            return ""
        if self.noise == 0 or self.rng.random() >= self.noise:
            return nid
        k = int(self.rng.integers(0, 3))
        if k == 0:  # 1.234.567 style grouping
            rev = nid[::-1]
            return ".".join(rev[i:i + 3] for i in range(0, len(rev), 3))[::-1]
        if k == 1:
            return f" {nid[:-1]}-{nid[-1]} "
        return f"CC {nid}"


def _inverse(mapping, value: str) -> str:
    for k, v in mapping.items():
        if v == value:
            return k
    raise ConfigurationError(f"no code maps to {value!r}")


def _row(person: RosterPerson, schema: SourceSchema, raw_id: str, dead: bool,
         render: _Renderer) -> Dict[str, str]:
    vals = {
        "raw_id": raw_id,
        "given_names": render.name(person.given_names),
        "surnames": render.name(person.surnames),
        "national_id": render.national_id(person.national_id),
        "birth_date": person.birth_date.strftime(schema.date_format),
        "sex": _inverse(schema.sex_map, person.sex.value),
        "residence_code": person.residence_code,
    }
    if "vital_flag" in schema.columns:
        vals["vital_flag"] = _inverse(schema.vital_map, (VitalFlag.DEAD if dead else VitalFlag.ALIVE).value)
    elif dead != (schema.default_vital == VitalFlag.DEAD.value):
        raise ConfigurationError(f"{schema.source.code}: cannot express vital status without a column")
    if "residence_code" not in schema.columns and person.residence_code != schema.default_residence:
        raise ConfigurationError(f"{schema.source.code}: cannot express residence without a column")
    return {col: vals.get(logical, "") for logical, col in schema.columns.items()}


def generate_records(population: Population, spec: SynthSpec) -> SynthRecords:
    """Draw each source's rows and the ledger of their expected states.

    Registry sources cover roster persons with probability ``coverage``,
    repeat some of them (``duplicate_rate``) and add rows for decedents
    (``death_rate``) and emigrants (``migration_rate``) drawn from shared
    pools, so the same ghost can appear in several sources. A ``deaths``
    source lists a ``coverage`` sample of the decedent pool.
    """
    rng = spec.rng(1)
    render = _Renderer(spec.rng(2), spec.key_noise)
    ids = _Identities(rng, spec.reference_date, spec.id_missing_rate)
    # ghosts must not collide with roster identities
    for p in population.roster:
        ids.names.add((fold_text(p.surnames), fold_text(p.given_names), p.birth_date, p.sex))
        if p.national_id:
            ids.ids.add(p.national_id)
    ids.next_pid = len(population.roster)

    L = spec.scheme.size
    decedents = []
    for _ in range(spec.decedents):
        l = int(rng.integers(0, L))
        lo, hi = _group_bounds(spec.scheme, l)
        decedents.append(ids.new(SEXES[int(rng.integers(0, 2))], lo, hi, spec.area, DECEDENT))
    emigrants = []
    for _ in range(spec.emigrants):
        l = int(rng.integers(0, L))
        lo, hi = _group_bounds(spec.scheme, l)
        area = spec.foreign_areas[int(rng.integers(0, len(spec.foreign_areas)))]
        emigrants.append(ids.new(SEXES[int(rng.integers(0, 2))], lo, hi, area, EMIGRANT))

    # decedents known to a deaths registry may look alive elsewhere
    registered_dead = set()
    death_sources = [s for s in spec.sources if s.kind == "deaths"]
    registry_rows: Dict[str, List[RosterPerson]] = {}
    for s in death_sources:
        take = [p for p in decedents
                if rng.random() < s.coverage and p.birth_date <= s.schema.extract_date]
        registry_rows[s.code] = take
        registered_dead.update(p.pid for p in take)

    ordered = sorted(spec.sources, key=lambda s: s.schema.source.priority)
    ledger = SynthLedger(decedents=tuple(decedents), emigrants=tuple(emigrants))
    rows_out: Dict[str, List[Dict[str, str]]] = OrderedDict()
    batches = []
    seen = set()
    for src in ordered:
        schema = src.schema
        ev = SourceEvents()
        if src.kind == "deaths":
            people = list(registry_rows[src.code])
            dead_flags = [True] * len(people)
            ev.death_rows = len(people)
        else:
            # nobody born after the extract can appear in it
            known = [p for p in population.roster if p.birth_date <= schema.extract_date]
            covered = [p for p in known if rng.random() < src.coverage]
            ev.covered = len(covered)
            people = list(covered)
            n_dup = int(rng.binomial(len(covered), src.duplicate_rate)) if covered else 0
            if n_dup:
                people += [covered[i] for i in rng.choice(len(covered), n_dup, replace=False)]
            ev.duplicates_injected = n_dup
            n_dead = min(int(rng.binomial(len(covered), src.death_rate)), len(decedents))
            ghosts_d = [decedents[i] for i in rng.choice(len(decedents), n_dead, replace=False)] if n_dead else []
            n_mig = min(int(rng.binomial(len(covered), src.migration_rate)), len(emigrants))
            ghosts_m = [emigrants[i] for i in rng.choice(len(emigrants), n_mig, replace=False)] if n_mig else []
            dead_flags = [False] * len(people)
            ghosts_d = [g for g in ghosts_d if g.birth_date <= schema.extract_date]
            ghosts_m = [g for g in ghosts_m if g.birth_date <= schema.extract_date]
            ev.death_rows, ev.migration_rows = len(ghosts_d), len(ghosts_m)
            for g in ghosts_d:
                people.append(g)
                dead_flags.append(g.pid not in registered_dead or bool(rng.random() < 0.5))
            people += ghosts_m
            dead_flags += [False] * len(ghosts_m)
            order = rng.permutation(len(people))
            people = [people[i] for i in order]
            dead_flags = [dead_flags[i] for i in order]

        rows, planted = [], []
        for k, (p, dead) in enumerate(zip(people, dead_flags), start=1):
            rows.append(_row(p, schema, f"{src.code}-{k:06d}", dead, render))
            if p.kind == DECEDENT:
                st = RecordState.DEATH
            elif p.kind == EMIGRANT:
                st = RecordState.MIGRATION
            elif p.pid in seen:
                st = RecordState.DUPLICATE
            else:
                st = RecordState.CONTRIBUTION
                seen.add(p.pid)
            planted.append((k, p.pid, st))
        rows_out[src.code] = rows
        ledger.rows[src.code] = planted
        ledger.events[src.code] = ev
        batches.append(batch_from_rows(rows, schema))
    return SynthRecords(rows_out, tuple(batches), ledger)


def write_source_file(rows: Sequence[Dict[str, str]], schema: SourceSchema, path) -> None:
    """Write rows in the delimited layout ``load_source`` expects for ``schema``."""
    header = list(schema.columns.values())
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=header, delimiter=schema.delimiter, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


# ---------------------------------------------------------------------------
# Linkage-table fixture

#: Per-source (Migration, Duplicate, Death, Contribution) as printed in the
#: linkage-results table, in its row order.
PAPER_LINKAGE_TABLE = OrderedDict([
    ("SISBEN", (1171, 491, 563, 74449)),
    ("DEATHS", (0, 0, 5821, 0)),
    ("SIMAT", (40, 176, 4, 7879)),
    ("NUEVA_EPS", (183, 0, 46, 5868)),
    ("SANITAS_EPS", (46, 0, 0, 901)),
    ("RUT", (684, 45, 25, 13996)),
    ("BIRTHS", (80, 28, 1, 3264)),
    ("RUV", (109, 0, 23, 4485)),
    ("BDUA", (1168, 65, 249, 30794)),
])
#: The table's printed Total row.
PAPER_LINKAGE_TOTALS = (4081, 805, 6732, 142636)


def table_fixture(table=PAPER_LINKAGE_TABLE, area: str = "76364",
                  reference_date: dt.date = dt.date(2016, 6, 30), seed: int = 0
                  ) -> List[SourceBatch]:
    """Batches whose linkage reproduces ``table`` row by row.

    Sources get priorities in table order. A source whose Death column is
    all of its rows (a deaths registry) lists decedents; other sources'
    Death rows point at those decedents with an alive flag, so they are
    only caught through the match. Duplicates repeat earlier contributors.
    """
    rng = np.random.default_rng(seed)
    codes = list(table)
    registry = [c for c in codes if table[c][2] > 0 and sum(table[c]) == table[c][2]]
    n_registered = sum(table[c][2] for c in registry)
    next_id = [10_000_000]
    extract = reference_date

    def person_id():
        next_id[0] += 1
        return str(next_id[0])

    def birth():
        return reference_date - dt.timedelta(days=int(rng.integers(0, 90 * 365)))

    decedent_ids = [person_id() for _ in range(n_registered)]
    decedent_births = {d: birth() for d in decedent_ids}
    spare = iter(decedent_ids)
    contributors: List[Tuple[str, dt.date, Sex]] = []
    batches = []
    for prio, code in enumerate(codes, start=1):
        src = SourceId(code, prio)
        mig, dup, death, contrib = table[code]
        recs = []

        def rec(nid, bd, sex, vital=VitalFlag.ALIVE, res=area):
            recs.append(SourceRecord(src, f"{code}-{len(recs) + 1}", "", "", nid, bd, sex, vital,
                                     res, extract, len(recs) + 1))

        if code in registry:
            for d in decedent_ids:
                rec(d, decedent_births[d], Sex.MALE if int(d) % 2 else Sex.FEMALE, VitalFlag.DEAD)
        else:
            for _ in range(contrib):
                nid, bd, sex = person_id(), birth(), SEXES[int(rng.integers(0, 2))]
                contributors.append((nid, bd, sex))
                rec(nid, bd, sex)
            for i in rng.integers(0, len(contributors), dup):
                rec(*contributors[i])
            for _ in range(death):
                d = next(spare, None)
                if d is None:  # no registry: flag the death directly
                    rec(person_id(), birth(), Sex.FEMALE, VitalFlag.DEAD)
                else:
                    rec(d, decedent_births[d], Sex.MALE if int(d) % 2 else Sex.FEMALE)
            for _ in range(mig):
                rec(person_id(), birth(), SEXES[int(rng.integers(0, 2))], res="EXT")
        batches.append(SourceBatch(src, tuple(recs), (), extract, IdRules()))
    return batches


# ---------------------------------------------------------------------------
# Calibration


@dataclass(frozen=True)
class CoverageResult:
    coverage: np.ndarray  # (L, 2) share of replicates whose interval covered the truth
    replicates: int
    level: float
    labels: Tuple[str, ...]

    def rows(self) -> List[List[str]]:
        out = [["age_group", "Male", "Female", "pooled"]]
        for i, lab in enumerate(self.labels):
            c = self.coverage[i]
            out.append([lab, f"{c[0]:.4f}", f"{c[1]:.4f}", f"{c.mean():.4f}"])
        return out

    def write(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["# replicates", self.replicates, "level", self.level])
            w.writerows(self.rows())


def coverage_study(prior_alpha, totals, replicates: int = 1000, level: float = 0.95,
                   seed: int = 0, scheme: AgeGroupScheme = DEFAULT_SCHEME,
                   shares=None) -> CoverageResult:
    """Empirical coverage of the marginal credible intervals.

    Each replicate draws the truth from the prior (or uses fixed
    ``shares``), draws register counts from a multinomial, forms the
    conjugate posterior and checks every age group's interval. Replicates
    use seeds spawned from ``seed``, one per replicate.
    """
    if replicates < 100:
        raise ConfigurationError("coverage_study needs at least 100 replicates")
    alpha = np.asarray(prior_alpha, dtype=float)
    if alpha.ndim == 1:
        alpha = np.column_stack([alpha, alpha])
    L = alpha.shape[0]
    totals = np.broadcast_to(np.asarray(totals, dtype=np.int64), (len(SEXES),))
    children = np.random.SeedSequence(seed).spawn(replicates)
    theta = np.empty((replicates, L, len(SEXES)))
    astar = np.empty_like(theta)
    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        for j in range(len(SEXES)):
            if shares is None:
                th = rng.dirichlet(alpha[:, j])
            else:
                th = np.asarray(shares, dtype=float)[:, j]
            q = rng.multinomial(int(totals[j]), th)
            theta[r, :, j] = th
            astar[r, :, j] = alpha[:, j] + q
    A = astar.sum(axis=1, keepdims=True)
    b = A - astar
    lo = betaincinv((1.0 - level) / 2.0, astar, b)
    hi = betaincinv((1.0 + level) / 2.0, astar, b)
    covered = (lo <= theta) & (theta <= hi)
    labels = scheme.labels if scheme.size == L else tuple(str(i + 1) for i in range(L))
    return CoverageResult(covered.mean(axis=0), replicates, level, labels)


def spec_projection(spec: SynthSpec, totals=None) -> AgeSexTable:
    """Expected counts under the spec's prior (or fixed shares), rounded."""
    base = spec.prior_alpha if spec.prior_alpha is not None else spec.shares
    base = np.asarray(base, dtype=float)
    shares = base / base.sum(axis=0)
    totals = np.asarray(spec.totals if totals is None else totals, dtype=float)
    return AgeSexTable(np.rint(shares * totals).astype(np.int64), spec.scheme,
                       spec.reference_date, spec.area)
