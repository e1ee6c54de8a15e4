"""Deterministic integration of source batches into one person register.

Every accepted record receives exactly one state. For the records sharing a
link key, taken in source-priority order and then input order:

* if any record of the key is flagged dead, all of them are ``Death``;
* otherwise, if the first record resides outside the target area, all of
  them are ``Migration``;
* otherwise the first record is the ``Contribution`` and each later one is
  ``Migration`` when it resides elsewhere, ``Duplicate`` when it does not.

So each alive, resident person owns exactly one Contribution record and the
Contribution total equals the tabulated population.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .ingest import (
    IdRules,
    LinkKey,
    SourceBatch,
    UnlinkableRecordError,
    key_from_str,
    key_to_str,
    normalize_key,
)
from .model import (
    SEXES,
    AgeGroupScheme,
    AgeSexTable,
    ConfigurationError,
    InvalidRecordError,
    Sex,
    SourceId,
    SourceRecord,
    VitalFlag,
    age_at,
    check_priorities,
    classify_age,
    DEFAULT_SCHEME,
)


class RecordState(str, enum.Enum):
    MIGRATION = "Migration"
    DUPLICATE = "Duplicate"
    DEATH = "Death"
    CONTRIBUTION = "Contribution"


#: Column order of the linkage summary table.
STATE_COLUMNS = (
    RecordState.MIGRATION,
    RecordState.DUPLICATE,
    RecordState.DEATH,
    RecordState.CONTRIBUTION,
)

PERSON_FIELDS = ("given_names", "surnames", "national_id", "birth_date", "sex", "residence_code")


@dataclass(frozen=True)
class Person:
    key: LinkKey
    given_names: str
    surnames: str
    national_id: Optional[str]
    birth_date: Optional[dt.date]
    sex: Optional[Sex]
    residence_code: str
    state: RecordState
    sources: Tuple[str, ...]

    @property
    def counted(self) -> bool:
        return self.state is RecordState.CONTRIBUTION


@dataclass(frozen=True)
class RecordStateEntry:
    source: str
    raw_id: str
    row: int
    key: Optional[LinkKey]
    state: Optional[RecordState]  # None for unlinkable records


@dataclass(frozen=True)
class IntegratedRegister:
    persons: "OrderedDict[LinkKey, Person]"
    record_states: Tuple[RecordStateEntry, ...]
    reference_date: dt.date
    area: str
    sources: Tuple[SourceId, ...] = ()

    def counted_persons(self) -> List[Person]:
        return [p for p in self.persons.values() if p.counted]


@dataclass(frozen=True)
class LinkageSummary:
    sources: Tuple[str, ...]
    counts: Dict[str, Dict[RecordState, int]]
    unlinkable: Dict[str, int] = field(default_factory=dict)

    def total(self, state: RecordState) -> int:
        return sum(self.counts[s][state] for s in self.sources)

    @property
    def totals(self) -> Dict[RecordState, int]:
        return {st: self.total(st) for st in STATE_COLUMNS}

    @property
    def exclusion_share(self) -> float:
        """(Migration + Death) / Contribution, as a percentage."""
        return exclusion_share(
            self.total(RecordState.MIGRATION),
            self.total(RecordState.DEATH),
            self.total(RecordState.CONTRIBUTION),
        )

    def rows(self) -> List[List]:
        out = [["States"] + [st.value for st in STATE_COLUMNS]]
        for s in self.sources:
            out.append([s] + [self.counts[s][st] for st in STATE_COLUMNS])
        out.append(["Total"] + [self.total(st) for st in STATE_COLUMNS])
        return out

    def write(self, path, delimiter: str = ",") -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            w.writerows(self.rows())
            w.writerow(["exclusion_share_pct", f"{self.exclusion_share:.2f}"])


def exclusion_share(migration: float, death: float, contribution: float) -> float:
    if contribution <= 0:
        return float("nan")
    return 100.0 * (migration + death) / contribution


def _order_batches(batches: Sequence[SourceBatch]) -> List[SourceBatch]:
    if not batches:
        raise ConfigurationError("integrate() needs at least one source batch")
    check_priorities([b.source for b in batches])
    return sorted(batches, key=lambda b: b.source.priority)


def integrate(
    batches: Sequence[SourceBatch], area: str, reference_date: dt.date
) -> Tuple[IntegratedRegister, LinkageSummary]:
    """Link batches by exact key and assign one state per record."""
    ordered = _order_batches(batches)
    # group records by key, preserving priority-then-input order
    groups: "OrderedDict[LinkKey, List[SourceRecord]]" = OrderedDict()
    entries: List[Tuple[SourceRecord, Optional[LinkKey]]] = []
    for batch in ordered:
        for rec in batch.records:
            try:
                key = normalize_key(rec, batch.id_rules)
            except UnlinkableRecordError:
                entries.append((rec, None))
                continue
            groups.setdefault(key, []).append(rec)
            entries.append((rec, key))

    states: Dict[int, RecordState] = {}
    persons: "OrderedDict[LinkKey, Person]" = OrderedDict()
    for key, recs in groups.items():
        group_states = _classify_group(recs, area)
        for rec, st in zip(recs, group_states):
            states[id(rec)] = st
        # the first state of a group is never Duplicate, so it is the person's state
        persons[key] = _resolve_person(key, recs, group_states[0])

    record_states = tuple(
        RecordStateEntry(rec.source.code, rec.raw_id, rec.row, key,
                         states[id(rec)] if key is not None else None)
        for rec, key in entries
    )
    register = IntegratedRegister(
        persons=persons,
        record_states=record_states,
        reference_date=reference_date,
        area=area,
        sources=tuple(b.source for b in ordered),
    )
    return register, linkage_summary(register)


def _classify_group(recs: Sequence[SourceRecord], area: str) -> List[RecordState]:
    if any(r.vital_flag is VitalFlag.DEAD for r in recs):
        return [RecordState.DEATH] * len(recs)
    if recs[0].residence_code != area:
        return [RecordState.MIGRATION] * len(recs)
    out = [RecordState.CONTRIBUTION]
    for r in recs[1:]:
        out.append(RecordState.MIGRATION if r.residence_code != area else RecordState.DUPLICATE)
    return out


def _resolve_person(key: LinkKey, recs: Sequence[SourceRecord], state: RecordState) -> Person:
    # recs are already in priority order: first non-empty value wins
    def first(attr):
        for r in recs:
            v = getattr(r, attr)
            if v not in (None, ""):
                return v
        return None

    sources = tuple(OrderedDict.fromkeys(r.source.code for r in recs))
    return Person(
        key=key,
        given_names=first("given_names") or "",
        surnames=first("surnames") or "",
        national_id=first("national_id"),
        birth_date=first("birth_date"),
        sex=first("sex"),
        residence_code=first("residence_code") or "",
        state=state,
        sources=sources,
    )


def linkage_summary(register: IntegratedRegister) -> LinkageSummary:
    """Per-source counts of each record state, in source-priority order."""
    codes = tuple(s.code for s in register.sources) or tuple(
        OrderedDict.fromkeys(e.source for e in register.record_states)
    )
    counts = {c: {st: 0 for st in STATE_COLUMNS} for c in codes}
    unlinkable: Counter = Counter()
    for e in register.record_states:
        if e.state is None:
            unlinkable[e.source] += 1
        else:
            counts[e.source][e.state] += 1
    return LinkageSummary(codes, counts, dict(unlinkable))


@dataclass(frozen=True)
class Tabulation:
    table: AgeSexTable
    unclassifiable: int


def tabulate(register: IntegratedRegister, scheme: AgeGroupScheme = DEFAULT_SCHEME) -> Tabulation:
    """Count alive resident persons by (age group, sex) at the reference date.

    Persons with no birth date, no sex, or born after the reference date
    go to the ``unclassifiable`` tally.
    """
    counts = np.zeros((scheme.size, len(SEXES)), dtype=np.int64)
    unclassifiable = 0
    for p in register.counted_persons():
        if p.birth_date is None or p.sex is None:
            unclassifiable += 1
            continue
        try:
            age = age_at(p.birth_date, register.reference_date)
        except InvalidRecordError:
            unclassifiable += 1
            continue
        counts[classify_age(age, scheme), SEXES.index(p.sex)] += 1
    table = AgeSexTable(counts, scheme, register.reference_date, register.area)
    return Tabulation(table, unclassifiable)


def register_as_batch(register: IntegratedRegister, code: str = "REGISTER",
                      priority: Optional[int] = None, counted_only: bool = False) -> SourceBatch:
    """Re-express canonical persons as a source batch (lowest priority by default)."""
    if priority is None:
        priority = max((s.priority for s in register.sources), default=0) + 1
    source = SourceId(code, priority)
    recs = []
    for i, p in enumerate(register.persons.values(), start=1):
        if counted_only and not p.counted:
            continue
        recs.append(SourceRecord(
            source=source,
            raw_id=key_to_str(p.key),
            given_names=p.given_names,
            surnames=p.surnames,
            national_id=p.key[1] if p.key[0] == "ID" else None,
            birth_date=p.birth_date,
            sex=p.sex if p.sex is not None else Sex.MALE,
            vital_flag=VitalFlag.DEAD if p.state is RecordState.DEATH else VitalFlag.ALIVE,
            residence_code=p.residence_code,
            extract_date=max(register.reference_date, p.birth_date or register.reference_date),
            row=i,
        ))
    # keys are already normalized; keep them verbatim
    return SourceBatch(source, tuple(recs), (), register.reference_date,
                       IdRules(strip_non_digits=False))


SNAPSHOT_COLUMNS = ("key",) + PERSON_FIELDS + ("state", "sources")


def write_register(register: IntegratedRegister, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["#area", register.area, "reference_date", register.reference_date.isoformat()])
        w.writerow(SNAPSHOT_COLUMNS)
        for p in register.persons.values():
            w.writerow([
                key_to_str(p.key), p.given_names, p.surnames, p.national_id or "",
                p.birth_date.isoformat() if p.birth_date else "",
                p.sex.value if p.sex else "", p.residence_code, p.state.value,
                ";".join(p.sources),
            ])


def read_register(path) -> IntegratedRegister:
    """Load a register snapshot (persons only; record-level states are not kept)."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        meta = next(reader)
        if len(meta) < 4 or meta[0] != "#area":
            raise ValueError(f"{path}: not a register snapshot")
        area, ref = meta[1], dt.date.fromisoformat(meta[3])
        header = next(reader)
        if tuple(header) != SNAPSHOT_COLUMNS:
            raise ValueError(f"{path}: unexpected snapshot columns {header}")
        persons: "OrderedDict[LinkKey, Person]" = OrderedDict()
        for row in reader:
            d = dict(zip(header, row))
            key = key_from_str(d["key"])
            persons[key] = Person(
                key=key,
                given_names=d["given_names"],
                surnames=d["surnames"],
                national_id=d["national_id"] or None,
                birth_date=dt.date.fromisoformat(d["birth_date"]) if d["birth_date"] else None,
                sex=Sex(d["sex"]) if d["sex"] else None,
                residence_code=d["residence_code"],
                state=RecordState(d["state"]),
                sources=tuple(s for s in d["sources"].split(";") if s),
            )
    return IntegratedRegister(persons, (), ref, area)
