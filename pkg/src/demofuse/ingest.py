"""Parsing and validation of per-source delimited extracts."""

from __future__ import annotations

import csv
import datetime as dt
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .model import (
    ConfigurationError,
    InvalidRecordError,
    Sex,
    SourceId,
    SourceRecord,
    VitalFlag,
)

log = logging.getLogger(__name__)


class IngestError(RuntimeError):
    """Fatal ingest problem: missing file, missing mapped column, bad header."""


class UnlinkableRecordError(ValueError):
    """Record carries neither a national id nor a complete name composite."""


# Latin-1 / Spanish diacritic fold. Kept explicit (not unicodedata) so the
# key policy does not move with the Unicode database version.
_FOLD_PAIRS = {
    "A": "ÀÁÂÃÄÅàáâãäå",
    "AE": "Ææ",
    "C": "Çç",
    "E": "ÈÉÊËèéêë",
    "I": "ÌÍÎÏìíîï",
    "D": "Ðð",
    "N": "Ññ",
    "O": "ÒÓÔÕÖØòóôõöø",
    "U": "ÙÚÛÜùúûü",
    "Y": "Ýýÿ",
    "TH": "Þþ",
    "SS": "ß",
}
FOLD_TABLE: Dict[str, str] = {
    ch: repl for repl, chars in _FOLD_PAIRS.items() for ch in chars
}
_FOLD_TRANS = str.maketrans(FOLD_TABLE)

MANDATORY_FIELDS = ("birth_date", "sex")


@dataclass(frozen=True)
class IdRules:
    strip_non_digits: bool = True
    pad_width: int = 0

    def clean(self, value: Optional[str]) -> Optional[str]:
        if value is None:
            return None
        value = value.strip()
        if self.strip_non_digits:
            value = re.sub(r"\D", "", value)
        else:
            value = "".join(value.split()).upper()
        if not value:
            return None
        if self.pad_width:
            value = value.zfill(self.pad_width)
        return value


@dataclass(frozen=True)
class SourceSchema:
    """How one source's extract maps onto SourceRecord fields.

    ``columns`` maps logical field names to header names. ``vital_flag`` and
    ``residence_code`` may be left unmapped, in which case ``default_vital``
    and ``default_residence`` apply to every row (a deaths registry, for
    instance, has ``default_vital=Dead``).
    """

    source: SourceId
    columns: Mapping[str, str]
    extract_date: dt.date
    date_format: str = "%Y-%m-%d"
    sex_map: Mapping[str, str] = field(default_factory=lambda: {"1": "Male", "2": "Female"})
    vital_map: Mapping[str, str] = field(default_factory=lambda: {"0": "Alive", "1": "Dead"})
    id_rules: IdRules = IdRules()
    delimiter: str = ","
    default_vital: str = "Alive"
    default_residence: Optional[str] = None

    def __post_init__(self):
        missing = [f for f in MANDATORY_FIELDS if f not in self.columns]
        if missing:
            raise ConfigurationError(f"{self.source.code}: unmapped mandatory fields {missing}")
        has_names = "given_names" in self.columns and "surnames" in self.columns
        if not has_names and "national_id" not in self.columns and "raw_id" not in self.columns:
            raise ConfigurationError(f"{self.source.code}: no identity fields mapped")
        if "residence_code" not in self.columns and not self.default_residence:
            raise ConfigurationError(
                f"{self.source.code}: residence_code unmapped and no default_residence"
            )
        for v in self.sex_map.values():
            Sex(v)
        for v in self.vital_map.values():
            VitalFlag(v)
        VitalFlag(self.default_vital)


@dataclass(frozen=True)
class SourceBatch:
    source: SourceId
    records: Tuple[SourceRecord, ...]
    rejected: Tuple[Tuple[int, str], ...]
    extract_date: dt.date
    id_rules: IdRules = IdRules()

    @property
    def row_count(self) -> int:
        return len(self.records) + len(self.rejected)

    def rejected_by_reason(self) -> Dict[str, int]:
        return dict(sorted(Counter(r for _, r in self.rejected).items()))

    def log_entry(self) -> dict:
        return {
            "source": self.source.code,
            "priority": self.source.priority,
            "rows": self.row_count,
            "accepted": len(self.records),
            "rejected": len(self.rejected),
            "rejected_by_reason": self.rejected_by_reason(),
        }


def fold_text(text: str) -> str:
    """Uppercase, fold diacritics and collapse whitespace."""
    text = text.translate(_FOLD_TRANS).upper().translate(_FOLD_TRANS)
    return " ".join(text.split())


LinkKey = Tuple[str, ...]


def normalize_key(record: SourceRecord, id_rules: IdRules = IdRules()) -> LinkKey:
    """Deterministic match key: ``("ID", id)`` or ``("NAME", sur, given, dob, sex)``."""
    nid = id_rules.clean(record.national_id)
    if nid:
        return ("ID", nid)
    surnames = fold_text(record.surnames or "")
    given = fold_text(record.given_names or "")
    if not surnames or not given or record.birth_date is None:
        raise UnlinkableRecordError(
            f"{record.source.code} row {record.row}: no national id and incomplete name composite"
        )
    return ("NAME", surnames, given, record.birth_date.isoformat(), Sex(record.sex).value)


def key_to_str(key: LinkKey) -> str:
    return "|".join(key)


def key_from_str(text: str) -> LinkKey:
    return tuple(text.split("|"))


class _Reject(Exception):
    pass


def _parse_date(value: str, fmt: str) -> Optional[dt.date]:
    value = value.strip()
    if not value:
        return None
    try:
        return dt.datetime.strptime(value, fmt).date()
    except ValueError:
        raise _Reject("unparseable date") from None


def _parse_row(row: Dict[str, str], schema: SourceSchema, rownum: int) -> SourceRecord:
    def get(name: str) -> str:
        col = schema.columns.get(name)
        return (row.get(col) or "").strip() if col else ""

    sex_raw = get("sex")
    if not sex_raw:
        raise _Reject("missing sex")
    if sex_raw not in schema.sex_map:
        raise _Reject("unmapped sex value")
    sex = Sex(schema.sex_map[sex_raw])

    birth_date = _parse_date(get("birth_date"), schema.date_format)

    if "vital_flag" in schema.columns:
        vital_raw = get("vital_flag")
        if vital_raw == "":
            vital = VitalFlag(schema.default_vital)
        elif vital_raw in schema.vital_map:
            vital = VitalFlag(schema.vital_map[vital_raw])
        else:
            raise _Reject("unmapped vital value")
    else:
        vital = VitalFlag(schema.default_vital)

    residence = get("residence_code") or (schema.default_residence or "")
    if not residence:
        raise _Reject("missing residence")

    national_id = get("national_id") or None
    given, surnames = get("given_names"), get("surnames")
    if schema.id_rules.clean(national_id) is None:
        national_id = None
        if not (fold_text(given) and fold_text(surnames) and birth_date):
            raise _Reject("missing identity fields")

    try:
        return SourceRecord(
            source=schema.source,
            raw_id=get("raw_id") or str(rownum),
            given_names=given,
            surnames=surnames,
            national_id=national_id,
            birth_date=birth_date,
            sex=sex,
            vital_flag=vital,
            residence_code=residence,
            extract_date=schema.extract_date,
            row=rownum,
        )
    except InvalidRecordError as exc:
        if "birth_date" in str(exc):
            raise _Reject("birth after extract") from None
        raise _Reject("invalid record") from None


def load_source(path, schema: SourceSchema) -> SourceBatch:
    """Read one delimited extract into a SourceBatch.

    Data rows are numbered from 1 (the header is row 0). Every data row ends
    up either as a record or in ``rejected`` with a short reason string.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"{schema.source.code}: source file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=schema.delimiter)
        header = reader.fieldnames
        if not header:
            raise IngestError(f"{schema.source.code}: missing or unparseable header in {path}")
        for logical, col in schema.columns.items():
            if col not in header:
                raise IngestError(
                    f"{schema.source.code}: mapped column {col!r} ({logical}) not in header of {path}"
                )
        return batch_from_rows(reader, schema)


def batch_from_rows(rows: Iterable[Mapping[str, Optional[str]]], schema: SourceSchema) -> SourceBatch:
    """Validate already-split rows (header name -> value) into a SourceBatch."""
    records: List[SourceRecord] = []
    rejected: List[Tuple[int, str]] = []
    for rownum, row in enumerate(rows, start=1):
        if None in row:
            rejected.append((rownum, "extra fields"))
            continue
        try:
            records.append(_parse_row(row, schema, rownum))
        except _Reject as exc:
            rejected.append((rownum, str(exc)))
    batch = SourceBatch(
        source=schema.source,
        records=tuple(records),
        rejected=tuple(rejected),
        extract_date=schema.extract_date,
        id_rules=schema.id_rules,
    )
    if rejected:
        log.warning("%s: %d of %d rows rejected %s", schema.source.code, len(rejected),
                    batch.row_count, batch.rejected_by_reason())
    return batch


# Canonical batch layout written by the ingest stage and read back by link.
BATCH_COLUMNS = (
    "raw_id", "given_names", "surnames", "national_id", "birth_date",
    "sex", "vital_flag", "residence_code",
)


def canonical_schema(source: SourceId, extract_date: dt.date, id_rules: IdRules) -> SourceSchema:
    """Schema for batches persisted with ``write_batch``."""
    return SourceSchema(
        source=source,
        columns={c: c for c in BATCH_COLUMNS},
        extract_date=extract_date,
        sex_map={s.value: s.value for s in Sex},
        vital_map={v.value: v.value for v in VitalFlag},
        id_rules=id_rules,
    )


def write_batch(batch: SourceBatch, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BATCH_COLUMNS)
        for r in batch.records:
            w.writerow([
                r.raw_id, r.given_names, r.surnames, r.national_id or "",
                r.birth_date.isoformat() if r.birth_date else "",
                r.sex.value, r.vital_flag.value, r.residence_code,
            ])
