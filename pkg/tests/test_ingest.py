import datetime as dt

import pytest
from hypothesis import given, strategies as st

from demofuse.ingest import (
    FOLD_TABLE, IdRules, IngestError, SourceSchema, UnlinkableRecordError, batch_from_rows,
    canonical_schema, fold_text, key_from_str, key_to_str, load_source, normalize_key, write_batch,
)
from demofuse.model import ConfigurationError, Sex, SourceId, SourceRecord, VitalFlag

REF = dt.date(2016, 6, 30)
SRC = SourceId("S", 1)
COLS = {"raw_id": "id", "national_id": "doc", "given_names": "nombres", "surnames": "apellidos",
        "birth_date": "fnac", "sex": "sexo", "vital_flag": "estado", "residence_code": "mpio"}


def rec(**kw):
    base = dict(source=SRC, raw_id="1", given_names="José", surnames="Pérez  Gómez", national_id=None,
                birth_date=dt.date(1990, 5, 17), sex=Sex.MALE, vital_flag=VitalFlag.ALIVE,
                residence_code="76364", extract_date=REF)
    base.update(kw)
    return SourceRecord(**base)


def test_id_cleaning_example():
    assert normalize_key(rec(national_id=" 10.234-567 ")) == ("ID", "10234567")


def test_name_key_example():
    assert normalize_key(rec()) == ("NAME", "PEREZ GOMEZ", "JOSE", "1990-05-17", "Male")


def test_id_padding_and_verbatim_rules():
    assert IdRules(pad_width=10).clean("1.234") == "0000001234"
    assert IdRules(strip_non_digits=False).clean(" ab 12 ") == "AB12"
    assert IdRules().clean(" - ") is None


def test_unlinkable_record():
    with pytest.raises(UnlinkableRecordError):
        normalize_key(rec(surnames=""))


LATIN = "".join(sorted(FOLD_TABLE)) + "abcxyzABCXYZ ñÑ\t"


@given(st.text(alphabet=LATIN, max_size=30))
def test_fold_is_idempotent(s):
    assert fold_text(fold_text(s)) == fold_text(s)


@given(st.text(alphabet=LATIN, min_size=1, max_size=20), st.text(alphabet=LATIN, min_size=1, max_size=20))
def test_normalize_key_idempotent_on_normalized_record(given_names, surnames):
    r = rec(given_names=given_names, surnames=surnames)
    try:
        k = normalize_key(r)
    except UnlinkableRecordError:
        return
    again = rec(given_names=k[2], surnames=k[1])
    assert normalize_key(again) == k


@given(st.text(alphabet="ÁÉÍÓÚáéíóúÑñAEIOUaeiouNn ", min_size=1, max_size=15))
def test_diacritic_and_space_noise_is_absorbed(name):
    noisy = "  " + "   ".join(name.upper().split()) + " "
    plain = "".join(FOLD_TABLE.get(c, c) for c in name)
    assert fold_text(noisy) == fold_text(plain) == fold_text(name)


def test_key_round_trip():
    k = ("NAME", "PEREZ", "JOSE", "1990-05-17", "Male")
    assert key_from_str(key_to_str(k)) == k


def schema(**kw):
    return SourceSchema(SRC, COLS, REF, sex_map={"M": "Male", "F": "Female"},
                        vital_map={"V": "Alive", "M": "Dead"}, **kw)


def row(**kw):
    base = {"id": "r", "doc": "123", "nombres": "Ana", "apellidos": "Ruiz", "fnac": "2001-02-03",
            "sexo": "F", "estado": "V", "mpio": "76364"}
    base.update(kw)
    return base


@pytest.mark.parametrize("override, reason", [
    ({"sexo": ""}, "missing sex"),
    ({"sexo": "X"}, "unmapped sex value"),
    ({"fnac": "03/02/2001"}, "unparseable date"),
    ({"estado": "?"}, "unmapped vital value"),
    ({"mpio": ""}, "missing residence"),
    ({"doc": "", "nombres": ""}, "missing identity fields"),
    ({"fnac": "2017-01-01"}, "birth after extract"),
])
def test_rejection_reasons(override, reason):
    b = batch_from_rows([row(), row(**override)], schema())
    assert len(b.records) == 1 and b.rejected == ((2, reason),)


def test_rows_are_conserved_and_disjoint():
    rows = [row(), row(sexo=""), row(doc="9"), row(fnac="bad")]
    b = batch_from_rows(rows, schema())
    assert len(b.records) + len(b.rejected) == len(rows) == b.row_count
    assert not {r.row for r in b.records} & {n for n, _ in b.rejected}
    assert all(r.source == SRC for r in b.records)
    assert b.log_entry()["rejected_by_reason"] == {"missing sex": 1, "unparseable date": 1}


def test_schema_requires_mandatory_fields():
    with pytest.raises(ConfigurationError):
        SourceSchema(SRC, {k: v for k, v in COLS.items() if k != "sex"}, REF)
    with pytest.raises(ConfigurationError):
        SourceSchema(SRC, {k: v for k, v in COLS.items() if k != "residence_code"}, REF)
    SourceSchema(SRC, {k: v for k, v in COLS.items() if k != "residence_code"}, REF,
                 default_residence="76364")


def test_load_source_quoting_and_delimiter(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text('id;doc;nombres;apellidos;fnac;sexo;estado;mpio\n'
                 '1;"12;34";"María ""Mary""";Ruiz;2001-02-03;F;V;76364\n'
                 '2;;Ana;Ruiz;2001-02-03;F;;76364;extra\n', encoding="utf-8")
    b = load_source(p, schema(delimiter=";"))
    assert b.records[0].given_names == 'María "Mary"'
    assert normalize_key(b.records[0]) == ("ID", "1234")
    assert b.rejected == ((2, "extra fields"),)


def test_load_source_header_and_missing_file(tmp_path):
    with pytest.raises(IngestError):
        load_source(tmp_path / "none.csv", schema())
    p = tmp_path / "bad.csv"
    p.write_text("id,doc\n1,2\n", encoding="utf-8")
    with pytest.raises(IngestError, match="not in header"):
        load_source(p, schema())


def test_ingest_is_deterministic_and_batches_round_trip(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("id,doc,nombres,apellidos,fnac,sexo,estado,mpio\n"
                 "1,1.234,Ana,Ruiz,2001-02-03,F,V,76364\n"
                 "2,,Íñigo,Núñez,1950-12-01,M,M,76001\n", encoding="utf-8")
    a, b = load_source(p, schema()), load_source(p, schema())
    assert a == b
    out = tmp_path / "batch.csv"
    write_batch(a, out)
    back = load_source(out, canonical_schema(SRC, REF, IdRules()))
    assert [normalize_key(r) for r in back.records] == [normalize_key(r) for r in a.records]
    assert [r.vital_flag for r in back.records] == [VitalFlag.ALIVE, VitalFlag.DEAD]
