# %% [markdown]
# # Building an integrated register
#
# Two small extracts, linked by exact key: the cleaned national id when
# present, otherwise folded names + birth date + sex.

# %%
import datetime as dt

from demofuse.ingest import SourceSchema, batch_from_rows, normalize_key
from demofuse.linkage import integrate, tabulate
from demofuse.model import SourceId

REF = dt.date(2016, 6, 30)
cols = {k: k for k in ("raw_id", "national_id", "given_names", "surnames", "birth_date",
                       "sex", "vital_flag", "residence_code")}

health = SourceSchema(SourceId("HEALTH", 1), cols, REF)
school = SourceSchema(SourceId("SCHOOL", 2), cols, dt.date(2016, 3, 31))

def row(rid, nid, given, sur, bd, sex="1", vital="0", res="76364"):
    return dict(raw_id=rid, national_id=nid, given_names=given, surnames=sur,
                birth_date=bd, sex=sex, vital_flag=vital, residence_code=res)

h = batch_from_rows([
    row("h1", "1.023.456", "José", "Pérez Gómez", "1980-01-02"),
    row("h2", "", "María José", "Ruiz", "2010-05-05", sex="2"),
    row("h3", "777", "Ana", "Lara", "1950-03-03", sex="2"),
    row("h4", "888", "Luis", "Mora", "1990-07-07", res="76001"),
], health)
s = batch_from_rows([
    row("s1", "CC 1023456", "JOSE", "PEREZ GOMEZ", "1980-01-02"),       # same id, noisy
    row("s2", "", "  maria   jose ", "RUÍZ", "2010-05-05", sex="2"),   # same name composite
    row("s3", "777", "Ana", "Lara", "1950-03-03", sex="2", vital="1"),  # reported dead
    row("s4", "", "Pedro", "Soto", "2001-09-09"),
], school)

# %%
for rec in h.records + s.records:
    print(rec.source.code, rec.raw_id, normalize_key(rec, health.id_rules))

# %%
register, summary = integrate([h, s], "76364", REF)
for e in register.record_states:
    print(e.source, e.raw_id, e.state.value)

# %%
for r in summary.rows():
    print(r)
# (Migration + Death) / Contribution = (1 + 2) / 3 here
print(f"exclusion share {summary.exclusion_share:.2f}%")

# %%
tab = tabulate(register)
print(tab.table.counts.sum(axis=0), "unclassifiable:", tab.unclassifiable)
