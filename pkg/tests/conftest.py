import datetime as dt
from pathlib import Path

import numpy as np
import pytest

from demofuse.ingest import IdRules, SourceSchema
from demofuse.model import SourceId
from demofuse.synth import SynthSource, SynthSpec

ROOT = Path(__file__).resolve().parents[1]
FIXTURE_CONFIG = ROOT / "fixtures" / "synthetic" / "config.yaml"
REF = dt.date(2016, 6, 30)

_acceptance_lines = []


def record_acceptance(number: int, title: str, ok: bool, detail: str) -> None:
    _acceptance_lines.append((number, f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_acceptance_lines):
        terminalreporter.write_line(line)


def plain_schema(code, priority, extract=REF, **kw):
    cols = {f: f for f in ("raw_id", "national_id", "given_names", "surnames", "birth_date",
                           "sex", "vital_flag", "residence_code")}
    return SourceSchema(SourceId(code, priority), cols, extract, **kw)


def deaths_schema(code, priority, extract=REF):
    cols = {f: f for f in ("raw_id", "national_id", "given_names", "surnames", "birth_date",
                           "sex", "residence_code")}
    return SourceSchema(SourceId(code, priority), cols, extract, default_vital="Dead")


def small_spec(seed=0, totals=(300, 320), noise=0.3, **kw) -> SynthSpec:
    """A compact three-registry area with a deaths source, for linkage tests."""
    sources = (
        SynthSource(plain_schema("A", 1), coverage=0.85, duplicate_rate=0.03,
                    death_rate=0.02, migration_rate=0.02),
        SynthSource(deaths_schema("D", 2, dt.date(2016, 6, 1)), kind="deaths", coverage=0.8),
        SynthSource(plain_schema("B", 3, dt.date(2016, 1, 31)), coverage=0.5, duplicate_rate=0.05,
                    death_rate=0.03, migration_rate=0.04),
        SynthSource(plain_schema("C", 4, dt.date(2015, 12, 31), id_rules=IdRules(True, 0)),
                    coverage=0.3, migration_rate=0.05),
    )
    alpha = kw.pop("prior_alpha", None)
    if alpha is None:
        alpha = np.full((17, 2), 20.0)
    return SynthSpec(totals=totals, reference_date=REF, area="76364", sources=sources,
                     prior_alpha=alpha, decedents=40, emigrants=40, id_missing_rate=0.1,
                     key_noise=noise, seed=seed, **kw)


@pytest.fixture
def spec():
    return small_spec()
