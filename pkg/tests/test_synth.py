import numpy as np
import pytest

from conftest import small_spec
from demofuse.ingest import load_source
from demofuse.linkage import integrate
from demofuse.model import ConfigurationError
from demofuse.synth import (
    PAPER_LINKAGE_TABLE, coverage_study, generate_population, generate_records, spec_projection,
    table_fixture, write_source_file,
)


def test_full_determinism():
    spec = small_spec(seed=5)
    a = generate_records(generate_population(spec), spec)
    b = generate_records(generate_population(spec), spec)
    assert a.rows == b.rows and a.ledger.to_dict() == b.ledger.to_dict()
    c = generate_records(generate_population(small_spec(seed=6)), small_spec(seed=6))
    assert c.rows != a.rows


def test_population_matches_totals_and_census():
    spec = small_spec(seed=1, totals=(500, 700))
    pop = generate_population(spec)
    assert tuple(pop.census.counts.sum(axis=0)) == (500, 700)
    assert len(pop.roster) == 1200
    np.testing.assert_allclose(pop.truth.sum(axis=0), 1.0)


def test_ledger_conservation():
    spec = small_spec(seed=2, totals=(600, 600))
    recs = generate_records(generate_population(spec), spec)
    for code, rows in recs.ledger.rows.items():
        ev = recs.ledger.events[code]
        states = [st.value for _, _, st in rows]
        assert len(rows) == len(recs.rows[code])
        assert states.count("Death") == ev.death_rows
        assert states.count("Migration") == ev.migration_rows
    _, summary = integrate(recs.batches, spec.area, spec.reference_date)
    assert {c: dict(v) for c, v in summary.counts.items()} == recs.ledger.expected_counts()


def test_files_round_trip_through_ingest(tmp_path):
    spec = small_spec(seed=3)
    recs = generate_records(generate_population(spec), spec)
    for src, batch in zip(sorted(spec.sources, key=lambda s: s.schema.source.priority), recs.batches):
        path = tmp_path / f"{src.code}.csv"
        write_source_file(recs.rows[src.code], src.schema, path)
        assert load_source(path, src.schema) == batch


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        small_spec(shares=np.full((17, 2), 1 / 17))  # both shares and prior
    with pytest.raises(ConfigurationError):
        small_spec(prior_alpha=np.zeros((17, 2)))


def test_projection_from_spec():
    spec = small_spec(totals=(1700, 3400))
    proj = spec_projection(spec)
    np.testing.assert_array_equal(proj.counts[:, 0], 100)
    np.testing.assert_array_equal(proj.counts[:, 1], 200)


def test_table_fixture_rows():
    _, summary = integrate(table_fixture(), "76364", small_spec().reference_date)
    for code, row in PAPER_LINKAGE_TABLE.items():
        assert tuple(summary.counts[code].values()) == row


def test_coverage_at_half_level():
    alpha = np.full((17, 2), 50.0)
    res = coverage_study(alpha, (20_000, 20_000), replicates=1000, level=0.5, seed=1)
    # binomial sd at n=1000, p=0.5 is 0.016; allow 4 sd per cell
    assert np.all(np.abs(res.coverage - 0.5) <= 0.064)


def test_coverage_reproducible_and_fixed_truth():
    alpha = np.full(5, 40.0)
    a = coverage_study(alpha, 5_000, replicates=200, seed=9)
    b = coverage_study(alpha, 5_000, replicates=200, seed=9)
    assert np.array_equal(a.coverage, b.coverage) and a.coverage.shape == (5, 2)
    shares = np.column_stack([np.full(5, 0.2)] * 2)
    c = coverage_study(alpha, 5_000, replicates=200, seed=9, shares=shares)
    assert np.all(c.coverage > 0.85)
    with pytest.raises(ConfigurationError):
        coverage_study(alpha, 5_000, replicates=10)
