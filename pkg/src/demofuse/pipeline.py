"""Pipeline stages. Each stage reads its inputs from files written by earlier
stages, so any stage can be re-run on its own."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional

from . import config as cfgmod
from .config import RunConfig
from .evaluation import MethodEstimates, build_report
from .ingest import canonical_schema, load_source, write_batch
from .linkage import integrate, read_register, tabulate, write_register
from .model import SEXES, AgeSexTable, ConfigurationError
from .posterior import count_estimates, posterior_update, share_intervals
from .prior import ProjectionInputs, build_prior, cohort_component_step
from .pyramid import Panel, PyramidSpec, render_pyramid
from .synth import coverage_study, generate_population, generate_records, spec_projection, write_source_file
from .tables import read_estimates, read_table, write_estimates, write_table

log = logging.getLogger(__name__)

INGEST_LOG = "ingest_log.json"
BATCH_DIR = "batches"
REGISTER = "register.csv"
LINKAGE_SUMMARY = "linkage_summary.csv"
ESTIMATES = "estimates.csv"
APD_BY_AGE = "apd_by_age.csv"
APD_BY_SEX = "apd_by_sex.csv"
APD_REPORT = "apd_report.json"
PYRAMID_SVG = "pyramid.svg"
PYRAMID_TXT = "pyramid.txt"
COVERAGE = "coverage.csv"
SYNTH_LEDGER = "synth_ledger.json"

PIPELINE_ARTIFACTS = (INGEST_LOG, REGISTER, LINKAGE_SUMMARY, ESTIMATES, APD_BY_AGE,
                      APD_BY_SEX, APD_REPORT, PYRAMID_SVG, PYRAMID_TXT)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _need(path: Optional[Path], what: str) -> Path:
    if path is None:
        raise ConfigurationError(f"{what} is not configured")
    if not Path(path).is_file():
        raise FileNotFoundError(f"{what} not found: {path}")
    return Path(path)


def stage_ingest(cfg: RunConfig, out: Path, seed: int) -> None:
    if not cfg.sources:
        raise ConfigurationError("no sources configured")
    (out / BATCH_DIR).mkdir(parents=True, exist_ok=True)
    entries = []
    for s in cfg.sources:
        batch = load_source(s.path, s.schema)
        write_batch(batch, out / BATCH_DIR / f"{s.code}.csv")
        entry = batch.log_entry()
        entry["file"] = s.path.name
        entries.append(entry)
        log.info("ingest %s: %d rows, %d accepted, %d rejected", s.code, entry["rows"],
                 entry["accepted"], entry["rejected"])
    _write_json(out / INGEST_LOG, {
        "sources": entries,
        "totals": {k: sum(e[k] for e in entries) for k in ("rows", "accepted", "rejected")},
    })


def stage_link(cfg: RunConfig, out: Path, seed: int) -> None:
    batches = []
    for s in cfg.sources:
        schema = canonical_schema(s.schema.source, s.schema.extract_date, s.schema.id_rules)
        path = out / BATCH_DIR / f"{s.code}.csv"
        if not path.is_file():
            raise FileNotFoundError(f"ingested batch not found (run 'ingest' first): {path}")
        batches.append(load_source(path, schema))
    register, summary = integrate(batches, cfg.area, cfg.reference_date)
    write_register(register, out / REGISTER)
    summary.write(out / LINKAGE_SUMMARY)
    log.info("link: %d persons, totals %s, exclusion share %.2f%%", len(register.persons),
             {k.value: v for k, v in summary.totals.items()}, summary.exclusion_share)


def load_projection(cfg: RunConfig) -> AgeSexTable:
    pr = cfg.prior
    if pr.projection is not None:
        return read_table(_need(pr.projection, "prior projection file"), cfg.scheme)
    if pr.components:
        tables = {}
        for name in ("base", "births", "deaths", "immigration", "emigration"):
            tables[name] = read_table(_need(pr.components.get(name), f"prior component {name!r}"),
                                      cfg.scheme)
        step = cohort_component_step(ProjectionInputs(
            tables["base"], *(tables[n].counts for n in ("births", "deaths", "immigration", "emigration"))
        ))
        return step.table
    raise ConfigurationError("prior needs a projection file or cohort-component inputs")


def stage_estimate(cfg: RunConfig, out: Path, seed: int) -> None:
    register = read_register(_need(out / REGISTER, "register snapshot (run 'link' first)"))
    tab = tabulate(register, cfg.scheme)
    if tab.unclassifiable:
        log.warning("estimate: %d counted persons lack a usable birth date or sex", tab.unclassifiable)
    projection = load_projection(cfg)
    prior = build_prior(projection, cfg.prior.adjustments, cfg.prior.floor, cfg.prior.scale)
    q = tab.table.counts
    posts, shares, counts = {}, {}, {}
    for j, sex in enumerate(SEXES):
        post = posterior_update(q[:, j], prior.alpha[:, j])
        total = post.n if cfg.count_total == "register" else float(projection.counts[:, j].sum())
        if total <= 0:
            raise ConfigurationError(f"{cfg.count_total} total for {sex.value} is zero")
        posts[sex] = post
        shares[sex] = share_intervals(post, cfg.credible_level)
        counts[sex] = count_estimates(post, total, cfg.credible_level)
    write_estimates(out / ESTIMATES, cfg.scheme, prior.alpha, q, posts, shares, counts)


def _method_tables(cfg: RunConfig, out: Path) -> Dict[str, AgeSexTable]:
    est = read_estimates(_need(out / ESTIMATES, "estimates table (run 'estimate' first)"), cfg.scheme)
    methods = {"proposed": AgeSexTable(est["count_point"], cfg.scheme)}
    for label, path in cfg.evaluation.methods.items():
        methods[label] = read_table(_need(path, f"method estimates {label!r}"), cfg.scheme)
    methods["integrated-register"] = AgeSexTable(est["register_q"], cfg.scheme)
    return methods


def stage_evaluate(cfg: RunConfig, out: Path, seed: int) -> None:
    census = read_table(_need(cfg.evaluation.census, "census file"), cfg.scheme)
    methods = [MethodEstimates(k, t) for k, t in _method_tables(cfg, out).items()]
    report = build_report(methods, census, cfg.evaluation.total_rule)
    report.write_tables(out / APD_BY_AGE, out / APD_BY_SEX)
    report.write_json(out / APD_REPORT)


def stage_pyramid(cfg: RunConfig, out: Path, seed: int) -> None:
    est = read_estimates(_need(out / ESTIMATES, "estimates table (run 'estimate' first)"), cfg.scheme)
    panels = []
    census = cfg.evaluation.census
    if census is not None and census.is_file():
        panels.append(Panel("Census", read_table(census, cfg.scheme).counts))
    panels.append(Panel(f"Proposed ({cfg.credible_level:g} credible intervals)", est["count_point"],
                        est["count_lower"], est["count_upper"]))
    for label, path in cfg.evaluation.methods.items():
        if path.is_file():
            panels.append(Panel(label, read_table(path, cfg.scheme).counts))
    panels.append(Panel("Integrated register", est["register_q"]))
    spec = PyramidSpec(tuple(panels), cfg.scheme.labels, title=f"Area {cfg.area}, {cfg.reference_date}")
    svg, text = render_pyramid(spec)
    (out / PYRAMID_SVG).write_text(svg, encoding="utf-8")
    (out / PYRAMID_TXT).write_text(text, encoding="utf-8")


def stage_synth(cfg: RunConfig, out: Path, seed: int) -> None:
    """Write synthetic source extracts, census and projection at their configured paths."""
    spec = cfg.synth_spec(seed)
    pop = generate_population(spec)
    recs = generate_records(pop, spec)
    for s in cfg.sources:
        s.path.parent.mkdir(parents=True, exist_ok=True)
        write_source_file(recs.rows[s.code], s.schema, s.path)
    if cfg.evaluation.census is not None:
        write_table(pop.census, cfg.evaluation.census)
    if cfg.prior.projection is not None:
        sy = cfg.synth or {}
        totals = cfgmod._totals(sy["projection_totals"]) if sy.get("projection_totals") else None
        write_table(spec_projection(spec, totals), cfg.prior.projection)
    _write_json(out / SYNTH_LEDGER, recs.ledger.to_dict())


def stage_coverage(cfg: RunConfig, out: Path, seed: int) -> None:
    if cfg.synth:
        alpha = cfgmod.synth_prior_alpha(cfg)
    else:
        projection = load_projection(cfg)
        alpha = build_prior(projection, cfg.prior.adjustments, cfg.prior.floor, cfg.prior.scale).alpha
    totals = cfg.coverage.totals
    if totals is None:
        totals = cfgmod._totals(cfg.synth["totals"]) if cfg.synth else (50_000, 50_000)
    res = coverage_study(alpha, totals, cfg.coverage.replicates, cfg.coverage.level, seed, cfg.scheme)
    res.write(out / COVERAGE)
    log.info("coverage: min %.4f max %.4f", res.coverage.min(), res.coverage.max())


STAGES: Dict[str, Callable[[RunConfig, Path, int], None]] = {
    "ingest": stage_ingest,
    "link": stage_link,
    "estimate": stage_estimate,
    "evaluate": stage_evaluate,
    "pyramid": stage_pyramid,
    "synth": stage_synth,
    "coverage": stage_coverage,
}
PIPELINE = ("ingest", "link", "estimate", "evaluate", "pyramid")


def run_stage(name: str, cfg: RunConfig, out: Path, seed: int) -> None:
    out.mkdir(parents=True, exist_ok=True)
    try:
        STAGES[name](cfg, out, seed)
    except StageError:
        raise
    except (ConfigurationError, FileNotFoundError, OSError, ValueError, RuntimeError) as exc:
        raise StageError(name, str(exc)) from exc


def run(command: str, cfg: RunConfig, out: Optional[Path] = None, seed: Optional[int] = None) -> List[str]:
    """Run one subcommand (or the whole pipeline); returns the stages executed."""
    out = Path(out) if out is not None else cfg.output_dir
    seed = cfg.seed if seed is None else seed
    names = list(PIPELINE) if command == "pipeline" else [command]
    for n in names:
        if n not in STAGES:
            raise ConfigurationError(f"unknown command {command!r}")
    for n in names:
        log.info("stage %s", n)
        run_stage(n, cfg, out, seed)
    return names
