"""Command-line pipeline orchestration.

Every command validates its configuration before writing anything, emits a
``manifest.json`` describing the run (config echo, input digests, row counts,
timings), and is reproducible: identical inputs, config, and seed give
byte-identical analysis outputs. Exit codes: 0 success, 1 usage/config error,
2 data error, 3 non-convergence.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
import time
from dataclasses import dataclass
from importlib.metadata import version as _pkg_version
from pathlib import Path

import click
import numpy as np

from . import analysis, stats, svg
from .corpus import (
    DEFAULT_EXCLUDED_SPEAKERS,
    MAX_AGE_MONTHS,
    MIN_AGE_MONTHS,
    Corpus,
    cumulative_slice,
    load_corpus,
    write_normalized_file,
)
from .cooccurrence import build_cooccurrence, write_cooccurrence_csv
from .errors import ConfigError, ConvergenceError, DataError, ProkwoError
from .lexicon import (
    compute_mcdip,
    load_administrations_csv,
    load_lexicon_csv,
    load_mcdip_csv,
    production_records,
    write_mcdip_csv,
)
from .predictors import (
    PREDICTOR_NAMES,
    PredictorTable,
    predictor_table,
    pro_kwo_shuffle,
)

#: Arbitrary fixed default so runs without --seed are still reproducible.
DEFAULT_SEED = 1234


def _parse_ages(text: str | None) -> list[int] | None:
    """``16..30`` (inclusive range) or ``18,21,24`` or a single month."""
    if text is None:
        return None
    text = text.strip()
    try:
        if ".." in text:
            lo_s, hi_s = text.split("..")
            ages = list(range(int(lo_s), int(hi_s) + 1))
        else:
            ages = [int(part) for part in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse ages {text!r}")
    if not ages:
        raise ConfigError("empty age list")
    for age in ages:
        if not MIN_AGE_MONTHS <= age <= MAX_AGE_MONTHS:
            raise ConfigError(
                f"age {age} outside [{MIN_AGE_MONTHS}, {MAX_AGE_MONTHS}]"
            )
    return sorted(set(ages))


@dataclass
class RunConfig:
    corpus_dir: Path | None = None
    corpus_format: str = "chat"
    lexicon: Path | None = None
    exclusions: Path | None = None
    administrations: Path | None = None
    predictors: Path | None = None
    mcdip: Path | None = None
    ages: list[int] | None = None
    window: int = 7
    include_child_speech: bool = False
    no_diagonal: bool = False
    window_fillers: str = "all"
    shuffles: int = 1000
    seed: int = DEFAULT_SEED
    model: str = "full"
    out: Path = Path("out")
    threads: int = 1
    emit_svg: bool = False

    @property
    def excluded_speakers(self) -> frozenset[str]:
        return frozenset() if self.include_child_speech else DEFAULT_EXCLUDED_SPEAKERS

    def validate(self, need: set[str]) -> None:
        if "corpus" in need and self.corpus_dir is None and self.predictors is None:
            raise ConfigError("--corpus-dir is required (or resume via --predictors)")
        if "lexicon" in need and self.lexicon is None:
            raise ConfigError("--lexicon is required")
        if "administrations" in need and self.administrations is None:
            if not ("mcdip-ok" in need and self.mcdip is not None):
                raise ConfigError("--administrations is required")
        for name in ("corpus_dir", "lexicon", "exclusions", "administrations",
                     "predictors", "mcdip"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ConfigError(f"--{name.replace('_', '-')}: {path} does not exist")
        if self.window < 1:
            raise ConfigError("--window must be >= 1")
        if self.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if self.shuffles < 1:
            raise ConfigError("--shuffles must be >= 1")

    def echo(self) -> dict:
        out = {}
        for key, value in self.__dict__.items():
            out[key] = str(value) if isinstance(value, Path) else value
        return out


class Manifest:
    """Run record: config, input digests, version, row counts, timings."""

    def __init__(self, command: str, config: RunConfig):
        self.data = {
            "command": command,
            "toolkit_version": _pkg_version("prokwo"),
            "config": config.echo(),
            "inputs": {},
            "outputs": {},
            "timings_seconds": {},
        }
        self._t0 = time.monotonic()
        self._stage_start = self._t0

    def add_input(self, path: Path | None) -> None:
        if path is None:
            return
        path = Path(path)
        digest = hashlib.sha256()
        if path.is_dir():
            for sub in sorted(p for p in path.rglob("*") if p.is_file()):
                digest.update(sub.name.encode())
                digest.update(sub.read_bytes())
        else:
            digest.update(path.read_bytes())
        self.data["inputs"][str(path)] = digest.hexdigest()

    def stage(self, name: str) -> None:
        now = time.monotonic()
        self.data["timings_seconds"][name] = round(now - self._stage_start, 4)
        self._stage_start = now

    def add_output(self, name: str, rows: int) -> None:
        self.data["outputs"][name] = {"rows": rows}

    def write(self, out_dir: Path) -> None:
        self.data["timings_seconds"]["total"] = round(
            time.monotonic() - self._t0, 4
        )
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")


def _prepare(config: RunConfig, command: str, need: set[str]) -> Manifest:
    config.validate(need)
    manifest = Manifest(command, config)
    for name in ("corpus_dir", "lexicon", "exclusions", "administrations",
                 "predictors", "mcdip"):
        manifest.add_input(getattr(config, name))
    config.out.mkdir(parents=True, exist_ok=True)
    return manifest


def _load_corpus(config: RunConfig) -> tuple[Corpus, list[tuple[str, str]]]:
    return load_corpus(config.corpus_dir, config.corpus_format)


def _load_lexicon(config: RunConfig):
    exclusions: list[str] = []
    if config.exclusions is not None:
        exclusions = [
            line.strip()
            for line in Path(config.exclusions).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    return load_lexicon_csv(config.lexicon, exclusions)


def _resolve_ages(config: RunConfig, mcdip_table) -> list[int]:
    if config.ages is not None:
        for age in config.ages:
            if not mcdip_table.has_age(age):
                raise DataError(f"no administrations at requested age {age}")
        return config.ages
    ages = [a for a in mcdip_table.ages if MIN_AGE_MONTHS <= a <= MAX_AGE_MONTHS]
    if not ages:
        raise DataError("no administration ages within the supported range")
    return ages


def _load_survey(config: RunConfig, lexicon):
    """(administrations, mcdip_table); mcdip may resume from --mcdip."""
    admins = None
    if config.administrations is not None:
        admins = load_administrations_csv(config.administrations, lexicon)
    if config.mcdip is not None:
        table = load_mcdip_csv(config.mcdip, lexicon)
    elif admins is not None:
        table = compute_mcdip(admins, lexicon)
    else:
        raise ConfigError("need --administrations or --mcdip")
    return admins, table


def _predictor_table(config: RunConfig, corpus, lexicon, mcdip_table, ages):
    if config.predictors is not None:
        table = PredictorTable.from_csv(config.predictors)
        for age in ages:
            if age not in table.ages:
                raise DataError(f"{config.predictors}: no rows for age {age}")
        return table
    return predictor_table(
        corpus,
        lexicon,
        mcdip_table,
        ages,
        window=config.window,
        include_diagonal=not config.no_diagonal,
        window_fillers=config.window_fillers,
        excluded_speakers=config.excluded_speakers,
        threads=config.threads,
    )


# ---------------------------------------------------------------------------
# click wiring


def _common_options(func):
    decorators = [
        click.option("--corpus-dir", type=click.Path(path_type=Path), default=None),
        click.option(
            "--corpus-format",
            type=click.Choice(["chat", "normalized"]),
            default="chat",
            show_default=True,
        ),
        click.option("--lexicon", type=click.Path(path_type=Path), default=None),
        click.option("--exclusions", type=click.Path(path_type=Path), default=None,
                     help="Newline-delimited words to exclude from the lexicon."),
        click.option("--administrations", type=click.Path(path_type=Path), default=None),
        click.option("--predictors", type=click.Path(path_type=Path), default=None,
                     help="Resume from an existing predictors.csv."),
        click.option("--mcdip", type=click.Path(path_type=Path), default=None,
                     help="Resume from an existing mcdip.csv."),
        click.option("--ages", default=None,
                     help="Months as 16..30 or 18,21,24 (default: all available)."),
        click.option("--window", type=int, default=7, show_default=True),
        click.option("--include-child-speech", is_flag=True, default=False),
        click.option("--no-diagonal", is_flag=True, default=False),
        click.option(
            "--window-fillers",
            type=click.Choice(["all", "mcdi-only"]),
            default="all",
            show_default=True,
        ),
        click.option("--shuffles", type=int, default=1000, show_default=True),
        click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True),
        click.option("--model", default="full", show_default=True,
                     help="single:<predictor> or full."),
        click.option("--out", type=click.Path(path_type=Path), default=Path("out"),
                     show_default=True),
        click.option("--threads", type=int, default=1, show_default=True),
        click.option("--svg", "emit_svg", is_flag=True, default=False),
    ]
    for dec in reversed(decorators):
        func = dec(func)
    return func


def _config_from_kwargs(kwargs) -> RunConfig:
    kwargs = dict(kwargs)
    kwargs["ages"] = _parse_ages(kwargs.get("ages"))
    return RunConfig(**kwargs)


@click.group()
def cli():
    """Corpus statistics predicting child word production."""


@cli.command("ingest")
@_common_options
def cmd_ingest(**kwargs):
    """Parse transcripts to the normalized record format plus a skip report."""
    config = _config_from_kwargs(kwargs)
    if config.corpus_dir is None:
        raise ConfigError("--corpus-dir is required")
    manifest = _prepare(config, "ingest", set())
    corpus, failures = _load_corpus(config)
    manifest.stage("parse")
    write_normalized_file(corpus, config.out / "corpus.jsonl")
    skipped = list(failures)
    skipped += [
        (doc.doc_id, "missing-age")
        for doc in corpus.documents
        if doc.child_age_months is None
    ]
    with open(config.out / "skipped.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "reason"])
        writer.writerows(sorted(skipped))
    manifest.add_output("corpus.jsonl", corpus.document_count)
    manifest.add_output("skipped.csv", len(skipped))
    manifest.stage("write")
    manifest.write(config.out)
    click.echo(
        f"ingested {corpus.document_count} documents "
        f"({len(skipped)} skipped/ageless)"
    )


@cli.command("mcdip")
@_common_options
def cmd_mcdip(**kwargs):
    """Tally per-age production proportions from survey data."""
    config = _config_from_kwargs(kwargs)
    manifest = _prepare(config, "mcdip", {"lexicon", "administrations"})
    lexicon = _load_lexicon(config)
    admins, table = _load_survey(config, lexicon)
    manifest.stage("tally")
    rows = write_mcdip_csv(table, lexicon, config.out / "mcdip.csv")
    manifest.add_output("mcdip.csv", rows)
    manifest.stage("write")
    manifest.write(config.out)
    click.echo(f"mcdip over ages {list(table.ages)} -> {rows} rows")


@cli.command("predictors")
@_common_options
@click.option("--cooccurrence-dump", is_flag=True, default=False,
              help="Also write the sparse co-occurrence triples.")
def cmd_predictors(cooccurrence_dump, **kwargs):
    """Compute all four distributional predictors per age and word."""
    config = _config_from_kwargs(kwargs)
    manifest = _prepare(
        config, "predictors", {"corpus", "lexicon", "administrations", "mcdip-ok"}
    )
    lexicon = _load_lexicon(config)
    _, mcdip_table = _load_survey(config, lexicon)
    corpus = None
    if config.predictors is None:
        if config.corpus_dir is None:
            raise ConfigError("--corpus-dir is required")
        corpus, _ = _load_corpus(config)
    ages = _resolve_ages(config, mcdip_table)
    manifest.stage("load")
    table = _predictor_table(config, corpus, lexicon, mcdip_table, ages)
    manifest.stage("compute")
    rows = table.to_csv(config.out / "predictors.csv")
    manifest.add_output("predictors.csv", rows)
    if cooccurrence_dump:
        if corpus is None:
            raise ConfigError("--cooccurrence-dump needs --corpus-dir")
        matrices = [
            build_cooccurrence(
                cumulative_slice(corpus, age, config.excluded_speakers),
                lexicon,
                window=config.window,
                include_diagonal=not config.no_diagonal,
                window_fillers=config.window_fillers,
            )
            for age in ages
        ]
        n = write_cooccurrence_csv(matrices, lexicon, config.out / "cooccurrence.csv")
        manifest.add_output("cooccurrence.csv", n)
    manifest.stage("write")
    manifest.write(config.out)
    click.echo(f"predictors for ages {ages} -> {rows} rows")


@cli.command("correlate")
@_common_options
def cmd_correlate(**kwargs):
    """Predictor intercorrelations and predictor-outcome correlations."""
    config = _config_from_kwargs(kwargs)
    manifest = _prepare(
        config, "correlate", {"corpus", "lexicon", "administrations", "mcdip-ok"}
    )
    lexicon = _load_lexicon(config)
    _, mcdip_table = _load_survey(config, lexicon)
    corpus = None
    if config.predictors is None:
        corpus, _ = _load_corpus(config)
    ages = _resolve_ages(config, mcdip_table)
    table = _predictor_table(config, corpus, lexicon, mcdip_table, ages)
    manifest.stage("compute-predictors")
    reports = []
    for grouping in ("all", "by-class"):
        reports.extend(stats.correlate_predictors(table, ages, grouping))
        reports.extend(stats.correlate_with_outcome(table, mcdip_table, ages, grouping))
    rows = stats.write_correlations_csv(reports, config.out / "correlations.csv")
    manifest.add_output("correlations.csv", rows)
    if config.emit_svg:
        n_svg = _correlation_figures(config, table, reports, ages)
        manifest.add_output("svg-figures", n_svg)
    manifest.stage("write")
    manifest.write(config.out)
    click.echo(f"correlations for ages {ages} -> {rows} cells")


def _correlation_figures(config, table, reports, ages) -> int:
    count = 0
    for age in ages:
        cells = {
            (rep.var_a, rep.var_b): rep.r
            for rep in reports
            if rep.grouping == "all" and rep.age_months == age
            and rep.var_b != "mcdip"
        }
        matrix = []
        for i, a in enumerate(PREDICTOR_NAMES):
            row = []
            for j, b in enumerate(PREDICTOR_NAMES):
                if i == j:
                    row.append(1.0)
                else:
                    row.append(cells.get((b, a), cells.get((a, b))))
            matrix.append(row)
        content = svg.correlogram_svg(
            PREDICTOR_NAMES, matrix, title=f"predictor correlations, {age} months"
        )
        (config.out / f"correlogram_{age}.svg").write_text(content)
        count += 1
    series = []
    for name in PREDICTOR_NAMES:
        points = [
            (rep.age_months, rep.r)
            for rep in reports
            if rep.grouping == "all" and rep.var_a == name and rep.var_b == "mcdip"
            and rep.r is not None
        ]
        if points:
            series.append((name, [p[0] for p in points], [p[1] for p in points]))
    content = svg.line_chart_svg(
        series, title="correlation with production proportion by age",
        y_label="pearson r", y_range=(-1.0, 1.0),
    )
    (config.out / "correlation_curves.svg").write_text(content)
    return count + 1


@cli.command("shuffle")
@_common_options
def cmd_shuffle(**kwargs):
    """Permutation baseline: correlation of shuffled scores with outcomes."""
    config = _config_from_kwargs(kwargs)
    manifest = _prepare(
        config, "shuffle", {"corpus", "lexicon", "administrations", "mcdip-ok"}
    )
    if config.corpus_dir is None:
        raise ConfigError("--corpus-dir is required for shuffling")
    lexicon = _load_lexicon(config)
    _, mcdip_table = _load_survey(config, lexicon)
    corpus, _ = _load_corpus(config)
    ages = _resolve_ages(config, mcdip_table)
    manifest.stage("load")
    rows = _run_shuffles(config, corpus, lexicon, mcdip_table, ages)
    manifest.add_output("shuffle_report.csv", rows)
    manifest.stage("shuffle")
    manifest.write(config.out)
    click.echo(f"shuffle report for ages {ages} ({config.shuffles} iterations)")


def _run_shuffles(config, corpus, lexicon, mcdip_table, ages) -> int:
    results = []
    for age in ages:
        corpus_slice = cumulative_slice(corpus, age, config.excluded_speakers)
        matrix = build_cooccurrence(
            corpus_slice,
            lexicon,
            window=config.window,
            include_diagonal=not config.no_diagonal,
            window_fillers=config.window_fillers,
        )
        row = mcdip_table.row(age)
        results.append(
            pro_kwo_shuffle(
                matrix,
                row,
                row,
                n_shuffles=config.shuffles,
                seed=config.seed + age,  # distinct stream per age, still fixed
                threads=config.threads,
            )
        )
    rows = 0
    with open(config.out / "shuffle_report.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["age_months", "iteration", "r"])
        for res in results:
            for i, r in enumerate(res.correlations):
                writer.writerow([res.age_cutoff_months, i, repr(float(r))])
                rows += 1
            writer.writerow([res.age_cutoff_months, "mean", repr(res.mean_r)])
            rows += 1
    return rows


def _parse_model(selector: str) -> list[tuple[str, ...]]:
    """``single:<name>`` or ``full`` -> list of predictor tuples to fit."""
    if selector == "full":
        return [tuple(PREDICTOR_NAMES)]
    if selector.startswith("single:"):
        name = selector.split(":", 1)[1]
        if name not in PREDICTOR_NAMES:
            raise ConfigError(
                f"unknown predictor {name!r}; expected one of {PREDICTOR_NAMES}"
            )
        return [(name,)]
    raise ConfigError(f"--model must be 'full' or 'single:<predictor>', got {selector!r}")


def _fit_models(config, lexicon, admins, mcdip_table, table, ages, predictor_sets):
    """Fit every (age, predictor set).

    Returns fit results plus item-error reports under both prediction modes
    (with and without the conditional random-effect modes).
    """
    records = production_records(admins, lexicon)
    results = []
    item_reports = []
    item_reports_marginal = []
    for age in ages:
        for predictors in predictor_sets:
            spec = analysis.ModelSpec(age_months=age, predictors=predictors)
            design = analysis.build_design(records, table, spec)
            result, model = analysis.fit_model(design, spec)
            results.append(result)
            conditional, marginal = analysis.item_error_reports_pair(
                model, design, mcdip_table.row(age), table.classes
            )
            item_reports.append(conditional)
            item_reports_marginal.append(marginal)
    return results, item_reports, item_reports_marginal


@cli.command("fit")
@_common_options
def cmd_fit(**kwargs):
    """Mixed logistic models of binary production on the predictors."""
    config = _config_from_kwargs(kwargs)
    manifest = _prepare(
        config, "fit", {"corpus", "lexicon", "administrations"}
    )
    predictor_sets = _parse_model(config.model)
    lexicon = _load_lexicon(config)
    admins, mcdip_table = _load_survey(config, lexicon)
    if admins is None:
        raise ConfigError("--administrations is required to fit models")
    corpus = None
    if config.predictors is None:
        corpus, _ = _load_corpus(config)
    ages = _resolve_ages(config, mcdip_table)
    table = _predictor_table(config, corpus, lexicon, mcdip_table, ages)
    manifest.stage("prepare")
    results, item_reports, item_marginal = _fit_models(
        config, lexicon, admins, mcdip_table, table, ages, predictor_sets
    )
    manifest.stage("fit")
    n = analysis.write_fits_csv(results, config.out / "fits.csv")
    manifest.add_output("fits.csv", n)
    n = analysis.write_variance_components_csv(
        results, config.out / "variance_components.csv"
    )
    manifest.add_output("variance_components.csv", n)
    n = analysis.write_convergence_csv(results, config.out / "convergence.csv")
    manifest.add_output("convergence.csv", n)
    n = analysis.write_item_errors_csv(item_reports, config.out / "item_errors.csv")
    manifest.add_output("item_errors.csv", n)
    n = analysis.write_item_errors_csv(
        item_marginal, config.out / "item_errors_marginal.csv"
    )
    manifest.add_output("item_errors_marginal.csv", n)
    manifest.stage("write")
    manifest.write(config.out)
    bad = [r for r in results if r.status != "converged"]
    click.echo(
        f"fitted {len(results)} models over ages {ages}"
        + (f"; {len(bad)} did not converge" if bad else "")
    )
    if bad:
        raise ConvergenceError(
            f"{len(bad)} of {len(results)} fits did not converge"
        )


@cli.command("report")
@_common_options
def cmd_report(**kwargs):
    """Full pipeline: consolidated tables and (optionally) figures."""
    config = _config_from_kwargs(kwargs)
    manifest = _prepare(
        config, "report", {"corpus", "lexicon", "administrations"}
    )
    lexicon = _load_lexicon(config)
    admins, mcdip_table = _load_survey(config, lexicon)
    if admins is None:
        raise ConfigError("--administrations is required for a full report")
    corpus = None
    if config.predictors is None:
        corpus, _ = _load_corpus(config)
    ages = _resolve_ages(config, mcdip_table)
    table = _predictor_table(config, corpus, lexicon, mcdip_table, ages)
    rows = table.to_csv(config.out / "predictors.csv")
    manifest.add_output("predictors.csv", rows)
    rows = write_mcdip_csv(mcdip_table, lexicon, config.out / "mcdip.csv")
    manifest.add_output("mcdip.csv", rows)
    manifest.stage("predictors")

    reports = []
    for grouping in ("all", "by-class"):
        reports.extend(stats.correlate_predictors(table, ages, grouping))
        reports.extend(stats.correlate_with_outcome(table, mcdip_table, ages, grouping))
    rows = stats.write_correlations_csv(reports, config.out / "correlations.csv")
    manifest.add_output("correlations.csv", rows)
    _write_intercorrelations(reports, config.out / "intercorrelations.csv")
    manifest.stage("correlate")

    if corpus is not None:
        rows = _run_shuffles(config, corpus, lexicon, mcdip_table, ages)
        manifest.add_output("shuffle_report.csv", rows)
    manifest.stage("shuffle")

    single_sets = [(name,) for name in PREDICTOR_NAMES]
    results, item_reports, item_marginal = _fit_models(
        config, lexicon, admins, mcdip_table, table, ages,
        single_sets + [tuple(PREDICTOR_NAMES)],
    )
    manifest.stage("fit")
    analysis.write_fits_csv(results, config.out / "fits.csv")
    analysis.write_variance_components_csv(
        results, config.out / "variance_components.csv"
    )
    analysis.write_convergence_csv(results, config.out / "convergence.csv")
    singles = [r for r in results if r.model_id.startswith("single:")]
    full = [r for r in results if r.model_id == "full"]
    _write_fit_table(singles, config.out / "single_predictor_models.csv")
    _write_fit_table(full, config.out / "full_model.csv")
    pk_items = [
        rep
        for rep, res in zip(item_reports, results)
        if res.model_id == "single:pro_kwo"
    ]
    pk_marginal = [
        rep
        for rep, res in zip(item_marginal, results)
        if res.model_id == "single:pro_kwo"
    ]
    analysis.write_item_errors_csv(pk_items, config.out / "item_errors.csv")
    analysis.write_item_errors_csv(
        pk_marginal, config.out / "item_errors_marginal.csv"
    )

    # figure emission is part of the report command, not gated on --svg
    n_svg = _correlation_figures(config, table, reports, ages)
    n_svg += _class_figure(config, reports)
    n_svg += _item_error_figures(config, pk_items)
    manifest.add_output("svg-figures", n_svg)
    manifest.stage("write")
    manifest.write(config.out)
    bad = [r for r in results if r.status != "converged"]
    click.echo(f"report complete: ages {ages}, {len(results)} models")
    if bad:
        raise ConvergenceError(f"{len(bad)} of {len(results)} fits did not converge")


def _write_intercorrelations(reports, path) -> None:
    """Predictor intercorrelations per age (aggregate grouping only)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["var_a", "var_b", "age_months", "r", "significant_01"])
        for rep in reports:
            if rep.grouping != "all" or rep.var_b == "mcdip":
                continue
            writer.writerow(
                [
                    rep.var_a,
                    rep.var_b,
                    rep.age_months,
                    "" if rep.r is None else repr(rep.r),
                    "true" if rep.significant_01 else "false",
                ]
            )


def _write_fit_table(results, path) -> None:
    """Per-model fixed-effect rows, predictor terms only."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["model_id", "age_months", "term", "estimate", "std_error",
             "z", "p", "ci_low", "ci_high"]
        )
        for res in results:
            for term in res.terms:
                if term.term == "intercept":
                    continue
                writer.writerow(
                    [
                        res.model_id,
                        res.age_months,
                        term.term,
                        repr(term.estimate),
                        repr(term.std_error),
                        repr(term.z),
                        repr(term.p),
                        repr(term.ci_low),
                        repr(term.ci_high),
                    ]
                )


def _class_figure(config, reports) -> int:
    """Per-class correlation-with-outcome curves, one chart per predictor."""
    count = 0
    for name in PREDICTOR_NAMES:
        series = []
        keys = sorted(
            {rep.grouping for rep in reports if rep.grouping != "all"}
        )
        for group in ["all"] + keys:
            points = [
                (rep.age_months, rep.r)
                for rep in reports
                if rep.grouping == group and rep.var_a == name
                and rep.var_b == "mcdip" and rep.r is not None
            ]
            if points:
                series.append(
                    (group, [p[0] for p in points], [p[1] for p in points])
                )
        if not series:
            continue
        content = svg.line_chart_svg(
            series,
            title=f"{name}: correlation with production proportion by class",
            y_label="pearson r",
            y_range=(-1.0, 1.0),
        )
        (config.out / f"class_curves_{name}.svg").write_text(content)
        count += 1
    return count


def _item_error_figures(config, item_reports) -> int:
    count = 0
    for report in item_reports:
        points = [
            (item.mean_error, item.mcdip, item.word, item.grammatical_class)
            for item in report.items
        ]
        content = svg.scatter_svg(
            points,
            title=f"per-word prediction error, {report.age_months} months",
            x_label="mean predicted - observed (positive = over-prediction)",
            y_label="production proportion",
        )
        (config.out / f"item_errors_{report.age_months}.svg").write_text(content)
        count += 1
    return count


def main(argv=None) -> int:
    """Entry point mapping the error taxonomy onto exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return 1
    except ConvergenceError as exc:
        click.echo(f"non-convergence: {exc}", err=True)
        return 3
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except ProkwoError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
