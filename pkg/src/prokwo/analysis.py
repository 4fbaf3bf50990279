"""Model assembly and inference on binary production outcomes.

Builds per-age design matrices from production records and the predictor
table, fits fixed-effects or mixed models, and derives Wald inference and
per-word prediction-error summaries.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import erfc

from .errors import ConstantInputError, DataError, InsufficientDataError
from .glm import LogisticIRLS
from .glmm import MixedLogisticRegression
from .lexicon import ProductionRecord
from .predictors import PREDICTOR_NAMES, PredictorTable
from .stats import CorrelationReport, pearson, pearson_pvalue, standardize

#: Two-sided 95% normal quantile used for all Wald intervals.
Z_95 = 1.959964

RANDOM_FACTORS = ("child", "word")


@dataclass(frozen=True)
class ModelSpec:
    """Which predictors enter the model at which age."""

    age_months: int
    predictors: tuple[str, ...]
    random_intercepts: tuple[str, ...] = RANDOM_FACTORS

    def __post_init__(self):
        if not self.predictors:
            raise DataError("predictor set must be non-empty")
        for name in self.predictors:
            if name not in PREDICTOR_NAMES:
                raise DataError(
                    f"unknown predictor {name!r}; expected one of {PREDICTOR_NAMES}"
                )
        for factor in self.random_intercepts:
            if factor not in RANDOM_FACTORS:
                raise DataError(f"unknown random factor {factor!r}")

    @property
    def model_id(self) -> str:
        if len(self.predictors) == 1:
            return f"single:{self.predictors[0]}"
        return "full" if set(self.predictors) == set(PREDICTOR_NAMES) else (
            "+".join(self.predictors)
        )


@dataclass(frozen=True)
class DesignMatrix:
    """Complete-case rows with standardized predictors and dense group ids."""

    age_months: int
    terms: tuple[str, ...]  # predictor columns of X, in order
    X: np.ndarray  # (n, len(terms)), standardized, no intercept column
    y: np.ndarray  # (n,), 0/1
    child_index: np.ndarray  # (n,), dense 0..n_children-1
    word_index: np.ndarray  # (n,), dense 0..n_words-1
    child_ids: tuple[str, ...]
    word_labels: tuple[str, ...]  # lexicon words, densified order
    word_lexicon_index: np.ndarray  # lexicon index per dense word id
    n_dropped: int

    @property
    def n_obs(self) -> int:
        return len(self.y)


def build_design(
    records: Sequence[ProductionRecord],
    table: PredictorTable,
    spec: ModelSpec,
) -> DesignMatrix:
    """Assemble the model's rows, dropping any with missing predictors.

    Predictors are standardized over the retained observation rows (each
    word's value repeated once per child), matching how the fixed effects
    are interpreted.
    """
    at_age = [r for r in records if r.age_months == spec.age_months]
    if not at_age:
        raise DataError(f"no production records at age {spec.age_months}")
    vectors = [table.column(spec.age_months, name) for name in spec.predictors]
    word_ok = np.isfinite(np.column_stack(vectors)).all(axis=1)

    kept = [r for r in at_age if word_ok[r.word_index]]
    n_dropped = len(at_age) - len(kept)
    if not kept:
        raise DataError(
            f"all rows at age {spec.age_months} dropped for missing predictors"
        )

    child_ids = sorted({r.child_id for r in kept})
    word_lex = sorted({r.word_index for r in kept})
    child_map = {c: i for i, c in enumerate(child_ids)}
    word_map = {w: i for i, w in enumerate(word_lex)}

    y = np.asarray([r.produced for r in kept], dtype=float)
    child_index = np.asarray([child_map[r.child_id] for r in kept], dtype=np.int64)
    word_index = np.asarray([word_map[r.word_index] for r in kept], dtype=np.int64)
    raw = np.column_stack(
        [vec[[r.word_index for r in kept]] for vec in vectors]
    )
    X = np.empty_like(raw)
    for j, name in enumerate(spec.predictors):
        try:
            X[:, j] = standardize(raw[:, j])
        except ConstantInputError:
            raise DataError(
                f"predictor {name!r} is constant over retained rows at "
                f"age {spec.age_months}"
            )
    return DesignMatrix(
        age_months=spec.age_months,
        terms=tuple(spec.predictors),
        X=X,
        y=y,
        child_index=child_index,
        word_index=word_index,
        child_ids=tuple(child_ids),
        word_labels=tuple(table.words[i] for i in word_lex),
        word_lexicon_index=np.asarray(word_lex, dtype=np.int64),
        n_dropped=n_dropped,
    )


@dataclass(frozen=True)
class TermInference:
    term: str
    estimate: float
    std_error: float
    z: float
    p: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class FitResult:
    age_months: int
    model_id: str
    terms: tuple[TermInference, ...]
    variance_components: dict[str, float]
    loglik: float
    status: str
    iterations: int
    gradient_norm: float
    n_obs: int
    n_dropped: int


def wald_inference(
    term_names: Sequence[str], estimates: np.ndarray, std_errors: np.ndarray
) -> tuple[TermInference, ...]:
    """z, two-tailed normal p, and 95% intervals for each term."""
    out = []
    for name, est, se in zip(term_names, estimates, std_errors):
        z = est / se
        p = float(erfc(abs(z) / np.sqrt(2.0)))
        out.append(
            TermInference(
                term=name,
                estimate=float(est),
                std_error=float(se),
                z=float(z),
                p=p,
                ci_low=float(est - Z_95 * se),
                ci_high=float(est + Z_95 * se),
            )
        )
    return tuple(out)


def fit_model(
    design: DesignMatrix,
    spec: ModelSpec,
    mixed: bool = True,
    **estimator_kwargs,
) -> tuple[FitResult, object]:
    """Fit the spec's model on a built design; returns (result, estimator)."""
    term_names = ("intercept",) + design.terms
    if mixed and spec.random_intercepts:
        groups = []
        factors = []
        if "child" in spec.random_intercepts:
            groups.append(design.child_index)
            factors.append("child")
        if "word" in spec.random_intercepts:
            groups.append(design.word_index)
            factors.append("word")
        model = MixedLogisticRegression(**estimator_kwargs)
        model.fit(design.X, design.y, groups)
        variance = {
            factor: float(v)
            for factor, v in zip(factors, model.variance_components_)
        }
        result = FitResult(
            age_months=design.age_months,
            model_id=spec.model_id,
            terms=wald_inference(term_names, model.params_, model.bse_),
            variance_components=variance,
            loglik=model.loglik_laplace_,
            status=model.status_,
            iterations=model.n_outer_evals_,
            gradient_norm=float(model.gradient_norm_),
            n_obs=design.n_obs,
            n_dropped=design.n_dropped,
        )
        return result, model
    model = LogisticIRLS(**estimator_kwargs)
    model.fit(design.X, design.y)
    result = FitResult(
        age_months=design.age_months,
        model_id=spec.model_id,
        terms=wald_inference(term_names, model.params_, model.bse_),
        variance_components={},
        loglik=model.loglik_,
        status="converged" if model.converged_ else "non-converged",
        iterations=model.n_iter_,
        gradient_norm=float(model.gradient_norm_),
        n_obs=design.n_obs,
        n_dropped=design.n_dropped,
    )
    return result, model


@dataclass(frozen=True)
class ItemError:
    word: str
    grammatical_class: str
    mean_error: float  # positive = over-prediction
    mcdip: float


@dataclass(frozen=True)
class ItemErrorReport:
    age_months: int
    items: tuple[ItemError, ...]
    correlation: CorrelationReport


def item_prediction_error(
    fit,
    design: DesignMatrix,
    mcdip_row: np.ndarray,
    classes: Sequence[str],
    include_random: bool = True,
    probabilities: np.ndarray | None = None,
) -> ItemErrorReport:
    """Per-word mean (predicted - observed) and its correlation with MCDIp.

    Predictions include the conditional random-effect modes by default.
    ``probabilities`` overrides the model's predictions (diagnostic use).
    """
    if probabilities is None:
        groups = None
        if isinstance(fit, MixedLogisticRegression):
            groups = [design.child_index, design.word_index][: len(fit.group_levels_)]
            probabilities = fit.predict_proba(
                design.X, groups=groups, include_random=include_random
            )[:, 1]
        else:
            probabilities = fit.predict_proba(design.X)[:, 1]
    probabilities = np.asarray(probabilities, dtype=float)
    if probabilities.shape != design.y.shape:
        raise DataError("probabilities must align with design rows")

    n_words = len(design.word_labels)
    residual = probabilities - design.y
    sums = np.bincount(design.word_index, weights=residual, minlength=n_words)
    counts = np.bincount(design.word_index, minlength=n_words)
    items = []
    errors = []
    mcdips = []
    for dense_id in range(n_words):
        if counts[dense_id] == 0:
            continue
        lex_idx = int(design.word_lexicon_index[dense_id])
        err = float(sums[dense_id] / counts[dense_id])
        items.append(
            ItemError(
                word=design.word_labels[dense_id],
                grammatical_class=classes[lex_idx],
                mean_error=err,
                mcdip=float(mcdip_row[lex_idx]),
            )
        )
        errors.append(err)
        mcdips.append(mcdip_row[lex_idx])
    try:
        r = pearson(errors, mcdips)
        p = pearson_pvalue(r, len(errors))
    except (InsufficientDataError, ConstantInputError):
        r, p = None, None
    correlation = CorrelationReport(
        grouping="all",
        age_months=design.age_months,
        var_a="prediction_error",
        var_b="mcdip",
        r=r,
        n=len(errors),
        p=p,
        significant_01=p is not None and p < 0.01,
    )
    return ItemErrorReport(
        age_months=design.age_months, items=tuple(items), correlation=correlation
    )


# ---------------------------------------------------------------------------
# CSV emission


def write_fits_csv(results: Sequence[FitResult], path: str | Path) -> int:
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "age_months",
                "model_id",
                "term",
                "estimate",
                "std_error",
                "z",
                "p",
                "ci_low",
                "ci_high",
            ]
        )
        for res in results:
            for term in res.terms:
                writer.writerow(
                    [
                        res.age_months,
                        res.model_id,
                        term.term,
                        repr(term.estimate),
                        repr(term.std_error),
                        repr(term.z),
                        repr(term.p),
                        repr(term.ci_low),
                        repr(term.ci_high),
                    ]
                )
                n += 1
    return n


def write_variance_components_csv(
    results: Sequence[FitResult], path: str | Path
) -> int:
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["age_months", "model_id", "factor", "variance"])
        for res in results:
            for factor, variance in res.variance_components.items():
                writer.writerow([res.age_months, res.model_id, factor, repr(variance)])
                n += 1
    return n


def write_convergence_csv(results: Sequence[FitResult], path: str | Path) -> int:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["age_months", "model_id", "status", "iterations", "gradient_norm"]
        )
        for res in results:
            writer.writerow(
                [
                    res.age_months,
                    res.model_id,
                    res.status,
                    res.iterations,
                    repr(res.gradient_norm),
                ]
            )
    return len(results)


def item_error_reports_pair(
    fit, design: DesignMatrix, mcdip_row, classes
) -> tuple[ItemErrorReport, ItemErrorReport]:
    """(mode-inclusive, fixed-effects-only) prediction-error reports."""
    return (
        item_prediction_error(fit, design, mcdip_row, classes, include_random=True),
        item_prediction_error(fit, design, mcdip_row, classes, include_random=False),
    )


def write_item_errors_csv(
    reports: Sequence[ItemErrorReport], path: str | Path
) -> int:
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["word", "grammatical_class", "age_months", "mean_error", "mcdip"]
        )
        for report in reports:
            for item in report.items:
                writer.writerow(
                    [
                        item.word,
                        item.grammatical_class,
                        report.age_months,
                        repr(item.mean_error),
                        repr(item.mcdip),
                    ]
                )
                n += 1
    return n
