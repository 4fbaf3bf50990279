"""Pearson correlation, two-tailed inference, and report generation.

Missing values (NaN) are handled by pairwise-complete deletion. P-values use
the Student-t tail identity p = I_x(df/2, 1/2) with x = df / (df + t^2),
where I is the regularized incomplete beta function.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import betainc

from .errors import ConstantInputError, DataError, InsufficientDataError

SIGNIFICANCE_LEVEL = 0.01


def _pairwise_complete(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("pearson inputs must be 1-d and equal-length")
    mask = np.isfinite(x) & np.isfinite(y)
    return x[mask], y[mask]


def pearson(x, y) -> float:
    """Product-moment correlation over pairwise-complete pairs.

    Raises InsufficientDataError below 3 complete pairs and
    ConstantInputError when either series has zero variance.
    """
    xc, yc = _pairwise_complete(x, y)
    n = len(xc)
    if n < 3:
        raise InsufficientDataError(f"need >= 3 complete pairs, have {n}")
    dx = xc - xc.mean()
    dy = yc - yc.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ConstantInputError("correlation undefined for a constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    # Rounding can push |r| a hair past 1 for collinear data.
    return min(1.0, max(-1.0, r))


def pearson_pvalue(r: float, n: int) -> float:
    """Two-tailed p for a correlation of r over n pairs (t approximation).

    |r| = 1 returns 0.0 by convention (the t statistic degenerates).
    """
    if n < 3:
        raise InsufficientDataError(f"p-value undefined for n = {n} < 3")
    if not -1.0 <= r <= 1.0:
        raise DataError(f"correlation {r} outside [-1, 1]")
    if abs(r) == 1.0:
        return 0.0
    df = n - 2
    t2 = r * r * df / (1.0 - r * r)
    return float(betainc(df / 2.0, 0.5, df / (df + t2)))


def standardize(values) -> np.ndarray:
    """Center and scale to sample standard deviation 1 (ddof = 1)."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise DataError("standardize needs a 1-d series of length >= 2")
    if not np.isfinite(x).all():
        raise DataError("standardize input contains non-finite values")
    sd = x.std(ddof=1)
    if sd == 0.0:
        raise ConstantInputError("cannot standardize a constant series")
    return (x - x.mean()) / sd


@dataclass(frozen=True)
class CorrelationReport:
    """One correlation cell: r is None when the cell is unavailable."""

    grouping: str
    age_months: int
    var_a: str
    var_b: str
    r: float | None
    n: int
    p: float | None
    significant_01: bool

    @property
    def available(self) -> bool:
        return self.r is not None


def _correlation_cell(
    grouping: str, age: int, var_a: str, var_b: str, x, y
) -> CorrelationReport:
    n = len(_pairwise_complete(x, y)[0])
    try:
        r = pearson(x, y)
        p = pearson_pvalue(r, n)
    except (InsufficientDataError, ConstantInputError):
        return CorrelationReport(
            grouping, age, var_a, var_b, None, n, None, False
        )
    return CorrelationReport(
        grouping, age, var_a, var_b, r, n, p, p < SIGNIFICANCE_LEVEL
    )


def _groups(table, grouping: str) -> list[tuple[str, np.ndarray]]:
    classes = np.asarray(table.classes)
    if grouping == "all":
        return [("all", np.ones(len(classes), dtype=bool))]
    if grouping == "by-class":
        present = sorted(set(table.classes))
        return [(cls, classes == cls) for cls in present]
    raise DataError(f"grouping must be 'all' or 'by-class', got {grouping!r}")


def correlate_predictors(
    table, ages: Sequence[int] | None = None, grouping: str = "all"
) -> list[CorrelationReport]:
    """All unordered predictor pairs, per age, per group."""
    from .predictors import PREDICTOR_NAMES  # local import to avoid a cycle

    ages = table.ages if ages is None else sorted(set(int(a) for a in ages))
    reports = []
    for age in ages:
        for group_name, mask in _groups(table, grouping):
            for i, var_a in enumerate(PREDICTOR_NAMES):
                for var_b in PREDICTOR_NAMES[i + 1 :]:
                    reports.append(
                        _correlation_cell(
                            group_name,
                            age,
                            var_a,
                            var_b,
                            table.column(age, var_a)[mask],
                            table.column(age, var_b)[mask],
                        )
                    )
    return reports


def correlate_with_outcome(
    table,
    mcdip_table,
    ages: Sequence[int] | None = None,
    grouping: str = "all",
) -> list[CorrelationReport]:
    """Each predictor against the production proportions at the same age."""
    from .predictors import PREDICTOR_NAMES

    ages = table.ages if ages is None else sorted(set(int(a) for a in ages))
    reports = []
    for age in ages:
        outcome = mcdip_table.row(age)
        for group_name, mask in _groups(table, grouping):
            for var_a in PREDICTOR_NAMES:
                reports.append(
                    _correlation_cell(
                        group_name,
                        age,
                        var_a,
                        "mcdip",
                        table.column(age, var_a)[mask],
                        outcome[mask],
                    )
                )
    return reports


def write_correlations_csv(
    reports: Sequence[CorrelationReport], path: str | Path
) -> int:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["grouping", "age_months", "var_a", "var_b", "r", "n", "p", "significant_01"]
        )
        for rep in reports:
            writer.writerow(
                [
                    rep.grouping,
                    rep.age_months,
                    rep.var_a,
                    rep.var_b,
                    "" if rep.r is None else repr(rep.r),
                    rep.n,
                    "" if rep.p is None else repr(rep.p),
                    "true" if rep.significant_01 else "false",
                ]
            )
    return len(reports)
