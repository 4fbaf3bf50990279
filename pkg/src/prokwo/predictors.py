"""The four distributional predictors and the shuffled-score baseline.

Per word and cumulative age slice:

* frequency_log10 -- log10 of the word's token count (missing when 0)
* lexical_diversity -- share of lexicon words it co-occurs with at least once
* document_diversity -- share of all corpus documents containing it
* pro_kwo -- its co-occurrence-weighted average of co-occurring words'
  production proportions (missing when the word never co-occurs)

Missing values carry a reason code instead of an imputed number.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .cooccurrence import CooccurrenceMatrix, build_cooccurrence
from .corpus import Corpus, CorpusSlice, DEFAULT_EXCLUDED_SPEAKERS, cumulative_slice
from .errors import DataError, InsufficientDataError
from .lexicon import Lexicon, MCDIpTable
from .stats import pearson

#: Canonical predictor order; maps model names to predictors.csv columns.
PREDICTOR_COLUMNS = {
    "frequency": "frequency_log10",
    "lexical_diversity": "lexical_diversity",
    "document_diversity": "document_diversity",
    "pro_kwo": "pro_kwo",
}
PREDICTOR_NAMES = tuple(PREDICTOR_COLUMNS)

REASON_ZERO_FREQUENCY = "zero-frequency"
REASON_NO_COOCCURRENCE = "no-cooccurrence"
REASON_EMPTY_SLICE = "empty-slice"


def token_counts(corpus_slice: CorpusSlice, lexicon: Lexicon) -> np.ndarray:
    """Raw occurrence count per lexicon word over the (filtered) slice."""
    counts = np.zeros(lexicon.size, dtype=np.int64)
    index_map = lexicon.index_map
    for tokens in corpus_slice.iter_token_lists():
        for tok in tokens:
            idx = index_map.get(tok)
            if idx is not None:
                counts[idx] += 1
    return counts


def log_frequency(corpus_slice: CorpusSlice, lexicon: Lexicon) -> np.ndarray:
    """log10 token counts; NaN where the count is zero."""
    counts = token_counts(corpus_slice, lexicon)
    values = np.full(lexicon.size, np.nan)
    nonzero = counts > 0
    values[nonzero] = np.log10(counts[nonzero])
    return values


def lexical_diversity(matrix: CooccurrenceMatrix) -> np.ndarray:
    """Proportion of lexicon words each word co-occurs with (row nonzeros / V)."""
    return matrix.nonzero_per_row() / matrix.size


def document_diversity(
    corpus_slice: CorpusSlice, lexicon: Lexicon, total_documents: int
) -> np.ndarray:
    """Proportion of all corpus documents containing each word.

    The numerator scans only the slice (cumulative by construction); the
    denominator is the full-corpus document count, held constant across ages.
    """
    if total_documents <= 0:
        raise DataError("total_documents must be positive")
    doc_hits = np.zeros(lexicon.size, dtype=np.int64)
    index_map = lexicon.index_map
    for _, token_lists in corpus_slice.iter_documents():
        present: set[int] = set()
        for tokens in token_lists:
            for tok in tokens:
                idx = index_map.get(tok)
                if idx is not None:
                    present.add(idx)
        for idx in present:
            doc_hits[idx] += 1
    return doc_hits / total_documents


def pro_kwo(matrix: CooccurrenceMatrix, mcdip_row: np.ndarray) -> np.ndarray:
    """Weighted-over-unweighted co-occurrence sums; NaN where a row is empty.

    For word w with counts c and production proportions m:
    sum_v(c[v] * m[v]) / sum_v(c[v]). The result is a convex combination of
    the m values on w's nonzero columns, so it always lies in [0, 1].
    """
    mcdip_row = np.asarray(mcdip_row, dtype=float)
    if mcdip_row.shape != (matrix.size,):
        raise DataError(
            f"mcdip vector length {mcdip_row.shape} does not match "
            f"lexicon size {matrix.size}"
        )
    unweighted = matrix.row_sums().astype(float)
    weighted = matrix.counts.dot(mcdip_row)
    values = np.full(matrix.size, np.nan)
    has_ctx = unweighted > 0
    values[has_ctx] = weighted[has_ctx] / unweighted[has_ctx]
    return values


@dataclass(frozen=True)
class ShuffleResult:
    age_cutoff_months: int
    mean_r: float
    correlations: np.ndarray  # one r per iteration, in iteration order


def pro_kwo_shuffle(
    matrix: CooccurrenceMatrix,
    mcdip_row: np.ndarray,
    mcdip_true: np.ndarray,
    n_shuffles: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> ShuffleResult:
    """Null distribution of the score under permuted production proportions.

    Each iteration permutes ``mcdip_row`` (PCG64-seeded Fisher-Yates via
    numpy), recomputes the score for every word, and correlates it with the
    unpermuted ``mcdip_true`` over words with any co-occurrence. Iteration
    seeds are spawned from ``seed`` up front, so results are bit-identical
    for a given seed regardless of thread count.
    """
    if n_shuffles < 1:
        raise DataError("n_shuffles must be >= 1")
    mcdip_row = np.asarray(mcdip_row, dtype=float)
    mcdip_true = np.asarray(mcdip_true, dtype=float)
    unweighted = matrix.row_sums().astype(float)
    has_ctx = unweighted > 0
    if has_ctx.sum() < 3:
        raise InsufficientDataError(
            "fewer than 3 words with co-occurrence; shuffle correlation undefined"
        )
    target = mcdip_true[has_ctx]
    counts = matrix.counts
    denom = unweighted[has_ctx]

    seeds = np.random.SeedSequence(seed).spawn(n_shuffles)

    def one(i: int) -> float:
        rng = np.random.Generator(np.random.PCG64(seeds[i]))
        permuted = rng.permutation(mcdip_row)
        shuffled = counts.dot(permuted)[has_ctx] / denom
        return pearson(shuffled, target)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            correlations = np.fromiter(
                pool.map(one, range(n_shuffles)), dtype=float, count=n_shuffles
            )
    else:
        correlations = np.fromiter(
            (one(i) for i in range(n_shuffles)), dtype=float, count=n_shuffles
        )
    return ShuffleResult(
        age_cutoff_months=matrix.age_cutoff_months,
        mean_r=float(correlations.mean()),
        correlations=correlations,
    )


@dataclass(frozen=True)
class PredictorColumns:
    """All predictor values for one age, index-aligned with the lexicon."""

    frequency_log10: np.ndarray
    lexical_diversity: np.ndarray
    document_diversity: np.ndarray
    pro_kwo: np.ndarray
    missing_reason: tuple[str, ...]

    def column(self, name: str) -> np.ndarray:
        return getattr(self, PREDICTOR_COLUMNS[name])


class PredictorTable:
    """Per-age, per-word predictor values with missingness reasons."""

    def __init__(
        self,
        words: Sequence[str],
        classes: Sequence[str],
        per_age: dict[int, PredictorColumns],
    ):
        if len(words) != len(classes):
            raise DataError("words and classes must be index-aligned")
        self.words = tuple(words)
        self.classes = tuple(classes)
        self._per_age = dict(per_age)

    @property
    def ages(self) -> tuple[int, ...]:
        return tuple(sorted(self._per_age))

    def columns(self, age: int) -> PredictorColumns:
        if age not in self._per_age:
            raise DataError(f"no predictors computed for age {age}")
        return self._per_age[age]

    def column(self, age: int, name: str) -> np.ndarray:
        return self.columns(age).column(name)

    def to_csv(self, path: str | Path) -> int:
        n_rows = 0
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "age_months",
                    "word",
                    "grammatical_class",
                    "frequency_log10",
                    "lexical_diversity",
                    "document_diversity",
                    "pro_kwo",
                    "missing_reason",
                ]
            )
            for age in self.ages:
                cols = self._per_age[age]
                for i, word in enumerate(self.words):
                    writer.writerow(
                        [
                            age,
                            word,
                            self.classes[i],
                            _cell(cols.frequency_log10[i]),
                            _cell(cols.lexical_diversity[i]),
                            _cell(cols.document_diversity[i]),
                            _cell(cols.pro_kwo[i]),
                            cols.missing_reason[i],
                        ]
                    )
                    n_rows += 1
        return n_rows

    @classmethod
    def from_csv(cls, path: str | Path) -> "PredictorTable":
        rows_by_age: dict[int, list[dict]] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                rows_by_age.setdefault(int(row["age_months"]), []).append(row)
        if not rows_by_age:
            raise DataError(f"{path}: no predictor rows")
        words: tuple[str, ...] | None = None
        classes: tuple[str, ...] | None = None
        per_age = {}
        for age, rows in rows_by_age.items():
            age_words = tuple(r["word"] for r in rows)
            age_classes = tuple(r["grammatical_class"] for r in rows)
            if words is None:
                words, classes = age_words, age_classes
            elif age_words != words:
                raise DataError(f"{path}: word order differs across ages")
            per_age[age] = PredictorColumns(
                frequency_log10=_parse_column(rows, "frequency_log10"),
                lexical_diversity=_parse_column(rows, "lexical_diversity"),
                document_diversity=_parse_column(rows, "document_diversity"),
                pro_kwo=_parse_column(rows, "pro_kwo"),
                missing_reason=tuple(r["missing_reason"] for r in rows),
            )
        return cls(words, classes, per_age)


def _cell(value: float) -> str:
    return "" if np.isnan(value) else repr(float(value))


def _parse_column(rows: list[dict], key: str) -> np.ndarray:
    return np.asarray(
        [float(r[key]) if r[key] != "" else np.nan for r in rows], dtype=float
    )


def _columns_for_age(
    corpus: Corpus,
    lexicon: Lexicon,
    mcdip_row: np.ndarray,
    age: int,
    window: int,
    include_diagonal: bool,
    window_fillers: str,
    excluded_speakers: frozenset[str] | None,
) -> PredictorColumns:
    corpus_slice = cumulative_slice(corpus, age, excluded_speakers)
    size = lexicon.size
    if not corpus_slice.documents:
        nan = np.full(size, np.nan)
        return PredictorColumns(
            frequency_log10=nan.copy(),
            lexical_diversity=nan.copy(),
            document_diversity=nan.copy(),
            pro_kwo=nan.copy(),
            missing_reason=(REASON_EMPTY_SLICE,) * size,
        )
    matrix = build_cooccurrence(
        corpus_slice,
        lexicon,
        window=window,
        include_diagonal=include_diagonal,
        window_fillers=window_fillers,
    )
    freq = log_frequency(corpus_slice, lexicon)
    ld = lexical_diversity(matrix)
    dd = document_diversity(corpus_slice, lexicon, corpus.document_count)
    pk = pro_kwo(matrix, mcdip_row)
    reasons = []
    for i in range(size):
        parts = []
        if np.isnan(freq[i]):
            parts.append(REASON_ZERO_FREQUENCY)
        if np.isnan(pk[i]):
            parts.append(REASON_NO_COOCCURRENCE)
        reasons.append(";".join(parts))
    return PredictorColumns(
        frequency_log10=freq,
        lexical_diversity=ld,
        document_diversity=dd,
        pro_kwo=pk,
        missing_reason=tuple(reasons),
    )


def predictor_table(
    corpus: Corpus,
    lexicon: Lexicon,
    mcdip_table: MCDIpTable,
    ages: Sequence[int],
    window: int = 7,
    include_diagonal: bool = True,
    window_fillers: str = "all",
    excluded_speakers: frozenset[str] | None = DEFAULT_EXCLUDED_SPEAKERS,
    threads: int = 1,
) -> PredictorTable:
    """All four predictors for every requested age.

    Every age needs production proportions (the weighted score is undefined
    without them); ages are computed independently, so they parallelize.
    """
    ages = sorted(set(int(a) for a in ages))
    if not ages:
        raise DataError("no ages requested")
    for age in ages:
        if not mcdip_table.has_age(age):
            raise DataError(f"no administrations at age {age} months")

    def for_age(age: int) -> PredictorColumns:
        return _columns_for_age(
            corpus,
            lexicon,
            mcdip_table.row(age),
            age,
            window,
            include_diagonal,
            window_fillers,
            excluded_speakers,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            columns = list(pool.map(for_age, ages))
    else:
        columns = [for_age(age) for age in ages]
    per_age = dict(zip(ages, columns))
    return PredictorTable(lexicon.words, lexicon.classes, per_age)
