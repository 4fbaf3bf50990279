"""Forward-window co-occurrence counting over corpus slices.

Counts are token-level and flat (no distance weighting): for every position
i whose token is a lexicon word, each lexicon word in the next ``window``
positions of the same utterance adds one to ``counts[word_i, word_j]``.
Windows never cross utterance boundaries.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sps
from sklearn.base import BaseEstimator

from .corpus import CorpusSlice
from .errors import DataError
from .lexicon import Lexicon

WINDOW_FILLER_MODES = ("all", "mcdi-only")


@dataclass(frozen=True)
class CooccurrenceMatrix:
    """V x V forward-window counts for one cumulative age slice."""

    age_cutoff_months: int
    counts: sps.csr_matrix

    @property
    def size(self) -> int:
        return self.counts.shape[0]

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.counts.sum(axis=1)).ravel()

    def nonzero_per_row(self) -> np.ndarray:
        return np.diff(self.counts.indptr)


def _index_stream(
    token_lists: Iterable[Sequence[str]],
    index_map: dict[str, int],
    window: int,
    fillers: str,
) -> np.ndarray:
    """Concatenate utterances into one index array, -1 for non-lexicon tokens.

    Utterances are separated by ``window`` sentinel positions so that no
    window pair can span a boundary. Under ``mcdi-only`` fillers, non-lexicon
    tokens are dropped before positions are assigned, so they do not consume
    window slots.
    """
    sep = [-1] * window
    chunks = []
    for tokens in token_lists:
        idx = [index_map.get(t, -1) for t in tokens]
        if fillers == "mcdi-only":
            idx = [i for i in idx if i >= 0]
        if idx:
            chunks.append(idx)
            chunks.append(sep)
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.asarray([i for chunk in chunks for i in chunk], dtype=np.int64)


def _count_pairs(
    stream: np.ndarray, size: int, window: int, include_diagonal: bool
) -> np.ndarray:
    """Dense V x V pair counts from an index stream (bincount accumulation)."""
    flat = np.zeros(size * size, dtype=np.int64)
    for offset in range(1, window + 1):
        if offset >= len(stream):
            break
        a = stream[:-offset]
        b = stream[offset:]
        mask = (a >= 0) & (b >= 0)
        if not include_diagonal:
            mask &= a != b
        if mask.any():
            flat += np.bincount(a[mask] * size + b[mask], minlength=size * size)
    return flat.reshape(size, size)


class CooccurrenceCounter(BaseEstimator):
    """Estimator-style builder for forward-window co-occurrence counts.

    Parameters
    ----------
    window : int
        Forward window width in token positions (>= 1).
    include_diagonal : bool
        Count a word co-occurring with another instance of itself.
    window_fillers : {"all", "mcdi-only"}
        Whether non-lexicon tokens consume window positions.

    Attributes
    ----------
    counts_ : scipy.sparse.csr_matrix
        V x V nonnegative integer counts (row = target word).
    age_cutoff_months_ : int
        Cutoff of the slice the counter was fit on.
    """

    def __init__(self, window=7, include_diagonal=True, window_fillers="all"):
        self.window = window
        self.include_diagonal = include_diagonal
        self.window_fillers = window_fillers

    def _validate(self):
        if self.window < 1:
            raise DataError(f"window must be >= 1, got {self.window}")
        if self.window_fillers not in WINDOW_FILLER_MODES:
            raise DataError(
                f"window_fillers must be one of {WINDOW_FILLER_MODES}, "
                f"got {self.window_fillers!r}"
            )

    def fit(self, corpus_slice: CorpusSlice, lexicon: Lexicon):
        self._validate()
        size = lexicon.size
        stream = _index_stream(
            corpus_slice.iter_token_lists(),
            lexicon.index_map,
            self.window,
            self.window_fillers,
        )
        dense = _count_pairs(stream, size, self.window, self.include_diagonal)
        self.counts_ = sps.csr_matrix(dense)
        self.age_cutoff_months_ = corpus_slice.age_cutoff_months
        return self

    def matrix(self) -> CooccurrenceMatrix:
        return CooccurrenceMatrix(self.age_cutoff_months_, self.counts_)


def build_cooccurrence(
    corpus_slice: CorpusSlice,
    lexicon: Lexicon,
    window: int = 7,
    include_diagonal: bool = True,
    window_fillers: str = "all",
) -> CooccurrenceMatrix:
    counter = CooccurrenceCounter(
        window=window,
        include_diagonal=include_diagonal,
        window_fillers=window_fillers,
    )
    return counter.fit(corpus_slice, lexicon).matrix()


def write_cooccurrence_csv(
    matrices: Sequence[CooccurrenceMatrix], lexicon: Lexicon, path: str | Path
) -> int:
    """Debug dump: one row per nonzero (age, target, context) count."""
    words = lexicon.words
    n_rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["age_months", "target_word", "context_word", "count"])
        for matrix in matrices:
            coo = matrix.counts.tocoo()
            order = np.lexsort((coo.col, coo.row))
            for i in order:
                writer.writerow(
                    [
                        matrix.age_cutoff_months,
                        words[coo.row[i]],
                        words[coo.col[i]],
                        int(coo.data[i]),
                    ]
                )
                n_rows += 1
    return n_rows
