"""Survey word list and parent-report production data.

The lexicon fixes the row/column order of every matrix and predictor vector
in an analysis run: non-excluded entries get dense indices 0..V-1 in file
order. MCDIp is the per-age proportion of surveyed children reported to
produce each word.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import MAX_AGE_MONTHS, MIN_AGE_MONTHS
from .errors import DataError

GRAMMATICAL_CLASSES = ("noun", "verb", "adjective", "function_word", "other")


@dataclass(frozen=True)
class LexiconEntry:
    word: str
    mcdi_category: str
    grammatical_class: str
    excluded: bool
    index: int | None  # dense index, None for excluded entries


@dataclass(frozen=True)
class Lexicon:
    entries: tuple[LexiconEntry, ...]

    @property
    def size(self) -> int:
        """Number of non-excluded words (the V of every matrix)."""
        return sum(1 for e in self.entries if not e.excluded)

    @property
    def words(self) -> tuple[str, ...]:
        """Non-excluded words in index order."""
        return tuple(e.word for e in self.entries if not e.excluded)

    @property
    def classes(self) -> tuple[str, ...]:
        """Grammatical class per non-excluded word, index-aligned."""
        return tuple(e.grammatical_class for e in self.entries if not e.excluded)

    def index_of(self, word: str) -> int | None:
        return self.index_map.get(word)

    @property
    def index_map(self) -> dict[str, int]:
        # Built lazily; frozen dataclass, so cache via object.__setattr__.
        cached = self.__dict__.get("_index_map_cache")
        if cached is None:
            cached = {
                e.word: e.index for e in self.entries if not e.excluded
            }
            object.__setattr__(self, "_index_map_cache", cached)
        return cached


def load_lexicon(
    rows: Iterable[Mapping[str, str]],
    exclusion_list: Iterable[str] = (),
) -> Lexicon:
    """Build a Lexicon from word-list rows plus an exclusion word set.

    Each row needs ``word``, ``mcdi_category`` and ``grammatical_class``; an
    optional ``excluded`` column (0/1) is OR-ed with the exclusion list.
    Raises on duplicate non-excluded words and unknown class labels.
    """
    excluded_words = {w.strip().lower() for w in exclusion_list}
    entries: list[LexiconEntry] = []
    seen: set[str] = set()
    next_index = 0
    for row in rows:
        word = str(row["word"]).strip().lower()
        if not word:
            raise DataError("lexicon row with empty word")
        gram = str(row["grammatical_class"]).strip()
        if gram not in GRAMMATICAL_CLASSES:
            raise DataError(
                f"unknown grammatical_class {gram!r} for {word!r}; "
                f"expected one of {GRAMMATICAL_CLASSES}"
            )
        flagged = str(row.get("excluded", "0")).strip() in ("1", "true", "True")
        is_excluded = flagged or word in excluded_words
        if not is_excluded:
            if word in seen:
                raise DataError(f"duplicate non-excluded lexicon word {word!r}")
            seen.add(word)
        entries.append(
            LexiconEntry(
                word=word,
                mcdi_category=str(row.get("mcdi_category", "")).strip(),
                grammatical_class=gram,
                excluded=is_excluded,
                index=next_index if not is_excluded else None,
            )
        )
        if not is_excluded:
            next_index += 1
    return Lexicon(tuple(entries))


def load_lexicon_csv(path: str | Path, exclusion_list: Iterable[str] = ()) -> Lexicon:
    with open(path, newline="", encoding="utf-8") as fh:
        return load_lexicon(csv.DictReader(fh), exclusion_list)


@dataclass(frozen=True)
class Administration:
    """One MCDI survey: which lexicon indices a child produces at an age."""

    child_id: str
    age_months: int
    produced: frozenset[int]

    def __post_init__(self):
        if not MIN_AGE_MONTHS <= self.age_months <= MAX_AGE_MONTHS:
            raise DataError(
                f"administration {self.child_id!r} at {self.age_months} months "
                f"outside [{MIN_AGE_MONTHS}, {MAX_AGE_MONTHS}]"
            )


@dataclass(frozen=True)
class ProductionRecord:
    child_id: str
    age_months: int
    word_index: int
    produced: int


class MCDIpTable:
    """Per-age production proportions: age -> length-V vector in [0, 1].

    Ages with zero administrations are absent, not zero-filled; asking for
    one raises DataError.
    """

    def __init__(self, values: dict[int, np.ndarray], counts: dict[int, int]):
        self._values = {age: np.asarray(v, dtype=float) for age, v in values.items()}
        self._counts = dict(counts)

    @property
    def ages(self) -> tuple[int, ...]:
        return tuple(sorted(self._values))

    def has_age(self, age: int) -> bool:
        return age in self._values

    def row(self, age: int) -> np.ndarray:
        if age not in self._values:
            raise DataError(f"no administrations at age {age} months")
        return self._values[age]

    def n_administrations(self, age: int) -> int:
        if age not in self._counts:
            raise DataError(f"no administrations at age {age} months")
        return self._counts[age]


def compute_mcdip(
    administrations: Sequence[Administration], lexicon: Lexicon
) -> MCDIpTable:
    """Tally per-age production proportions over exact-month buckets."""
    size = lexicon.size
    sums: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    for admin in administrations:
        acc = sums.get(admin.age_months)
        if acc is None:
            acc = sums[admin.age_months] = np.zeros(size, dtype=np.int64)
            counts[admin.age_months] = 0
        counts[admin.age_months] += 1
        for idx in admin.produced:
            if not 0 <= idx < size:
                raise DataError(
                    f"administration {admin.child_id!r}: word index {idx} "
                    f"outside 0..{size - 1}"
                )
            acc[idx] += 1
    values = {age: sums[age] / counts[age] for age in sums}
    return MCDIpTable(values, counts)


def production_records(
    administrations: Sequence[Administration], lexicon: Lexicon
) -> list[ProductionRecord]:
    """Expand surveys to one binary record per (administration, word)."""
    size = lexicon.size
    records = []
    for admin in administrations:
        for idx in range(size):
            records.append(
                ProductionRecord(
                    child_id=admin.child_id,
                    age_months=admin.age_months,
                    word_index=idx,
                    produced=1 if idx in admin.produced else 0,
                )
            )
    return records


def load_administrations_csv(
    path: str | Path, lexicon: Lexicon
) -> list[Administration]:
    """Read long-format survey rows (child_id, age_months, word, produced).

    Rows for excluded words are ignored; rows for words absent from the
    lexicon entirely are a data error. Missing (child, word) rows count as
    not produced.
    """
    lexicon_words = {e.word for e in lexicon.entries}
    produced: dict[tuple[str, int], set[int]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"child_id", "age_months", "word", "produced"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise DataError(
                f"{path}: expected columns {sorted(required)}, "
                f"got {reader.fieldnames}"
            )
        for row_no, row in enumerate(reader, start=2):
            word = row["word"].strip().lower()
            if word not in lexicon_words:
                raise DataError(f"{path}:{row_no}: word {word!r} not in lexicon")
            try:
                age = int(row["age_months"])
                flag = int(row["produced"])
            except ValueError as exc:
                raise DataError(f"{path}:{row_no}: {exc}")
            key = (row["child_id"].strip(), age)
            produced.setdefault(key, set())
            idx = lexicon.index_of(word)
            if idx is not None and flag:
                produced[key].add(idx)
    return [
        Administration(child_id=child, age_months=age, produced=frozenset(indices))
        for (child, age), indices in sorted(produced.items())
    ]


def write_mcdip_csv(
    table: MCDIpTable, lexicon: Lexicon, path: str | Path
) -> int:
    """Emit age_months, word, mcdip, n_administrations rows; returns row count."""
    words = lexicon.words
    n_rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["age_months", "word", "mcdip", "n_administrations"])
        for age in table.ages:
            row = table.row(age)
            n = table.n_administrations(age)
            for idx, word in enumerate(words):
                writer.writerow([age, word, repr(float(row[idx])), n])
                n_rows += 1
    return n_rows


def load_mcdip_csv(path: str | Path, lexicon: Lexicon) -> MCDIpTable:
    values: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            age = int(row["age_months"])
            idx = lexicon.index_of(row["word"])
            if idx is None:
                raise DataError(f"{path}: word {row['word']!r} not in lexicon index")
            if age not in values:
                values[age] = np.full(lexicon.size, np.nan)
                counts[age] = int(row["n_administrations"])
            values[age][idx] = float(row["mcdip"])
    for age, vec in values.items():
        if np.isnan(vec).any():
            raise DataError(f"{path}: incomplete mcdip vector at age {age}")
    return MCDIpTable(values, counts)
