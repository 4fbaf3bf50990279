"""Transcript ingestion: CHAT parsing, token normalization, and age slicing.

Two input formats are supported: a minimal subset of CHAT (``@`` headers,
``*XXX:`` utterance tiers, ``%`` dependent tiers) and a line-delimited
normalized record format (one JSON document per line). Parsed values are
immutable and safe to share across threads.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import ChatParseError, DataError

log = logging.getLogger(__name__)

#: Speaker codes excluded from counting by default: the target child's own
#: speech. Pass an empty set to include all speakers.
DEFAULT_EXCLUDED_SPEAKERS = frozenset({"CHI"})

MIN_AGE_MONTHS = 16
MAX_AGE_MONTHS = 30

# Material in [...] or <...> is annotation (error codes, retracing marks),
# never lexical.
_BRACKETED = re.compile(r"\[[^\]]*\]|<[^>]*>")
_AGE = re.compile(r"^(\d+);(\d+)?(?:\.(\d*))?")
# Stripped from token edges. Apostrophes and hyphens stay: they are lexical
# (clitics, compounds).
_EDGE_PUNCT = ".,;:!?\"()[]{}<>+/\\^=~`«»„“”‘’"
_HAS_ALNUM = re.compile(r"[^\W_]", re.UNICODE)


def normalize_tokens(raw_utterance: str) -> list[str]:
    """Lowercase and tokenize one utterance, stripping CHAT markup.

    Bracketed material (``[...]``, ``<...>``) is removed, codes beginning
    with ``&`` or ``@`` are dropped, and tokens without any word character
    (bare punctuation, terminators like ``+...``) are discarded. The output
    is a fixed point: normalizing the joined output changes nothing.
    """
    text = _BRACKETED.sub(" ", raw_utterance).lower()
    tokens = []
    for tok in text.split():
        tok = tok.strip(_EDGE_PUNCT)
        if tok.startswith("&") or tok.startswith("@"):
            continue
        if tok and _HAS_ALNUM.search(tok):
            tokens.append(tok)
    return tokens


@dataclass(frozen=True)
class Utterance:
    """One transcript line: a speaker code and its normalized tokens."""

    speaker_code: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class Document:
    """A transcript with optional target-child age metadata."""

    doc_id: str
    child_age_months: int | None
    utterances: tuple[Utterance, ...]
    source: str = ""

    def __post_init__(self):
        if self.child_age_months is not None and self.child_age_months < 0:
            raise DataError(f"{self.doc_id}: negative child_age_months")


@dataclass(frozen=True)
class Corpus:
    """An id-unique collection of documents."""

    documents: tuple[Document, ...]

    def __post_init__(self):
        seen = set()
        for doc in self.documents:
            if doc.doc_id in seen:
                raise DataError(f"duplicate doc_id {doc.doc_id!r}")
            seen.add(doc.doc_id)

    @property
    def document_count(self) -> int:
        return len(self.documents)

    def merge(self, other: "Corpus") -> "Corpus":
        return Corpus(self.documents + other.documents)


@dataclass(frozen=True)
class CorpusSlice:
    """Documents with child age at or below a cutoff, plus the speaker filter
    that all downstream counting must apply."""

    age_cutoff_months: int
    documents: tuple[Document, ...]
    excluded_speakers: frozenset[str]
    skipped: tuple[tuple[str, str], ...] = ()

    def iter_token_lists(self) -> Iterator[tuple[str, ...]]:
        """Token lists of all utterances passing the speaker filter."""
        for doc in self.documents:
            for utt in doc.utterances:
                if utt.speaker_code not in self.excluded_speakers:
                    yield utt.tokens

    def iter_documents(self) -> Iterator[tuple[Document, list[tuple[str, ...]]]]:
        """Pairs of (document, speaker-filtered token lists)."""
        for doc in self.documents:
            yield doc, [
                utt.tokens
                for utt in doc.utterances
                if utt.speaker_code not in self.excluded_speakers
            ]


def _age_to_months(age_text: str) -> int | None:
    """``years;months.days`` -> whole months, truncating days."""
    m = _AGE.match(age_text.strip())
    if not m:
        return None
    years = int(m.group(1))
    months = int(m.group(2)) if m.group(2) else 0
    return years * 12 + months


def parse_chat(raw_text: str, doc_id: str, source: str = "") -> Document:
    """Parse a minimal CHAT transcript into a Document.

    ``*XXX:`` tiers become utterances in order; tab-indented lines continue
    the previous tier. The target child's age is read from the ``@ID`` line
    whose participant code is CHI (or role Target_Child). ``%`` tiers and
    other headers are ignored. A ``*`` line without a colon raises
    :class:`ChatParseError` with its line number.
    """
    utterances: list[Utterance] = []
    age_months: int | None = None
    # (speaker, text) of the tier currently being assembled, so that
    # continuation lines can extend it before tokenization.
    pending: tuple[str, str] | None = None

    def flush():
        nonlocal pending
        if pending is not None:
            speaker, text = pending
            utterances.append(Utterance(speaker, tuple(normalize_tokens(text))))
            pending = None

    for line_no, line in enumerate(raw_text.splitlines(), start=1):
        line = line.replace("﻿", "")
        if not line.strip():
            continue
        if line[0] in "\t ":
            # Continuation of the previous tier; only * tiers are kept.
            if pending is not None:
                pending = (pending[0], pending[1] + " " + line.strip())
            continue
        if line.startswith("*"):
            flush()
            head, sep, text = line.partition(":")
            if not sep:
                raise ChatParseError(
                    f"utterance tier without colon: {line!r}", line_no=line_no
                )
            pending = (head[1:].strip(), text.strip())
        elif line.startswith("@"):
            flush()
            if line.startswith("@ID"):
                _, _, value = line.partition(":")
                parts = [p.strip() for p in value.split("|")]
                code = parts[2] if len(parts) > 2 else ""
                role = parts[7] if len(parts) > 7 else ""
                if (code == "CHI" or role == "Target_Child") and age_months is None:
                    age_months = _age_to_months(parts[3]) if len(parts) > 3 else None
        else:
            # % tiers and anything else: terminate any pending * tier.
            flush()
    flush()

    if age_months is None:
        log.warning("%s: no target-child @ID age; document has no age", doc_id)
    return Document(
        doc_id=doc_id,
        child_age_months=age_months,
        utterances=tuple(utterances),
        source=source,
    )


def parse_normalized(records: Iterable[Mapping]) -> Corpus:
    """Build a Corpus from normalized records.

    Each record carries ``doc_id``, ``child_age_months`` and ``utterances``;
    an utterance supplies either pre-tokenized ``tokens`` (passed through
    except for lowercasing) or ``raw_text`` (run through the tokenizer).
    """
    documents = []
    for record in records:
        doc_id = record.get("doc_id")
        if not doc_id:
            raise DataError("normalized record missing doc_id")
        age = record.get("child_age_months")
        utterances = []
        for utt in record.get("utterances", ()):
            speaker = utt.get("speaker", utt.get("speaker_code", ""))
            if "tokens" in utt:
                tokens = tuple(str(t).lower() for t in utt["tokens"])
            else:
                tokens = tuple(normalize_tokens(utt.get("raw_text", "")))
            utterances.append(Utterance(speaker, tokens))
        documents.append(
            Document(
                doc_id=str(doc_id),
                child_age_months=None if age is None else int(age),
                utterances=tuple(utterances),
                source=str(record.get("source", "")),
            )
        )
    return Corpus(tuple(documents))


def corpus_to_records(corpus: Corpus) -> list[dict]:
    """Serialize to the normalized record schema (inverse of parse_normalized)."""
    return [
        {
            "doc_id": doc.doc_id,
            "child_age_months": doc.child_age_months,
            "utterances": [
                {"speaker": utt.speaker_code, "tokens": list(utt.tokens)}
                for utt in doc.utterances
            ],
            "source": doc.source,
        }
        for doc in corpus.documents
    ]


def cumulative_slice(
    corpus: Corpus,
    age_cutoff_months: int,
    excluded_speakers: frozenset[str] | None = DEFAULT_EXCLUDED_SPEAKERS,
) -> CorpusSlice:
    """All documents with known child age <= cutoff.

    Documents without age metadata are skipped (listed in ``slice.skipped``
    with a reason), not rejected. ``excluded_speakers=None`` or an empty set
    includes every speaker.
    """
    if not MIN_AGE_MONTHS <= age_cutoff_months <= MAX_AGE_MONTHS:
        raise DataError(
            f"age cutoff {age_cutoff_months} outside "
            f"[{MIN_AGE_MONTHS}, {MAX_AGE_MONTHS}]"
        )
    if excluded_speakers is None:
        excluded_speakers = frozenset()
    kept = []
    skipped = []
    for doc in corpus.documents:
        if doc.child_age_months is None:
            skipped.append((doc.doc_id, "missing-age"))
        elif doc.child_age_months <= age_cutoff_months:
            kept.append(doc)
    return CorpusSlice(
        age_cutoff_months=age_cutoff_months,
        documents=tuple(kept),
        excluded_speakers=frozenset(excluded_speakers),
        skipped=tuple(skipped),
    )


# ---------------------------------------------------------------------------
# File-level loaders


def load_chat_file(path: str | Path, doc_id: str | None = None) -> Document:
    path = Path(path)
    if doc_id is None:
        doc_id = path.stem
    return parse_chat(path.read_text(encoding="utf-8", errors="replace"),
                      doc_id=doc_id, source=str(path))


def load_chat_dir(directory: str | Path) -> tuple[Corpus, list[tuple[str, str]]]:
    """Parse every ``*.cha`` file under a directory (recursively).

    Files that fail to parse are reported as (doc_id, reason) pairs rather
    than aborting the whole ingest; real transcript collections are messy.
    Paths are sorted so document order is reproducible.
    """
    directory = Path(directory)
    paths = sorted(directory.rglob("*.cha"))
    if not paths:
        raise DataError(f"no .cha files under {directory}")
    documents = []
    failures = []
    for path in paths:
        doc_id = path.relative_to(directory).with_suffix("").as_posix()
        try:
            documents.append(load_chat_file(path, doc_id=doc_id))
        except ChatParseError as exc:
            failures.append((doc_id, f"parse-error: {exc}"))
    return Corpus(tuple(documents)), failures


def load_normalized_file(path: str | Path) -> Corpus:
    """Read line-delimited normalized records (one JSON object per line)."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{line_no}: invalid JSON record: {exc}")
    return parse_normalized(records)


def write_normalized_file(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in corpus_to_records(corpus):
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def load_corpus(path: str | Path, corpus_format: str) -> tuple[Corpus, list[tuple[str, str]]]:
    """Load a corpus from a directory or file in either supported format."""
    path = Path(path)
    if corpus_format == "chat":
        if path.is_dir():
            return load_chat_dir(path)
        return Corpus((load_chat_file(path),)), []
    if corpus_format == "normalized":
        if path.is_dir():
            paths = sorted(
                p for p in path.rglob("*") if p.suffix in (".jsonl", ".ndjson")
            )
            if not paths:
                raise DataError(f"no .jsonl/.ndjson files under {path}")
            corpus = Corpus(())
            for p in paths:
                corpus = corpus.merge(load_normalized_file(p))
            return corpus, []
        return load_normalized_file(path), []
    raise DataError(f"unknown corpus format {corpus_format!r}")
