import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prokwo.corpus import (
    ChatParseError,
    Corpus,
    corpus_to_records,
    cumulative_slice,
    load_chat_dir,
    load_chat_file,
    normalize_tokens,
    parse_chat,
    parse_normalized,
)
from prokwo.errors import DataError

from conftest import make_corpus, random_corpus


class TestNormalizeTokens:
    def test_plain_utterance(self):
        assert normalize_tokens("Look at the doggie .") == ["look", "at", "the", "doggie"]

    def test_chat_markup_stripped(self):
        assert normalize_tokens("the &-um dog [!]") == ["the", "dog"]

    def test_angle_brackets_removed(self):
        assert normalize_tokens("<I want> [//] I need juice .") == ["i", "need", "juice"]

    def test_at_codes_removed(self):
        assert normalize_tokens("woof @o the dog") == ["woof", "the", "dog"]

    def test_pure_punctuation_dropped(self):
        assert normalize_tokens("+... ? !") == []

    def test_empty_output_permitted(self):
        assert normalize_tokens("[laughs] &=coughs") == []

    def test_apostrophes_kept(self):
        assert normalize_tokens("don't go") == ["don't", "go"]

    @given(st.text(max_size=80))
    @settings(max_examples=300)
    def test_idempotent(self, raw):
        once = normalize_tokens(raw)
        again = normalize_tokens(" ".join(once))
        assert once == again


CHAT_MINIMAL = """@UTF8
@Begin
@ID:\teng|x|CHI|1;06.00|male|||Target_Child|||
*MOT:\thello there .
*MOT:\tsee the dog ?
@End
"""


class TestParseChat:
    def test_age_and_utterance_count(self):
        doc = parse_chat(CHAT_MINIMAL, doc_id="t1")
        assert doc.child_age_months == 18
        assert len(doc.utterances) == 2
        assert doc.utterances[0].speaker_code == "MOT"

    def test_no_utterance_lines(self):
        doc = parse_chat("@Begin\n@ID:\teng|x|CHI|2;00.00|||||Target_Child|||\n@End\n", "t2")
        assert doc.child_age_months == 24
        assert doc.utterances == ()

    def test_missing_target_child_id(self):
        doc = parse_chat("*MOT:\thi .\n", "t3")
        assert doc.child_age_months is None
        assert len(doc.utterances) == 1

    def test_malformed_utterance_line(self):
        with pytest.raises(ChatParseError) as err:
            parse_chat("*MOT hello no colon\n", "t4")
        assert "line 1" in str(err.value)

    def test_age_truncates_days(self):
        doc = parse_chat("@ID:\teng|x|CHI|2;11.29|||||Target_Child|||\n", "t5")
        assert doc.child_age_months == 35

    def test_dependent_tiers_ignored(self):
        raw = "*MOT:\tsee the dog .\n%com:\tpointing\n*MOT:\tyes .\n"
        doc = parse_chat(raw, "t6")
        assert len(doc.utterances) == 2


# Hand-tokenized reference transcriptions for three fixture files.
HAND_TOKENIZED = {
    "demo_18": [
        ("MOT", ["look", "at", "the", "big", "dog"]),
        ("CHI", ["dog"]),
        ("MOT", ["do", "you", "see", "the", "dog"]),
        ("MOT", ["the", "dog", "can", "go", "woof"]),
        ("FAT", ["where", "did", "the", "ball", "go"]),
        ("MOT", ["you", "want", "more", "juice"]),
    ],
    "demo_20": [
        ("MOT", ["eat", "your", "hot", "food"]),
        ("MOT", ["the", "dog", "is", "hot"]),
        ("CHI", ["more"]),
        ("MOT", ["you", "want", "more", "juice", "in", "the", "cup"]),
        ("MOT", ["where", "is", "the", "big", "cup"]),
    ],
    "demo_21": [
        ("MOT", ["you", "want", "the", "cup"]),
        ("MOT", ["see", "the", "dog", "eat"]),
        ("CHI", ["eat"]),
        ("MOT", ["the", "dog", "can", "eat", "more"]),
        ("MOT", ["go", "see", "where", "the", "ball", "went"]),
    ],
}


def test_fixture_files_match_hand_tokenization(fixtures_dir):
    for name, expected in HAND_TOKENIZED.items():
        doc = load_chat_file(fixtures_dir / "chat" / f"{name}.cha")
        got = [(u.speaker_code, list(u.tokens)) for u in doc.utterances]
        assert got == expected, name


def test_continuation_lines_join(fixtures_dir):
    doc = load_chat_file(fixtures_dir / "chat" / "demo_24.cha")
    first = doc.utterances[0].tokens
    assert first[:4] == ("this", "is", "a", "very")
    assert "cup" in first and "juice" in first  # from the continuation line


def test_load_chat_dir_sorted_and_aged(fixtures_dir):
    corpus, failures = load_chat_dir(fixtures_dir / "chat")
    assert failures == []
    assert corpus.document_count == 9
    ids = [d.doc_id for d in corpus.documents]
    assert ids == sorted(ids)
    ages = {d.doc_id: d.child_age_months for d in corpus.documents}
    assert ages["demo_18"] == 18
    assert ages["demo_noage"] is None


class TestParseNormalized:
    def test_single_record(self):
        corpus = parse_normalized(
            [
                {
                    "doc_id": "a",
                    "child_age_months": 20,
                    "utterances": [{"speaker": "MOT", "tokens": ["The", "Dog"]}],
                }
            ]
        )
        assert corpus.document_count == 1
        assert corpus.documents[0].utterances[0].tokens == ("the", "dog")

    def test_duplicate_doc_id(self):
        records = [
            {"doc_id": "a", "child_age_months": 20, "utterances": []},
            {"doc_id": "a", "child_age_months": 22, "utterances": []},
        ]
        with pytest.raises(DataError, match="duplicate"):
            parse_normalized(records)

    def test_missing_doc_id(self):
        with pytest.raises(DataError, match="doc_id"):
            parse_normalized([{"child_age_months": 20, "utterances": []}])

    def test_raw_text_records_are_tokenized(self):
        corpus = parse_normalized(
            [
                {
                    "doc_id": "a",
                    "child_age_months": 20,
                    "utterances": [{"speaker": "MOT", "raw_text": "the &-um dog ."}],
                }
            ]
        )
        assert corpus.documents[0].utterances[0].tokens == ("the", "dog")

    def test_round_trip_from_chat(self, fixtures_dir):
        corpus, _ = load_chat_dir(fixtures_dir / "chat")
        again = parse_normalized(corpus_to_records(corpus))
        assert again == corpus


class TestCumulativeSlice:
    def test_cutoff_filters(self):
        corpus = make_corpus(
            [
                ("a", 14, [("MOT", ["hi"])]),
                ("b", 18, [("MOT", ["hi"])]),
                ("c", 24, [("MOT", ["hi"])]),
            ]
        )
        sl = cumulative_slice(corpus, 18)
        assert {d.doc_id for d in sl.documents} == {"a", "b"}

    def test_missing_age_skipped_with_reason(self):
        corpus = make_corpus([("a", None, [("MOT", ["hi"])]), ("b", 20, [])])
        sl = cumulative_slice(corpus, 24)
        assert sl.skipped == (("a", "missing-age"),)
        assert [d.doc_id for d in sl.documents] == ["b"]

    def test_cutoff_range_enforced(self):
        corpus = make_corpus([("a", 18, [])])
        with pytest.raises(DataError):
            cumulative_slice(corpus, 31)
        with pytest.raises(DataError):
            cumulative_slice(corpus, 15)

    def test_speaker_filter_applied_by_iteration(self):
        corpus = make_corpus(
            [("a", 20, [("MOT", ["the", "dog"]), ("CHI", ["dog"])])]
        )
        default = cumulative_slice(corpus, 24)
        assert list(default.iter_token_lists()) == [("the", "dog")]
        everyone = cumulative_slice(corpus, 24, excluded_speakers=None)
        assert len(list(everyone.iter_token_lists())) == 2

    @given(st.integers(0, 2**31 - 1), st.integers(16, 30), st.integers(16, 30))
    @settings(max_examples=25, deadline=None)
    def test_monotone_in_cutoff(self, seed, a, b):
        import numpy as np

        corpus, _ = random_corpus(np.random.default_rng(seed), max_docs=12)
        lo, hi = min(a, b), max(a, b)
        small = {d.doc_id for d in cumulative_slice(corpus, lo).documents}
        large = {d.doc_id for d in cumulative_slice(corpus, hi).documents}
        assert small <= large
