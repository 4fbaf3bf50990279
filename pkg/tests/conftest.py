import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from prokwo.corpus import Corpus, Document, Utterance
from prokwo.lexicon import load_lexicon_csv

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon_csv(FIXTURES / "lexicon.csv")


def make_corpus(doc_specs):
    """Corpus from [(doc_id, age, [(speaker, [tokens]), ...]), ...]."""
    docs = []
    for doc_id, age, utterances in doc_specs:
        docs.append(
            Document(
                doc_id=doc_id,
                child_age_months=age,
                utterances=tuple(
                    Utterance(speaker, tuple(tokens)) for speaker, tokens in utterances
                ),
            )
        )
    return Corpus(tuple(docs))


def random_corpus(rng, max_docs=50, max_utterances=30, vocab_size=40,
                  max_tokens=12, age_range=(14, 30), speakers=("MOT", "CHI", "FAT")):
    """Random corpus over an integer-string vocabulary w0..w{V-1}."""
    vocab = [f"w{i}" for i in range(vocab_size)]
    n_docs = int(rng.integers(1, max_docs + 1))
    specs = []
    for d in range(n_docs):
        age = int(rng.integers(age_range[0], age_range[1] + 1))
        n_utt = int(rng.integers(1, max_utterances + 1))
        utterances = []
        for _ in range(n_utt):
            speaker = speakers[int(rng.integers(0, len(speakers)))]
            n_tok = int(rng.integers(1, max_tokens + 1))
            tokens = [vocab[int(rng.integers(0, vocab_size))] for _ in range(n_tok)]
            utterances.append((speaker, tokens))
        specs.append((f"d{d:03d}", age, utterances))
    return make_corpus(specs), vocab
