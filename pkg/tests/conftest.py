import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from support import char_vocab, keyword_corpus  # noqa: E402


@pytest.fixture(scope="session")
def ascii_vocab():
    return char_vocab()


@pytest.fixture(scope="session")
def desk_corpus():
    """(corpus, vocab, stopwords) for end-to-end training tests."""
    return keyword_corpus()


@pytest.fixture
def ledger_path(tmp_path):
    return tmp_path / "ledger.jsonl"
