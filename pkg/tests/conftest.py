"""Pytest configuration and fixtures."""
from pathlib import Path
import pytest

from tempora.timeml import load_corpus

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def timeml_dir() -> Path:
    """Hand-written TimeML corpus: every relType, one dangling TLINK, one inconsistent document."""
    return FIXTURES / "timeml"


@pytest.fixture
def cue_dir() -> Path:
    """Sentences with explicit before/after/during cues."""
    return FIXTURES / "cues"


@pytest.fixture
def corpus(timeml_dir):
    return load_corpus(timeml_dir)


@pytest.fixture
def docs(corpus):
    return {d.doc_id: d for d in corpus}
