import sys
from pathlib import Path

import pytest

from storygraph.documents import Document

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "scripts"))

FIXTURE_DIR = ROOT / "fixtures"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURE_DIR


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture
def tiny_corpus() -> list[Document]:
    """Three-document corpus used by the hand-built index and BM25 oracles."""
    return [
        Document("d1", "fixture", "", "acme buys beta"),
        Document("d2", "fixture", "", "acme profits rise"),
        Document("d3", "fixture", "", "beta fails"),
    ]


def make_doc(doc_id: str, body: str, source: str = "fixture", title: str = "") -> Document:
    return Document(doc_id, source, title, body)
