from __future__ import annotations

import json
from pathlib import Path

import pytest

from ragkit.corpus import CorpusStore, SourceDocument, chunk_text, clean_text, document_id, extract_text
from ragkit.embeddings import DeterministicEmbedder
from ragkit.vector_store import EntryMeta, VectorStore

DATA_DIR = Path(__file__).parent / "data"

ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, ok in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}")


def load_fixture(name: str):
    return json.loads((DATA_DIR / name).read_text(encoding="utf-8"))


def make_documents(n: int, prefix: str = "doc") -> list[SourceDocument]:
    """Synthetic plain-text documents with distinct vocabulary per doc."""
    docs = []
    for i in range(n):
        words = " ".join(f"{prefix}{i}word{j}" for j in range(40))
        text = f"Topic {prefix}{i}. {words}. Closing remark for {prefix}{i}."
        url = f"https://kb.example/{prefix}/{i}"
        docs.append(
            SourceDocument(
                id=document_id(url, text),
                source_url=url,
                source_type="web_article",
                format="plain",
                raw_text=text,
                retrieved_at="2026-01-01T00:00:00Z",
            )
        )
    return docs


def populate_corpus(store: CorpusStore, docs, max_chars: int = 1200) -> None:
    for doc in docs:
        cleaned = clean_text(extract_text(doc.raw_text, doc.format))
        store.add(
            doc,
            chunk_text(
                cleaned,
                max_chars=max_chars,
                doc_id=doc.id,
                source_url=doc.source_url,
                source_type=doc.source_type,
            ),
        )


def build_index(store: CorpusStore, dim: int = 64, metric: str = "cosine") -> VectorStore:
    embedder = DeterministicEmbedder(dim)
    chunks = sorted(store.iter_chunks(), key=lambda c: c.chunk_id)
    index = VectorStore(dim=dim, metric=metric)
    for chunk, vec in zip(chunks, embedder.embed([c.text for c in chunks])):
        index.add(EntryMeta(chunk.chunk_id, chunk.source_url, chunk.source_type), vec)
    return index


@pytest.fixture
def small_corpus(tmp_path):
    store = CorpusStore(tmp_path / "corpus")
    populate_corpus(store, make_documents(5))
    return store
