"""Top-k chunk retrieval: embed the question, search the index, attach chunk text."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

from .corpus import Chunk, clean_text
from .embeddings import Embedder
from .vector_store import VectorStore

DEFAULT_K = 3


class RetrievalError(Exception):
    """The question cannot be retrieved for (empty, or empty after cleaning)."""


class CorpusSyncError(RetrievalError):
    """The index references a chunk the corpus storage does not hold."""


class ChunkLookup(Protocol):
    def get_chunk(self, chunk_id: str) -> Chunk | None: ...


@dataclass(frozen=True)
class ContextHit:
    chunk_id: str
    score: float
    source_url: str
    source_type: str
    text: str


@dataclass(frozen=True)
class RetrievedContext:
    question: str
    k_requested: int
    hits: tuple[ContextHit, ...]

    @property
    def is_empty(self) -> bool:
        return not self.hits

    def source_urls(self) -> list[str]:
        return [hit.source_url for hit in self.hits]


class Retriever:
    """Stateless over an immutable index snapshot; `calls` counts invocations."""

    def __init__(
        self,
        store: VectorStore,
        chunks: ChunkLookup,
        embedder: Embedder,
        default_k: int = DEFAULT_K,
    ) -> None:
        self.store = store
        self.chunks = chunks
        self.embedder = embedder
        self.default_k = default_k
        self.calls = 0

    def retrieve(self, question: str, k: int | None = None) -> RetrievedContext:
        self.calls += 1
        if k is None:
            k = self.default_k
        if not question or not question.strip():
            raise RetrievalError("question must be non-empty")
        # The query goes through the same cleaning as the corpus so both sides
        # of the similarity are represented identically.
        cleaned = clean_text(question)
        if not cleaned:
            raise RetrievalError("question is empty after cleaning")
        vector = self.embedder.embed([cleaned])[0]
        hits = []
        for hit in self.store.search(vector, k):
            chunk = self.chunks.get_chunk(hit.chunk_id)
            if chunk is None or not chunk.text:
                raise CorpusSyncError(
                    f"chunk {hit.chunk_id!r} is indexed but missing from corpus storage"
                )
            hits.append(
                ContextHit(
                    chunk_id=hit.chunk_id,
                    score=hit.score,
                    source_url=hit.source_url,
                    source_type=hit.source_type,
                    text=chunk.text,
                )
            )
        return RetrievedContext(question=question, k_requested=k, hits=tuple(hits))
