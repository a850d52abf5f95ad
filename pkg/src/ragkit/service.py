"""HTTP service: ask, search, health, ingest endpoints over an engine snapshot.

Every error body has the shape {"error": {"code": ..., "message": ...}}.
The index snapshot is swapped atomically after ingest; request handlers only
ever read whichever snapshot they started with.
"""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .citations import audit, audit_to_dict, parse_answer, with_liveness
from .config import AppConfig
from .corpus import CorpusStore, ingest
from .embeddings import (
    DeterministicEmbedder,
    Embedder,
    EmbeddingProviderConfig,
    HttpEmbedder,
)
from .llm_client import (
    ChatBackend,
    GenerationBackendConfig,
    GenerationError,
    HttpChatBackend,
    StubBackend,
    generate,
)
from .prompt import build_prompt
from .retriever import CorpusSyncError, RetrievalError, Retriever
from .vector_store import EntryMeta, VectorStore, VectorStoreError

SNIPPET_CHARS = 300


class ServiceError(Exception):
    def __init__(self, status_code: int, code: str, message: str) -> None:
        super().__init__(message)
        self.status_code = status_code
        self.code = code
        self.message = message


class AskRequest(BaseModel):
    question: str = ""
    k: int | None = Field(default=None, ge=0)


class SearchRequest(BaseModel):
    question: str = ""
    k: int | None = Field(default=None, ge=0)


class IngestRequest(BaseModel):
    inputs: list[dict] = Field(default_factory=list)
    source_type: str = "web_article"


def build_embedder(config: AppConfig) -> Embedder:
    section = config.embedding
    if section.provider == "deterministic":
        return DeterministicEmbedder(section.dim)
    if section.provider == "http":
        return HttpEmbedder(
            EmbeddingProviderConfig(
                base_url=section.base_url,
                model_name=section.model_name,
                dim=section.dim,
                batch_size=section.batch_size,
                timeout=section.timeout,
                api_key_env=section.api_key_env,
            )
        )
    raise ValueError(f"unknown embedding provider {section.provider!r}")


def build_backend(config: AppConfig) -> ChatBackend:
    section = config.generation
    if section.backend == "http":
        return HttpChatBackend(
            GenerationBackendConfig(
                base_url=section.base_url,
                model_name=section.model_name,
                temperature=section.temperature,
                max_tokens=section.max_tokens,
                timeout=section.timeout,
                api_key_env=section.api_key_env,
                retries=section.retries,
            )
        )
    if section.backend == "stub:echo":
        return StubBackend("echo")
    if section.backend == "stub:empty":
        return StubBackend("empty")
    if section.backend == "stub:canned":
        fixtures = json.loads(Path(section.fixtures_path).read_text(encoding="utf-8"))
        return StubBackend("canned", fixtures)
    raise ValueError(f"unknown generation backend {section.backend!r}")


class AskEngine:
    """Retrieve, prompt, generate, parse, audit; shared by the service and the CLI."""

    def __init__(
        self,
        corpus: CorpusStore,
        store: VectorStore | None,
        embedder: Embedder,
        backend: ChatBackend,
        k: int = 3,
        char_budget: int = 12_000,
        check_live: bool = False,
        max_chars: int = 1200,
        index_dir: str | Path | None = None,
        metric: str = "cosine",
    ) -> None:
        self.corpus = corpus
        self.store = store
        self.embedder = embedder
        self.backend = backend
        self.k = k
        self.char_budget = char_budget
        self.check_live = check_live
        self.max_chars = max_chars
        self.index_dir = Path(index_dir) if index_dir is not None else None
        self.metric = metric

    @classmethod
    def from_config(cls, config: AppConfig, backend: ChatBackend | None = None) -> "AskEngine":
        corpus = CorpusStore(config.corpus.dir)
        index_dir = Path(config.index.dir)
        store: VectorStore | None = None
        if (index_dir / "manifest.json").exists():
            store = VectorStore.load(index_dir)
        return cls(
            corpus=corpus,
            store=store,
            embedder=build_embedder(config),
            backend=backend if backend is not None else build_backend(config),
            k=config.index.k,
            char_budget=config.service.char_budget,
            max_chars=config.corpus.max_chars,
            index_dir=index_dir,
            metric=config.index.metric,
        )

    def _retriever(self) -> Retriever:
        if self.store is None:
            raise ServiceError(503, "index_not_loaded", "no index loaded; build or ingest first")
        return Retriever(self.store, self.corpus, self.embedder, default_k=self.k)

    def search(self, question: str, k: int | None) -> list[dict]:
        if not question or not question.strip():
            raise ServiceError(400, "empty_question", "question must be non-empty")
        retriever = self._retriever()
        ctx = retriever.retrieve(question, k=self.k if k is None else k)
        return [
            {
                "chunk_id": hit.chunk_id,
                "source_url": hit.source_url,
                "score": hit.score,
                "snippet": hit.text[:SNIPPET_CHARS],
            }
            for hit in ctx.hits
        ]

    def ask(self, question: str, k: int | None) -> dict:
        if not question or not question.strip():
            raise ServiceError(400, "empty_question", "question must be non-empty")
        retriever = self._retriever()
        started = time.monotonic()
        ctx = retriever.retrieve(question, k=self.k if k is None else k)
        bundle = build_prompt(question, ctx, char_budget=self.char_budget)
        try:
            result = generate(self.backend, bundle)
        except GenerationError as exc:
            raise ServiceError(502, "backend_failed", str(exc)) from exc
        parsed = parse_answer(result.text)
        item_audit = audit(parsed, bundle.source_urls())
        if self.check_live:
            item_audit = with_liveness(item_audit, parsed)
        latency_ms = int((time.monotonic() - started) * 1000)
        return {
            "answer": result.text,
            "references": [{"index": r.index, "url": r.url} for r in parsed.references],
            "hits": [
                {
                    "chunk_id": hit.chunk_id,
                    "source_url": hit.source_url,
                    "score": hit.score,
                    "snippet": hit.text[:SNIPPET_CHARS],
                }
                for hit in ctx.hits
            ],
            "audit": audit_to_dict(item_audit),
            "latency_ms": latency_ms,
        }

    def health(self) -> dict:
        return {
            "status": "ok",
            "index_count": len(self.store) if self.store is not None else 0,
            "model": getattr(self.backend, "model_name", ""),
        }

    def ingest_inputs(self, inputs: Sequence[tuple[str, str]]) -> dict:
        """Ingest, embed the new chunks, extend a fresh index copy, swap it in."""
        report = ingest(inputs, self.corpus, max_chars=self.max_chars)

        dim = self.embedder.dim
        new_store = VectorStore(dim=dim, metric=self.metric)
        indexed: set[str] = set()
        if self.store is not None:
            for entry, vector in self.store.iter_items():
                new_store.add(entry, vector)
                indexed.add(entry.chunk_id)
        pending = [c for c in self.corpus.iter_chunks() if c.chunk_id not in indexed]
        pending.sort(key=lambda c: c.chunk_id)
        if pending:
            vectors = self.embedder.embed([c.text for c in pending])
            for chunk, vector in zip(pending, vectors):
                new_store.add(
                    EntryMeta(chunk.chunk_id, chunk.source_url, chunk.source_type), vector
                )
        if self.index_dir is not None:
            new_store.save(self.index_dir)
        self.store = new_store

        return {
            "n_documents": report.n_documents,
            "n_chunks": report.n_chunks,
            "n_added": report.n_added,
            "n_skipped_duplicates": report.n_skipped_duplicates,
            "errors": report.errors,
        }


def _error_json(status_code: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status_code,
        content={"error": {"code": code, "message": message}},
    )


def create_app(engine: AskEngine, cors_allowed_origins: Sequence[str] = (), static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="grounded-qa-service")

    if cors_allowed_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cors_allowed_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(ServiceError)
    async def service_error_handler(request: Request, exc: ServiceError) -> JSONResponse:
        return _error_json(exc.status_code, exc.code, exc.message)

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(request: Request, exc: RequestValidationError) -> JSONResponse:
        return _error_json(400, "invalid_request", str(exc.errors()[:1]))

    @app.exception_handler(VectorStoreError)
    async def store_error_handler(request: Request, exc: VectorStoreError) -> JSONResponse:
        return _error_json(500, "index_error", str(exc))

    @app.exception_handler(CorpusSyncError)
    async def sync_error_handler(request: Request, exc: CorpusSyncError) -> JSONResponse:
        return _error_json(500, "corpus_out_of_sync", str(exc))

    @app.exception_handler(RetrievalError)
    async def retrieval_error_handler(request: Request, exc: RetrievalError) -> JSONResponse:
        return _error_json(400, "retrieval_failed", str(exc))

    @app.post("/api/ask")
    async def api_ask(body: AskRequest) -> dict:
        return engine.ask(body.question, body.k)

    @app.post("/api/search")
    async def api_search(body: SearchRequest) -> dict:
        return {"hits": engine.search(body.question, body.k)}

    @app.get("/api/health")
    async def api_health() -> dict:
        return engine.health()

    @app.post("/api/ingest")
    async def api_ingest(body: IngestRequest) -> JSONResponse:
        inputs = []
        for item in body.inputs:
            location = item.get("location", "")
            if not location:
                raise ServiceError(400, "invalid_request", "each input needs a location")
            inputs.append((location, item.get("source_type", body.source_type)))
        report = engine.ingest_inputs(inputs)
        status = 207 if report["errors"] else 200
        return JSONResponse(status_code=status, content=report)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="static")

    return app


def create_app_from_config(config: AppConfig) -> FastAPI:
    engine = AskEngine.from_config(config)
    static_dir = config.service.static_dir or None
    return create_app(engine, config.service.cors_allowed_origins, static_dir)
