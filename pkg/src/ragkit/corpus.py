"""Source documents to cleaned text to fixed-budget chunks, plus corpus storage.

The pipeline is extract (HTML to text when needed), clean (regex normalization,
idempotent), chunk (greedy split at whitespace within a character budget).
Storage is two JSONL files: documents.jsonl and chunks.jsonl.
"""

from __future__ import annotations

import hashlib
import json
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable, Iterable, Sequence

import requests

SOURCE_TYPES = ("forum", "guideline", "literature", "web_article")
FORMATS = ("html", "markdown", "plain")
DEFAULT_MAX_CHARS = 1200

# Subtrees dropped entirely; elements that open or close a line break.
_SKIPPED_TAGS = {"script", "style", "template", "noscript"}
_BLOCK_TAGS = {
    "address", "article", "aside", "blockquote", "br", "dd", "div", "dl", "dt",
    "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4",
    "h5", "h6", "header", "hr", "li", "main", "nav", "ol", "p", "pre", "section",
    "table", "tbody", "td", "tfoot", "th", "thead", "tr", "ul",
}


class IngestError(Exception):
    """Every input failed, or an input batch could not be processed at all."""


@dataclass(frozen=True)
class SourceDocument:
    id: str
    source_url: str
    source_type: str
    format: str
    raw_text: str
    retrieved_at: str

    def __post_init__(self) -> None:
        if not self.raw_text:
            raise ValueError("raw_text must be non-empty")
        if self.source_type not in SOURCE_TYPES:
            raise ValueError(f"unknown source_type {self.source_type!r}")
        if self.format not in FORMATS:
            raise ValueError(f"unknown format {self.format!r}")


@dataclass(frozen=True)
class CleanDocument:
    doc_id: str
    text: str
    cleaning_report: dict[str, int]


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    ordinal: int
    text: str
    span: tuple[int, int]
    source_url: str
    source_type: str


def document_id(source_url: str, raw_text: str) -> str:
    """Content hash; the same (source_url, raw_text) always maps to the same id."""
    h = hashlib.sha256()
    h.update(source_url.encode("utf-8"))
    h.update(b"\x00")
    h.update(raw_text.encode("utf-8"))
    return h.hexdigest()


class _TextExtractor(HTMLParser):
    """Streaming tag stripper: skipped subtrees dropped, block boundaries become newlines."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.pieces: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag: str, attrs: list) -> None:
        if tag in _SKIPPED_TAGS:
            self._skip_depth += 1
            return
        if self._skip_depth == 0 and tag in _BLOCK_TAGS:
            self.pieces.append("\n")

    def handle_endtag(self, tag: str) -> None:
        if tag in _SKIPPED_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if self._skip_depth == 0 and tag in _BLOCK_TAGS:
            self.pieces.append("\n")

    def handle_data(self, data: str) -> None:
        if self._skip_depth == 0:
            self.pieces.append(data)


def html_to_text(html: str) -> str:
    parser = _TextExtractor()
    parser.feed(html)
    parser.close()
    text = "".join(parser.pieces)
    lines = [line.strip() for line in text.split("\n")]
    return "\n".join(line for line in lines if line)


_PUNCT_RUN = re.compile(r"(.)\1{2,}", flags=re.DOTALL)


def _collapse_punct_runs(text: str) -> tuple[str, int]:
    hits = 0

    def repl(match: re.Match[str]) -> str:
        nonlocal hits
        ch = match.group(1)
        if unicodedata.category(ch).startswith("P"):
            hits += 1
            return ch
        return match.group(0)

    return _PUNCT_RUN.sub(repl, text), hits


def clean_text_with_report(text: str) -> tuple[str, dict[str, int]]:
    """Normalize whitespace, controls and punctuation runs; count hits per rule.

    Rule order matters for idempotence: applying the pipeline to its own output
    changes nothing and records zero hits.
    """
    report: dict[str, int] = {}

    out, n = re.subn(r"\r\n?", "\n", text)
    report["newlines_normalized"] = n

    kept = [c for c in out if not (unicodedata.category(c) == "Cc" and c not in "\t\n")]
    report["control_chars_removed"] = len(out) - len(kept)
    out = "".join(kept)

    out, n = re.subn(r"\t", " ", out)
    report["tabs_to_spaces"] = n

    out, n = _collapse_punct_runs(out)
    report["punctuation_runs_collapsed"] = n

    out, n = re.subn(r" {2,}", " ", out)
    report["space_runs_collapsed"] = n

    out, n = re.subn(r"\n{2,}", "\n", out)
    report["newline_runs_collapsed"] = n

    stripped = out.strip()
    report["edges_trimmed"] = 1 if stripped != out else 0
    return stripped, report


def clean_text(text: str) -> str:
    return clean_text_with_report(text)[0]


def chunk_spans(text: str, max_chars: int = DEFAULT_MAX_CHARS) -> list[tuple[int, int]]:
    """Greedy non-overlapping spans of at most max_chars, split at whitespace.

    Spans never start or end on whitespace, and together they cover every
    non-whitespace character exactly once. A span breaks mid-word only when a
    single token exceeds max_chars.
    """
    if max_chars < 1:
        raise ValueError("max_chars must be >= 1")
    spans: list[tuple[int, int]] = []
    n = len(text)
    pos = 0
    while pos < n:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        start = pos
        if start + max_chars >= n:
            end = n
        elif text[start + max_chars].isspace():
            end = start + max_chars
        else:
            end = start + max_chars
            cut = -1
            for i in range(end - 1, start, -1):
                if text[i].isspace():
                    cut = i
                    break
            if cut > start:
                end = cut
        piece = text[start:end].rstrip()
        spans.append((start, start + len(piece)))
        pos = end
    return spans


def chunk_text(
    text: str,
    max_chars: int = DEFAULT_MAX_CHARS,
    doc_id: str = "",
    source_url: str = "",
    source_type: str = "web_article",
) -> list[Chunk]:
    chunks = []
    for ordinal, (start, end) in enumerate(chunk_spans(text, max_chars)):
        chunks.append(
            Chunk(
                chunk_id=f"{doc_id}:{ordinal}",
                doc_id=doc_id,
                ordinal=ordinal,
                text=text[start:end],
                span=(start, end),
                source_url=source_url,
                source_type=source_type,
            )
        )
    return chunks


def extract_text(raw_text: str, fmt: str) -> str:
    if fmt == "html":
        return html_to_text(raw_text)
    # Markdown is already plain text for retrieval purposes.
    return raw_text


class CorpusStore:
    """Append-only corpus directory: documents.jsonl + chunks.jsonl."""

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._doc_ids: set[str] = set()
        self._chunks: dict[str, Chunk] = {}
        self._load()

    @property
    def documents_path(self) -> Path:
        return self.directory / "documents.jsonl"

    @property
    def chunks_path(self) -> Path:
        return self.directory / "chunks.jsonl"

    def _load(self) -> None:
        if self.documents_path.exists():
            with self.documents_path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._doc_ids.add(json.loads(line)["id"])
        if self.chunks_path.exists():
            with self.chunks_path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    chunk = Chunk(
                        chunk_id=obj["chunk_id"],
                        doc_id=obj["doc_id"],
                        ordinal=int(obj["ordinal"]),
                        text=obj["text"],
                        span=(int(obj["span"][0]), int(obj["span"][1])),
                        source_url=obj["source_url"],
                        source_type=obj["source_type"],
                    )
                    self._chunks[chunk.chunk_id] = chunk

    @property
    def document_count(self) -> int:
        return len(self._doc_ids)

    @property
    def chunk_count(self) -> int:
        return len(self._chunks)

    def has_document(self, doc_id: str) -> bool:
        return doc_id in self._doc_ids

    def get_chunk(self, chunk_id: str) -> Chunk | None:
        return self._chunks.get(chunk_id)

    def iter_chunks(self) -> Iterable[Chunk]:
        return iter(self._chunks.values())

    def add(self, doc: SourceDocument, chunks: Sequence[Chunk]) -> None:
        if doc.id in self._doc_ids:
            raise ValueError(f"document {doc.id} already stored")
        with self.documents_path.open("a", encoding="utf-8") as fh:
            fh.write(
                json.dumps(
                    {
                        "id": doc.id,
                        "source_url": doc.source_url,
                        "source_type": doc.source_type,
                        "format": doc.format,
                        "raw_text": doc.raw_text,
                        "retrieved_at": doc.retrieved_at,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )
        with self.chunks_path.open("a", encoding="utf-8") as fh:
            for chunk in chunks:
                fh.write(
                    json.dumps(
                        {
                            "chunk_id": chunk.chunk_id,
                            "doc_id": chunk.doc_id,
                            "ordinal": chunk.ordinal,
                            "text": chunk.text,
                            "span": list(chunk.span),
                            "source_url": chunk.source_url,
                            "source_type": chunk.source_type,
                        },
                        sort_keys=True,
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        self._doc_ids.add(doc.id)
        for chunk in chunks:
            self._chunks[chunk.chunk_id] = chunk


@dataclass
class IngestReport:
    n_documents: int = 0
    n_chunks: int = 0
    n_added: int = 0
    n_skipped_duplicates: int = 0
    errors: list[dict[str, str]] = field(default_factory=list)

    def manifest(self) -> dict[str, int]:
        return {"n_documents": self.n_documents, "n_chunks": self.n_chunks}


def _sniff_format(name: str, text: str) -> str:
    suffix = Path(name.split("?")[0]).suffix.lower()
    if suffix in (".html", ".htm"):
        return "html"
    if suffix in (".md", ".markdown"):
        return "markdown"
    if suffix == ".txt":
        return "plain"
    if text.lstrip()[:1] == "<" and ">" in text:
        return "html"
    return "plain"


Fetcher = Callable[[str], str]


def _read_input(location: str, fetch: Fetcher | None) -> str:
    if location.startswith(("http://", "https://")):
        if fetch is not None:
            return fetch(location)
        response = requests.get(location, timeout=30)
        response.raise_for_status()
        return response.text
    return Path(location).read_text(encoding="utf-8")


def ingest(
    inputs: Sequence[tuple[str, str]],
    store: CorpusStore,
    max_chars: int = DEFAULT_MAX_CHARS,
    fetch: Fetcher | None = None,
    now: Callable[[], str] | None = None,
) -> IngestReport:
    """Read (location, source_type) inputs into the store; duplicates are no-ops.

    Individual failures are collected and ingestion continues; only a batch
    where every input failed raises.
    """
    clock = now if now is not None else lambda: datetime.now(timezone.utc).isoformat()
    report = IngestReport()
    for location, source_type in inputs:
        try:
            raw_text = _read_input(location, fetch)
            if not raw_text:
                raise ValueError("empty document")
            fmt = _sniff_format(location, raw_text)
            source_url = location if location.startswith(("http://", "https://")) else f"file://{Path(location).resolve()}"
            doc_id = document_id(source_url, raw_text)
            if store.has_document(doc_id):
                report.n_skipped_duplicates += 1
                continue
            doc = SourceDocument(
                id=doc_id,
                source_url=source_url,
                source_type=source_type,
                format=fmt,
                raw_text=raw_text,
                retrieved_at=clock(),
            )
            cleaned = clean_text(extract_text(raw_text, fmt))
            chunks = chunk_text(
                cleaned,
                max_chars=max_chars,
                doc_id=doc_id,
                source_url=source_url,
                source_type=source_type,
            )
            store.add(doc, chunks)
            report.n_added += 1
        except Exception as exc:
            report.errors.append({"input": location, "error": str(exc)})
    if inputs and len(report.errors) == len(inputs):
        raise IngestError(f"all {len(inputs)} inputs failed; first error: {report.errors[0]['error']}")
    report.n_documents = store.document_count
    report.n_chunks = store.chunk_count
    return report
