"""Exact brute-force vector index with checksummed on-disk persistence.

Vectors are stored as float32 row-major. Scores are always computed in float64
from the float32 matrix, so a save/load round trip cannot change any result:
the persisted matrix is the matrix both sides score against.

On-disk layout (one directory):
    manifest.json   dim, metric, count, format_version
    vectors.f32le   count*dim little-endian float32 values + 4-byte LE CRC32
    entries.jsonl   one JSON object per row, aligned with the matrix rows
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .embeddings import as_vector

METRICS = ("cosine", "inner_product", "squared_l2")
FORMAT_VERSION = 1


class VectorStoreError(Exception):
    """Structural problem with the index: bad input, corrupt files, mismatched shapes."""


@dataclass(frozen=True)
class EntryMeta:
    """What the index knows about one vector; chunk text lives in corpus storage."""

    chunk_id: str
    source_url: str
    source_type: str


@dataclass(frozen=True)
class SearchHit:
    chunk_id: str
    score: float
    source_url: str
    source_type: str


@dataclass
class VectorStore:
    dim: int
    metric: str = "cosine"
    _entries: list[EntryMeta] = field(default_factory=list)
    _ids: set[str] = field(default_factory=set)
    _rows: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.metric not in METRICS:
            raise VectorStoreError(f"unknown metric {self.metric!r}, expected one of {METRICS}")
        if self.dim < 1:
            raise VectorStoreError("dim must be >= 1")

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> list[EntryMeta]:
        return list(self._entries)

    def vector_bytes(self) -> bytes:
        return self._matrix().astype("<f4").tobytes(order="C")

    def iter_items(self) -> Iterable[tuple[EntryMeta, np.ndarray]]:
        for entry, row in zip(self._entries, self._rows):
            yield entry, row.astype(np.float64)

    def add(self, entry: EntryMeta, vector: Sequence[float] | np.ndarray) -> int:
        try:
            vec = as_vector(vector, dim=self.dim)
        except ValueError as exc:
            raise VectorStoreError(str(exc)) from exc
        if not np.any(vec):
            raise VectorStoreError(f"refusing to index the zero vector for {entry.chunk_id!r}")
        if entry.chunk_id in self._ids:
            raise VectorStoreError(f"duplicate chunk_id {entry.chunk_id!r}")
        self._ids.add(entry.chunk_id)
        self._entries.append(entry)
        self._rows.append(vec.astype(np.float32))
        return len(self._entries)

    def add_many(self, items: Iterable[tuple[EntryMeta, Sequence[float] | np.ndarray]]) -> int:
        for entry, vector in items:
            self.add(entry, vector)
        return len(self._entries)

    def _matrix(self) -> np.ndarray:
        if not self._rows:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack(self._rows)

    def _scores(self, query: np.ndarray) -> np.ndarray:
        matrix = self._matrix().astype(np.float64)
        if self.metric == "inner_product":
            return matrix @ query
        if self.metric == "cosine":
            norms = np.linalg.norm(matrix, axis=1)
            q_norm = float(np.linalg.norm(query))
            if q_norm == 0.0:
                raise VectorStoreError("cannot search with the zero vector")
            return (matrix @ query) / (norms * q_norm)
        # squared_l2: higher score must mean closer, so the distance is negated.
        diffs = matrix - query
        return -np.einsum("ij,ij->i", diffs, diffs)

    def search(self, query: Sequence[float] | np.ndarray, k: int) -> list[SearchHit]:
        """Exact top-k by score descending, ties broken by ascending chunk_id."""
        if k < 0:
            raise VectorStoreError("k must be >= 0")
        if k == 0 or not self._entries:
            return []
        try:
            q = as_vector(query, dim=self.dim)
        except ValueError as exc:
            raise VectorStoreError(str(exc)) from exc
        scores = self._scores(q)
        order = sorted(
            range(len(self._entries)),
            key=lambda i: (-scores[i], self._entries[i].chunk_id),
        )
        hits = []
        for i in order[: min(k, len(order))]:
            e = self._entries[i]
            hits.append(SearchHit(e.chunk_id, float(scores[i]), e.source_url, e.source_type))
        return hits

    def save(self, directory: str | Path) -> None:
        path = Path(directory)
        path.mkdir(parents=True, exist_ok=True)
        raw = self.vector_bytes()
        checksum = zlib.crc32(raw) & 0xFFFFFFFF
        (path / "vectors.f32le").write_bytes(raw + checksum.to_bytes(4, "little"))
        manifest = {
            "format_version": FORMAT_VERSION,
            "metric": self.metric,
            "dim": self.dim,
            "count": len(self._entries),
        }
        (path / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        with (path / "entries.jsonl").open("w", encoding="utf-8") as fh:
            for e in self._entries:
                record = {
                    "chunk_id": e.chunk_id,
                    "source_url": e.source_url,
                    "source_type": e.source_type,
                }
                fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, directory: str | Path) -> "VectorStore":
        path = Path(directory)
        try:
            manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise VectorStoreError(f"no index manifest in {path}") from exc
        version = manifest.get("format_version")
        if version != FORMAT_VERSION:
            raise VectorStoreError(
                f"index format_version {version!r} not supported, expected {FORMAT_VERSION}"
            )
        dim = int(manifest["dim"])
        count = int(manifest["count"])
        blob = (path / "vectors.f32le").read_bytes()
        if len(blob) < 4:
            raise VectorStoreError("vector file truncated: missing checksum")
        raw, footer = blob[:-4], blob[-4:]
        expected = int.from_bytes(footer, "little")
        actual = zlib.crc32(raw) & 0xFFFFFFFF
        if actual != expected:
            raise VectorStoreError(
                f"vector file checksum mismatch: stored {expected:#010x}, computed {actual:#010x}"
            )
        if len(raw) != count * dim * 4:
            raise VectorStoreError(
                f"vector file holds {len(raw)} bytes, manifest implies {count * dim * 4}"
            )
        matrix = np.frombuffer(raw, dtype="<f4").reshape(count, dim)
        store = cls(dim=dim, metric=manifest["metric"])
        with (path / "entries.jsonl").open("r", encoding="utf-8") as fh:
            lines = [line for line in fh if line.strip()]
        if len(lines) != count:
            raise VectorStoreError(f"entries.jsonl has {len(lines)} rows, manifest says {count}")
        for i, line in enumerate(lines):
            obj = json.loads(line)
            entry = EntryMeta(
                chunk_id=obj["chunk_id"],
                source_url=obj["source_url"],
                source_type=obj["source_type"],
            )
            if entry.chunk_id in store._ids:
                raise VectorStoreError(f"duplicate chunk_id {entry.chunk_id!r} in entries.jsonl")
            store._ids.add(entry.chunk_id)
            store._entries.append(entry)
            store._rows.append(np.array(matrix[i], dtype=np.float32))
        return store
