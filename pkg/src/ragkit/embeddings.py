"""Text embeddings: pluggable HTTP provider, an offline deterministic embedder, and distance functions.

Vectors are plain 1-D float64 numpy arrays. Everything produced by this module
is L2-normalized at embed time, which makes cosine similarity and inner product
interchangeable downstream.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np
import requests

DEFAULT_DIM = 768
NORM_TOLERANCE = 1e-6

# FNV-1a, 32 bit. Fixed constants so the deterministic embedder is reproducible
# across runs and platforms without any seed.
_FNV_OFFSET = 0x811C9DC5
_FNV_PRIME = 0x01000193


class EmbeddingProviderError(Exception):
    """Transient failure talking to the embedding endpoint (retriable)."""


class EmbeddingConfigError(Exception):
    """Non-retriable misconfiguration, e.g. the endpoint returns the wrong dimension."""


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    """Where and how to reach an embeddings endpoint."""

    base_url: str
    model_name: str
    dim: int = DEFAULT_DIM
    batch_size: int = 32
    timeout: float = 30.0
    api_key_env: str = "EMBEDDING_API_KEY"

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")


def as_vector(values: Sequence[float] | np.ndarray, dim: int | None = None) -> np.ndarray:
    """Validate and convert to a finite 1-D float64 array."""
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {vec.shape}")
    if dim is not None and vec.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {vec.shape[0]}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("vector contains non-finite values")
    return vec


def l2_normalize(values: Sequence[float] | np.ndarray) -> np.ndarray:
    vec = as_vector(values)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return vec / norm


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def cosine_similarity(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Cosine of the angle between a and b, clamped to [-1, 1]."""
    va, vb = as_vector(a), as_vector(b)
    _check_dims(va, vb)
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValueError("cosine similarity undefined for the zero vector")
    value = float(np.dot(va, vb)) / (norm_a * norm_b)
    return max(-1.0, min(1.0, value))


def inner_product(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    va, vb = as_vector(a), as_vector(b)
    _check_dims(va, vb)
    return float(np.dot(va, vb))


def squared_l2(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    va, vb = as_vector(a), as_vector(b)
    _check_dims(va, vb)
    diff = va - vb
    return float(np.dot(diff, diff))


def _fnv1a(data: bytes) -> int:
    value = _FNV_OFFSET
    for byte in data:
        value ^= byte
        value = (value * _FNV_PRIME) & 0xFFFFFFFF
    return value


def _char_trigrams(text: str) -> list[str]:
    if len(text) >= 3:
        return [text[i : i + 3] for i in range(len(text) - 2)]
    # Shorter inputs hash the whole string so no non-empty text maps to zero.
    return [text]


def deterministic_embed(text: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Hash character 3-grams into a signed bag-of-features vector, L2-normalized.

    Pure function of (text, dim): bucket = FNV-1a(gram) mod dim, sign from the
    low bit of FNV-1a(gram + 0x01). Accumulation iterates grams in sorted order
    so the float summation order is fixed.
    """
    if not text:
        raise ValueError("unembeddable empty text")
    vec = np.zeros(dim, dtype=np.float64)
    counts = Counter(_char_trigrams(text))
    for gram in sorted(counts):
        data = gram.encode("utf-8")
        bucket = _fnv1a(data) % dim
        sign = 1.0 if _fnv1a(data + b"\x01") & 1 == 0 else -1.0
        vec[bucket] += sign * counts[gram]
    return l2_normalize(vec)


class Embedder(Protocol):
    """Anything that maps a batch of texts to normalized vectors of a fixed dim."""

    dim: int

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class DeterministicEmbedder:
    """Offline embedder used by tests and by fully local runs."""

    def __init__(self, dim: int = DEFAULT_DIM) -> None:
        self.dim = dim

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [deterministic_embed(t, self.dim) for t in texts]


BatchTransport = Callable[[list[str]], list[list[float]]]


def _http_transport(config: EmbeddingProviderConfig) -> BatchTransport:
    url = config.base_url.rstrip("/") + "/v1/embeddings"
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(config.api_key_env, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    def send(batch: list[str]) -> list[list[float]]:
        try:
            response = requests.post(
                url,
                headers=headers,
                json={"model": config.model_name, "input": batch},
                timeout=config.timeout,
            )
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise EmbeddingProviderError(f"embedding request failed: {exc}") from exc
        if response.status_code >= 500:
            raise EmbeddingProviderError(f"embedding endpoint returned {response.status_code}")
        if response.status_code >= 400:
            raise EmbeddingConfigError(
                f"embedding endpoint rejected request ({response.status_code}): {response.text[:200]}"
            )
        payload = response.json()
        rows = sorted(payload["data"], key=lambda item: item["index"])
        return [row["embedding"] for row in rows]

    return send


def embed_texts(
    config: EmbeddingProviderConfig,
    texts: Sequence[str],
    transport: BatchTransport | None = None,
) -> list[np.ndarray]:
    """Embed texts through the provider, batching by config.batch_size.

    Output order matches the input order and every vector is normalized.
    A transport callable can be injected for offline tests.
    """
    for i, text in enumerate(texts):
        if not text:
            raise ValueError(f"unembeddable empty text at position {i}")
    send = transport if transport is not None else _http_transport(config)
    vectors: list[np.ndarray] = []
    for start in range(0, len(texts), config.batch_size):
        batch = list(texts[start : start + config.batch_size])
        rows = send(batch)
        if len(rows) != len(batch):
            raise EmbeddingProviderError(
                f"provider returned {len(rows)} vectors for a batch of {len(batch)}"
            )
        for row in rows:
            vec = as_vector(row)
            if vec.shape[0] != config.dim:
                raise EmbeddingConfigError(
                    f"provider returned dim {vec.shape[0]}, configured dim is {config.dim}"
                )
            vectors.append(l2_normalize(vec))
    return vectors


class HttpEmbedder:
    """Embedder backed by an embeddings endpoint."""

    def __init__(self, config: EmbeddingProviderConfig, transport: BatchTransport | None = None) -> None:
        self.config = config
        self.dim = config.dim
        self._transport = transport

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return embed_texts(self.config, texts, transport=self._transport)


def is_normalized(vec: np.ndarray) -> bool:
    return math.isclose(float(np.linalg.norm(vec)), 1.0, abs_tol=NORM_TOLERANCE)
