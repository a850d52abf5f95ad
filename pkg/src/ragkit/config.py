"""JSON configuration: one file, five sections (corpus, embedding, index, generation, service).

Environment variables override API keys only, through the api_key_env names;
every other knob lives in the file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import DEFAULT_MAX_CHARS
from .prompt import DEFAULT_CHAR_BUDGET


class ConfigError(Exception):
    """Unreadable or structurally invalid configuration file."""


@dataclass(frozen=True)
class CorpusSection:
    dir: str = "corpus"
    max_chars: int = DEFAULT_MAX_CHARS


@dataclass(frozen=True)
class EmbeddingSection:
    provider: str = "deterministic"  # deterministic | http
    base_url: str = ""
    model_name: str = ""
    dim: int = 768
    batch_size: int = 32
    timeout: float = 30.0
    api_key_env: str = "EMBEDDING_API_KEY"


@dataclass(frozen=True)
class IndexSection:
    dir: str = "index"
    metric: str = "cosine"
    k: int = 3


@dataclass(frozen=True)
class GenerationSection:
    backend: str = "http"  # http | stub:echo | stub:empty | stub:canned
    base_url: str = ""
    model_name: str = ""
    temperature: float = 0.0
    max_tokens: int = 1024
    timeout: float = 60.0
    api_key_env: str = "LLM_API_KEY"
    retries: int = 2
    fixtures_path: str = ""


@dataclass(frozen=True)
class ServiceSection:
    host: str = "127.0.0.1"
    port: int = 8000
    cors_allowed_origins: tuple[str, ...] = ()
    char_budget: int = DEFAULT_CHAR_BUDGET
    static_dir: str = ""


@dataclass(frozen=True)
class AppConfig:
    corpus: CorpusSection = field(default_factory=CorpusSection)
    embedding: EmbeddingSection = field(default_factory=EmbeddingSection)
    index: IndexSection = field(default_factory=IndexSection)
    generation: GenerationSection = field(default_factory=GenerationSection)
    service: ServiceSection = field(default_factory=ServiceSection)


_SECTION_TYPES = {
    "corpus": CorpusSection,
    "embedding": EmbeddingSection,
    "index": IndexSection,
    "generation": GenerationSection,
    "service": ServiceSection,
}


def load_config(path: str | Path) -> AppConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    stray = set(raw) - set(_SECTION_TYPES)
    if stray:
        raise ConfigError(f"unknown config sections: {sorted(stray)}")
    sections = {}
    for name, cls in _SECTION_TYPES.items():
        data = raw.get(name, {})
        if not isinstance(data, dict):
            raise ConfigError(f"config section {name!r} must be an object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"config section {name!r} has unknown keys: {sorted(unknown)}")
        if name == "service" and "cors_allowed_origins" in data:
            data = dict(data)
            data["cors_allowed_origins"] = tuple(data["cors_allowed_origins"])
        try:
            sections[name] = cls(**data)
        except TypeError as exc:
            raise ConfigError(f"config section {name!r}: {exc}") from exc
    config = AppConfig(**sections)
    _validate(config)
    return config


_PROVIDERS = ("deterministic", "http")
_METRICS = ("cosine", "inner_product", "squared_l2")
_BACKENDS = ("http", "stub:echo", "stub:empty", "stub:canned")


def _validate(config: AppConfig) -> None:
    if config.embedding.provider not in _PROVIDERS:
        raise ConfigError(
            f"embedding.provider must be one of {_PROVIDERS}, got {config.embedding.provider!r}"
        )
    if config.index.metric not in _METRICS:
        raise ConfigError(f"index.metric must be one of {_METRICS}, got {config.index.metric!r}")
    if config.generation.backend not in _BACKENDS:
        raise ConfigError(
            f"generation.backend must be one of {_BACKENDS}, got {config.generation.backend!r}"
        )
    if config.generation.backend == "stub:canned" and not config.generation.fixtures_path:
        raise ConfigError("generation.backend stub:canned requires generation.fixtures_path")
