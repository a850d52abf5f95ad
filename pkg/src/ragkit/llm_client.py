"""Chat-completion client: HTTP backend with retries, plus offline stub backends.

The vanilla / retrieval / fine-tuned settings are not modeled here; they are
just different endpoint and model configurations handed to the same client.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Protocol

import requests

from .prompt import PromptBundle, render_block

DEFAULT_API_KEY_ENV = "LLM_API_KEY"

Message = dict[str, str]


class GenerationError(Exception):
    """Fatal backend failure: 4xx, malformed response, or retries exhausted."""


class TransientBackendError(GenerationError):
    """Retriable failure: connect/timeout or 5xx."""


class EmptyGenerationError(GenerationError):
    """The backend produced an empty completion."""


@dataclass(frozen=True)
class GenerationBackendConfig:
    base_url: str
    model_name: str
    temperature: float = 0.0
    max_tokens: int = 1024
    timeout: float = 60.0
    api_key_env: str = DEFAULT_API_KEY_ENV
    retries: int = 2

    def __post_init__(self) -> None:
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class GenerationResult:
    text: str
    backend: str
    latency: float
    usage: dict[str, int] | None = None


class ChatBackend(Protocol):
    model_name: str

    def complete(self, messages: list[Message]) -> str: ...


def build_messages(prompt: PromptBundle) -> list[Message]:
    """System message carries grounding text plus context blocks; user carries the question."""
    segments = []
    if prompt.system_text:
        segments.append(prompt.system_text)
    if prompt.context_blocks:
        segments.append("".join(render_block(b) for b in prompt.context_blocks))
    messages: list[Message] = []
    if segments:
        messages.append({"role": "system", "content": "\n\n".join(segments)})
    messages.append({"role": "user", "content": prompt.question})
    return messages


def request_body(config: GenerationBackendConfig, messages: list[Message]) -> bytes:
    # Canonical serialization: the same prompt must produce the same bytes.
    payload = {
        "model": config.model_name,
        "messages": messages,
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
    }
    return json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")


Transport = Callable[[str, bytes, Mapping[str, str], float], tuple[int, str]]


def _requests_transport(url: str, body: bytes, headers: Mapping[str, str], timeout: float) -> tuple[int, str]:
    try:
        response = requests.post(url, data=body, headers=dict(headers), timeout=timeout)
    except (requests.ConnectionError, requests.Timeout) as exc:
        raise TransientBackendError(f"chat request failed: {exc}") from exc
    return response.status_code, response.text


class HttpChatBackend:
    """OpenAI-style chat completions over HTTP with exponential backoff retries."""

    def __init__(
        self,
        config: GenerationBackendConfig,
        transport: Transport | None = None,
        sleeper: Callable[[float], None] | None = None,
        backoff_base: float = 0.5,
    ) -> None:
        self.config = config
        self.model_name = config.model_name
        self._transport = transport if transport is not None else _requests_transport
        self._sleep = sleeper if sleeper is not None else time.sleep
        self._backoff_base = backoff_base

    def complete(self, messages: list[Message]) -> str:
        url = self.config.base_url.rstrip("/") + "/v1/chat/completions"
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = request_body(self.config, messages)

        attempts = self.config.retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt > 0:
                self._sleep(self._backoff_base * (2 ** (attempt - 1)))
            try:
                status, text = self._transport(url, body, headers, self.config.timeout)
            except TransientBackendError as exc:
                last_error = exc
                continue
            if status >= 500:
                last_error = TransientBackendError(f"backend returned {status}")
                continue
            if status >= 400:
                raise GenerationError(f"backend rejected request ({status}): {text[:200]}")
            try:
                payload = json.loads(text)
                content = payload["choices"][0]["message"]["content"]
            except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
                raise GenerationError(f"malformed backend response: {text[:200]}") from exc
            return content if content is not None else ""
        raise TransientBackendError(
            f"backend unreachable after {attempts} attempts: {last_error}"
        ) from last_error


class StubBackend:
    """Deterministic offline backend: echo the question, serve canned answers, or return nothing."""

    MODES = ("echo", "canned", "empty")

    def __init__(self, mode: str, fixtures: Mapping[str, str] | None = None, model_name: str | None = None) -> None:
        if mode not in self.MODES:
            raise ValueError(f"unknown stub mode {mode!r}")
        if mode == "canned" and fixtures is None:
            raise ValueError("canned mode requires fixtures")
        self.mode = mode
        self.fixtures = dict(fixtures) if fixtures else {}
        self.model_name = model_name if model_name is not None else f"stub-{mode}"

    def complete(self, messages: list[Message]) -> str:
        question = messages[-1]["content"]
        if self.mode == "echo":
            return question
        if self.mode == "empty":
            return ""
        if question not in self.fixtures:
            raise GenerationError(f"no canned answer for question: {question!r}")
        return self.fixtures[question]


def stub_backend(mode: str, fixtures: Mapping[str, str] | None = None) -> StubBackend:
    return StubBackend(mode, fixtures)


def generate(backend: ChatBackend | GenerationBackendConfig, prompt: PromptBundle) -> GenerationResult:
    """Run one completion for the bundle; empty completions are an error."""
    if isinstance(backend, GenerationBackendConfig):
        backend = HttpChatBackend(backend)
    messages = build_messages(prompt)
    started = time.monotonic()
    text = backend.complete(messages)
    latency = time.monotonic() - started
    if text == "":
        raise EmptyGenerationError("empty generation")
    return GenerationResult(text=text, backend=backend.model_name, latency=latency)
