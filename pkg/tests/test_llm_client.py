from __future__ import annotations

import json

import pytest

from ragkit.llm_client import (
    EmptyGenerationError,
    GenerationBackendConfig,
    GenerationError,
    HttpChatBackend,
    StubBackend,
    TransientBackendError,
    build_messages,
    generate,
    request_body,
)
from ragkit.prompt import build_prompt, vanilla_prompt
from test_prompt import ctx


def config(**kw) -> GenerationBackendConfig:
    defaults = dict(base_url="http://llm.local", model_name="m")
    defaults.update(kw)
    return GenerationBackendConfig(**defaults)


def ok_response(text: str):
    return 200, json.dumps({"choices": [{"message": {"role": "assistant", "content": text}}]})


def test_messages_split_system_and_user():
    bundle = build_prompt("What helps?", ctx("alpha"), system_text="SYS")
    messages = build_messages(bundle)
    assert [m["role"] for m in messages] == ["system", "user"]
    assert messages[0]["content"].startswith("SYS\n\n")
    assert "Content: alpha" in messages[0]["content"]
    assert messages[1]["content"] == "What helps?"


def test_vanilla_messages_have_no_system_turn():
    messages = build_messages(vanilla_prompt("Q?"))
    assert messages == [{"role": "user", "content": "Q?"}]


def test_request_body_is_canonical():
    messages = [{"role": "user", "content": "hi"}]
    a = request_body(config(), messages)
    b = request_body(config(), messages)
    assert a == b
    parsed = json.loads(a)
    assert parsed["model"] == "m"
    assert parsed["temperature"] == 0.0
    assert parsed["messages"] == messages


def test_echo_stub_returns_question():
    result = generate(StubBackend("echo"), vanilla_prompt("mirror me"))
    assert result.text == "mirror me"


def test_canned_stub_serves_fixtures_and_names_misses():
    backend = StubBackend("canned", {"known?": "answer!"})
    assert generate(backend, vanilla_prompt("known?")).text == "answer!"
    with pytest.raises(GenerationError, match="unknown\\?"):
        generate(backend, vanilla_prompt("unknown?"))


def test_empty_stub_raises_empty_generation():
    with pytest.raises(EmptyGenerationError, match="empty generation"):
        generate(StubBackend("empty"), vanilla_prompt("Q?"))


def test_retries_then_success():
    attempts = []

    def transport(url, body, headers, timeout):
        attempts.append(url)
        if len(attempts) < 3:
            return 500, "upstream sad"
        return ok_response("recovered")

    backend = HttpChatBackend(config(retries=2), transport=transport, sleeper=lambda s: None)
    result = generate(backend, vanilla_prompt("Q?"))
    assert result.text == "recovered"
    assert len(attempts) == 3


def test_retries_exhausted_is_transient_error():
    def transport(url, body, headers, timeout):
        return 503, "down"

    backend = HttpChatBackend(config(retries=1), transport=transport, sleeper=lambda s: None)
    with pytest.raises(TransientBackendError):
        generate(backend, vanilla_prompt("Q?"))


def test_client_error_is_not_retried():
    attempts = []

    def transport(url, body, headers, timeout):
        attempts.append(url)
        return 400, "bad request body"

    backend = HttpChatBackend(config(retries=3), transport=transport, sleeper=lambda s: None)
    with pytest.raises(GenerationError):
        generate(backend, vanilla_prompt("Q?"))
    assert len(attempts) == 1


def test_http_empty_content_raises():
    backend = HttpChatBackend(config(), transport=lambda *a: ok_response(""), sleeper=lambda s: None)
    with pytest.raises(EmptyGenerationError):
        generate(backend, vanilla_prompt("Q?"))


def test_identical_prompts_send_identical_bodies():
    bodies = []

    def transport(url, body, headers, timeout):
        bodies.append(body)
        return ok_response("fine")

    backend = HttpChatBackend(config(), transport=transport, sleeper=lambda s: None)
    bundle = build_prompt("Q?", ctx("alpha", "beta"))
    generate(backend, bundle)
    generate(backend, bundle)
    assert bodies[0] == bodies[1]
