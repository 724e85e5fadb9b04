from __future__ import annotations

import json
import threading

import httpx
import pytest

from matforge.gateway import (
    CassetteMiss,
    EmptyCompletion,
    EndpointError,
    Gateway,
    GatewayConfig,
    GenerationParams,
    TransportError,
    build_request,
    cassette_entry,
    default_params,
    request_hash,
    write_cassette,
)


def chat_response(text: str) -> httpx.Response:
    return httpx.Response(
        200,
        json={
            "choices": [{"message": {"role": "assistant", "content": text}}],
            "usage": {"prompt_tokens": 7, "completion_tokens": 3},
        },
    )


def test_default_params_per_task():
    assert (default_params("ner_eval").temperature, default_params("ner_eval").top_p) == (0.1, 0.9)
    assert (default_params("annotate").temperature, default_params("annotate").top_p) == (0.0, 0.9)
    kg = default_params("kg_construct")
    assert (kg.temperature, kg.top_p) == (0.0, 0.9)
    with pytest.raises(ValueError):
        default_params("other")


def test_generation_params_invariants():
    with pytest.raises(ValueError):
        GenerationParams(temperature=-0.1)
    with pytest.raises(ValueError):
        GenerationParams(top_p=0.0)
    with pytest.raises(ValueError):
        GenerationParams(top_p=1.2)


def test_request_hash_stable_and_param_sensitive():
    config = GatewayConfig()
    params = GenerationParams(temperature=0.1)
    h1 = request_hash(build_request("hello", params, config))
    h2 = request_hash(build_request("hello", params, config))
    h3 = request_hash(build_request("hello", GenerationParams(temperature=0.2), config))
    assert h1 == h2
    assert h1 != h3
    assert len(h1) == 64


def test_live_completion_roundtrip():
    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        assert body["messages"][0]["content"] == "annotate this"
        assert body["temperature"] == 0.0
        return chat_response("<MAT>this</MAT>")

    gw = Gateway(GatewayConfig(), transport=httpx.MockTransport(handler))
    completion = gw.complete("annotate this", default_params("annotate"))
    assert completion.text == "<MAT>this</MAT>"
    assert completion.usage["prompt_tokens"] == 7


def test_retry_then_success():
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        calls["n"] += 1
        if calls["n"] <= 2:
            return httpx.Response(500, text="overloaded")
        return chat_response("ok")

    slept = []
    gw = Gateway(
        GatewayConfig(max_retries=3),
        transport=httpx.MockTransport(handler),
        sleep=slept.append,
    )
    completion = gw.complete("x", GenerationParams())
    assert completion.text == "ok"
    assert calls["n"] == 3
    assert slept == [0.5, 1.0]  # exponential backoff


def test_retries_exhausted():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(503, text="down")

    gw = Gateway(
        GatewayConfig(max_retries=1), transport=httpx.MockTransport(handler), sleep=lambda s: None
    )
    with pytest.raises(EndpointError):
        gw.complete("x", GenerationParams())


def test_client_error_fails_fast():
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        calls["n"] += 1
        return httpx.Response(404, text="no such model")

    gw = Gateway(GatewayConfig(), transport=httpx.MockTransport(handler), sleep=lambda s: None)
    with pytest.raises(EndpointError) as exc:
        gw.complete("x", GenerationParams())
    assert exc.value.status == 404
    assert calls["n"] == 1


def test_transport_error_retried_then_raised():
    def handler(request: httpx.Request) -> httpx.Response:
        raise httpx.ConnectError("refused")

    gw = Gateway(
        GatewayConfig(max_retries=2), transport=httpx.MockTransport(handler), sleep=lambda s: None
    )
    with pytest.raises(TransportError):
        gw.complete("x", GenerationParams())


def test_empty_completion():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(200, json={"choices": [{"message": {"content": ""}}]})

    gw = Gateway(GatewayConfig(), transport=httpx.MockTransport(handler))
    with pytest.raises(EmptyCompletion):
        gw.complete("x", GenerationParams())


def test_completion_api_style():
    def handler(request: httpx.Request) -> httpx.Response:
        assert request.url.path.endswith("/completions")
        body = json.loads(request.content)
        assert body["prompt"] == "plain"
        return httpx.Response(200, json={"choices": [{"text": "done"}]})

    gw = Gateway(GatewayConfig(api_style="completion"), transport=httpx.MockTransport(handler))
    assert gw.complete("plain", GenerationParams()).text == "done"


def test_replay_returns_recorded_response(tmp_path):
    config = GatewayConfig(mode="replay", cassette_path=str(tmp_path / "c.jsonl"))
    params = default_params("annotate")
    entry = cassette_entry("annotate me", params, config, "<MAT>me</MAT>", {"total_tokens": 4})
    write_cassette(config.cassette_path, [entry])
    gw = Gateway(config)
    completion = gw.complete("annotate me", params)
    assert completion.text == "<MAT>me</MAT>"
    assert completion.usage == {"total_tokens": 4}
    assert completion.from_cassette


def test_replay_miss(tmp_path):
    config = GatewayConfig(mode="replay", cassette_path=str(tmp_path / "c.jsonl"))
    write_cassette(config.cassette_path, [])
    gw = Gateway(config)
    with pytest.raises(CassetteMiss):
        gw.complete("never recorded", GenerationParams())


def test_replay_requires_existing_cassette(tmp_path):
    config = GatewayConfig(mode="replay", cassette_path=str(tmp_path / "missing.jsonl"))
    with pytest.raises(CassetteMiss):
        Gateway(config)


def test_config_requires_cassette_for_record_modes():
    with pytest.raises(ValueError):
        GatewayConfig(mode="replay")
    with pytest.raises(ValueError):
        GatewayConfig(mode="record")


def test_record_mode_persists_then_replays(tmp_path):
    cassette = tmp_path / "rec.jsonl"

    def handler(request: httpx.Request) -> httpx.Response:
        return chat_response("recorded answer")

    config = GatewayConfig(mode="record", cassette_path=str(cassette))
    gw = Gateway(config, transport=httpx.MockTransport(handler))
    first = gw.complete("record me", GenerationParams())
    assert first.text == "recorded answer"
    assert cassette.is_file()

    replay = Gateway(GatewayConfig(mode="replay", cassette_path=str(cassette)))
    again = replay.complete("record me", GenerationParams())
    assert again.text == first.text
    assert again.from_cassette


def test_record_mode_serves_cache_without_network(tmp_path):
    cassette = tmp_path / "rec.jsonl"
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        calls["n"] += 1
        return chat_response("once")

    gw = Gateway(
        GatewayConfig(mode="record", cassette_path=str(cassette)),
        transport=httpx.MockTransport(handler),
    )
    gw.complete("same prompt", GenerationParams())
    gw.complete("same prompt", GenerationParams())
    assert calls["n"] == 1


def test_concurrent_record_writes_are_serialized(tmp_path):
    cassette = tmp_path / "rec.jsonl"

    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        return chat_response("reply to " + body["messages"][0]["content"])

    gw = Gateway(
        GatewayConfig(mode="record", cassette_path=str(cassette), max_concurrency=4),
        transport=httpx.MockTransport(handler),
    )
    threads = [
        threading.Thread(target=gw.complete, args=(f"prompt {i}", GenerationParams()))
        for i in range(16)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    lines = cassette.read_text().splitlines()
    assert len(lines) == 16
    for line in lines:
        json.loads(line)  # every line intact JSON


def test_from_env(monkeypatch):
    monkeypatch.setenv("MATFORGE_LLM_BASE_URL", "http://example:9000/v1")
    monkeypatch.setenv("MATFORGE_LLM_MODEL", "my-model")
    monkeypatch.setenv("MATFORGE_LLM_API_KEY", "sk-test")
    config = GatewayConfig.from_env()
    assert config.base_url == "http://example:9000/v1"
    assert config.model_name == "my-model"
    assert config.auth_header == "Bearer sk-test"
