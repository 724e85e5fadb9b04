"""Uniform client for an external chat-completion endpoint.

Speaks the widely deployed chat-completion JSON shape (``model``,
``messages``, ``temperature``, ``top_p``) over HTTP POST, with a plain
completion-style fallback. Three modes:

* ``live``   — real HTTP with bounded retries and exponential backoff;
* ``record`` — live, but every exchange is appended to a cassette file;
* ``replay`` — answers from the cassette only, no network at all.

Cassettes are JSONL of ``{request_hash, request, response, timestamp}``:
human-diffable fixtures that make the whole pipeline deterministic offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import httpx

logger = logging.getLogger(__name__)

ENV_BASE_URL = "MATFORGE_LLM_BASE_URL"
ENV_MODEL = "MATFORGE_LLM_MODEL"
ENV_API_KEY = "MATFORGE_LLM_API_KEY"


class GatewayError(RuntimeError):
    pass


class TransportError(GatewayError):
    """Connection-level failure (connect, read, timeout) after all retries."""


class EndpointError(GatewayError):
    """Non-2xx answer from the endpoint; carries status and body."""

    def __init__(self, status: int, body: str):
        super().__init__(f"endpoint returned {status}: {body[:500]}")
        self.status = status
        self.body = body


class EmptyCompletion(GatewayError):
    pass


class CassetteMiss(GatewayError):
    """Replay mode saw a request that was never recorded."""


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.0
    top_p: float = 0.9
    max_tokens: int = 1024
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))


def default_params(task: str) -> GenerationParams:
    """Generation settings per task: NER evaluation samples gently at
    temperature 0.1; annotation and graph construction run greedy at 0."""
    if task == "ner_eval":
        return GenerationParams(temperature=0.1, top_p=0.9)
    if task == "annotate":
        return GenerationParams(temperature=0.0, top_p=0.9)
    if task == "kg_construct":
        return GenerationParams(temperature=0.0, top_p=0.9, max_tokens=2048)
    raise ValueError(f"unknown task {task!r}")


@dataclass(frozen=True)
class GatewayConfig:
    base_url: str = "http://localhost:11434/v1"
    model_name: str = "local-model"
    api_style: str = "chat"  # chat | completion
    timeout: float = 60.0
    max_retries: int = 3
    retry_backoff: float = 0.5
    auth_header: str | None = None
    mode: str = "live"  # live | record | replay
    cassette_path: str | None = None
    max_concurrency: int = 4

    def __post_init__(self) -> None:
        if self.mode not in ("live", "record", "replay"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.api_style not in ("chat", "completion"):
            raise ValueError(f"unknown api_style {self.api_style!r}")
        if self.mode in ("record", "replay") and not self.cassette_path:
            raise ValueError(f"{self.mode} mode requires a cassette_path")

    @classmethod
    def from_env(cls, **overrides: Any) -> "GatewayConfig":
        env: dict[str, Any] = {}
        if os.environ.get(ENV_BASE_URL):
            env["base_url"] = os.environ[ENV_BASE_URL]
        if os.environ.get(ENV_MODEL):
            env["model_name"] = os.environ[ENV_MODEL]
        if os.environ.get(ENV_API_KEY):
            env["auth_header"] = f"Bearer {os.environ[ENV_API_KEY]}"
        env.update(overrides)
        return cls(**env)


@dataclass(frozen=True)
class Completion:
    text: str
    usage: dict[str, Any] = field(default_factory=dict)
    from_cassette: bool = False


def build_request(prompt: str, params: GenerationParams, config: GatewayConfig) -> dict[str, Any]:
    """The exact JSON body sent to the endpoint; also the hashing input."""
    body: dict[str, Any] = {
        "model": config.model_name,
        "temperature": params.temperature,
        "top_p": params.top_p,
        "max_tokens": params.max_tokens,
    }
    if params.stop_sequences:
        body["stop"] = list(params.stop_sequences)
    if config.api_style == "chat":
        body["messages"] = [{"role": "user", "content": prompt}]
    else:
        body["prompt"] = prompt
    return body


def request_hash(request: dict[str, Any]) -> str:
    """Stable across platforms: sha256 of canonicalized JSON."""
    canonical = json.dumps(request, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def cassette_entry(
    prompt: str,
    params: GenerationParams,
    config: GatewayConfig,
    text: str,
    usage: dict[str, Any] | None = None,
) -> dict[str, Any]:
    """Build one replayable cassette line for a known prompt/response pair."""
    request = build_request(prompt, params, config)
    return {
        "request_hash": request_hash(request),
        "request": request,
        "response": {"text": text, "usage": usage or {}},
        "timestamp": 0,
    }


def write_cassette(path: str | Path, entries: list[dict[str, Any]]) -> None:
    lines = "".join(json.dumps(e, ensure_ascii=False) + "\n" for e in entries)
    Path(path).write_text(lines, encoding="utf-8")


def _load_cassette(path: str | Path) -> dict[str, dict[str, Any]]:
    table: dict[str, dict[str, Any]] = {}
    text = Path(path).read_text(encoding="utf-8")
    for line in text.splitlines():
        if not line.strip():
            continue
        entry = json.loads(line)
        table[entry["request_hash"]] = entry["response"]
    return table


class Gateway:
    """Shareable client; in-flight requests bounded by a semaphore.

    A custom ``transport`` (e.g. ``httpx.MockTransport``) can be injected
    for tests; ``sleep`` likewise, to make backoff instant.
    """

    def __init__(
        self,
        config: GatewayConfig,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._sleep = sleep
        self._semaphore = threading.BoundedSemaphore(config.max_concurrency)
        self._cassette_lock = threading.Lock()
        self._cassette: dict[str, dict[str, Any]] | None = None
        self._client: httpx.Client | None = None
        if config.mode != "replay":
            self._client = httpx.Client(
                base_url=config.base_url,
                timeout=config.timeout,
                transport=transport,
            )
        if config.mode == "replay":
            if not Path(config.cassette_path).is_file():
                raise CassetteMiss(f"cassette {config.cassette_path} does not exist")
            self._cassette = _load_cassette(config.cassette_path)
        elif config.mode == "record":
            path = Path(config.cassette_path)
            self._cassette = _load_cassette(path) if path.is_file() else {}

    def close(self) -> None:
        if self._client is not None:
            self._client.close()

    def __enter__(self) -> "Gateway":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()

    def complete(self, prompt: str, params: GenerationParams) -> Completion:
        request = build_request(prompt, params, self.config)
        key = request_hash(request)
        if self.config.mode == "replay":
            response = self._cassette.get(key)
            if response is None:
                raise CassetteMiss(
                    f"no recorded response for request {key[:12]}… "
                    f"(prompt starts {prompt[:80]!r})"
                )
            return Completion(
                text=response["text"],
                usage=response.get("usage", {}),
                from_cassette=True,
            )
        if self.config.mode == "record" and key in self._cassette:
            cached = self._cassette[key]
            return Completion(text=cached["text"], usage=cached.get("usage", {}), from_cassette=True)

        completion = self._complete_live(request)
        if self.config.mode == "record":
            entry = {
                "request_hash": key,
                "request": request,
                "response": {"text": completion.text, "usage": completion.usage},
                "timestamp": time.time(),
            }
            with self._cassette_lock:
                self._cassette[key] = entry["response"]
                with open(self.config.cassette_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        return completion

    def _complete_live(self, request: dict[str, Any]) -> Completion:
        path = "/chat/completions" if self.config.api_style == "chat" else "/completions"
        headers = {}
        if self.config.auth_header:
            headers["Authorization"] = self.config.auth_header
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                delay = self.config.retry_backoff * (2 ** (attempt - 1))
                logger.debug("retrying in %.2fs (attempt %d)", delay, attempt + 1)
                self._sleep(delay)
            try:
                with self._semaphore:
                    response = self._client.post(path, json=request, headers=headers)
            except httpx.HTTPError as e:
                last_error = TransportError(f"request failed: {e}")
                continue
            if response.status_code >= 500:
                last_error = EndpointError(response.status_code, response.text)
                continue
            if response.status_code != 200:
                raise EndpointError(response.status_code, response.text)
            return _parse_response(response.json(), self.config.api_style)
        raise last_error


def _parse_response(data: dict[str, Any], api_style: str) -> Completion:
    try:
        choice = data["choices"][0]
        text = choice["message"]["content"] if api_style == "chat" else choice["text"]
    except (KeyError, IndexError, TypeError):
        raise EmptyCompletion(f"response has no completion text: {str(data)[:300]}") from None
    if not text:
        raise EmptyCompletion("endpoint returned an empty completion")
    return Completion(text=text, usage=data.get("usage", {}))


def complete(prompt: str, params: GenerationParams, config: GatewayConfig) -> Completion:
    """One-shot convenience wrapper around a transient :class:`Gateway`."""
    with Gateway(config) as gw:
        return gw.complete(prompt, params)
