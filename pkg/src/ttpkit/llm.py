"""Provider-agnostic chat-completion and embedding access.

Two providers share one duck-typed surface (``complete``, ``embed``,
``model_name``): :class:`HttpProvider` speaks the de-facto JSON
chat-completion wire format, :class:`MockProvider` replays canned
responses keyed by request digest or prompt-substring rules so the whole
pipeline runs offline and deterministically.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import AuthFailure, ProviderError, RateLimited, TransportFailure


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown role {self.role!r}")
        if self.role == "user" and not self.content:
            raise ValueError("user messages must carry content")


@dataclass(frozen=True)
class ProviderConfig:
    endpoint_url: str = "https://api.openai.com/v1"
    model_name: str = "gpt-4"
    api_key_env: str = "TTPKIT_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    requests_per_minute: int = 60
    embedding_dimension: int = 256

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if not 0 <= self.max_retries <= 10:
            raise ValueError("max_retries must be within [0, 10]")
        if self.requests_per_minute <= 0:
            raise ValueError("requests_per_minute must be positive")

    def to_json(self) -> dict:
        return {
            "endpoint_url": self.endpoint_url,
            "model_name": self.model_name,
            "api_key_env": self.api_key_env,
            "timeout": self.timeout,
            "max_retries": self.max_retries,
            "requests_per_minute": self.requests_per_minute,
            "embedding_dimension": self.embedding_dimension,
        }


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    dimension: int

    def __post_init__(self):
        if len(self.values) != self.dimension:
            raise ValueError("values length must equal dimension")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding values must be finite")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def request_digest(messages: Iterable[ChatMessage]) -> str:
    """Stable digest of a chat request, used for record-replay fixtures."""
    canon = json.dumps(
        [{"role": m.role, "content": m.content} for m in messages],
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


class RateLimiter:
    """Token bucket over a sliding minute; the one synchronized point."""

    def __init__(self, requests_per_minute: int, clock=time.monotonic, sleeper=time.sleep):
        self.requests_per_minute = requests_per_minute
        self._clock = clock
        self._sleep = sleeper
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                while self._stamps and now - self._stamps[0] >= 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self.requests_per_minute:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            self._sleep(max(wait, 0.01))


class MockProvider:
    """Deterministic offline provider.

    Response resolution order: exact request-digest replay entries, then
    the optional responder callable, then (marker substring, response)
    rules matched against the concatenated prompt text, then the default
    response.
    """

    def __init__(
        self,
        replay: Mapping[str, str] | None = None,
        rules: Sequence[tuple[str, str]] = (),
        default_response: str = "",
        dimension: int = 256,
        responder: Callable[[str], str | None] | None = None,
    ):
        self.replay = dict(replay or {})
        self.rules = list(rules)
        self.default_response = default_response
        self.dimension = dimension
        self.responder = responder
        self.model_name = "mock"
        self.calls = 0
        self.last_attempts = 0

    @classmethod
    def from_fixture(cls, path: str | Path, **kwargs) -> "MockProvider":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            replay=obj.get("replay", {}),
            rules=[tuple(r) for r in obj.get("rules", [])],
            default_response=obj.get("default_response", ""),
            **kwargs,
        )

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        if not messages:
            raise ValueError("messages must be non-empty")
        self.calls += 1
        self.last_attempts = 1
        digest = request_digest(messages)
        if digest in self.replay:
            return self.replay[digest]
        text = "\n".join(m.content for m in messages)
        if self.responder is not None:
            answer = self.responder(text)
            if answer is not None:
                return answer
        for marker, response in self.rules:
            if marker in text:
                return response
        return self.default_response

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("text must be non-empty")
        seed = int.from_bytes(
            hashlib.sha256(text.encode("utf-8")).digest()[:4], "big"
        )
        rng = np.random.RandomState(seed)
        vec = rng.standard_normal(self.dimension)
        vec /= np.linalg.norm(vec)
        return EmbeddingVector(tuple(float(v) for v in vec), self.dimension)


_TRANSIENT_STATUS = {429, 500, 502, 503, 504}


class HttpProvider:
    """JSON chat-completion / embeddings client with retries and rate limiting.

    Temperature is pinned to 0 to damp response non-determinism.  Live
    responses can be recorded to a replay fixture for later mock runs.
    """

    def __init__(
        self,
        config: ProviderConfig,
        record_path: str | Path | None = None,
        transport: Callable | None = None,
        sleeper=time.sleep,
    ):
        self.config = config
        self.model_name = config.model_name
        self.record_path = Path(record_path) if record_path else None
        self._transport = transport  # test seam; defaults to requests.post
        self._sleep = sleeper
        self._limiter = RateLimiter(config.requests_per_minute)
        self.last_attempts = 0

    def _api_key(self) -> str | None:
        return os.environ.get(self.config.api_key_env)

    def _post(self, path: str, payload: dict):
        if self._transport is not None:
            return self._transport(path, payload)
        import requests

        headers = {"Content-Type": "application/json"}
        key = self._api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return requests.post(
            self.config.endpoint_url.rstrip("/") + path,
            json=payload,
            headers=headers,
            timeout=self.config.timeout,
        )

    def _request(self, path: str, payload: dict) -> dict:
        last_error: Exception | None = None
        attempts = 0
        for attempt in range(self.config.max_retries + 1):
            attempts += 1
            self._limiter.acquire()
            try:
                resp = self._post(path, payload)
            except Exception as exc:  # connection-level failure
                last_error = TransportFailure(str(exc))
            else:
                status = getattr(resp, "status_code", 200)
                if status in (401, 403):
                    self.last_attempts = attempts
                    raise AuthFailure(f"provider rejected credentials ({status})")
                if 200 <= status < 300:
                    self.last_attempts = attempts
                    return resp.json()
                body = getattr(resp, "text", "")
                if status in _TRANSIENT_STATUS:
                    last_error = (
                        RateLimited(body or "rate limited")
                        if status == 429
                        else ProviderError(f"transient {status}", status, body)
                    )
                else:
                    self.last_attempts = attempts
                    raise ProviderError(f"provider returned {status}", status, body)
            if attempt < self.config.max_retries:
                self._sleep(min(0.5 * 2**attempt, 8.0))
        self.last_attempts = attempts
        if isinstance(last_error, RateLimited):
            raise last_error
        if isinstance(last_error, TransportFailure):
            raise last_error
        raise last_error if last_error else TransportFailure("request failed")

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        if not messages:
            raise ValueError("messages must be non-empty")
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": 0,
        }
        data = self._request("/chat/completions", payload)
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed completion response: {exc}") from exc
        if self.record_path is not None:
            self._record(request_digest(messages), text)
        return text

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValueError("text must be non-empty")
        payload = {"model": self.config.model_name, "input": text}
        data = self._request("/embeddings", payload)
        try:
            values = data["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed embedding response: {exc}") from exc
        if len(values) != self.config.embedding_dimension:
            raise ProviderError(
                f"embedding dimension {len(values)} does not match configured "
                f"{self.config.embedding_dimension}"
            )
        return EmbeddingVector(tuple(float(v) for v in values), len(values))

    def _record(self, digest: str, response: str) -> None:
        fixture = {"replay": {}, "rules": [], "default_response": ""}
        if self.record_path.exists():
            fixture = json.loads(self.record_path.read_text(encoding="utf-8"))
        fixture.setdefault("replay", {})[digest] = response
        self.record_path.write_text(
            json.dumps(fixture, indent=2, ensure_ascii=False), encoding="utf-8"
        )
