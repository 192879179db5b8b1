"""Chat-model client layer.

Messages are role + an ordered list of parts; image parts hold file paths and
are base64-encoded into OpenAI-style ``image_url`` payloads only when a request
is serialized for the wire. ``HttpClient`` talks to any chat-completions
endpoint; ``ScriptedClient`` replays canned replies for offline tests and
deterministic pipeline replays.
"""

from __future__ import annotations

import base64
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol, Sequence

import requests

__all__ = [
    "TextPart",
    "ImagePart",
    "ChatMessage",
    "ModelEndpoint",
    "TransportError",
    "chat",
    "ChatClient",
    "HttpClient",
    "ScriptedClient",
    "RecordingClient",
    "load_scripted",
]


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    """Reference to a rendered PNG on disk; encoded at send time."""

    path: str


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    parts: tuple[TextPart | ImagePart, ...]

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown chat role {self.role!r}")
        object.__setattr__(self, "parts", tuple(self.parts))

    @classmethod
    def text(cls, role: str, text: str) -> "ChatMessage":
        return cls(role, (TextPart(text),))

    def image_count(self) -> int:
        return sum(1 for p in self.parts if isinstance(p, ImagePart))

    def joined_text(self) -> str:
        return "\n".join(p.text for p in self.parts if isinstance(p, TextPart))

    def to_log(self) -> dict[str, Any]:
        """Transcript form: image parts keep their file paths, not base64."""
        parts = []
        for p in self.parts:
            if isinstance(p, TextPart):
                parts.append({"type": "text", "text": p.text})
            else:
                parts.append({"type": "image", "path": str(p.path)})
        return {"role": self.role, "parts": parts}


@dataclass(frozen=True)
class ModelEndpoint:
    """Connection settings for one chat-completions endpoint.

    ``base_url`` should include any API prefix (e.g. ``http://host:8000/v1``);
    ``/chat/completions`` is appended. The API key, when needed, is read from
    the environment variable named by ``api_key_env``.
    """

    base_url: str
    model: str
    api_key_env: str = ""
    timeout: float = 120.0
    max_retries: int = 3
    temperature: float = 0.7
    backoff_base: float = 0.5

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be nonnegative")


class TransportError(RuntimeError):
    """All retries exhausted; carries the last HTTP status when one was seen."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


def _encode_image(path: str) -> str:
    data = Path(path).read_bytes()
    return "data:image/png;base64," + base64.b64encode(data).decode("ascii")


def messages_to_wire(messages: Sequence[ChatMessage]) -> list[dict[str, Any]]:
    """Serialize messages to the chat-completions request schema."""
    wire = []
    for msg in messages:
        content: list[dict[str, Any]] = []
        for part in msg.parts:
            if isinstance(part, TextPart):
                content.append({"type": "text", "text": part.text})
            else:
                content.append(
                    {"type": "image_url", "image_url": {"url": _encode_image(part.path)}}
                )
        wire.append({"role": msg.role, "content": content})
    return wire


def chat(endpoint: ModelEndpoint, messages: Sequence[ChatMessage]) -> str:
    """POST the conversation and return the assistant's text.

    Transient failures (connection errors, timeouts, HTTP 5xx/429) are retried
    with exponential backoff: attempt k sleeps backoff_base * 2**k before the
    next try, up to max_retries extra attempts.
    """
    url = endpoint.base_url.rstrip("/") + "/chat/completions"
    body = {
        "model": endpoint.model,
        "messages": messages_to_wire(messages),
        "temperature": endpoint.temperature,
    }
    headers = {"Content-Type": "application/json"}
    if endpoint.api_key_env:
        key = os.environ.get(endpoint.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"

    last_status: int | None = None
    last_error = "no attempt made"
    for attempt in range(endpoint.max_retries + 1):
        try:
            resp = requests.post(url, json=body, headers=headers, timeout=endpoint.timeout)
        except requests.RequestException as exc:
            last_error = f"{type(exc).__name__}: {exc}"
        else:
            last_status = resp.status_code
            if resp.status_code == 200:
                try:
                    payload = resp.json()
                    return payload["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    raise TransportError(
                        f"malformed chat response from {url}: {exc}", status=200
                    ) from exc
            last_error = f"HTTP {resp.status_code}"
            if resp.status_code < 500 and resp.status_code != 429:
                raise TransportError(
                    f"chat request to {url} rejected: {last_error}", status=resp.status_code
                )
        if attempt < endpoint.max_retries:
            time.sleep(endpoint.backoff_base * 2**attempt)
    raise TransportError(
        f"chat request to {url} failed after {endpoint.max_retries + 1} attempts: {last_error}",
        status=last_status,
    )


class ChatClient(Protocol):
    """Anything that can turn a message list into assistant text."""

    def complete(self, messages: Sequence[ChatMessage]) -> str: ...


@dataclass(frozen=True)
class HttpClient:
    endpoint: ModelEndpoint

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        return chat(self.endpoint, messages)


class ScriptedClient:
    """Replays a fixed list of assistant replies in order.

    Used for offline replay tests; running past the end of the script raises.
    """

    def __init__(self, replies: Sequence[str]):
        self._replies = list(replies)
        self._cursor = 0
        self.requests: list[list[ChatMessage]] = []

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        self.requests.append(list(messages))
        if self._cursor >= len(self._replies):
            raise TransportError(
                f"scripted client exhausted after {len(self._replies)} replies"
            )
        reply = self._replies[self._cursor]
        self._cursor += 1
        return reply

    @property
    def remaining(self) -> int:
        return len(self._replies) - self._cursor


@dataclass
class RecordingClient:
    """Wraps a client and transcribes every request/response pair."""

    inner: ChatClient
    agent: str
    log: list[dict[str, Any]] = field(default_factory=list)

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        entry: dict[str, Any] = {
            "agent": self.agent,
            "request": [m.to_log() for m in messages],
        }
        try:
            reply = self.inner.complete(messages)
        except Exception as exc:
            entry["error"] = str(exc)
            self.log.append(entry)
            raise
        entry["response"] = reply
        self.log.append(entry)
        return reply


def load_scripted(source: str | Path | Sequence[str] | dict) -> dict[str, ScriptedClient]:
    """Build scripted clients from a fixture.

    The fixture is either a JSON array of replies (one shared queue consumed by
    every agent in call order) or an object with separate "vision" and "judge"
    arrays. Paths and already-parsed data are both accepted.
    """
    if isinstance(source, (str, Path)):
        data = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        data = source
    if isinstance(data, dict):
        clients = {}
        for name in ("vision", "judge"):
            if name in data:
                replies = data[name]
                if not isinstance(replies, list):
                    raise ValueError(f"scripted fixture {name!r} must be a list")
                clients[name] = ScriptedClient(replies)
        if not clients:
            raise ValueError("scripted fixture object has neither 'vision' nor 'judge'")
        return clients
    if isinstance(data, list):
        shared = ScriptedClient(data)
        return {"vision": shared, "judge": shared}
    raise ValueError("scripted fixture must be a JSON array or object")
