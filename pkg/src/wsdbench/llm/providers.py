"""Completion providers: an OpenAI-compatible HTTP client and an offline mock."""
from __future__ import annotations

import hashlib
import logging
import os
import re
import threading
import time
from dataclasses import dataclass
from typing import Mapping

import httpx

from .cost import estimate_tokens

log = logging.getLogger(__name__)


class ProviderError(RuntimeError):
    pass


class AuthError(ProviderError):
    pass


class PermanentProviderError(ProviderError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class TransientProviderError(ProviderError):
    def __init__(self, message: str, status: int | None = None, retry_after: float | None = None):
        super().__init__(message)
        self.status = status
        self.retry_after = retry_after


@dataclass(frozen=True)
class ProviderReply:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0


def api_key_env(provider: str) -> str:
    return re.sub(r"[^A-Z0-9]", "_", provider.upper()) + "_API_KEY"


class OpenAICompatibleProvider:
    """POSTs to ``<base_url>/chat/completions`` with the OpenAI request shape."""

    def __init__(self, name: str, base_url: str, api_key: str | None = None,
                 timeout: float = 60.0, transport: httpx.BaseTransport | None = None):
        self.name = name
        self.base_url = base_url.rstrip("/")
        self._api_key = api_key
        self._client = httpx.Client(timeout=timeout, transport=transport)

    @property
    def api_key(self) -> str:
        key = self._api_key or os.environ.get(api_key_env(self.name))
        if not key:
            raise AuthError(f"no credentials for provider {self.name!r}; set {api_key_env(self.name)}")
        return key

    def send(self, model, system: str, user: str) -> ProviderReply:
        body = {
            "model": model.model_name,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": model.temperature,
            "max_tokens": model.max_output_tokens,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        try:
            resp = self._client.post(f"{self.base_url}/chat/completions", json=body, headers=headers)
        except httpx.TimeoutException as exc:
            raise TransientProviderError(f"timeout: {exc}") from exc
        except httpx.TransportError as exc:
            raise TransientProviderError(f"transport error: {exc}") from exc

        status = resp.status_code
        if status in (401, 403):
            raise AuthError(f"{self.name}: HTTP {status}: {resp.text[:200]}")
        if status == 429 or status >= 500:
            retry_after = None
            try:
                retry_after = float(resp.headers.get("retry-after", ""))
            except ValueError:
                pass
            raise TransientProviderError(f"{self.name}: HTTP {status}", status, retry_after)
        if status >= 400:
            raise PermanentProviderError(f"{self.name}: HTTP {status}: {resp.text[:200]}", status)

        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise PermanentProviderError(f"{self.name}: malformed response body") from exc
        usage = data.get("usage") or {}
        if not usage.get("prompt_tokens"):
            # some compatible servers omit usage; bill an estimate rather than nothing
            log.warning("%s: no token usage in response; estimating", self.name)
            return ProviderReply(text, estimate_tokens(system) + estimate_tokens(user), estimate_tokens(text))
        return ProviderReply(text, int(usage["prompt_tokens"]), int(usage.get("completion_tokens") or 0))

    def close(self):
        self._client.close()


def prompt_hash(system: str, user: str) -> str:
    return hashlib.sha256(f"{system}\x00{user}".encode("utf-8")).hexdigest()


class MockProvider:
    """Deterministic offline provider.

    ``script`` maps ``prompt_hash(system, user)`` to a reply; anything else gets
    ``default_reply``. With ``usage="estimate"`` the reply carries rough
    token counts so that cost accounting can be exercised offline.
    """

    def __init__(self, script: Mapping[str, str] | None = None, default_reply: str = "1",
                 usage: str = "none", delay: float = 0.0):
        if usage not in ("none", "estimate"):
            raise ValueError("usage must be 'none' or 'estimate'")
        self.script = dict(script or {})
        self.default_reply = default_reply
        self.usage = usage
        self.delay = delay
        self.calls = 0
        self.in_flight = 0
        self.max_in_flight = 0
        self._lock = threading.Lock()

    def send(self, model, system: str, user: str) -> ProviderReply:
        with self._lock:
            self.calls += 1
            self.in_flight += 1
            self.max_in_flight = max(self.max_in_flight, self.in_flight)
        try:
            if self.delay:
                time.sleep(self.delay)
            text = self.script.get(prompt_hash(system, user), self.default_reply)
            if self.usage == "estimate":
                return ProviderReply(text, estimate_tokens(system) + estimate_tokens(user), estimate_tokens(text))
            return ProviderReply(text)
        finally:
            with self._lock:
                self.in_flight -= 1


def mock_provider(script: Mapping[str, str] | None = None, default_reply: str = "1", **kw) -> MockProvider:
    return MockProvider(script, default_reply, **kw)
