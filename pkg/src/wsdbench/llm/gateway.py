"""Uniform completion interface with caching, retries, concurrency caps and cost accounting."""
from __future__ import annotations

import json
import logging
import random
import threading
import time
from dataclasses import dataclass
from typing import Callable, Mapping

from .cache import DiskCache, cache_key
from .cost import CostLedger, PriceTable
from .providers import (
    AuthError,
    MockProvider,
    OpenAICompatibleProvider,
    PermanentProviderError,
    ProviderError,
    TransientProviderError,
)

log = logging.getLogger(__name__)


class RetriesExhausted(ProviderError):
    pass


@dataclass(frozen=True)
class ModelRef:
    provider: str
    model_name: str
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")

    @classmethod
    def parse(cls, text: str, **params) -> "ModelRef":
        """``provider:model`` e.g. ``openai:gpt-4o`` or ``mock:oracle``."""
        provider, sep, name = text.partition(":")
        if not sep or not provider or not name:
            raise ValueError(f"model must look like provider:name, got {text!r}")
        return cls(provider, name, **params)

    def params(self) -> dict:
        return {"temperature": self.temperature, "max_output_tokens": self.max_output_tokens}

    def __str__(self) -> str:
        return f"{self.provider}:{self.model_name}"


@dataclass(frozen=True)
class Completion:
    text: str
    prompt_tokens: int
    completion_tokens: int
    cached: bool
    latency: float


class Gateway:
    def __init__(
        self,
        providers: Mapping[str, object],
        ledger: CostLedger | None = None,
        cache: DiskCache | None = None,
        max_attempts: int = 5,
        backoff_base: float = 1.0,
        backoff_cap: float = 30.0,
        concurrency: Mapping[str, int] | None = None,
        default_concurrency: int = 4,
        sleep: Callable[[float], None] = time.sleep,
        seed: int | None = None,
    ):
        if max_attempts < 1:
            raise ValueError("max_attempts must be positive")
        self.providers = dict(providers)
        self.ledger = ledger if ledger is not None else CostLedger()
        self.cache = cache
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.sleep = sleep
        self._rng = random.Random(seed)
        self._rng_lock = threading.Lock()
        concurrency = dict(concurrency or {})
        self.concurrency = {name: concurrency.get(name, default_concurrency) for name in self.providers}
        self._slots = {name: threading.BoundedSemaphore(n) for name, n in self.concurrency.items()}

    def provider_for(self, model: ModelRef):
        try:
            return self.providers[model.provider]
        except KeyError:
            raise ValueError(f"provider {model.provider!r} is not registered") from None

    def _backoff(self, attempt: int, hint: float | None) -> float:
        ceiling = min(self.backoff_cap, self.backoff_base * 2 ** attempt)
        with self._rng_lock:
            delay = self._rng.uniform(0, ceiling)
        return max(delay, hint or 0.0)

    def complete(self, model: ModelRef, system: str, user: str) -> Completion:
        provider = self.provider_for(model)
        key = cache_key(model, system, user)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return Completion(hit["text"], hit.get("prompt_tokens", 0), hit.get("completion_tokens", 0), True, 0.0)

        start = time.monotonic()
        last: Exception | None = None
        for attempt in range(self.max_attempts):
            try:
                with self._slots[model.provider]:
                    reply = provider.send(model, system, user)
                break
            except (AuthError, PermanentProviderError):
                raise
            except TransientProviderError as exc:
                last = exc
                if attempt + 1 < self.max_attempts:
                    delay = self._backoff(attempt, exc.retry_after)
                    log.info("transient failure from %s (%s); retrying in %.2fs", model.provider, exc, delay)
                    self.sleep(delay)
        else:
            raise RetriesExhausted(f"{model}: gave up after {self.max_attempts} attempts: {last}") from last

        latency = time.monotonic() - start
        self.ledger.record(model.model_name, reply.prompt_tokens, reply.completion_tokens)
        if self.cache is not None:
            self.cache.put(key, {
                "text": reply.text,
                "prompt_tokens": reply.prompt_tokens,
                "completion_tokens": reply.completion_tokens,
                "model": str(model),
            })
        return Completion(reply.text, reply.prompt_tokens, reply.completion_tokens, False, latency)

    @classmethod
    def from_config(cls, config: Mapping, prices: PriceTable | None = None,
                    cache: DiskCache | None = None, extra_providers: Mapping[str, object] | None = None,
                    **kw) -> "Gateway":
        """Build from a config mapping::

            {"providers": {"openai": {"base_url": "https://api.openai.com/v1", "max_concurrency": 4}},
             "retry": {"max_attempts": 5, "backoff_base": 1.0, "backoff_cap": 30.0}}
        """
        providers: dict[str, object] = {}
        caps: dict[str, int] = {}
        for name, spec in (config.get("providers") or {}).items():
            kind = spec.get("type", "openai-compatible")
            if kind == "mock":
                providers[name] = MockProvider(default_reply=spec.get("default_reply", "1"), usage=spec.get("usage", "none"))
            elif kind == "openai-compatible":
                providers[name] = OpenAICompatibleProvider(name, spec["base_url"], timeout=spec.get("timeout", 60.0))
            else:
                raise ValueError(f"unknown provider type {kind!r} for {name!r}")
            if "max_concurrency" in spec:
                caps[name] = int(spec["max_concurrency"])
        providers.update(extra_providers or {})
        retry = config.get("retry") or {}
        return cls(
            providers,
            ledger=CostLedger(prices or PriceTable.default()),
            cache=cache,
            concurrency=caps,
            max_attempts=retry.get("max_attempts", 5),
            backoff_base=retry.get("backoff_base", 1.0),
            backoff_cap=retry.get("backoff_cap", 30.0),
            **kw,
        )


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)
