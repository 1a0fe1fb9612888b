"""Per-call token and dollar accounting."""
from __future__ import annotations

import json
import threading
import time
from dataclasses import asdict, dataclass
from importlib import resources
from typing import IO, Mapping


@dataclass(frozen=True)
class Price:
    input_per_token: float
    output_per_token: float

    def cost(self, prompt_tokens: int, completion_tokens: int) -> float:
        return prompt_tokens * self.input_per_token + completion_tokens * self.output_per_token


class PriceTable:
    """Model name -> USD per input/output token.

    The JSON file form lists prices per million tokens::

        {"gpt-4o": {"input_per_million": 2.5, "output_per_million": 10.0}}
    """

    def __init__(self, prices: Mapping[str, Price] | None = None):
        self.prices = dict(prices or {})

    @classmethod
    def from_dict(cls, data: Mapping) -> "PriceTable":
        prices = {}
        for model, p in data.items():
            if model.startswith("_"):
                continue
            prices[model] = Price(p["input_per_million"] / 1e6, p["output_per_million"] / 1e6)
        return cls(prices)

    @classmethod
    def load(cls, path) -> "PriceTable":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    @classmethod
    def default(cls) -> "PriceTable":
        text = resources.files("wsdbench").joinpath("data", "prices.json").read_text(encoding="utf-8")
        return cls.from_dict(json.loads(text))

    def get(self, model_name: str) -> Price | None:
        return self.prices.get(model_name)

    def cost(self, model_name: str, prompt_tokens: int, completion_tokens: int) -> float:
        price = self.prices.get(model_name)
        return 0.0 if price is None else price.cost(prompt_tokens, completion_tokens)


@dataclass(frozen=True)
class LedgerRecord:
    model: str
    prompt_tokens: int
    completion_tokens: int
    dollars: float
    timestamp: float


class CostLedger:
    """Append-only, thread-safe record of billed calls."""

    def __init__(self, prices: PriceTable | None = None):
        self.prices = prices or PriceTable()
        self._records: list[LedgerRecord] = []
        self._lock = threading.Lock()

    def record(self, model: str, prompt_tokens: int, completion_tokens: int, timestamp: float | None = None) -> LedgerRecord:
        rec = LedgerRecord(
            model,
            prompt_tokens,
            completion_tokens,
            self.prices.cost(model, prompt_tokens, completion_tokens),
            time.time() if timestamp is None else timestamp,
        )
        with self._lock:
            self._records.append(rec)
        return rec

    @property
    def records(self) -> list[LedgerRecord]:
        with self._lock:
            return list(self._records)

    def __len__(self) -> int:
        return len(self._records)

    @property
    def total_dollars(self) -> float:
        return sum(r.dollars for r in self.records)

    def summary(self) -> dict[str, dict]:
        out: dict[str, dict] = {}
        for r in self.records:
            s = out.setdefault(r.model, {"calls": 0, "prompt_tokens": 0, "completion_tokens": 0, "dollars": 0.0})
            s["calls"] += 1
            s["prompt_tokens"] += r.prompt_tokens
            s["completion_tokens"] += r.completion_tokens
            s["dollars"] += r.dollars
        for s in out.values():
            s["dollars_per_call"] = s["dollars"] / s["calls"]
        return out

    def dump(self, sink: IO[str]) -> None:
        for r in self.records:
            sink.write(json.dumps(asdict(r)) + "\n")

    @classmethod
    def load(cls, source, prices: PriceTable | None = None) -> "CostLedger":
        ledger = cls(prices)
        for line in source:
            if line.strip():
                ledger._records.append(LedgerRecord(**json.loads(line)))
        return ledger


def estimate_tokens(text: str) -> int:
    """Rough token count (about four characters per token); for offline projections only."""
    return -(-len(text) // 4)
