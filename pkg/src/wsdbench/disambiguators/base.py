from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

from ..data import Instance
from ..senses import SenseId

PARSE_FAILURE = "parse_failure"
ZERO_ANSWER = "zero_answer"
NOT_PRESENT = "not_present"
PROVIDER_ERROR = "provider_error"
FAILURE_KINDS = (PARSE_FAILURE, ZERO_ANSWER, NOT_PRESENT, PROVIDER_ERROR)


@dataclass(frozen=True)
class Prediction:
    chosen: SenseId
    method: str
    scores: Mapping[SenseId, float] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Abstention:
    """A disambiguator declined or failed to pick a candidate; scored as incorrect."""

    kind: str
    method: str
    detail: str = ""

    def __post_init__(self):
        if self.kind not in FAILURE_KINDS:
            raise ValueError(f"unknown failure kind {self.kind!r}")


Result = Union[Prediction, Abstention]
Disambiguator = Callable[[Instance], Result]


def argmax_candidate(scores: Mapping[SenseId, float], candidates, rel_tol: float = 1e-12) -> SenseId:
    """Highest-scoring candidate; near-ties (within ``rel_tol``) go to the lower (lemma, sense_no)."""
    ordered = sorted(candidates)
    best = ordered[0]
    best_score = scores.get(best, 0.0)
    for c in ordered[1:]:
        s = scores.get(c, 0.0)
        if s > best_score + rel_tol * max(abs(best_score), abs(s), 1e-300):
            best, best_score = c, s
    return best
