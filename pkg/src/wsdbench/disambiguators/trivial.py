"""Random, first-sense and upper-bound baselines."""
from __future__ import annotations

import hashlib
import random

from ..data import Instance
from .base import NOT_PRESENT, Abstention, Prediction, Result


def _instance_rng(instance: Instance, seed: int) -> random.Random:
    # per-instance stream so the choice does not depend on evaluation order
    digest = hashlib.sha256(f"{seed}\x00{instance.instance_id}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def random_choice(instance: Instance, seed: int = 0) -> Prediction:
    rng = _instance_rng(instance, seed)
    return Prediction(rng.choice(instance.ordered_candidates), "random")


def first_sense(instance: Instance) -> Prediction:
    return Prediction(min(instance.candidates), "first-sense")


def oracle_upper_bound(instance: Instance) -> Result:
    if instance.gold in instance.candidates:
        return Prediction(instance.gold, "upper-bound")
    return Abstention(NOT_PRESENT, "upper-bound", f"gold {instance.gold} not among candidates")


def expected_random_accuracy(instances, averaging: str = "micro") -> float:
    """Analytic mean accuracy of uniform random choice: mean of [gold in C] / |C|.

    With ``averaging="macro_by_lemma"`` the per-lemma means are averaged instead.
    """
    instances = list(instances)
    if not instances:
        return 0.0
    if averaging == "macro_by_lemma":
        by_lemma = {}
        for i in instances:
            by_lemma.setdefault(i.lemma, []).append(i)
        return sum(expected_random_accuracy(v) for v in by_lemma.values()) / len(by_lemma)
    if averaging != "micro":
        raise ValueError(f"unknown averaging {averaging!r}")
    total = sum((i.gold in i.candidates) / len(i.candidates) for i in instances)
    return total / len(instances)
