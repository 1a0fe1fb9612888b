"""Bag-of-words word experts: one linear hinge-loss classifier set per lemma."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from ..data import Instance
from ..senses import SenseId
from .base import Prediction, argmax_candidate
from .trivial import first_sense

FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 50
    learning_rate: float = 0.1
    regularization: float = 1e-4
    seed: int = 0


@dataclass
class WordExpertModel:
    lemma: str
    vocabulary: dict[str, int]
    senses: list[SenseId]
    weights: np.ndarray  # (n_senses, n_features)
    biases: np.ndarray   # (n_senses,)
    config: TrainingConfig = field(default_factory=TrainingConfig)

    def features(self, instance: Instance) -> np.ndarray:
        x = np.zeros(len(self.vocabulary))
        for tok in context_tokens(instance):
            j = self.vocabulary.get(tok)
            if j is not None:
                x[j] = 1.0
        return x

    def decision_scores(self, instance: Instance) -> dict[SenseId, float]:
        raw = self.weights @ self.features(instance) + self.biases
        return dict(zip(self.senses, raw.tolist()))

    def dump(self, sink: IO[str]) -> None:
        json.dump(
            {
                "format": "wsdbench-word-expert",
                "version": FORMAT_VERSION,
                "lemma": self.lemma,
                "vocabulary": sorted(self.vocabulary, key=self.vocabulary.get),
                "senses": [str(s) for s in self.senses],
                "weights": self.weights.tolist(),
                "biases": self.biases.tolist(),
                "config": vars(self.config),
            },
            sink,
            ensure_ascii=False,
        )

    @classmethod
    def load(cls, source: IO[str]) -> "WordExpertModel":
        rec = json.load(source)
        if rec.get("format") != "wsdbench-word-expert" or rec.get("version") != FORMAT_VERSION:
            raise ValueError("not a word-expert model file of a supported version")
        vocab = {tok: i for i, tok in enumerate(rec["vocabulary"])}
        weights = np.asarray(rec["weights"], dtype=float).reshape(len(rec["senses"]), len(vocab))
        return cls(
            lemma=rec["lemma"],
            vocabulary=vocab,
            senses=[SenseId.parse(s) for s in rec["senses"]],
            weights=weights,
            biases=np.asarray(rec["biases"], dtype=float),
            config=TrainingConfig(**rec["config"]),
        )


def context_tokens(instance: Instance) -> set[str]:
    """Lowercased unigrams of the context window, excluding the target occurrence."""
    tsi, tti = instance.target
    return {
        tok.lower()
        for si, sent in enumerate(instance.sentences)
        for ti, tok in enumerate(sent)
        if (si, ti) != (tsi, tti)
    }


def train_word_expert(lemma: str, instances: Iterable[Instance], config: TrainingConfig | None = None) -> WordExpertModel:
    """Train one-vs-rest linear SVMs by stochastic subgradient descent.

    Each binary problem minimizes ``lam/2 |w|^2 + mean(max(0, 1 - y (w.x + b)))``.
    Training order is canonicalized by instance id before the seeded
    per-epoch shuffles, so the model does not depend on input order.
    """
    config = config or TrainingConfig()
    data = sorted(instances, key=lambda i: i.instance_id)
    if not data:
        raise ValueError(f"no training instances for {lemma!r}")
    for inst in data:
        if inst.lemma != lemma:
            raise ValueError(f"instance {inst.instance_id} has lemma {inst.lemma!r}, expected {lemma!r}")

    vocab = {tok: i for i, tok in enumerate(sorted(set().union(*(context_tokens(i) for i in data))))}
    senses = sorted({i.gold for i in data})
    X = np.zeros((len(data), len(vocab)))
    for r, inst in enumerate(data):
        for tok in context_tokens(inst):
            X[r, vocab[tok]] = 1.0
    gold = np.array([senses.index(i.gold) for i in data])
    # targets in {-1, +1}, one row per sense
    Y = np.where(gold[None, :] == np.arange(len(senses))[:, None], 1.0, -1.0)

    W = np.zeros((len(senses), len(vocab)))
    b = np.zeros(len(senses))
    lr, lam = config.learning_rate, config.regularization
    rng = np.random.default_rng(config.seed)
    if len(senses) > 1:
        for _ in range(config.epochs):
            for r in rng.permutation(len(data)):
                x, y = X[r], Y[:, r]
                active = y * (W @ x + b) < 1.0
                W *= 1.0 - lr * lam
                W[active] += lr * y[active, None] * x[None, :]
                b[active] += lr * y[active]
    return WordExpertModel(lemma, vocab, senses, W, b, config)


def predict_word_expert(model: WordExpertModel | None, instance: Instance) -> Prediction:
    if model is None:
        return Prediction(first_sense(instance).chosen, "word-expert:first-sense-fallback")
    known = [s for s in instance.candidates if s in model.senses]
    if not known:
        return Prediction(first_sense(instance).chosen, "word-expert:first-sense-fallback")
    if len(model.senses) == 1:
        return Prediction(known[0], "word-expert")
    scores = {s: v for s, v in model.decision_scores(instance).items() if s in known}
    return Prediction(argmax_candidate(scores, known), "word-expert", scores)


class WordExperts:
    """Per-lemma collection of word-expert models usable as a disambiguator."""

    def __init__(self, models: dict[str, WordExpertModel]):
        self.models = models

    @classmethod
    def train(cls, instances: Iterable[Instance], config: TrainingConfig | None = None) -> "WordExperts":
        by_lemma: dict[str, list[Instance]] = {}
        for inst in instances:
            by_lemma.setdefault(inst.lemma, []).append(inst)
        return cls({lemma: train_word_expert(lemma, group, config) for lemma, group in sorted(by_lemma.items())})

    def __call__(self, instance: Instance) -> Prediction:
        return predict_word_expert(self.models.get(instance.lemma), instance)
