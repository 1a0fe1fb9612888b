"""Personalized PageRank over the undirected descriptor graph."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from ..data import Instance
from ..senses import SenseGraph, SenseId, UnknownSense
from .base import Prediction, argmax_candidate
from .trivial import first_sense


@dataclass(frozen=True)
class PprParams:
    damping: float = 0.85
    tolerance: float = 1e-8
    max_iterations: int = 100
    include_target_candidates: bool = False

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must lie in (0, 1)")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


class PersonalizedPageRank:
    """Random walk with restart on a sense graph.

    Edges are the primary and secondary descriptor links, taken as undirected
    and unweighted. Mass sitting on isolated nodes is returned to the
    teleport distribution, so scores always sum to one.
    """

    def __init__(self, graph: SenseGraph, params: PprParams | None = None):
        self.graph = graph
        self.params = params or PprParams()
        self.nodes: list[SenseId] = sorted(graph.entries)
        self.index = {s: i for i, s in enumerate(self.nodes)}
        n = len(self.nodes)
        rows, cols = [], []
        for a, b in graph.undirected_edges():
            i, j = self.index[a], self.index[b]
            rows += [i, j]
            cols += [j, i]
        adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        adj.data[:] = 1.0  # collapse duplicates
        self.adjacency = adj
        self.degree = np.asarray(adj.sum(axis=1)).ravel()
        self.dangling = self.degree == 0
        self._inv_degree = np.divide(1.0, self.degree, out=np.zeros(n), where=~self.dangling)

    def teleport_vector(self, teleport: Iterable[SenseId] | Mapping[SenseId, float]) -> np.ndarray:
        weights = teleport if isinstance(teleport, Mapping) else dict.fromkeys(teleport, 1.0)
        if not weights:
            raise ValueError("empty teleport set")
        v = np.zeros(len(self.nodes))
        for s, w in weights.items():
            if s not in self.index:
                raise UnknownSense(str(s))
            if w < 0:
                raise ValueError("teleport weights must be non-negative")
            v[self.index[s]] += w
        total = v.sum()
        if total <= 0:
            raise ValueError("teleport weights sum to zero")
        return v / total

    def run(self, v: np.ndarray) -> tuple[np.ndarray, int]:
        d = self.params.damping
        x = v.copy()
        for it in range(1, self.params.max_iterations + 1):
            spread = self.adjacency @ (x * self._inv_degree)
            lost = x[self.dangling].sum()
            x_new = d * (spread + lost * v) + (1.0 - d) * v
            delta = np.abs(x_new - x).sum()
            x = x_new
            if delta < self.params.tolerance:
                break
        return x / x.sum(), it

    def scores(self, teleport) -> dict[SenseId, float]:
        x, _ = self.run(self.teleport_vector(teleport))
        return dict(zip(self.nodes, x.tolist()))

    def context_teleport(self, instance: Instance) -> set[SenseId]:
        """Senses of the context words other than the target occurrence."""
        tsi, tti = instance.target
        excluded = set() if self.params.include_target_candidates else set(instance.candidates)
        found: set[SenseId] = set()
        for si, sent in enumerate(instance.sentences):
            for ti, tok in enumerate(sent):
                if (si, ti) == (tsi, tti):
                    continue
                for form in {tok, tok.lower()}:
                    found.update(self.graph.senses_of(form))
        return found - excluded

    def disambiguate(self, instance: Instance) -> Prediction:
        for c in instance.candidates:
            if c not in self.index:
                raise UnknownSense(str(c))
        teleport = self.context_teleport(instance)
        if not teleport:
            fallback = first_sense(instance)
            return Prediction(fallback.chosen, "ppr:first-sense-fallback")
        scores = self.scores(teleport)
        cand_scores = {c: scores[c] for c in instance.candidates}
        return Prediction(argmax_candidate(cand_scores, instance.candidates), "ppr", cand_scores)

    __call__ = disambiguate


def ppr_scores(graph: SenseGraph, teleport, params: PprParams | None = None) -> dict[SenseId, float]:
    return PersonalizedPageRank(graph, params).scores(teleport)


def ppr_disambiguate(graph: SenseGraph, instance: Instance, params: PprParams | None = None) -> Prediction:
    return PersonalizedPageRank(graph, params).disambiguate(instance)
