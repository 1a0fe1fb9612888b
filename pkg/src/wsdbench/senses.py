"""Sense lexicon loading and neighbor encoding.

A lexicon is a graph of senses connected by descriptor edges: every sense
(except those in the root region) points at one primary descriptor and
optionally at a few secondary descriptors.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

__all__ = [
    "SenseId",
    "SenseEntry",
    "SenseGraph",
    "LexiconError",
    "UnknownSense",
    "load_lexicon",
    "neighborhood",
]

_SENSE_RE = re.compile(r"^(?P<lemma>.+)\.\.(?P<no>[0-9]+)$")
# a lemma may contain spaces ("bryta upp..1"), so descriptor lists are split
# at whitespace that directly follows a "..<digits>" suffix
_SD_RE = re.compile(r"\S.*?\.\.[0-9]+(?=\s|$)")


class LexiconError(ValueError):
    """Raised for malformed or inconsistent lexicon input."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class UnknownSense(KeyError):
    pass


@dataclass(frozen=True, order=True)
class SenseId:
    """A sense identifier such as ``ämne..2``.

    Ordering is (lemma, sense_no), which is also the first-sense order.
    """

    lemma: str
    sense_no: int

    def __post_init__(self):
        if not self.lemma or ".." in self.lemma or self.lemma != self.lemma.strip():
            raise ValueError(f"invalid lemma {self.lemma!r}")
        if isinstance(self.sense_no, bool) or not isinstance(self.sense_no, int) or self.sense_no < 1:
            raise ValueError(f"invalid sense number {self.sense_no!r}")

    @classmethod
    def parse(cls, text: str) -> "SenseId":
        m = _SENSE_RE.match(text)
        if m is None:
            raise ValueError(f"not a sense id: {text!r}")
        return cls(m.group("lemma"), int(m.group("no")))

    def __str__(self) -> str:
        return f"{self.lemma}..{self.sense_no}"


@dataclass(frozen=True)
class SenseEntry:
    id: SenseId
    primary_descriptor: SenseId | None = None
    secondary_descriptors: tuple[SenseId, ...] = ()

    def __post_init__(self):
        sds = tuple(self.secondary_descriptors)
        object.__setattr__(self, "secondary_descriptors", sds)
        if self.primary_descriptor == self.id:
            raise ValueError(f"{self.id} is its own primary descriptor")
        if self.id in sds:
            raise ValueError(f"{self.id} is its own secondary descriptor")
        if len(set(sds)) != len(sds):
            raise ValueError(f"duplicate secondary descriptors for {self.id}")
        if self.primary_descriptor is not None and self.primary_descriptor in sds:
            raise ValueError(f"{self.id}: primary descriptor repeated as secondary")


@dataclass(frozen=True)
class SenseGraph:
    """Immutable sense graph with an inverse primary-descriptor index.

    ``inverse_pd_index[y]`` lists the senses whose primary descriptor is
    ``y``, in lexicon (file) order.
    """

    entries: Mapping[SenseId, SenseEntry] = field(default_factory=dict)
    inverse_pd_index: Mapping[SenseId, tuple[SenseId, ...]] = field(default_factory=dict)

    @classmethod
    def from_entries(cls, entries: Iterable[SenseEntry], strict: bool = False) -> "SenseGraph":
        table: dict[SenseId, SenseEntry] = {}
        for e in entries:
            if e.id in table:
                raise LexiconError(f"duplicate sense {e.id}")
            table[e.id] = e
        if strict:
            for e in table.values():
                for ref in _descriptors(e):
                    if ref not in table:
                        raise LexiconError(f"{e.id} references undefined sense {ref}")
        inverse: dict[SenseId, list[SenseId]] = {}
        for e in table.values():
            if e.primary_descriptor is not None:
                inverse.setdefault(e.primary_descriptor, []).append(e.id)
        return cls(table, {k: tuple(v) for k, v in inverse.items()})

    def __contains__(self, sense: object) -> bool:
        return sense in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[SenseId]:
        return iter(self.entries)

    def __getitem__(self, sense: SenseId) -> SenseEntry:
        try:
            return self.entries[sense]
        except KeyError:
            raise UnknownSense(str(sense)) from None

    def children(self, sense: SenseId) -> tuple[SenseId, ...]:
        return self.inverse_pd_index.get(sense, ())

    def senses_of(self, lemma: str) -> list[SenseId]:
        """All senses with the given lemma, in (lemma, sense_no) order."""
        index = self.__dict__.get("_lemma_index")
        if index is None:
            index = {}
            for s in sorted(self.entries):
                index.setdefault(s.lemma, []).append(s)
            object.__setattr__(self, "_lemma_index", index)
        return list(index.get(lemma, ()))

    def undirected_edges(self) -> list[tuple[SenseId, SenseId]]:
        """PD and SD edges between senses present in the graph, as unordered pairs.

        Dangling references are dropped; parallel edges collapse to one.
        """
        seen: set[frozenset] = set()
        edges = []
        for e in self.entries.values():
            for ref in _descriptors(e):
                if ref not in self.entries:
                    continue
                key = frozenset((e.id, ref))
                if key not in seen:
                    seen.add(key)
                    edges.append((e.id, ref))
        return edges


def _descriptors(entry: SenseEntry) -> list[SenseId]:
    out = [] if entry.primary_descriptor is None else [entry.primary_descriptor]
    out.extend(entry.secondary_descriptors)
    return out


def _parse_sense(text: str, line_no: int) -> SenseId:
    try:
        return SenseId.parse(text)
    except ValueError as exc:
        raise LexiconError(str(exc), line_no) from None


def load_lexicon(source: Iterable[str], strict: bool = False) -> SenseGraph:
    """Read a lexicon TSV stream.

    Each non-comment line is ``sense<TAB>primary-or-empty<TAB>secondaries``,
    with secondaries separated by whitespace. With ``strict`` every referenced
    descriptor must itself be defined; otherwise dangling references are kept
    in the entries but ignored by neighbor queries.
    """
    entries: list[SenseEntry] = []
    seen: set[SenseId] = set()
    for line_no, raw in enumerate(source, 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) > 3:
            raise LexiconError(f"expected at most 3 tab-separated fields, got {len(fields)}", line_no)
        fields += [""] * (3 - len(fields))
        sense = _parse_sense(fields[0].strip(), line_no)
        if sense in seen:
            raise LexiconError(f"duplicate sense {sense}", line_no)
        seen.add(sense)
        pd = _parse_sense(fields[1].strip(), line_no) if fields[1].strip() else None
        sd_text = fields[2].strip()
        sds = [_parse_sense(t, line_no) for t in _SD_RE.findall(sd_text)]
        if sd_text and " ".join(str(s) for s in sds) != " ".join(sd_text.split()):
            raise LexiconError(f"cannot parse secondary descriptors {sd_text!r}", line_no)
        try:
            entries.append(SenseEntry(sense, pd, tuple(sds)))
        except ValueError as exc:
            raise LexiconError(str(exc), line_no) from None
    try:
        return SenseGraph.from_entries(entries, strict=strict)
    except LexiconError as exc:
        if strict:
            raise LexiconError(f"dangling reference: {exc}") from None
        raise


def neighborhood(
    graph: SenseGraph,
    sense: SenseId,
    max_neighbors: int = 4,
    child_order: str = "lexicon",
) -> list[str]:
    """Lemmas of up to ``max_neighbors`` direct neighbors of ``sense``.

    Order: primary descriptor, then senses that have ``sense`` as primary
    descriptor, then secondary descriptors in stored order. Children come in
    lexicon order by default; ``child_order="sorted"`` uses (lemma, sense_no).
    Repeated lemmas are kept.
    """
    if max_neighbors < 1:
        raise ValueError("max_neighbors must be positive")
    entry = graph[sense]
    children = list(graph.children(sense))
    if child_order == "sorted":
        children.sort()
    elif child_order != "lexicon":
        raise ValueError(f"unknown child order {child_order!r}")

    ordered: list[SenseId] = []
    if entry.primary_descriptor is not None and entry.primary_descriptor in graph:
        ordered.append(entry.primary_descriptor)
    ordered.extend(children)
    ordered.extend(s for s in entry.secondary_descriptors if s in graph)
    return [s.lemma for s in ordered[:max_neighbors]]
