"""Sense-annotated instances and sense definitions (JSON Lines I/O)."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping

from .senses import SenseId

MULTIWORD = "multiword"
COMPOUND = "compound"
EXCLUSION_FLAGS = frozenset({MULTIWORD, COMPOUND})

MACRO_BY_LEMMA = "macro_by_lemma"
MICRO = "micro"


class DataError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"record {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Instance:
    """One disambiguation problem.

    ``sentences`` is the context window (normally five sentences, target
    sentence in the middle), each a tuple of tokens. ``target`` is a
    (sentence index, token index) pair. The gold sense need not be among the
    candidates.
    """

    instance_id: str
    lemma: str
    sentences: tuple[tuple[str, ...], ...]
    target: tuple[int, int]
    candidates: tuple[SenseId, ...]
    gold: SenseId
    pos: str | None = None
    exclusion_flags: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(tuple(s) for s in self.sentences))
        object.__setattr__(self, "target", tuple(self.target))
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "exclusion_flags", frozenset(self.exclusion_flags))
        if not self.instance_id:
            raise ValueError("empty instance id")
        if not self.candidates:
            raise ValueError(f"{self.instance_id}: no candidate senses")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError(f"{self.instance_id}: duplicate candidates")
        si, ti = self.target
        if not (0 <= si < len(self.sentences) and 0 <= ti < len(self.sentences[si])):
            raise ValueError(f"{self.instance_id}: target {list(self.target)} out of range")
        unknown = self.exclusion_flags - EXCLUSION_FLAGS
        if unknown:
            raise ValueError(f"{self.instance_id}: unknown flags {sorted(unknown)}")

    @property
    def target_token(self) -> str:
        si, ti = self.target
        return self.sentences[si][ti]

    @property
    def ordered_candidates(self) -> list[SenseId]:
        return sorted(self.candidates)

    def to_record(self) -> dict:
        return {
            "id": self.instance_id,
            "lemma": self.lemma,
            "pos": self.pos,
            "sentences": [list(s) for s in self.sentences],
            "target": list(self.target),
            "candidates": [str(c) for c in self.candidates],
            "gold": str(self.gold),
            "flags": sorted(self.exclusion_flags),
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "Instance":
        missing = {"id", "lemma", "sentences", "target", "candidates", "gold"} - set(rec)
        if missing:
            raise ValueError(f"missing fields {sorted(missing)}")
        target = rec["target"]
        if not (isinstance(target, list) and len(target) == 2 and all(isinstance(i, int) for i in target)):
            raise ValueError("target must be [sentence_index, token_index]")
        sentences = rec["sentences"]
        if not isinstance(sentences, list) or not all(
            isinstance(s, list) and all(isinstance(t, str) for t in s) for s in sentences
        ):
            raise ValueError("sentences must be a list of token lists")
        return cls(
            instance_id=str(rec["id"]),
            lemma=rec["lemma"],
            pos=rec.get("pos"),
            sentences=sentences,
            target=target,
            candidates=[SenseId.parse(c) for c in rec["candidates"]],
            gold=SenseId.parse(rec["gold"]),
            exclusion_flags=rec.get("flags") or (),
        )


@dataclass(frozen=True)
class SenseDefinition:
    sense_id: SenseId
    definition: str
    example: str | None = None
    source: str = "human"  # "human" or "model:<name>"

    def __post_init__(self):
        if not self.definition.strip():
            raise ValueError(f"{self.sense_id}: empty definition")
        if self.source != "human" and not (self.source.startswith("model:") and len(self.source) > 6):
            raise ValueError(f"bad definition source {self.source!r}")

    @property
    def model_name(self) -> str | None:
        return self.source[6:] if self.source.startswith("model:") else None


@dataclass
class Dataset:
    name: str
    test: list[Instance]
    averaging: str = MICRO
    train: list[Instance] | None = None

    def __post_init__(self):
        if self.averaging not in (MACRO_BY_LEMMA, MICRO):
            raise ValueError(f"unknown averaging {self.averaging!r}")

    @property
    def lemmas(self) -> list[str]:
        return sorted({i.lemma for i in self.test})


def _json_lines(source: Iterable[str]):
    for line_no, line in enumerate(source, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON ({exc.msg})", line_no) from None
        if not isinstance(rec, dict):
            raise DataError("record is not an object", line_no)
        yield line_no, rec


def load_instances(source: Iterable[str]) -> list[Instance]:
    out: list[Instance] = []
    seen: set[str] = set()
    for line_no, rec in _json_lines(source):
        try:
            inst = Instance.from_record(rec)
        except (ValueError, TypeError, KeyError) as exc:
            raise DataError(str(exc), line_no) from None
        if inst.instance_id in seen:
            raise DataError(f"duplicate instance id {inst.instance_id!r}", line_no)
        seen.add(inst.instance_id)
        out.append(inst)
    return out


def save_instances(instances: Iterable[Instance], sink: IO[str]) -> None:
    for inst in instances:
        sink.write(json.dumps(inst.to_record(), ensure_ascii=False) + "\n")


def filter_for_evaluation(instances: Iterable[Instance]) -> list[Instance]:
    """Drop unambiguous instances and those flagged as multiword/compound readings."""
    return [i for i in instances if len(i.candidates) > 1 and not i.exclusion_flags]


def load_definitions(source: Iterable[str]) -> dict[SenseId, SenseDefinition]:
    out: dict[SenseId, SenseDefinition] = {}
    for line_no, rec in _json_lines(source):
        try:
            d = SenseDefinition(
                sense_id=SenseId.parse(rec["sense_id"]),
                definition=rec["definition"],
                example=rec.get("example"),
                source=rec.get("source", "human"),
            )
        except (ValueError, TypeError, KeyError, AttributeError) as exc:
            raise DataError(str(exc), line_no) from None
        if d.sense_id in out:
            raise DataError(f"duplicate definition for {d.sense_id}", line_no)
        out[d.sense_id] = d
    return out


def save_definitions(definitions: Mapping[SenseId, SenseDefinition], sink: IO[str]) -> None:
    for d in definitions.values():
        rec = {
            "sense_id": str(d.sense_id),
            "definition": d.definition,
            "example": d.example,
            "source": d.source,
        }
        sink.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_instances(path) -> list[Instance]:
    with open(path, encoding="utf-8") as f:
        return load_instances(f)


def read_definitions(path) -> dict[SenseId, SenseDefinition]:
    with open(path, encoding="utf-8") as f:
        return load_definitions(f)
