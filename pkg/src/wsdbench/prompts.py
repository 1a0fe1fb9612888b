"""Prompt rendering for LLM disambiguation and definition writing, plus reply parsing."""
from __future__ import annotations

import enum
import json
import logging
import re
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .data import Instance, SenseDefinition
from .senses import SenseGraph, SenseId, UnknownSense, neighborhood

log = logging.getLogger(__name__)


class PromptMode(str, enum.Enum):
    NEIGHBORHOOD = "neighborhood"
    DEFINITION = "definition"
    AUTO_DEFINITION = "auto_definition"
    CHAIN_OF_THOUGHT = "chain_of_thought"
    WRITE_DEFINITIONS = "write_definitions"


class MissingDefinition(KeyError):
    def __init__(self, sense_id: SenseId):
        self.sense_id = sense_id
        super().__init__(str(sense_id))


class DefinitionParseError(ValueError):
    pass


# instruction file stem and example file stem per mode
_TEMPLATE_FILES = {
    PromptMode.NEIGHBORHOOD: ("neighborhood", "neighborhood"),
    PromptMode.CHAIN_OF_THOUGHT: ("chain_of_thought", "neighborhood"),
    PromptMode.DEFINITION: ("definition", "definition"),
    PromptMode.AUTO_DEFINITION: ("definition", "definition"),
    PromptMode.WRITE_DEFINITIONS: ("write_definitions", "write_definitions"),
}


class PromptTemplates:
    """System prompt texts, read from the packaged template files.

    A directory passed as ``override_dir`` may contain any subset of the
    ``<name>.instructions.txt`` / ``<name>.example.txt`` files; missing
    ones fall back to the packaged defaults.
    """

    def __init__(self, override_dir: str | Path | None = None):
        self.override_dir = Path(override_dir) if override_dir else None
        self._cache: dict[str, str] = {}

    def _read(self, filename: str) -> str:
        if filename not in self._cache:
            path = self.override_dir / filename if self.override_dir else None
            if path is not None and path.is_file():
                text = path.read_text(encoding="utf-8")
            else:
                text = resources.files("wsdbench").joinpath("templates", filename).read_text(encoding="utf-8")
            self._cache[filename] = text.rstrip("\n")
        return self._cache[filename]

    def system(self, mode: PromptMode) -> str:
        instructions, example = _TEMPLATE_FILES[PromptMode(mode)]
        return self._read(f"{instructions}.instructions.txt") + "\n\n" + self._read(f"{example}.example.txt")


DEFAULT_TEMPLATES = PromptTemplates()


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    mode: PromptMode
    sense_index: Mapping[int, SenseId]

    def sense_for(self, number: int) -> SenseId:
        return self.sense_index[number]

    def number_for(self, sense: SenseId) -> int | None:
        for n, s in self.sense_index.items():
            if s == sense:
                return n
        return None


@dataclass(frozen=True)
class ModelAnswer:
    raw: str
    parsed: int | None  # None means the reply could not be parsed

    @property
    def failed(self) -> bool:
        return self.parsed is None


def render_context(instance: Instance) -> str:
    tsi, tti = instance.target
    parts = []
    for si, sent in enumerate(instance.sentences):
        for ti, tok in enumerate(sent):
            parts.append(f"* {tok} *" if (si, ti) == (tsi, tti) else tok)
    return " ".join(parts)


def _sense_index(candidates: Sequence[SenseId]) -> dict[int, SenseId]:
    return {n: s for n, s in enumerate(sorted(candidates), 1)}


def _related_entries(graph: SenseGraph, index: Mapping[int, SenseId], max_neighbors: int, child_order: str) -> str:
    entries = []
    for n, sense in index.items():
        if sense not in graph:
            raise UnknownSense(str(sense))
        words = neighborhood(graph, sense, max_neighbors, child_order)
        if not words:
            log.warning("sense %s has no neighbors; listing it without related words", sense)
        entries.append(f"{n}: related to " + ", ".join(f'"{w}"' for w in words) if words else f"{n}: related to")
    return ";\n".join(entries)


def build_neighborhood_prompt(
    instance: Instance,
    graph: SenseGraph,
    templates: PromptTemplates = DEFAULT_TEMPLATES,
    mode: PromptMode = PromptMode.NEIGHBORHOOD,
    max_neighbors: int = 4,
    child_order: str = "lexicon",
) -> PromptBundle:
    index = _sense_index(instance.candidates)
    user = (
        f"Entry: {instance.lemma}\n"
        f"Senses: {_related_entries(graph, index, max_neighbors, child_order)}\n"
        f"Sentence: {render_context(instance)}"
    )
    return PromptBundle(templates.system(mode), user, PromptMode(mode), index)


def build_cot_prompt(instance: Instance, graph: SenseGraph, templates: PromptTemplates = DEFAULT_TEMPLATES, **kw) -> PromptBundle:
    return build_neighborhood_prompt(instance, graph, templates, PromptMode.CHAIN_OF_THOUGHT, **kw)


def build_definition_prompt(
    instance: Instance,
    definitions: Mapping[SenseId, SenseDefinition],
    templates: PromptTemplates = DEFAULT_TEMPLATES,
    mode: PromptMode = PromptMode.DEFINITION,
) -> PromptBundle:
    index = _sense_index(instance.candidates)
    lines = []
    for n, sense in index.items():
        d = definitions.get(sense)
        if d is None:
            raise MissingDefinition(sense)
        lines.append(f"{n}: {d.definition}")
    user = (
        f"Entry: {instance.lemma}\n"
        "Sense definitions:\n" + "\n".join(lines) + "\n"
        f"Sentence: {render_context(instance)}"
    )
    return PromptBundle(templates.system(mode), user, PromptMode(mode), index)


def build_definition_writing_prompt(
    lemma: str,
    candidates: Sequence[SenseId],
    graph: SenseGraph,
    templates: PromptTemplates = DEFAULT_TEMPLATES,
    max_neighbors: int = 4,
    child_order: str = "lexicon",
) -> PromptBundle:
    if not candidates:
        raise ValueError("no senses to define")
    if any(c.lemma != lemma for c in candidates):
        raise ValueError(f"all senses must have lemma {lemma!r}")
    index = _sense_index(candidates)
    user = f"Entry: {lemma}\nSenses: {_related_entries(graph, index, max_neighbors, child_order)}"
    return PromptBundle(templates.system(PromptMode.WRITE_DEFINITIONS), user, PromptMode.WRITE_DEFINITIONS, index)


def _first_json_object(raw: str) -> dict:
    decoder = json.JSONDecoder()
    for m in re.finditer(r"\{", raw):
        try:
            obj, _ = decoder.raw_decode(raw, m.start())
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    raise DefinitionParseError("no JSON object found in reply")


def parse_written_definitions(raw: str, expected: set[int]) -> dict[int, tuple[str, str]]:
    """Pull the ``{"1": [definition, example], ...}`` object out of a model reply."""
    obj = _first_json_object(raw)
    out: dict[int, tuple[str, str]] = {}
    for key, value in obj.items():
        if not re.fullmatch(r"\s*[0-9]+\s*", str(key)):
            raise DefinitionParseError(f"non-numeric sense key {key!r}")
        n = int(key)
        if n in out:
            raise DefinitionParseError(f"duplicate sense key {key!r}")
        if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, str) for v in value)):
            raise DefinitionParseError(f"sense {key}: expected [definition, example]")
        out[n] = (value[0], value[1])
    missing, extra = set(expected) - set(out), set(out) - set(expected)
    if extra:
        raise DefinitionParseError(f"unexpected sense keys {sorted(extra)}")
    if missing:
        raise DefinitionParseError(f"missing sense keys {sorted(missing)}")
    return out


_TRAILING = string.whitespace + string.punctuation


def parse_answer(raw: str, k: int) -> ModelAnswer:
    lines = [ln for ln in raw.splitlines() if ln.strip()]
    if not lines:
        return ModelAnswer(raw, None)
    last = lines[-1].strip().rstrip(_TRAILING)
    if not re.fullmatch(r"[0-9]+", last):
        return ModelAnswer(raw, None)
    value = int(last)
    return ModelAnswer(raw, value if value <= k else None)


def build_prompt(
    mode: PromptMode,
    instance: Instance,
    graph: SenseGraph | None = None,
    definitions: Mapping[SenseId, SenseDefinition] | None = None,
    templates: PromptTemplates = DEFAULT_TEMPLATES,
    fallback_to_neighborhood: bool = False,
    **kw,
) -> PromptBundle:
    """Dispatch on ``mode`` for disambiguation prompts."""
    mode = PromptMode(mode)
    if mode in (PromptMode.DEFINITION, PromptMode.AUTO_DEFINITION):
        try:
            return build_definition_prompt(instance, definitions or {}, templates, mode)
        except MissingDefinition:
            if not fallback_to_neighborhood or graph is None:
                raise
            log.info("falling back to neighborhood prompt for %s", instance.instance_id)
            return build_neighborhood_prompt(instance, graph, templates, **kw)
    if graph is None:
        raise ValueError(f"{mode.value} prompts need a sense graph")
    if mode is PromptMode.NEIGHBORHOOD:
        return build_neighborhood_prompt(instance, graph, templates, **kw)
    if mode is PromptMode.CHAIN_OF_THOUGHT:
        return build_cot_prompt(instance, graph, templates, **kw)
    raise ValueError(f"{mode.value} is not a disambiguation mode")
