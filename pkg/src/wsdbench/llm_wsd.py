"""LLM-backed disambiguation: prompt, complete, parse, map back to a sense."""
from __future__ import annotations

import logging
from typing import Callable, Iterable, Mapping

from .data import Instance, SenseDefinition
from .disambiguators.base import PARSE_FAILURE, PROVIDER_ERROR, ZERO_ANSWER, Abstention, Prediction, Result
from .llm.gateway import Gateway, ModelRef
from .llm.providers import PermanentProviderError, prompt_hash
from .prompts import DEFAULT_TEMPLATES, PromptBundle, PromptMode, PromptTemplates, build_prompt, parse_answer
from .senses import SenseGraph, SenseId

log = logging.getLogger(__name__)


class LLMDisambiguator:
    def __init__(
        self,
        gateway: Gateway,
        model: ModelRef,
        mode: PromptMode,
        graph: SenseGraph | None = None,
        definitions: Mapping[SenseId, SenseDefinition] | None = None,
        templates: PromptTemplates = DEFAULT_TEMPLATES,
        fallback_to_neighborhood: bool = False,
    ):
        self.gateway = gateway
        self.model = model
        self.mode = PromptMode(mode)
        self.graph = graph
        self.definitions = definitions
        self.templates = templates
        self.fallback_to_neighborhood = fallback_to_neighborhood

    @property
    def name(self) -> str:
        return f"{self.model}/{self.mode.value}"

    def prompt(self, instance: Instance) -> PromptBundle:
        return build_prompt(
            self.mode, instance, self.graph, self.definitions, self.templates,
            fallback_to_neighborhood=self.fallback_to_neighborhood,
        )

    def __call__(self, instance: Instance) -> Result:
        bundle = self.prompt(instance)
        try:
            completion = self.gateway.complete(self.model, bundle.system_text, bundle.user_text)
        except PermanentProviderError as exc:
            log.warning("%s: provider rejected request: %s", instance.instance_id, exc)
            return Abstention(PROVIDER_ERROR, self.name, str(exc))
        answer = parse_answer(completion.text, len(bundle.sense_index))
        if answer.failed:
            return Abstention(PARSE_FAILURE, self.name, completion.text[-200:])
        if answer.parsed == 0:
            return Abstention(ZERO_ANSWER, self.name)
        return Prediction(bundle.sense_for(answer.parsed), self.name)


def oracle_script(instances: Iterable[Instance], prompt_fn: Callable[[Instance], PromptBundle]) -> dict[str, str]:
    """Mock script answering every prompt with the gold sense's local number (0 if absent)."""
    script = {}
    for inst in instances:
        bundle = prompt_fn(inst)
        n = bundle.number_for(inst.gold)
        key, answer = prompt_hash(bundle.system_text, bundle.user_text), str(n or 0)
        if script.get(key, answer) != answer:
            raise ValueError(f"{inst.instance_id}: identical prompt already scripted with a different answer")
        script[key] = answer
    return script
