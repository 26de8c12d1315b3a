"""Bit-exact prompt assembly for the three probing tasks.

Demonstrations are joined with " [SEP] " and the prompt always ends with the
task connective plus one trailing space, so the model's continuation starts
cleanly. Wording lives in named templates and can be overridden per task (and
per language) from a JSON file.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .programs import KOPL, PROMPT_LANGUAGE_TAGS, LanguageError

SEPARATOR = " [SEP] "

UNDERSTANDING = "understanding"
GENERATION = "generation"
ZERO_SHOT_UNDERSTANDING = "zero_shot_understanding"


class PromptError(ValueError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    instruction: str       # may contain {language}
    connective: str        # joins each pair, e.g. " is verbalized as: "
    example_intro: str = ""


DEFAULT_TEMPLATES: dict[str, PromptTemplate] = {
    UNDERSTANDING: PromptTemplate(
        instruction=(
            "According to the given logic form {language}, "
            "generate the corresponding natural language question."
        ),
        connective=" is verbalized as: ",
        example_intro="For examples, ",
    ),
    GENERATION: PromptTemplate(
        instruction=(
            "According to the given natural language question, "
            "generate the corresponding logic form in {language}."
        ),
        connective=" is parsed into: ",
    ),
}

# The wording of the injected knowledge block is ours, kept as a named
# template so experiments can swap it.
KB_CONTEXT_TEMPLATE = "Related knowledge: {names}"


@dataclass(frozen=True)
class Prompt:
    task: str
    language: str
    text: str
    demo_count: int

    def validate(self) -> None:
        if self.text.count(SEPARATOR) != self.demo_count:
            raise PromptError(
                f"expected {self.demo_count} separators, found {self.text.count(SEPARATOR)}"
            )


def load_templates(path) -> dict[str, PromptTemplate]:
    """Template overrides keyed by task or "task.language"."""
    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    overrides = {}
    for key, entry in raw.items():
        overrides[key] = PromptTemplate(
            instruction=entry["instruction"],
            connective=entry["connective"],
            example_intro=entry.get("example_intro", ""),
        )
    return overrides


def resolve_template(task: str, language: str, overrides=None) -> PromptTemplate:
    overrides = overrides or {}
    for key in (f"{task}.{language}", task):
        if key in overrides:
            return overrides[key]
    return DEFAULT_TEMPLATES[task]


def _language_tag(language: str) -> str:
    try:
        return PROMPT_LANGUAGE_TAGS[language]
    except KeyError:
        raise LanguageError(f"unknown language: {language!r}") from None


def _assemble(task, language, template, pairs, target_head) -> Prompt:
    instruction = template.instruction.format(language=_language_tag(language))
    rendered = [f"{head}{template.connective}{tail}" for head, tail in pairs]
    body = template.example_intro + SEPARATOR.join(rendered) + SEPARATOR if rendered else ""
    text = f"{instruction} {body}{target_head}{template.connective}"
    prompt = Prompt(task=task, language=language, text=text, demo_count=len(rendered))
    prompt.validate()
    return prompt


def build_understanding_prompt(target_lf_text, demos, language, template=None) -> Prompt:
    """demos: (lf text, question) pairs, ordered as retrieval produced them."""
    template = template or resolve_template(UNDERSTANDING, language)
    return _assemble(UNDERSTANDING, language, template, demos, target_lf_text)


def build_generation_prompt(target_question, demos, language, template=None) -> Prompt:
    """demos: (question, lf text) pairs; KoPL demos use the tagged form."""
    template = template or resolve_template(GENERATION, language)
    return _assemble(GENERATION, language, template, demos, target_question)


def zero_shot_preamble() -> str:
    return (
        resources.files(__package__)
        .joinpath("resources/zero_shot_kopl.txt")
        .read_text(encoding="utf-8")
    )


def build_zero_shot_prompt(target_lf_text: str, language: str = KOPL) -> Prompt:
    """Fixed function-library preamble plus the target; KoPL only."""
    if language != KOPL:
        raise LanguageError("the zero-shot prompt is defined for kopl only")
    text = f"{zero_shot_preamble()}Tell me the answer, {target_lf_text}"
    return Prompt(task=ZERO_SHOT_UNDERSTANDING, language=language, text=text, demo_count=0)


def kb_context_block(names) -> str:
    """Deduplicated, sorted knowledge names rendered as a prompt block;
    empty input yields an empty block."""
    names = sorted(set(names))
    if not names:
        return ""
    return KB_CONTEXT_TEMPLATE.format(names=", ".join(names))
