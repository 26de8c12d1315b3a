"""Structure-only skeletons of programs and of entity-masked questions.

Skeletons are the retrieval keys for structural similarity: a program with
every argument, literal and entity id removed, serialized deterministically.

  kopl        post-order function names joined by "."
  lambda_dcs  the bracket tree with payload leaves deleted; typed wrappers
              (string/number/date/var/lambda) stay as bare markers
  sparql      the companion S-expression with relation tokens replaced by
              [V0], [V1], ... and entity tokens by [E0], [E1], ... in
              first-occurrence order
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .bracket_ast import BracketTree, serialize_bracket
from .programs import KOPL, LAMBDA_DCS, SPARQL, FormalProgram, LanguageError


class SkeletonError(ValueError):
    """Program cannot be skeletonized (e.g. SPARQL without an S-expression)."""


@dataclass(frozen=True)
class Skeleton:
    language: str
    tokens: tuple[str, ...]
    text: str
    labels: frozenset[str]


@dataclass(frozen=True)
class NlqSkeleton:
    text: str
    placeholder_map: tuple[tuple[str, str], ...]  # placeholder -> surface span
    unmatched: tuple[str, ...] = ()

    def mapping(self) -> dict[str, str]:
        return dict(self.placeholder_map)

    def unmask(self) -> str:
        mapping = self.mapping()
        return re.sub(r"\[E\d+\]", lambda m: mapping.get(m.group(0), m.group(0)), self.text)


# Lambda DCS wrappers whose leaf children are payloads, never structure.
_TYPED_WRAPPERS = {"string", "number", "date", "time", "var", "lambda"}

# Operator vocabulary of GrailQA S-expressions; everything else is content.
_SEXPR_OPERATORS = {
    "AND", "OR", "NOT", "JOIN", "R", "COUNT", "ARGMAX", "ARGMIN",
    "TC", "CONS", "le", "lt", "ge", "gt", "eq",
}

_ENTITY_TOKEN = re.compile(r"^(m\.|g\.)|^[0-9][\w.:-]*$|\^\^")


def _prune_lambda(node: BracketTree) -> BracketTree:
    """Drop payload leaves, keep structure.

    A "call" node keeps its leading identifier leaf (the library function
    name); every other leaf child is an argument and is removed.
    """
    if node.is_literal_leaf():
        return node
    children: list[BracketTree] = []
    for i, child in enumerate(node.children):
        if child.is_literal_leaf():
            if node.label == "call" and i == 0:
                children.append(child)
        else:
            children.append(_prune_lambda(child))
    return BracketTree(label=node.label, children=children)


def _mask_sexpr(node: BracketTree, assigned: dict[str, str], counters: dict[str, int]) -> BracketTree:
    def placeholder(token: str) -> str:
        if token in _SEXPR_OPERATORS:
            return token
        if token not in assigned:
            kind = "E" if _ENTITY_TOKEN.search(token) else "V"
            assigned[token] = f"[{kind}{counters[kind]}]"
            counters[kind] += 1
        return assigned[token]

    if node.is_literal_leaf():
        return BracketTree.leaf(placeholder(node.label))
    label = placeholder(node.label) if node.label else ""
    children = [_mask_sexpr(c, assigned, counters) for c in node.children]
    return BracketTree(label=label, children=children)


def _bracket_skeleton(language: str, tree: BracketTree, spaced: bool) -> Skeleton:
    text = serialize_bracket(tree, spaced=spaced)
    tokens = tuple(re.findall(r"\(|\)|[^\s()]+", text))
    labels = frozenset(t for t in tokens if t not in "()")
    return Skeleton(language=language, tokens=tokens, text=text, labels=labels)


def skeleton_of(program: FormalProgram) -> Skeleton:
    if program.language == KOPL:
        names = tuple(program.body.function_names())
        return Skeleton(
            language=KOPL, tokens=names, text=".".join(names), labels=frozenset(names)
        )
    if program.language == LAMBDA_DCS:
        return _bracket_skeleton(LAMBDA_DCS, _prune_lambda(program.body), spaced=True)
    if program.language == SPARQL:
        sexpr = program.body.companion_sexpr
        if sexpr is None:
            raise SkeletonError("SPARQL program lacks a companion S-expression")
        masked = _mask_sexpr(sexpr, assigned={}, counters={"E": 0, "V": 0})
        return _bracket_skeleton(SPARQL, masked, spaced=False)
    raise LanguageError(f"unknown language: {program.language!r}")


def mask_nlq(question: str, entity_spans) -> NlqSkeleton:
    """Replace entity/relation mentions with [E0], [E1], ... placeholders.

    Longer spans are matched first; matching is case-insensitive and
    leftmost, and claimed regions are never re-matched, so overlapping spans
    resolve leftmost-longest. Spans that never match are recorded, not
    errors. Identical matched surface text shares one placeholder, which
    keeps the substitution invertible.
    """
    spans = [s for s in dict.fromkeys(entity_spans) if s and s.strip()]
    lowered = question.lower()
    claimed: list[tuple[int, int]] = []
    unmatched: list[str] = []

    def overlaps(start: int, end: int) -> bool:
        return any(start < c_end and end > c_start for c_start, c_end in claimed)

    for span in sorted(spans, key=lambda s: (-len(s), s)):
        needle = span.lower()
        found = False
        pos = lowered.find(needle)
        while pos >= 0:
            end = pos + len(needle)
            if not overlaps(pos, end):
                claimed.append((pos, end))
                found = True
            pos = lowered.find(needle, pos + 1)
        if not found:
            unmatched.append(span)

    claimed.sort()
    placeholders: dict[str, str] = {}
    pieces: list[str] = []
    cursor = 0
    mapping: list[tuple[str, str]] = []
    for start, end in claimed:
        surface = question[start:end]
        if surface not in placeholders:
            tag = f"[E{len(placeholders)}]"
            placeholders[surface] = tag
            mapping.append((tag, surface))
        pieces.append(question[cursor:start])
        pieces.append(placeholders[surface])
        cursor = end
    pieces.append(question[cursor:])
    return NlqSkeleton(
        text="".join(pieces),
        placeholder_map=tuple(mapping),
        unmatched=tuple(unmatched),
    )
