"""Language-tagged program wrapper over the three ASTs."""
from __future__ import annotations

from dataclasses import dataclass

from .bracket_ast import BracketError, BracketTree, parse_bracket, serialize_bracket
from .kopl_ast import KoplError, KoplProgram, parse_kopl, serialize_kopl
from .sparql_ast import SparqlParseError, SparqlQuery, parse_sparql
from .util import normalize_ws

KOPL = "kopl"
SPARQL = "sparql"
LAMBDA_DCS = "lambda_dcs"

LANGUAGES = (KOPL, SPARQL, LAMBDA_DCS)

# the spelling each language gets inside prompt instructions
PROMPT_LANGUAGE_TAGS = {KOPL: "kopl", SPARQL: "sparql", LAMBDA_DCS: "lambdaDCS"}

_BODY_TYPES = {KOPL: KoplProgram, SPARQL: SparqlQuery, LAMBDA_DCS: BracketTree}

PARSE_ERRORS = (KoplError, BracketError, SparqlParseError)


class LanguageError(ValueError):
    """Unknown language tag or a body/tag mismatch."""


@dataclass
class FormalProgram:
    language: str
    body: KoplProgram | BracketTree | SparqlQuery
    source_text: str

    def __post_init__(self) -> None:
        if self.language not in LANGUAGES:
            raise LanguageError(f"unknown language: {self.language!r}")
        if not isinstance(self.body, _BODY_TYPES[self.language]):
            raise LanguageError(
                f"body {type(self.body).__name__} does not match language {self.language}"
            )


def parse_program(language: str, text: str, sexpr: str | None = None) -> FormalProgram:
    if language == KOPL:
        body: KoplProgram | BracketTree | SparqlQuery = parse_kopl(text)
    elif language == LAMBDA_DCS:
        body = parse_bracket(text)
    elif language == SPARQL:
        body = parse_sparql(text, sexpr=sexpr)
    else:
        raise LanguageError(f"unknown language: {language!r}")
    return FormalProgram(language=language, body=body, source_text=text)


def canonical_text(program: FormalProgram) -> str:
    """Format-neutral rendering used for exact-match comparison."""
    if program.language == KOPL:
        return serialize_kopl(program.body, "dot_chain")
    if program.language == LAMBDA_DCS:
        return serialize_bracket(program.body, spaced=True)
    return program.body.canonical_text()


def try_canonical(language: str, text: str) -> str | None:
    """canonical_text of parsed text, or None when it does not parse."""
    try:
        return canonical_text(parse_program(language, text))
    except PARSE_ERRORS:
        return None


def exact_match(predicted: str, gold: str, language: str) -> int:
    """1 iff the two texts denote the same program.

    Both sides are parsed and compared by canonical serialization, so
    formatting and whitespace differences do not count. When either side does
    not parse, falls back to whitespace-collapsed string equality.
    """
    canon_p = try_canonical(language, predicted)
    canon_g = try_canonical(language, gold)
    if canon_p is not None and canon_g is not None:
        return int(canon_p == canon_g)
    return int(normalize_ws(predicted) == normalize_ws(gold))
