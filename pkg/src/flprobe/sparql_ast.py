"""Pattern-scoped SPARQL parsing.

Only the SELECT ... WHERE shape GrailQA emits is accepted:

    SELECT (?x0 AS ?value) WHERE { SELECT DISTINCT ?x0 WHERE {
        ?x0 :type.object.type :broadcast.radio_format .
        VALUES ?x2 { :m.010fcxr0 }
        ?x1 :broadcast.radio_station.format ?x0 .
        FILTER ( ?x0 != ?x1 )
    } }

with an optional COUNT aggregate in the outer select and an optional outer
wrapper. Anything else (UNION, OPTIONAL, ORDER BY, ...) is rejected rather
than half-parsed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .bracket_ast import BracketTree
from .util import normalize_ws

_UNSUPPORTED = {
    "UNION", "OPTIONAL", "ORDER", "GROUP", "LIMIT", "OFFSET", "MINUS",
    "ASK", "CONSTRUCT", "DESCRIBE", "EXISTS", "BIND", "SERVICE",
}


class SparqlParseError(ValueError):
    """Query text outside the supported SELECT...WHERE pattern."""


@dataclass
class SparqlQuery:
    select_var: str
    triples: list[tuple[str, str, str]]
    values_bindings: dict[str, str]
    filters: list[str]
    source_text: str
    companion_sexpr: BracketTree | None = None
    aggregate: str | None = None  # e.g. "COUNT" in the outer select
    has_outer_select: bool = True

    def validate(self) -> None:
        """Every triple variable must be visible in select, VALUES or FILTER scope."""
        filter_blob = " ".join(self.filters)
        for s, p, o in self.triples:
            for term in (s, p, o):
                if term.startswith("?") and term != self.select_var \
                        and term not in self.values_bindings and term not in filter_blob:
                    raise SparqlParseError(f"variable {term} appears only in triples")

    def variables(self) -> set[str]:
        out = {self.select_var}
        out.update(self.values_bindings)
        for triple in self.triples:
            out.update(t for t in triple if t.startswith("?"))
        return out

    def canonical_text(self) -> str:
        """Deterministic rendering: triples sorted, then VALUES, then FILTERs."""
        items = [f"{s} {p} {o} ." for s, p, o in sorted(self.triples)]
        for var in sorted(self.values_bindings):
            items.append(f"VALUES {var} {{ :{self.values_bindings[var]} }}")
        items.extend(sorted(normalize_ws(f) for f in self.filters))
        inner = f"SELECT DISTINCT {self.select_var} WHERE {{ {' '.join(items)} }}"
        if not self.has_outer_select:
            return inner
        expr = f"COUNT({self.select_var})" if self.aggregate else self.select_var
        return f"SELECT ({expr} AS ?value) WHERE {{ {inner} }}"


def _tokenize(text: str) -> list[str]:
    for ch in "{}":
        text = text.replace(ch, f" {ch} ")
    text = text.replace("(", " ( ").replace(")", " ) ")
    return text.split()


class _Cursor:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise SparqlParseError("unexpected end of query")
        self.pos += 1
        return tok

    def expect(self, *expected: str) -> str:
        tok = self.next()
        if tok.upper() not in expected:
            raise SparqlParseError(f"expected {'/'.join(expected)}, got {tok!r}")
        return tok


def _parse_select_header(cur: _Cursor) -> tuple[str, str | None, bool]:
    """Consume 'SELECT ...' up to and including WHERE '{'.

    Returns (variable, aggregate, is_projection) where is_projection marks the
    "( expr AS ?value )" outer form.
    """
    cur.expect("SELECT")
    tok = cur.next()
    if tok == "(":
        inner = cur.next()
        aggregate = None
        if inner.upper() == "COUNT":
            cur.expect("(")
            var = cur.next()
            cur.expect(")")
            aggregate = "COUNT"
        else:
            var = inner
        cur.expect("AS")
        cur.next()  # projection alias, conventionally ?value
        cur.expect(")")
        cur.expect("WHERE")
        cur.expect("{")
        return var, aggregate, True
    if tok.upper() != "DISTINCT":
        raise SparqlParseError(f"expected DISTINCT or projection, got {tok!r}")
    var = cur.next()
    cur.expect("WHERE")
    cur.expect("{")
    return var, None, False


def parse_sparql(text: str, sexpr: BracketTree | str | None = None) -> SparqlQuery:
    """Parse GrailQA-shaped SPARQL; sexpr optionally attaches the companion
    S-expression (parsed if given as text)."""
    if not text or not text.strip():
        raise SparqlParseError("empty query")
    tokens = _tokenize(text)
    for tok in tokens:
        if tok.upper() in _UNSUPPORTED:
            raise SparqlParseError(f"unsupported SPARQL construct: {tok}")
    cur = _Cursor(tokens)

    var, aggregate, is_projection = _parse_select_header(cur)
    has_outer = False
    if cur.peek() and cur.peek().upper() == "SELECT":
        if not is_projection:
            raise SparqlParseError("nested SELECT without outer projection")
        has_outer = True
        inner_var, inner_agg, inner_proj = _parse_select_header(cur)
        if inner_proj or inner_agg:
            raise SparqlParseError("inner SELECT must be a plain DISTINCT select")
        var = inner_var

    triples: list[tuple[str, str, str]] = []
    values: dict[str, str] = {}
    filters: list[str] = []
    depth = 1
    while True:
        tok = cur.peek()
        if tok is None:
            raise SparqlParseError("unterminated WHERE block")
        if tok == "}":
            cur.next()
            depth -= 1
            if has_outer and depth == 0:
                cur.expect("}")
            break
        if tok.upper() == "VALUES":
            cur.next()
            v = cur.next()
            cur.expect("{")
            binding = []
            while cur.peek() != "}":
                binding.append(cur.next())
            cur.expect("}")
            if not binding:
                raise SparqlParseError(f"empty VALUES binding for {v}")
            values[v] = " ".join(binding).lstrip(":")
        elif tok.upper() == "FILTER":
            cur.next()
            cur.expect("(")
            level, body = 1, []
            while level:
                t = cur.next()
                if t == "(":
                    level += 1
                elif t == ")":
                    level -= 1
                    if not level:
                        break
                body.append(t)
            filters.append(f"FILTER ( {' '.join(body)} )")
        else:
            terms = []
            while cur.peek() not in (".", None, "}") and len(terms) < 3:
                terms.append(cur.next())
            if len(terms) != 3:
                raise SparqlParseError(f"malformed triple near {' '.join(terms)!r}")
            if cur.peek() == ".":
                cur.next()
            triples.append((terms[0], terms[1], terms[2]))
    if cur.peek() is not None:
        raise SparqlParseError(f"trailing content after query: {cur.peek()!r}")
    if not triples:
        raise SparqlParseError("query contains no triples")

    if isinstance(sexpr, str):
        from .bracket_ast import parse_bracket
        sexpr = parse_bracket(sexpr)
    query = SparqlQuery(
        select_var=var,
        triples=triples,
        values_bindings=values,
        filters=filters,
        source_text=text,
        companion_sexpr=sexpr,
        aggregate=aggregate,
        has_outer_select=has_outer or is_projection,
    )
    query.validate()
    return query
