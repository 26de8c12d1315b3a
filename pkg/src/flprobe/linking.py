"""Map model-generated names onto knowledge-base entries.

Generated logical forms routinely carry near-miss names (a hallucinated
relation one segment off, an entity surface form instead of its id). Each
vocabulary entry is indexed under hybrid tokens, lowercased words plus
character trigrams of the full name, which keeps matching robust for the
dotted multi-segment names Freebase-style vocabularies use. Pools are kept
separate per kind (entity / relation / concept) so a relation can never be
"corrected" into an entity.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .bm25 import Bm25Index
from .kb import ToyKB
from .sparql_ast import SparqlQuery, parse_sparql

VOCAB_KINDS = ("entity", "relation", "concept")


class LinkError(ValueError):
    """Name could not be linked to any vocabulary entry."""


@dataclass(frozen=True)
class VocabEntry:
    id: str
    name: str
    kind: str


def hybrid_tokens(name: str) -> list[str]:
    """Lowercased word tokens (split on dots, underscores and spaces) plus
    '#'-prefixed character trigrams of the whole name."""
    lowered = name.lower()
    tokens = re.findall(r"[a-z0-9]+", lowered)
    tokens.extend(f"#{lowered[i:i + 3]}" for i in range(len(lowered) - 2))
    return tokens


class NameIndex:
    def __init__(self, vocabulary):
        self.entries = list(vocabulary)
        if not self.entries:
            raise LinkError("empty vocabulary")
        for entry in self.entries:
            if entry.kind not in VOCAB_KINDS:
                raise LinkError(f"unknown vocabulary kind: {entry.kind!r}")
        self._pools: dict[str, tuple[Bm25Index, list[VocabEntry]]] = {}
        by_kind: dict[str, list[VocabEntry]] = {}
        for entry in self.entries:
            by_kind.setdefault(entry.kind, []).append(entry)
        for kind, members in by_kind.items():
            index = Bm25Index(
                documents=[hybrid_tokens(m.name) for m in members],
                doc_ids=list(range(len(members))),
            )
            self._pools[kind] = (index, members)
        self.ids = {entry.id for entry in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def pool(self, kind: str | None):
        if kind is None:
            kinds = list(self._pools)
        elif kind in self._pools:
            kinds = [kind]
        else:
            return []
        return kinds


def load_vocabulary(path) -> list[VocabEntry]:
    """Read a JSONL vocabulary of {id, name, kind} records."""
    entries = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            entries.append(VocabEntry(id=doc["id"], name=doc["name"], kind=doc["kind"]))
    return entries


def build_name_index(vocabulary) -> NameIndex:
    entries = [
        v if isinstance(v, VocabEntry) else VocabEntry(id=v[0], name=v[1], kind=v[2])
        for v in vocabulary
    ]
    return NameIndex(entries)


def link(index: NameIndex, generated_name: str, kind: str | None = None) -> tuple[str, float]:
    """Best (kb id, score) for a generated name within one kind pool.

    An exact (case-insensitive) vocabulary name always wins; otherwise the
    highest hybrid-token BM25 score does, ties broken by entry id. A name
    sharing no tokens with any entry is unlinked and raises LinkError.
    """
    if not generated_name or not generated_name.strip():
        raise LinkError("empty name")
    kinds = index.pool(kind)
    if not kinds:
        raise LinkError(f"no vocabulary entries of kind {kind!r}")
    lowered = generated_name.lower()
    scored: list[tuple[VocabEntry, float]] = []
    for k in kinds:
        bm25, members = index._pools[k]
        scores = bm25.scores(hybrid_tokens(generated_name))
        scored.extend(zip(members, scores))
    exact = [(m, s) for m, s in scored if m.name.lower() == lowered]
    if exact:
        entry, score = min(exact, key=lambda item: item[0].id)
        return entry.id, score
    positive = [(m, s) for m, s in scored if s > 0]
    if not positive:
        raise LinkError(f"unlinked name: {generated_name!r}")
    entry, score = min(positive, key=lambda item: (-item[1], item[0].id))
    return entry.id, score


def name_of(index: NameIndex, kb_id: str) -> str:
    for entry in index.entries:
        if entry.id == kb_id:
            return entry.name
    raise LinkError(f"unknown vocabulary id: {kb_id!r}")


@dataclass
class LinkOutcome:
    text: str
    replaced: list[tuple[str, str]] = field(default_factory=list)
    unlinked: list[str] = field(default_factory=list)


def relink_sparql(query, index: NameIndex) -> LinkOutcome:
    """Swap hallucinated relation/class names for their nearest vocabulary
    entries and re-render; the result is guaranteed to parse."""
    if not isinstance(query, SparqlQuery):
        query = parse_sparql(query)
    outcome = LinkOutcome(text="")

    def relink_term(term: str, kind: str) -> str:
        bare = term.lstrip(":")
        if term.startswith("?") or bare in index.ids:
            return term
        try:
            linked, _ = link(index, bare, kind=kind)
        except LinkError:
            outcome.unlinked.append(bare)
            return term
        if linked != bare:
            outcome.replaced.append((bare, linked))
        return f":{linked}" if term.startswith(":") else linked

    triples = []
    for s, p, o in query.triples:
        new_p = p if p.lstrip(":") == "type.object.type" else relink_term(p, "relation")
        kind_o = "concept" if p.lstrip(":") == "type.object.type" else "entity"
        new_o = o if not o.startswith(":") or o.lstrip(":") in index.ids \
            else relink_term(o, kind_o)
        triples.append((s, new_p, new_o))
    values = {}
    for var, value in query.values_bindings.items():
        if value in index.ids:
            values[var] = value
            continue
        try:
            linked, _ = link(index, value, kind="entity")
            if linked != value:
                outcome.replaced.append((value, linked))
            values[var] = linked
        except LinkError:
            outcome.unlinked.append(value)
            values[var] = value
    relinked = SparqlQuery(
        select_var=query.select_var,
        triples=triples,
        values_bindings=values,
        filters=list(query.filters),
        source_text=query.source_text,
        companion_sexpr=query.companion_sexpr,
        aggregate=query.aggregate,
        has_outer_select=query.has_outer_select,
    )
    outcome.text = relinked.canonical_text()
    return outcome


# argument positions in KoPL functions that carry linkable KB names
_KOPL_LINK_SLOTS = {
    "Find": (("entity", 0),),
    "Relate": (("relation", 0),),
    "FilterConcept": (("concept", 0),),
}


def relink_kopl(program, index: NameIndex) -> LinkOutcome:
    """Swap hallucinated entity/relation/concept arguments in a KoPL program."""
    from .kopl_ast import KoplFunction, KoplProgram, parse_kopl, serialize_kopl

    if not isinstance(program, KoplProgram):
        program = parse_kopl(program)
    outcome = LinkOutcome(text="")
    functions = []
    for fn in program.functions:
        args = list(fn.args)
        for kind, slot in _KOPL_LINK_SLOTS.get(fn.name, ()):
            if slot >= len(args):
                continue
            try:
                linked_id, _ = link(index, args[slot], kind=kind)
                linked = name_of(index, linked_id)
            except LinkError:
                outcome.unlinked.append(args[slot])
                continue
            if linked != args[slot]:
                outcome.replaced.append((args[slot], linked))
            args[slot] = linked
        functions.append(KoplFunction(name=fn.name, args=tuple(args), deps=fn.deps))
    relinked = KoplProgram(functions=tuple(functions), root_index=program.root_index)
    outcome.text = serialize_kopl(relinked, "dot_chain")
    return outcome


def two_hop_context(kb: ToyKB, entity_id: str, radius: int = 2) -> list[str]:
    """Names of entities and predicates reachable within ``radius`` relation
    hops of an entity, deduplicated and sorted; the entity itself is excluded."""
    entity = kb.entity(entity_id)  # raises KbError for unknown ids
    names: set[str] = set()
    frontier = {entity.id}
    seen = {entity.id}
    for _ in range(radius):
        next_frontier: set[str] = set()
        for eid in frontier:
            for rel in kb.entity(eid).relations:
                names.add(rel.predicate)
                if rel.object_id not in seen:
                    names.add(kb.entity(rel.object_id).name)
                    seen.add(rel.object_id)
                    next_frontier.add(rel.object_id)
        frontier = next_frontier
        if not frontier:
            break
    names.discard(entity.name)
    return sorted(names)
