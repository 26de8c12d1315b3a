"""In-memory toy knowledge base.

Loaded from a single JSON document (schema_version is mandatory):

    {"schema_version": 1,
     "concepts": [{"id", "name", "subclass_of": [...]}],
     "entities": [{"id", "name", "concepts": [...],
                   "attributes": [{"key", "value": {"kind", "value", "unit"?},
                                   "qualifiers": [{"key", "value": {...}}]}],
                   "relations": [{"predicate", "direction", "object",
                                  "qualifiers": [...]}]}]}

Attribute and qualifier values are typed: string, number (optional unit),
year, or ISO date. Relations are mirrored on load so each edge is visible
from both endpoints, forward on the subject and backward on the object.
"""
from __future__ import annotations

import datetime
import json
import os
import re
from dataclasses import dataclass

SCHEMA_VERSION = 1

VALUE_KINDS = ("string", "number", "year", "date")

FORWARD = "forward"
BACKWARD = "backward"


class KbError(ValueError):
    """Schema violation, dangling reference or cyclic concept hierarchy."""


class ValueTypeError(KbError):
    """Incomparable kinds or mismatched units."""


@dataclass(frozen=True)
class Value:
    kind: str
    value: object
    unit: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in VALUE_KINDS:
            raise KbError(f"unknown value kind: {self.kind!r}")
        if self.kind == "date":
            try:
                datetime.date.fromisoformat(str(self.value))
            except ValueError:
                raise KbError(f"date value must be ISO yyyy-mm-dd: {self.value!r}") from None
        if self.kind == "year" and not isinstance(self.value, int):
            raise KbError(f"year value must be an integer: {self.value!r}")
        if self.kind != "number" and self.unit is not None:
            raise KbError(f"only numbers carry units, not {self.kind}")

    def render(self) -> str:
        if self.kind == "number":
            number = self.value
            text = str(int(number)) if float(number).is_integer() else str(number)
            return f"{text} {self.unit}" if self.unit else text
        return str(self.value)


@dataclass(frozen=True)
class Fact:
    key: str
    value: Value
    qualifiers: tuple[tuple[str, Value], ...] = ()


@dataclass(frozen=True)
class RelationFact:
    predicate: str
    direction: str
    object_id: str
    qualifiers: tuple[tuple[str, Value], ...] = ()

    def __post_init__(self) -> None:
        if self.direction not in (FORWARD, BACKWARD):
            raise KbError(f"relation direction must be forward/backward: {self.direction!r}")


@dataclass
class Entity:
    id: str
    name: str
    concepts: tuple[str, ...] = ()
    attributes: tuple[Fact, ...] = ()
    relations: tuple[RelationFact, ...] = ()


@dataclass
class Concept:
    id: str
    name: str
    subclass_of: tuple[str, ...] = ()


_NUMBER_TEXT = re.compile(r"^([-+]?\d+(?:\.\d+)?)(?:\s+(.+))?$")
_YEAR_TEXT = re.compile(r"^-?\d{1,4}$")


def parse_value_text(kind: str, text: str) -> Value:
    """Parse a textual program argument into a typed Value."""
    text = text.strip()
    if kind == "string":
        return Value("string", text)
    if kind == "number":
        match = _NUMBER_TEXT.match(text)
        if not match:
            raise ValueTypeError(f"not a number: {text!r}")
        return Value("number", float(match.group(1)), unit=match.group(2))
    if kind == "year":
        if not _YEAR_TEXT.match(text):
            raise ValueTypeError(f"not a year: {text!r}")
        return Value("year", int(text))
    if kind == "date":
        try:
            datetime.date.fromisoformat(text)
        except ValueError:
            raise ValueTypeError(f"not an ISO date: {text!r}") from None
        return Value("date", text)
    raise KbError(f"unknown value kind: {kind!r}")


def _date_year(value: Value) -> int:
    return datetime.date.fromisoformat(str(value.value)).year


def _comparable_pair(a: Value, b: Value):
    """Coerce to a comparable (x, y) pair or raise ValueTypeError."""
    if a.kind == b.kind == "number":
        if (a.unit is None) != (b.unit is None) or a.unit != b.unit:
            raise ValueTypeError(f"unit mismatch: {a.unit!r} vs {b.unit!r}")
        return float(a.value), float(b.value)
    if a.kind == b.kind == "year":
        return a.value, b.value
    if a.kind == b.kind == "date":
        return str(a.value), str(b.value)
    # a date and a year compare through the date's year component
    if {a.kind, b.kind} == {"date", "year"}:
        ya = _date_year(a) if a.kind == "date" else a.value
        yb = _date_year(b) if b.kind == "date" else b.value
        return ya, yb
    if a.kind == b.kind == "string":
        return str(a.value), str(b.value)
    raise ValueTypeError(f"cannot compare {a.kind} with {b.kind}")


def compare_values(a: Value, b: Value, op: str) -> bool:
    """Type-directed comparison; strings support only = and !=."""
    x, y = _comparable_pair(a, b)
    if op == "=":
        return x == y
    if op == "!=":
        return x != y
    if a.kind == "string" or b.kind == "string":
        raise ValueTypeError("strings only support = and !=")
    if op == "<":
        return x < y
    if op == ">":
        return x > y
    raise ValueTypeError(f"unknown comparison operator: {op!r}")


def values_equal_text(stored: Value, text: str) -> bool:
    """Does a textual argument denote the stored value? Parsed as the stored
    kind so '2020' matches a year fact and '25000000 dollar' a unit number."""
    try:
        return compare_values(stored, parse_value_text(stored.kind, text), "=")
    except ValueTypeError:
        return False


def _value_from_json(doc: dict) -> Value:
    if not isinstance(doc, dict) or "kind" not in doc or "value" not in doc:
        raise KbError(f"value must be an object with kind and value: {doc!r}")
    kind, value = doc["kind"], doc["value"]
    if kind == "number":
        value = float(value)
    if kind == "year":
        value = int(value)
    return Value(kind=kind, value=value, unit=doc.get("unit"))


def _qualifiers_from_json(items) -> tuple[tuple[str, Value], ...]:
    return tuple((q["key"], _value_from_json(q["value"])) for q in items or ())


class ToyKB:
    def __init__(self, concepts: dict[str, Concept], entities: dict[str, Entity]):
        self.concepts = concepts
        self.entities = entities
        self._check_references()
        self._check_acyclic()
        self._mirror_relations()
        self._names: dict[str, list[str]] = {}
        for entity in entities.values():
            self._names.setdefault(entity.name, []).append(entity.id)

    def _check_references(self) -> None:
        for concept in self.concepts.values():
            for parent in concept.subclass_of:
                if parent not in self.concepts:
                    raise KbError(f"concept {concept.id} subclasses unknown {parent!r}")
        for entity in self.entities.values():
            for cid in entity.concepts:
                if cid not in self.concepts:
                    raise KbError(f"entity {entity.id} references unknown concept {cid!r}")
            for rel in entity.relations:
                if rel.object_id not in self.entities:
                    raise KbError(f"entity {entity.id} relates to unknown entity {rel.object_id!r}")

    def _check_acyclic(self) -> None:
        state: dict[str, int] = {}

        def visit(cid: str, trail: list[str]) -> None:
            if state.get(cid) == 1:
                raise KbError(f"cyclic concept hierarchy: {' -> '.join(trail + [cid])}")
            if state.get(cid) == 2:
                return
            state[cid] = 1
            for parent in self.concepts[cid].subclass_of:
                visit(parent, trail + [cid])
            state[cid] = 2

        for cid in self.concepts:
            visit(cid, [])

    def _mirror_relations(self) -> None:
        """Ensure each edge is stored once per direction view."""
        inverse = {FORWARD: BACKWARD, BACKWARD: FORWARD}
        views: dict[str, dict] = {
            eid: {(r.predicate, r.direction, r.object_id): r for r in entity.relations}
            for eid, entity in self.entities.items()
        }
        for eid, entity_views in list(views.items()):
            for (pred, direction, obj), rel in list(entity_views.items()):
                mirror_key = (pred, inverse[direction], eid)
                if mirror_key not in views[obj]:
                    views[obj][mirror_key] = RelationFact(
                        predicate=pred,
                        direction=inverse[direction],
                        object_id=eid,
                        qualifiers=rel.qualifiers,
                    )
        for eid, entity_views in views.items():
            self.entities[eid].relations = tuple(entity_views.values())

    def entity_ids(self) -> list[str]:
        return list(self.entities)

    def entity(self, entity_id: str) -> Entity:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise KbError(f"unknown entity id: {entity_id!r}") from None

    def find_by_name(self, name: str) -> list[str]:
        return list(self._names.get(name, ()))

    def concept_ids_by_name(self, name: str) -> list[str]:
        return [cid for cid, c in self.concepts.items() if c.name == name]

    def concept_with_descendants(self, concept_id: str) -> set[str]:
        """The concept plus every concept transitively declaring it as a superclass."""
        children: dict[str, list[str]] = {cid: [] for cid in self.concepts}
        for cid, concept in self.concepts.items():
            for parent in concept.subclass_of:
                children[parent].append(cid)
        out, stack = set(), [concept_id]
        while stack:
            current = stack.pop()
            if current in out:
                continue
            out.add(current)
            stack.extend(children.get(current, ()))
        return out


def load_kb(document) -> ToyKB:
    """Build a validated KB from a JSON document, file path or parsed dict."""
    if isinstance(document, (str, bytes, os.PathLike)):
        with open(document, encoding="utf-8") as handle:
            document = json.load(handle)
    elif hasattr(document, "read"):
        document = json.load(document)
    if not isinstance(document, dict):
        raise KbError("KB document must be a JSON object")
    if document.get("schema_version") != SCHEMA_VERSION:
        raise KbError(f"missing or unsupported schema_version: {document.get('schema_version')!r}")

    concepts: dict[str, Concept] = {}
    for doc in document.get("concepts", ()):
        concept = Concept(
            id=doc["id"], name=doc["name"], subclass_of=tuple(doc.get("subclass_of", ()))
        )
        if concept.id in concepts:
            raise KbError(f"duplicate concept id: {concept.id!r}")
        concepts[concept.id] = concept

    entities: dict[str, Entity] = {}
    for doc in document.get("entities", ()):
        attributes = tuple(
            Fact(
                key=a["key"],
                value=_value_from_json(a["value"]),
                qualifiers=_qualifiers_from_json(a.get("qualifiers")),
            )
            for a in doc.get("attributes", ())
        )
        relations = tuple(
            RelationFact(
                predicate=r["predicate"],
                direction=r["direction"],
                object_id=r["object"],
                qualifiers=_qualifiers_from_json(r.get("qualifiers")),
            )
            for r in doc.get("relations", ())
        )
        entity = Entity(
            id=doc["id"],
            name=doc["name"],
            concepts=tuple(doc.get("concepts", ())),
            attributes=attributes,
            relations=relations,
        )
        if entity.id in entities:
            raise KbError(f"duplicate entity id: {entity.id!r}")
        entities[entity.id] = entity

    return ToyKB(concepts=concepts, entities=entities)
