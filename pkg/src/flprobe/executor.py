"""KoPL execution over a ToyKB.

Programs evaluate bottom-up along the dependency tree. Entity-producing
functions pass (entity id, supporting fact) pairs downstream so qualifier
filters can inspect the fact that admitted each entity; value-producing
functions hand a typed Value to the Verify family. The KB is never mutated.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

from .kb import (
    Fact,
    FORWARD,
    KbError,
    RelationFact,
    ToyKB,
    Value,
    ValueTypeError,
    compare_values,
    parse_value_text,
    values_equal_text,
)
from .kopl_ast import KoplProgram

logger = logging.getLogger(__name__)

ANSWER_KINDS = ("names", "value", "count", "boolean", "relation")


class ExecutionError(RuntimeError):
    """Type mismatch, unknown name, or an empty set where one entity is needed."""


@dataclass(frozen=True)
class Answer:
    kind: str
    payload: object

    def render(self) -> str:
        if self.kind == "names":
            return ", ".join(self.payload)
        if self.kind == "value":
            return self.payload.render()
        return str(self.payload)


# ---------------------------------------------------------------------------
# intermediates

@dataclass
class EntitySet:
    pairs: list[tuple[str, object]]  # (entity id, supporting Fact/RelationFact or None)

    def unique_ids(self) -> list[str]:
        return list(dict.fromkeys(eid for eid, _ in self.pairs))


@dataclass
class AttrValue:
    value: Value


def _expect_entities(value, fn: str) -> EntitySet:
    if not isinstance(value, EntitySet):
        raise ExecutionError(f"{fn} needs an entity set input, got {type(value).__name__}")
    return value


def _expect_value(value, fn: str) -> Value:
    if not isinstance(value, AttrValue):
        raise ExecutionError(f"{fn} needs an attribute value input, got {type(value).__name__}")
    return value.value


def _single_entity(value, fn: str) -> str:
    entities = _expect_entities(value, fn)
    ids = entities.unique_ids()
    if not ids:
        raise ExecutionError(f"{fn} applied to an empty entity set")
    return ids[0]


def _arg(args, index: int, fn: str) -> str:
    if index >= len(args):
        raise ExecutionError(f"{fn} is missing argument {index + 1}")
    return args[index]


# ---------------------------------------------------------------------------
# function semantics

def _find_all(kb, args, deps):
    return EntitySet([(eid, None) for eid in kb.entity_ids()])


def _find(kb, args, deps):
    name = _arg(args, 0, "Find")
    ids = kb.find_by_name(name)
    if not ids:
        raise ExecutionError(f"unknown entity name: {name!r}")
    return EntitySet([(eid, None) for eid in ids])


def _filter_concept(kb, args, deps):
    entities = _expect_entities(deps[0], "FilterConcept")
    name = _arg(args, 0, "FilterConcept")
    concept_ids = kb.concept_ids_by_name(name)
    if not concept_ids:
        raise ExecutionError(f"unknown concept name: {name!r}")
    allowed: set[str] = set()
    for cid in concept_ids:
        allowed |= kb.concept_with_descendants(cid)
    return EntitySet(
        [(eid, fact) for eid, fact in entities.pairs
         if any(c in allowed for c in kb.entity(eid).concepts)]
    )


def _filter_attribute(kind: str, fn: str):
    def impl(kb, args, deps):
        entities = _expect_entities(deps[0], fn)
        key = _arg(args, 0, fn)
        target = parse_value_text(kind, _arg(args, 1, fn))
        op = args[2] if len(args) > 2 else "="
        pairs = []
        for eid in entities.unique_ids():
            for fact in kb.entity(eid).attributes:
                if fact.key != key:
                    continue
                try:
                    if compare_values(fact.value, target, op):
                        pairs.append((eid, fact))
                except ValueTypeError:
                    continue
        return EntitySet(pairs)

    return impl


def _qualifier_matches(qualifiers, qkey: str, target: Value, op: str) -> bool:
    for key, value in qualifiers:
        if key != qkey:
            continue
        try:
            if compare_values(value, target, op):
                return True
        except ValueTypeError:
            continue
    return False


def _qfilter(kind: str, fn: str):
    def impl(kb, args, deps):
        entities = _expect_entities(deps[0], fn)
        qkey = _arg(args, 0, fn)
        target = parse_value_text(kind, _arg(args, 1, fn))
        op = args[2] if len(args) > 2 else "="
        return EntitySet(
            [(eid, fact) for eid, fact in entities.pairs
             if fact is not None and _qualifier_matches(fact.qualifiers, qkey, target, op)]
        )

    return impl


def _relate(kb, args, deps):
    entities = _expect_entities(deps[0], "Relate")
    predicate = _arg(args, 0, "Relate")
    direction = _arg(args, 1, "Relate")
    pairs = []
    for eid in entities.unique_ids():
        for rel in kb.entity(eid).relations:
            if rel.predicate == predicate and rel.direction == direction:
                pairs.append((rel.object_id, rel))
    return EntitySet(pairs)


def _and(kb, args, deps):
    left = _expect_entities(deps[0], "And")
    right = {eid for eid, _ in _expect_entities(deps[1], "And").pairs}
    return EntitySet([(eid, None) for eid in left.unique_ids() if eid in right])


def _or(kb, args, deps):
    left = _expect_entities(deps[0], "Or")
    right = _expect_entities(deps[1], "Or")
    merged = dict.fromkeys(left.unique_ids() + right.unique_ids())
    return EntitySet([(eid, None) for eid in merged])


def _query_name(kb, args, deps):
    entities = _expect_entities(deps[0], "QueryName")
    ids = entities.unique_ids()
    if not ids:
        raise ExecutionError("QueryName applied to an empty entity set")
    return Answer("names", tuple(sorted(kb.entity(eid).name for eid in ids)))


def _count(kb, args, deps):
    return Answer("count", len(_expect_entities(deps[0], "Count").unique_ids()))


def _attribute_facts(kb, eid: str, key: str, fn: str) -> list[Fact]:
    facts = [f for f in kb.entity(eid).attributes if f.key == key]
    if not facts:
        raise ExecutionError(f"entity {kb.entity(eid).name!r} has no attribute {key!r}")
    return facts


def _query_attr(kb, args, deps):
    eid = _single_entity(deps[0], "QueryAttr")
    facts = _attribute_facts(kb, eid, _arg(args, 0, "QueryAttr"), "QueryAttr")
    return AttrValue(facts[0].value)


def _query_attr_under_condition(kb, args, deps):
    fn = "QueryAttrUnderCondition"
    eid = _single_entity(deps[0], fn)
    key, qkey, qvalue = _arg(args, 0, fn), _arg(args, 1, fn), _arg(args, 2, fn)
    matches = [
        fact
        for fact in _attribute_facts(kb, eid, key, fn)
        if any(k == qkey and values_equal_text(v, qvalue) for k, v in fact.qualifiers)
    ]
    if not matches:
        raise ExecutionError(f"no {key!r} fact satisfies qualifier {qkey!r} = {qvalue!r}")
    if len(matches) > 1:
        logger.warning("%s matched %d facts for %r; using the first", fn, len(matches), key)
    return AttrValue(matches[0].value)


def _relations_between(kb, source: str, target: str) -> list[RelationFact]:
    return [rel for rel in kb.entity(source).relations if rel.object_id == target]


def _query_relation(kb, args, deps):
    e1 = _single_entity(deps[0], "QueryRelation")
    e2 = _single_entity(deps[1], "QueryRelation")
    relations = _relations_between(kb, e1, e2)
    if not relations:
        raise ExecutionError(
            f"no relation between {kb.entity(e1).name!r} and {kb.entity(e2).name!r}"
        )
    return Answer("relation", relations[0].predicate)


def _entity_value(kb, eid: str, key: str, fn: str) -> Value:
    return _attribute_facts(kb, eid, key, fn)[0].value


def _select_between(kb, args, deps):
    fn = "SelectBetween"
    key, mode = _arg(args, 0, fn), _arg(args, 1, fn)
    if mode not in ("greater", "less"):
        raise ExecutionError(f"{fn} comparator must be greater/less: {mode!r}")
    e1 = _single_entity(deps[0], fn)
    e2 = _single_entity(deps[1], fn)
    v1, v2 = _entity_value(kb, e1, key, fn), _entity_value(kb, e2, key, fn)
    op = ">" if mode == "greater" else "<"
    winner = e1 if compare_values(v1, v2, op) else e2
    return Answer("names", (kb.entity(winner).name,))


def _select_among(kb, args, deps):
    fn = "SelectAmong"
    key, mode = _arg(args, 0, fn), _arg(args, 1, fn)
    if mode not in ("largest", "smallest"):
        raise ExecutionError(f"{fn} selector must be largest/smallest: {mode!r}")
    entities = _expect_entities(deps[0], fn)
    op = ">" if mode == "largest" else "<"
    best_id: str | None = None
    best_value: Value | None = None
    for eid in sorted(entities.unique_ids()):
        facts = [f for f in kb.entity(eid).attributes if f.key == key]
        if not facts:
            continue
        value = facts[0].value
        if best_value is None or compare_values(value, best_value, op):
            best_id, best_value = eid, value
    if best_id is None:
        raise ExecutionError(f"no entity in the set has attribute {key!r}")
    return Answer("names", (kb.entity(best_id).name,))


def _verify_str(kb, args, deps):
    value = _expect_value(deps[0], "VerifyStr")
    return Answer("boolean", "yes" if value.render() == _arg(args, 0, "VerifyStr") else "no")


def _verify(kind: str, fn: str):
    def impl(kb, args, deps):
        stored = _expect_value(deps[0], fn)
        target = parse_value_text(kind, _arg(args, 0, fn))
        op = args[1] if len(args) > 1 else "="
        return Answer("boolean", "yes" if compare_values(stored, target, op) else "no")

    return impl


def _query_attr_qualifier(kb, args, deps):
    fn = "QueryAttrQualifier"
    eid = _single_entity(deps[0], fn)
    key, value_text, qkey = _arg(args, 0, fn), _arg(args, 1, fn), _arg(args, 2, fn)
    for fact in _attribute_facts(kb, eid, key, fn):
        if not values_equal_text(fact.value, value_text):
            continue
        for k, v in fact.qualifiers:
            if k == qkey:
                return Answer("value", v)
    raise ExecutionError(f"no qualifier {qkey!r} on fact ({key!r}, {value_text!r})")


def _query_relation_qualifier(kb, args, deps):
    fn = "QueryRelationQualifier"
    predicate, qkey = _arg(args, 0, fn), _arg(args, 1, fn)
    e1 = _single_entity(deps[0], fn)
    e2 = _single_entity(deps[1], fn)
    relations = [r for r in _relations_between(kb, e1, e2) if r.predicate == predicate]
    relations.sort(key=lambda r: r.direction != FORWARD)
    for rel in relations:
        for k, v in rel.qualifiers:
            if k == qkey:
                return Answer("value", v)
    raise ExecutionError(
        f"no qualifier {qkey!r} on relation {predicate!r} between the given entities"
    )


FUNCTION_IMPLS = {
    "FindAll": _find_all,
    "Find": _find,
    "FilterConcept": _filter_concept,
    "FilterStr": _filter_attribute("string", "FilterStr"),
    "FilterNum": _filter_attribute("number", "FilterNum"),
    "FilterYear": _filter_attribute("year", "FilterYear"),
    "FilterDate": _filter_attribute("date", "FilterDate"),
    "QFilterStr": _qfilter("string", "QFilterStr"),
    "QFilterNum": _qfilter("number", "QFilterNum"),
    "QFilterYear": _qfilter("year", "QFilterYear"),
    "QFilterDate": _qfilter("date", "QFilterDate"),
    "Relate": _relate,
    "And": _and,
    "Or": _or,
    "QueryName": _query_name,
    "What": _query_name,
    "Count": _count,
    "QueryAttr": _query_attr,
    "QueryAttrUnderCondition": _query_attr_under_condition,
    "QueryRelation": _query_relation,
    "SelectBetween": _select_between,
    "SelectAmong": _select_among,
    "VerifyStr": _verify_str,
    "VerifyNum": _verify("number", "VerifyNum"),
    "VerifyYear": _verify("year", "VerifyYear"),
    "VerifyDate": _verify("date", "VerifyDate"),
    "QueryAttrQualifier": _query_attr_qualifier,
    "QueryRelationQualifier": _query_relation_qualifier,
}


def evaluate(program: KoplProgram, kb: ToyKB):
    """Evaluate and return the root function's raw intermediate."""
    program.validate()
    results: dict[int, object] = {}
    for i in program.postorder():
        fn = program.functions[i]
        deps = [results[d] for d in fn.deps]
        impl = FUNCTION_IMPLS.get(fn.name)
        if impl is None:
            raise ExecutionError(f"no semantics for function {fn.name!r}")
        try:
            results[i] = impl(kb, fn.args, deps)
        except (ValueTypeError, KbError) as exc:
            raise ExecutionError(f"{fn.name}: {exc}") from exc
    return results[program.root_index]


def execute(program: KoplProgram, kb: ToyKB) -> Answer:
    """Evaluate the program and shape the root result as an Answer."""
    result = evaluate(program, kb)
    if isinstance(result, Answer):
        return result
    if isinstance(result, AttrValue):
        return Answer("value", result.value)
    if isinstance(result, EntitySet):
        return Answer("names", tuple(sorted(kb.entity(e).name for e in result.unique_ids())))
    raise ExecutionError(f"unexpected root result: {type(result).__name__}")
