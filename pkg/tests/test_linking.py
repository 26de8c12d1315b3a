import pytest

from flprobe.kb import load_kb
from flprobe.linking import (
    LinkError,
    build_name_index,
    hybrid_tokens,
    link,
    load_vocabulary,
    relink_kopl,
    relink_sparql,
    two_hop_context,
)
from flprobe.sparql_ast import parse_sparql

from conftest import fixture_path

HALLUCINATED = (
    "SELECT (?x0 AS ?value) WHERE { SELECT DISTINCT ?x0 WHERE { "
    "?x0 :type.object.type :business.business_operation . VALUES ?x1 { :m.05lfsg } "
    "?x0 :business.business_operation.business ?x1 . FILTER ( ?x0 != ?x1 ) } }"
)


@pytest.fixture(scope="module")
def grail_index():
    return build_name_index(load_vocabulary(fixture_path("vocab_grail.jsonl")))


@pytest.fixture(scope="module")
def vocab200():
    return load_vocabulary(fixture_path("vocab_200.jsonl"))


@pytest.fixture(scope="module")
def index200(vocab200):
    return build_name_index(vocab200)


def test_hybrid_tokens_mix_words_and_trigrams():
    tokens = hybrid_tokens("rail.rail_network")
    assert "rail" in tokens and "network" in tokens
    assert "#rai" in tokens and "#l.r" in tokens


def test_vocab_size(vocab200, index200):
    assert len(vocab200) == 200
    assert len(index200) == 200


def test_every_name_self_links(vocab200, index200):
    for entry in vocab200:
        linked, score = link(index200, entry.name, kind=entry.kind)
        assert linked == entry.id, entry.name
        assert score > 0


def test_hallucinated_relation_links_to_nearest_real_one(grail_index):
    linked, score = link(grail_index, "business.business_operation.business", kind="relation")
    assert linked == "business.business_operation.industry"
    assert score > 0


def test_unlinkable_name(grail_index):
    with pytest.raises(LinkError):
        link(grail_index, "zzqy", kind="relation")
    with pytest.raises(LinkError):
        link(grail_index, "", kind="relation")


def test_kind_pools_are_separate(grail_index):
    linked, _ = link(grail_index, "broadcast.radio_station", kind="concept")
    assert linked == "broadcast.radio_station"
    # the same surface against the relation pool lands on a relation instead
    linked_rel, _ = link(grail_index, "broadcast.radio_station", kind="relation")
    assert linked_rel == "broadcast.radio_station.format"


def test_duplicate_surface_names_both_retrievable():
    index = build_name_index(
        [("id.a", "mercury", "entity"), ("id.b", "mercury", "concept")]
    )
    assert link(index, "mercury", kind="entity")[0] == "id.a"
    assert link(index, "mercury", kind="concept")[0] == "id.b"
    assert link(index, "mercury")[0] == "id.a"  # unfiltered: smallest id wins


def test_relink_sparql_fixes_hallucination_and_reparses(grail_index):
    outcome = relink_sparql(HALLUCINATED, grail_index)
    assert ("business.business_operation.business",
            "business.business_operation.industry") in outcome.replaced
    relinked = parse_sparql(outcome.text)
    predicates = {p.lstrip(":") for _, p, _ in relinked.triples}
    assert "business.business_operation.industry" in predicates
    assert not outcome.unlinked


def test_relink_sparql_keeps_known_ids(grail_index):
    outcome = relink_sparql(HALLUCINATED, grail_index)
    assert "m.05lfsg" in outcome.text


def test_relink_kopl_swaps_near_miss_names():
    index = build_name_index(
        [
            ("e1", "Golden Reel Award", "entity"),
            ("r1", "award received", "relation"),
            ("c1", "human", "concept"),
        ]
    )
    outcome = relink_kopl(
        "Find(Golden Reel Awards).Relate(awards received, forward).FilterConcept(humans).Count()",
        index,
    )
    assert outcome.text == (
        "Find(Golden Reel Award).Relate(award received, forward)"
        ".FilterConcept(human).Count()"
    )


def test_two_hop_context(kb20):
    names = two_hop_context(kb20, "e_alan")
    assert "occupation" in names and "film director" in names
    assert "educated at" in names and "Sorbonne University" in names
    assert "Alan Turing" not in names
    assert names == sorted(names)


def test_two_hop_radius_zero_and_isolated(kb20):
    assert two_hop_context(kb20, "e_alan", radius=0) == []
    # Tokyo has no relations in the fixture
    assert two_hop_context(kb20, "e_tokyo") == []


def test_two_hop_monotone_in_radius(kb20):
    one = set(two_hop_context(kb20, "e_paris", radius=1))
    two = set(two_hop_context(kb20, "e_paris", radius=2))
    assert one <= two
    assert len(two) > len(one)


def test_two_hop_unknown_entity(kb20):
    from flprobe.kb import KbError

    with pytest.raises(KbError):
        two_hop_context(kb20, "e_nowhere")


def test_two_hop_hand_walked_chain():
    kb = load_kb(
        {
            "schema_version": 1,
            "concepts": [{"id": "c", "name": "thing", "subclass_of": []}],
            "entities": [
                {"id": "alan", "name": "Alan", "concepts": ["c"], "attributes": [],
                 "relations": [{"predicate": "occupation", "direction": "forward",
                                "object": "actor"}]},
                {"id": "actor", "name": "actor", "concepts": ["c"], "attributes": [],
                 "relations": [{"predicate": "field", "direction": "forward",
                                "object": "film"}]},
                {"id": "film", "name": "film", "concepts": ["c"], "attributes": [],
                 "relations": []},
            ],
        }
    )
    assert two_hop_context(kb, "alan") == ["actor", "field", "film", "occupation"]


def test_empty_vocabulary_rejected():
    with pytest.raises(LinkError):
        build_name_index([])
