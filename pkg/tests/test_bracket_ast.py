import re

import pytest
from hypothesis import given, strategies as st

from flprobe.bracket_ast import BracketError, BracketTree, parse_bracket, serialize_bracket

SK2_SEXPR = (
    "(AND broadcast.radio_format (JOIN (R broadcast.radio_station.format) "
    "(JOIN broadcast.broadcast.content m.010fcxr0)))"
)


def test_sk2_sexpr_shape():
    tree = parse_bracket(SK2_SEXPR)
    assert tree.label == "AND"
    assert tree.depth() == 4
    assert tree.children[0].label == "broadcast.radio_format"
    assert tree.children[0].is_literal_leaf()


def test_single_node():
    tree = parse_bracket("(A)")
    assert tree.label == "A"
    assert tree.children == []
    assert not tree.is_literal_leaf()
    assert serialize_bracket(tree) == "(A)"


def test_empty_group_label_call():
    assert serialize_bracket(BracketTree(label="call", children=[])) == "(call)"


@pytest.mark.parametrize("text", ["((A B)", "(A))", "", "  ", "()", "(A) (B)"])
def test_parse_errors(text):
    with pytest.raises(BracketError):
        parse_bracket(text)


def test_anonymous_application_node():
    tree = parse_bracket("((lambda s (call f)) (call g))")
    assert tree.label == ""
    assert [c.label for c in tree.children] == ["lambda", "call"]


def test_round_trip_tight_and_spaced():
    tree = parse_bracket(SK2_SEXPR)
    assert serialize_bracket(tree) == SK2_SEXPR
    spaced = serialize_bracket(tree, spaced=True)
    assert parse_bracket(spaced) == tree


def test_node_count_equals_open_brackets_plus_bare_tokens():
    text = SK2_SEXPR
    tree = parse_bracket(text)
    opens = text.count("(")
    bare = len(re.findall(r"[^\s()]+", text)) - opens  # heads belong to their group
    assert tree.node_count() == opens + bare


_token = st.text(alphabet="abcXYZ.0123_", min_size=1, max_size=6)


@st.composite
def trees(draw, depth=0):
    if depth > 3 or draw(st.booleans()):
        return BracketTree.leaf(draw(_token))
    label = draw(st.one_of(st.just(""), _token))
    children = draw(st.lists(trees(depth=depth + 1), min_size=1, max_size=3))
    if label == "" and children[0].is_literal_leaf():
        label = draw(_token)  # a leading bare token would re-parse as the label
    return BracketTree(label=label, children=children)


@given(trees())
def test_round_trip_property(tree):
    if tree.is_literal_leaf():
        return  # a bare token only occurs inside a parent
    for spaced in (False, True):
        assert parse_bracket(serialize_bracket(tree, spaced=spaced)) == tree
