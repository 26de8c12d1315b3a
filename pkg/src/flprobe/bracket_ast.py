"""Bracket trees for s-expression style logical forms.

Both GrailQA S-expressions and Overnight Lambda DCS programs are parenthesized
token lists. A parenthesized group becomes a structural node: its label is the
leading bare token when one is present (``(JOIN a b)``), or empty for an
anonymous application whose elements are all groups (``((lambda ...) (...))``).
A bare token inside a group becomes a literal leaf.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

_TOKEN = re.compile(r"\(|\)|[^\s()]+")

STRUCTURAL = "structural"
LITERAL = "literal"


class BracketError(ValueError):
    """Unbalanced or empty bracket text."""


@dataclass
class BracketTree:
    label: str
    children: list["BracketTree"] = field(default_factory=list)
    leaf_kind: str = STRUCTURAL

    def is_literal_leaf(self) -> bool:
        return self.leaf_kind == LITERAL

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for c in self.children)

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)

    @classmethod
    def leaf(cls, token: str) -> "BracketTree":
        return cls(label=token, children=[], leaf_kind=LITERAL)


def parse_bracket(text: str) -> BracketTree:
    """Parse s-expression text into a BracketTree.

    Raises BracketError on unbalanced brackets, empty input, an empty group
    "()" or trailing content after the first complete expression.
    """
    if not text or not text.strip():
        raise BracketError("empty bracket expression")
    tokens = _TOKEN.findall(text)
    frames: list[list[BracketTree]] = [[]]
    for tok in tokens:
        if tok == "(":
            frames.append([])
        elif tok == ")":
            if len(frames) == 1:
                raise BracketError("unbalanced brackets: unexpected ')'")
            items = frames.pop()
            if not items:
                raise BracketError("empty group '()'")
            if items[0].is_literal_leaf():
                node = BracketTree(label=items[0].label, children=items[1:])
            else:
                node = BracketTree(label="", children=items)
            frames[-1].append(node)
        else:
            frames[-1].append(BracketTree.leaf(tok))
    if len(frames) != 1:
        raise BracketError("unbalanced brackets: missing ')'")
    top = frames[0]
    if len(top) != 1:
        raise BracketError(f"expected one expression, found {len(top)}")
    return top[0]


def serialize_bracket(tree: BracketTree, spaced: bool = False) -> str:
    """Render back to text; parse_bracket(serialize_bracket(t)) equals t.

    spaced=True puts spaces inside the brackets ("( call ... )"), the style
    Overnight Lambda DCS programs are written in; the default is the tight
    GrailQA style ("(AND ...)").
    """
    if tree.is_literal_leaf():
        return tree.label
    parts = []
    if tree.label:
        parts.append(tree.label)
    parts.extend(serialize_bracket(c, spaced=spaced) for c in tree.children)
    body = " ".join(parts)
    return f"( {body} )" if spaced else f"({body})"
