"""KoPL program model.

A KoPL program is a linear list of functions whose dependency graph forms a
rooted tree; the last function is the root and yields the answer. Two textual
forms are understood:

  dot-chain   FindAll().FilterConcept(human).Count()
              (the "." between functions is optional, so concatenated text
              such as "FindAll()FilterConcept(human)Count()" parses too)
  tagged      Find [arg] Mexico [func] Relate [arg] country [arg] backward

Linear text carries no explicit dependency indices, so the tree is rebuilt
with a stack: scanning left to right, each function pops as many completed
subtrees as its dependency arity, in left-to-right order.
"""
from __future__ import annotations

from dataclasses import dataclass


class KoplError(ValueError):
    """Malformed KoPL text or an ill-formed program."""


# name -> (dependency arity, declared textual argument count)
FUNCTION_SIGNATURES: dict[str, tuple[int, int]] = {
    "FindAll": (0, 0),
    "Find": (0, 1),
    "FilterConcept": (1, 1),
    "FilterStr": (1, 2),
    "FilterNum": (1, 3),
    "FilterYear": (1, 3),
    "FilterDate": (1, 3),
    "QFilterStr": (1, 2),
    "QFilterNum": (1, 3),
    "QFilterYear": (1, 3),
    "QFilterDate": (1, 3),
    "Relate": (1, 2),
    "And": (2, 0),
    "Or": (2, 0),
    "QueryName": (1, 0),
    # "What" is the surface form KQA Pro programs use for the final
    # name-reporting step; it behaves exactly like QueryName.
    "What": (1, 0),
    "Count": (1, 0),
    "QueryAttr": (1, 1),
    "QueryAttrUnderCondition": (1, 3),
    "QueryRelation": (2, 0),
    "SelectBetween": (2, 2),
    "SelectAmong": (1, 2),
    "VerifyStr": (1, 1),
    "VerifyNum": (1, 2),
    "VerifyYear": (1, 2),
    "VerifyDate": (1, 2),
    "QueryAttrQualifier": (1, 3),
    "QueryRelationQualifier": (2, 2),
}

KOPL_FUNCTION_NAMES = frozenset(FUNCTION_SIGNATURES)

SERIALIZE_FORMATS = ("dot_chain", "chain", "tagged")


def dependency_arity(name: str) -> int:
    try:
        return FUNCTION_SIGNATURES[name][0]
    except KeyError:
        raise KoplError(f"unknown KoPL function: {name!r}") from None


@dataclass(frozen=True)
class KoplFunction:
    name: str
    args: tuple[str, ...] = ()
    deps: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.name not in FUNCTION_SIGNATURES:
            raise KoplError(f"unknown KoPL function: {self.name!r}")


@dataclass(frozen=True)
class KoplProgram:
    functions: tuple[KoplFunction, ...]
    root_index: int

    @classmethod
    def from_functions(cls, functions) -> "KoplProgram":
        functions = tuple(functions)
        if not functions:
            raise KoplError("empty program")
        program = cls(functions=functions, root_index=len(functions) - 1)
        program.validate()
        return program

    def validate(self) -> None:
        """Check arity, forward-only dependencies and rooted-tree shape."""
        n = len(self.functions)
        if self.root_index != n - 1:
            raise KoplError("root must be the last function")
        referrers = [0] * n
        for i, fn in enumerate(self.functions):
            arity = dependency_arity(fn.name)
            if len(fn.deps) != arity:
                raise KoplError(
                    f"{fn.name} at {i} takes {arity} program input(s), got {len(fn.deps)}"
                )
            for d in fn.deps:
                if not 0 <= d < i:
                    raise KoplError(f"{fn.name} at {i} depends on non-earlier index {d}")
                referrers[d] += 1
        for i in range(n - 1):
            if referrers[i] != 1:
                raise KoplError(f"function at {i} is referenced {referrers[i]} times; not a tree")
        if referrers[n - 1] != 0:
            raise KoplError("root function must not be a dependency")

    def postorder(self) -> list[int]:
        """Indices in canonical depth-first post-order from the root."""
        order: list[int] = []

        def visit(i: int) -> None:
            for d in self.functions[i].deps:
                visit(d)
            order.append(i)

        visit(self.root_index)
        return order

    def canonical(self) -> "KoplProgram":
        """Relinearize in depth-first post-order; parsing its text reproduces it."""
        order = self.postorder()
        remap = {old: new for new, old in enumerate(order)}
        functions = tuple(
            KoplFunction(
                name=self.functions[old].name,
                args=self.functions[old].args,
                deps=tuple(remap[d] for d in self.functions[old].deps),
            )
            for old in order
        )
        return KoplProgram(functions=functions, root_index=len(functions) - 1)

    def function_names(self) -> list[str]:
        return [self.functions[i].name for i in self.postorder()]


def structurally_equal(a: KoplProgram, b: KoplProgram) -> bool:
    return a.canonical() == b.canonical()


def _assemble(items: list[tuple[str, tuple[str, ...]]]) -> KoplProgram:
    """Rebuild the dependency tree from a linear (name, args) sequence."""
    if not items:
        raise KoplError("empty program")
    functions: list[KoplFunction] = []
    stack: list[int] = []
    for i, (name, args) in enumerate(items):
        arity = dependency_arity(name)
        if arity > len(stack):
            raise KoplError(
                f"{name} at position {i} needs {arity} prior subtree(s), "
                f"only {len(stack)} available"
            )
        deps = tuple(stack[len(stack) - arity:]) if arity else ()
        del stack[len(stack) - arity:]
        functions.append(KoplFunction(name=name, args=args, deps=deps))
        stack.append(i)
    if len(stack) != 1:
        raise KoplError(f"program leaves {len(stack)} disconnected subtrees; not a tree")
    return KoplProgram.from_functions(functions)


def _split_args(name: str, raw: str) -> tuple[str, ...]:
    """Split a paren argument body on commas, honouring the declared count.

    Argument values may themselves contain commas (entity names, attribute
    keys), so when the split yields more pieces than the function declares,
    the surplus is folded back into the first argument. Fewer pieces than
    declared are accepted as-is; model output is often incomplete.
    """
    raw = raw.strip()
    if not raw:
        return ()
    pieces = [p.strip() for p in raw.split(",")]
    declared = FUNCTION_SIGNATURES[name][1]
    if declared and len(pieces) > declared:
        keep = len(pieces) - declared + 1
        pieces = [", ".join(pieces[:keep])] + pieces[keep:]
    return tuple(pieces)


def _parse_dot_chain(text: str) -> list[tuple[str, tuple[str, ...]]]:
    items: list[tuple[str, tuple[str, ...]]] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace() or c in ".'":
            i += 1
            continue
        if c == ")":
            raise KoplError("unbalanced parentheses: unexpected ')'")
        start = i
        while i < n and (text[i].isalnum() or text[i] == "_"):
            i += 1
        name = text[start:i]
        if not name:
            raise KoplError(f"expected function name at offset {i}: {text[i:i + 20]!r}")
        while i < n and text[i].isspace():
            i += 1
        if i >= n or text[i] != "(":
            raise KoplError(f"expected '(' after {name!r}")
        close = text.find(")", i + 1)
        if close < 0:
            raise KoplError(f"unbalanced parentheses in {name!r} arguments")
        if name not in FUNCTION_SIGNATURES:
            raise KoplError(f"unknown KoPL function: {name!r}")
        items.append((name, _split_args(name, text[i + 1:close])))
        i = close + 1
    return items


def _parse_tagged(text: str) -> list[tuple[str, tuple[str, ...]]]:
    items: list[tuple[str, tuple[str, ...]]] = []
    for chunk in text.split("[func]"):
        fields = [f.strip() for f in chunk.split("[arg]")]
        name, args = fields[0], tuple(a for a in fields[1:] if a)
        if name not in FUNCTION_SIGNATURES:
            raise KoplError(f"unknown KoPL function: {name!r}")
        items.append((name, args))
    return items


def parse_kopl(text: str) -> KoplProgram:
    """Parse dot-chain or tagged KoPL text; the format is auto-detected."""
    if not text or not text.strip():
        raise KoplError("empty KoPL text")
    text = text.strip()
    if "(" in text or ")" in text:
        items = _parse_dot_chain(text)
    else:
        items = _parse_tagged(text)
    return _assemble(items)


def serialize_kopl(program: KoplProgram, fmt: str = "dot_chain") -> str:
    """Serialize in canonical post-order.

    dot_chain joins functions with ".", chain concatenates them directly
    (the form understanding prompts use), tagged joins functions with
    " [func] " and arguments with " [arg] ".
    """
    if fmt not in SERIALIZE_FORMATS:
        raise KoplError(f"unknown serialization format: {fmt!r}")
    functions = program.canonical().functions
    if fmt == "tagged":
        return " [func] ".join(
            " [arg] ".join((fn.name,) + fn.args) for fn in functions
        )
    rendered = [f"{fn.name}({', '.join(fn.args)})" for fn in functions]
    return (".".join(rendered)) if fmt == "dot_chain" else "".join(rendered)
