"""Demonstration selection over a seed set.

Understanding targets are matched structurally: seeds are grouped by program
skeleton, groups are ranked by token edit distance to the target skeleton, and
a greedy label-cover pass picks k structurally complementary groups. Generation
targets are matched lexically: BM25 over entity-masked questions.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .bm25 import Bm25Index
from .programs import FormalProgram
from .skeletons import NlqSkeleton, Skeleton, mask_nlq, skeleton_of

INDEX_VERSION = 1


class RetrievalError(ValueError):
    pass


@dataclass
class SeedExample:
    id: str
    question: str
    program: FormalProgram
    skeleton: Skeleton
    nlq_skeleton: NlqSkeleton
    answer: object | None = None


class SeedSet:
    """Seed examples of one language plus lazily built indices."""

    def __init__(self, examples):
        examples = list(examples)
        if not examples:
            raise RetrievalError("empty seed set")
        languages = {e.program.language for e in examples}
        if len(languages) != 1:
            raise RetrievalError(f"mixed-language seed set: {sorted(languages)}")
        self.language = examples[0].program.language
        self.examples = examples
        self.by_id = {e.id: e for e in examples}
        if len(self.by_id) != len(examples):
            raise RetrievalError("duplicate seed ids")
        self._skeleton_index: SkeletonIndex | None = None
        self._bm25: Bm25Index | None = None

    def __len__(self) -> int:
        return len(self.examples)

    def skeleton_index(self) -> "SkeletonIndex":
        if self._skeleton_index is None:
            self._skeleton_index = build_skeleton_index(self)
        return self._skeleton_index

    def bm25_index(self) -> Bm25Index:
        if self._bm25 is None:
            self._bm25 = build_bm25_index(self)
        return self._bm25


@dataclass
class SkeletonIndex:
    language: str
    groups: dict[str, list[str]]              # skeleton text -> member seed ids
    skeletons: dict[str, Skeleton] = field(repr=False, default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": INDEX_VERSION,
                "language": self.language,
                "groups": self.groups,
                "skeletons": {
                    key: {"tokens": list(s.tokens), "labels": sorted(s.labels)}
                    for key, s in self.skeletons.items()
                },
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SkeletonIndex":
        payload = json.loads(text)
        if payload.get("version") != INDEX_VERSION:
            raise RetrievalError(f"unsupported index version: {payload.get('version')!r}")
        skeletons = {
            key: Skeleton(
                language=payload["language"],
                tokens=tuple(entry["tokens"]),
                text=key,
                labels=frozenset(entry["labels"]),
            )
            for key, entry in payload["skeletons"].items()
        }
        return cls(language=payload["language"], groups=payload["groups"], skeletons=skeletons)


def build_skeleton_index(seeds: SeedSet) -> SkeletonIndex:
    groups: dict[str, list[str]] = {}
    skeletons: dict[str, Skeleton] = {}
    for example in seeds.examples:
        key = example.skeleton.text
        groups.setdefault(key, []).append(example.id)
        skeletons.setdefault(key, example.skeleton)
    for members in groups.values():
        members.sort()
    return SkeletonIndex(language=seeds.language, groups=groups, skeletons=skeletons)


def token_edit_distance(a, b) -> int:
    """Levenshtein distance over token sequences, O(min(len)) space."""
    a, b = list(a), list(b)
    if len(a) > len(b):
        a, b = b, a
    previous = list(range(len(a) + 1))
    for i, tb in enumerate(b, start=1):
        current = [i] + [0] * len(a)
        for j, ta in enumerate(a, start=1):
            cost = 0 if ta == tb else 1
            current[j] = min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
        previous = current
    return previous[len(a)]


def skeleton_edit_distance(a: Skeleton, b: Skeleton) -> int:
    if a.language != b.language:
        raise RetrievalError(f"language mismatch: {a.language} vs {b.language}")
    return token_edit_distance(a.tokens, b.tokens)


def rank_skeletons(target: Skeleton, index: SkeletonIndex) -> list[tuple[str, int]]:
    """Skeleton keys ordered by ascending edit distance to the target.

    Ties break towards the larger group, then lexicographic key, so the
    ordering is deterministic.
    """
    if not index.groups:
        raise RetrievalError("empty skeleton index")
    ranked = [
        (key, skeleton_edit_distance(target, index.skeletons[key]))
        for key in index.groups
    ]
    ranked.sort(key=lambda item: (item[1], -len(index.groups[item[0]]), item[0]))
    return ranked


@dataclass(frozen=True)
class SkeletonCandidate:
    key: str
    labels: frozenset[str]
    distance: int


def greedy_cover_select(target: Skeleton, candidates, k: int) -> list[str]:
    """k-step greedy cover of the target's label set.

    Candidates are processed a distance tier at a time, closest first. Within
    a tier, each step picks the candidate leaving the fewest target labels
    uncovered (ties: smaller distance, then lexicographic key), removes it
    from the pool, and subtracts its labels. When a tier runs out before k
    picks, the pool refills from the next tier.
    """
    if k < 1:
        raise RetrievalError("k must be >= 1")
    candidates = list(candidates)
    if not candidates:
        raise RetrievalError("no candidates to select from")
    tiers: dict[int, list[SkeletonCandidate]] = {}
    for cand in candidates:
        tiers.setdefault(cand.distance, []).append(cand)

    uncovered = set(target.labels)
    chosen: list[str] = []
    for distance in sorted(tiers):
        pool = list(tiers[distance])
        while pool and len(chosen) < k:
            best = min(pool, key=lambda c: (len(uncovered - c.labels), c.distance, c.key))
            chosen.append(best.key)
            uncovered -= best.labels
            pool.remove(best)
        if len(chosen) >= k:
            break
    return chosen


def _draw_seeds(index: SkeletonIndex, keys: list[str], distances: dict[str, int],
                seeds: SeedSet, k: int):
    """Draw k seeds from the selected groups, closest distance tier first.

    Within a tier: one seed per key by smallest id, then round-robin deeper
    into the tier's groups. A farther tier is touched only once the closer
    tiers run out of members, and seeds repeat only when every group is
    exhausted.
    """
    tiers: dict[int, list[str]] = {}
    for key in keys:
        tiers.setdefault(distances[key], []).append(key)

    picked = []
    for distance in sorted(tiers):
        block = tiers[distance]
        round_no = 0
        while len(picked) < k:
            start = len(picked)
            for key in block:
                if len(picked) >= k:
                    break
                members = index.groups[key]
                if round_no < len(members):
                    picked.append(seeds.by_id[members[round_no]])
            if len(picked) == start:
                break
            round_no += 1
        if len(picked) >= k:
            break
    if not picked:
        raise RetrievalError("no seeds available")
    while len(picked) < k:
        picked.extend(picked[: k - len(picked)])
    return picked[:k]


def select_lf_demos(target, seeds: SeedSet, k: int, most_similar_last: bool = True):
    """Demonstrations for an understanding target, in prompt order.

    The returned list is ordered least-similar first, so the most relevant
    demonstration sits adjacent to the target in the prompt.
    """
    if k < 1:
        raise RetrievalError("k must be >= 1")
    target_skeleton = skeleton_of(target) if isinstance(target, FormalProgram) else target
    index = seeds.skeleton_index()
    ranked = rank_skeletons(target_skeleton, index)
    candidates = [
        SkeletonCandidate(key=key, labels=index.skeletons[key].labels, distance=dist)
        for key, dist in ranked
    ]
    keys = greedy_cover_select(target_skeleton, candidates, k)
    demos = _draw_seeds(index, keys, dict(ranked), seeds, k)
    if most_similar_last:
        demos.reverse()
    return demos


_QUESTION_TOKEN = re.compile(r"\[e\d+\]|\w+")


def tokenize_question(text: str) -> list[str]:
    """Lowercase word tokens; [Ei] placeholders stay single tokens."""
    return _QUESTION_TOKEN.findall(text.lower())


def build_bm25_index(seeds: SeedSet) -> Bm25Index:
    return Bm25Index(
        documents=[tokenize_question(e.nlq_skeleton.text) for e in seeds.examples],
        doc_ids=[e.id for e in seeds.examples],
    )


def bm25_query(index: Bm25Index, query, top_n: int | None = None):
    """Ranked (doc id, score) for a masked question or raw text."""
    text = query.text if isinstance(query, NlqSkeleton) else query
    return index.rank(tokenize_question(text), top_n=top_n)


def select_nlq_demos(
    target_question: str,
    gold_entity_spans,
    seeds: SeedSet,
    k: int,
    most_similar_last: bool = True,
):
    """Demonstrations for a generation target, in prompt order."""
    if k < 1:
        raise RetrievalError("k must be >= 1")
    masked = mask_nlq(target_question, gold_entity_spans)
    ranked = bm25_query(seeds.bm25_index(), masked, top_n=k)
    demos = [seeds.by_id[doc_id] for doc_id, _ in ranked]
    if most_similar_last:
        demos.reverse()
    return demos
