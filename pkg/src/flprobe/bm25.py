"""Inverted-index BM25 scoring, built from scratch.

idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1)
score(q, d) = sum over query tokens t (with multiplicity) of
              idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))

The +1 inside the log keeps every idf strictly positive, so a document
scores 0 exactly when it shares no terms with the query.
"""
from __future__ import annotations

from collections import Counter
from math import log

INDEX_VERSION = 1


class Bm25Error(ValueError):
    pass


class Bm25Index:
    def __init__(self, documents, doc_ids=None, k1: float = 1.2, b: float = 0.75):
        documents = [list(d) for d in documents]
        if not documents:
            raise Bm25Error("cannot build a BM25 index over zero documents")
        if doc_ids is None:
            doc_ids = list(range(len(documents)))
        doc_ids = list(doc_ids)
        if len(doc_ids) != len(documents):
            raise Bm25Error("doc_ids and documents differ in length")
        self.documents = documents
        self.doc_ids = doc_ids
        self.k1 = k1
        self.b = b
        self.doc_lengths = [len(d) for d in documents]
        self.avgdl = sum(self.doc_lengths) / len(documents)
        self.postings: dict[str, list[tuple[int, int]]] = {}
        for pos, doc in enumerate(documents):
            for term, tf in sorted(Counter(doc).items()):
                self.postings.setdefault(term, []).append((pos, tf))

    def __len__(self) -> int:
        return len(self.documents)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        n = len(self.documents)
        return log((n - df + 0.5) / (df + 0.5) + 1.0)

    def scores(self, query_tokens) -> list[float]:
        """Score of every document for the query, in document order."""
        out = [0.0] * len(self.documents)
        for term in query_tokens:
            postings = self.postings.get(term)
            if not postings:
                continue
            idf = self.idf(term)
            for pos, tf in postings:
                if self.avgdl > 0:
                    norm = self.k1 * (1 - self.b + self.b * self.doc_lengths[pos] / self.avgdl)
                else:
                    norm = self.k1
                out[pos] += idf * tf * (self.k1 + 1) / (tf + norm)
        return out

    def rank(self, query_tokens, top_n: int | None = None):
        """(doc_id, score) pairs, descending score, ties broken by doc id."""
        scores = self.scores(query_tokens)
        order = sorted(range(len(scores)), key=lambda p: (-scores[p], self.doc_ids[p]))
        if top_n is not None:
            order = order[:top_n]
        return [(self.doc_ids[p], scores[p]) for p in order]

    def to_dict(self) -> dict:
        return {
            "version": INDEX_VERSION,
            "k1": self.k1,
            "b": self.b,
            "doc_ids": self.doc_ids,
            "documents": self.documents,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Bm25Index":
        if payload.get("version") != INDEX_VERSION:
            raise Bm25Error(f"unsupported index version: {payload.get('version')!r}")
        return cls(
            payload["documents"],
            doc_ids=payload["doc_ids"],
            k1=payload["k1"],
            b=payload["b"],
        )
